//! Experiment runner, CSV reports and CLI for the omks learners.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{Algorithm, DatasetSpec, ExperimentConfig, LossKind};
pub use error::{BenchError, Result};
pub use report::{Report, Row, RowKind};
pub use runner::{alignment_probe, load_dataset, run, run_on};
