//! Online multi-kernel classification under a memory budget.
//!
//! Two budgeted learners share the building blocks in this crate:
//! [`HingeLearner`] keeps one buffer per kernel and uses a reservoir sample
//! to form optimistic gradients, and [`SmoothLearner`] keeps one buffer
//! shared by all kernels. [`Raker`] is a random-feature baseline.

pub mod data;
pub mod error;
pub mod hedge;
pub mod hypothesis;
pub mod kernel;
pub mod learner;
pub mod loss;
pub mod momd_hinge;
pub mod momd_smooth;
pub mod raker;
pub mod reservoir;
pub mod sparse;
pub mod store;

pub use data::{Dataset, Example};
pub use error::{Error, Result};
pub use hedge::HedgeState;
pub use kernel::{KernelKind, KernelSpec};
pub use learner::{
    Branch, Diagnostics, KernelStep, LambdaMode, OnlineLearner, Prediction, RemovalMode,
    RoundRecord,
};
pub use loss::{HingeLoss, LogisticLoss, Loss, SmoothLoss};
pub use momd_hinge::{BudgetScope, HingeConfig, HingeLearner};
pub use momd_smooth::{SmoothConfig, SmoothLearner};
pub use raker::{Raker, RakerConfig};
pub use sparse::SparseVec;
