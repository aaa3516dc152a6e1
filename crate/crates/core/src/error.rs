use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),

    #[error("label must be -1 or +1, got {0}")]
    InvalidLabel(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("cannot split a buffer of odd length {0}")]
    OddBuffer(usize),

    #[error("expert loss {value} at index {index} is negative or non-finite")]
    InvalidExpertLoss { index: usize, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: expected exactly two distinct labels, found {found}")]
    ClassCount { path: PathBuf, found: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
