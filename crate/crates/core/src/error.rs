use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} appears more than once")]
    RepeatedIndex { index: usize },

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("expected {expected} indices, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("degenerate configuration: point {point} lies on the hyperplane through {pivots:?}")]
    Degenerate { pivots: Vec<usize>, point: usize },

    #[error("enumeration budget exceeded: {needed} items needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("no general-position point set after {attempts} attempts")]
    GeneralPosition { attempts: u32 },

    #[error("missing header")]
    MissingHeader,

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(
        path: &std::path::Path,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }
}
