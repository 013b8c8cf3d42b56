use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid channel matrix at row {row}: {reason}")]
    InvalidChannel { row: usize, reason: String },

    #[error("invalid gain matrix at row {row}, column {col}: {reason}")]
    InvalidGain {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("gain matrix row {row} has zero sum; row normalization is undefined")]
    DegenerateRow { row: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix parse error at line {line}, column {col}: {reason}")]
    Parse {
        line: usize,
        col: usize,
        reason: String,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bound not evaluable: {0}")]
    InvalidRegime(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
