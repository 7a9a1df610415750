use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid beam PMF: {0}")]
    InvalidPmf(String),

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("beam index {index} out of range for {len} beams")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("relative entropy is undefined for a single beam")]
    UndefinedRelativeEntropy,

    #[error("probabilities are not in descending (ranked) order at position {0}")]
    NotRanked(usize),

    #[error("beam history has no observations and no smoothing")]
    NoData,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
