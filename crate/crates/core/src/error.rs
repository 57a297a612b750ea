use thiserror::Error;

/// Errors raised by distributions, oracles, sketches and testers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The tester retained more state than its budget allows. This is a
    /// correctness failure of the tester, not something to retry.
    #[error("memory budget exceeded: {requested} bits requested with {used} of {budget} in use")]
    BudgetExceeded { requested: u64, used: u64, budget: u64 },

    #[error("sample stream exhausted after {consumed} samples")]
    EndOfStream { consumed: u64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
