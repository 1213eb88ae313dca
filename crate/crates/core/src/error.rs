use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rank-deficient system: rank {rank} of {required} ({reason})")]
    RankDeficient {
        rank: usize,
        required: usize,
        reason: &'static str,
    },

    #[error(
        "exhaustive {k}-subset enumeration refused: {n} points exceeds cap {cap}; use sampled mode"
    )]
    CapExceeded { n: usize, k: usize, cap: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
