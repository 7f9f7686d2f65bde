use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mixture weights must be positive and sum to 1 (got sum {0})")]
    InvalidWeights(f64),
    #[error("sparsity {k} exceeds ambient dimension {n}")]
    SparsityTooLarge { k: usize, n: usize },
    #[error("left degree {d} exceeds bin count {m}")]
    DegreeTooLarge { d: usize, m: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample split {0:?} leaves an empty stage")]
    EmptySplit((usize, usize, usize)),
    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
