use thiserror::Error;

/// Errors raised by the emulator.
#[derive(Debug, Error)]
pub enum GrabitError {
    #[error("no realizations")]
    EmptyEnsemble,
    #[error("unencodable null state")]
    NullState,
    #[error("state annihilated; increase N_ball")]
    Annihilated,
    #[error("invalid b4v value {0}; must lie in [0, 3]")]
    InvalidByte4(u64),
    #[error("grabit count {0} exceeds the supported maximum of {max}", max = crate::byte4::MAX_GRABITS)]
    TooManyGrabits(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("{limit} limit exceeded: {requested} > {max}")]
    LimitExceeded {
        limit: &'static str,
        requested: usize,
        max: usize,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GrabitError>;
