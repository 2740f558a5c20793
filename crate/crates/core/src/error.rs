use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("row {row} (ue {ue_id}): {message}")]
    Schema { row: usize, ue_id: u64, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("classifier for partition {0} was invalidated; retrain before predicting")]
    Invalidated(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("malformed model: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
