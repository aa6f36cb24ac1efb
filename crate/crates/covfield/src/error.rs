use thiserror::Error;

/// Errors produced by algebra, state, and channel construction or evaluation.
#[derive(Debug, Error)]
pub enum CovError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("gns space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("monotone certification failed: {0}")]
    Certification(String),

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CovError>;
