use thiserror::Error;

/// Errors raised by the lifted-geometry operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LiftedError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LiftedError {
    LiftedError::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(invalid(format!("{what}: expected dimension {expected}, got {got}")))
    }
}
