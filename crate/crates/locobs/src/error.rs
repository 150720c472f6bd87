use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid coloring: {0}")]
    InvalidColoring(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),
    #[error("atom universe mismatch: {0}")]
    UniverseMismatch(String),
    #[error("radius mismatch: {0}")]
    RadiusMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
