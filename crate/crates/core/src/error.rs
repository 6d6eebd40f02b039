use thiserror::Error;

/// Error taxonomy shared by every module. The CLI maps these onto exit codes:
/// parameter/contract/dimension errors are usage failures, resource errors are
/// budget failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
