use alloc::string::String;
use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("reconstruction identity violated: {0}")]
    Reconstruction(String),
    #[error("phase solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = core::result::Result<T, Error>;
