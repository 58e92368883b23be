use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not implemented for the requested configuration
    /// (e.g. the continuous flow in dimension 3).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Basis reduction failed (degenerate or ill-conditioned input).
    #[error("reduction error: {0}")]
    Reduction(String),

    /// A configuration failed validation.
    #[error("invalid configuration: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn reduction(msg: impl Into<String>) -> Self {
        Error::Reduction(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
