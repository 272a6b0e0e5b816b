//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by analysis and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not match the expected on-disk layout (bad magic, header,
    /// dtype, or dimensionality).
    #[error("format error: {0}")]
    Format(String),

    /// An input value violated a precondition.
    #[error("invalid value: {0}")]
    Value(String),

    /// Shapes of two operands are incompatible.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A series does not converge for the requested parameters.
    #[error("divergent series: {0}")]
    Divergence(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("did not converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn value(msg: impl Into<String>) -> Self {
        Error::Value(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
