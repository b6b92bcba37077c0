//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, operator evaluation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Two grid functions that must share a grid (levels + origin) do not.
    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An index or rectangle lies outside the grid.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// A scalar or structural argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested quantity is undefined for the given data
    /// (e.g. a zero function where a positive mass is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// File or stream I/O failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file or textual specification could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable, machine-readable error category (also used by the C API).
    pub fn code(&self) -> i32 {
        match self {
            Error::ShapeMismatch(_) => 2,
            Error::OutOfBounds(_) => 3,
            Error::InvalidArgument(_) => 4,
            Error::Domain(_) => 5,
            Error::Io(_) => 6,
            Error::Parse(_) => 7,
        }
    }
}
