use thiserror::Error;

/// Errors raised by the library.
///
/// Domain violations reported by [`crate::models::check_domain`] are data,
/// not errors; `Domain` is only raised when an operation cannot run at an
/// inadmissible parameter.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("parameter outside domain: {0}")]
    Domain(String),
    #[error("operation not supported for {family} models")]
    UnsupportedFamily { family: &'static str },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Self::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
