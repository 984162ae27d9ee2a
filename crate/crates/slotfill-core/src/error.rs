//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors raised by the toolkit. `Config` signals a rejected configuration
/// before any work starts; the other variants signal bad data or IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("conll parse error at line {line}: {msg}")]
    Conll { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by shape guards throughout the tensor code.
    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape { expected: expected.into(), got: got.into() }
    }
}
