use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed input text. `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Input parsed, but describes an invalid ontology (cycles, dangling edges).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown term: {0}")]
    UnknownTerm(String),

    /// A precondition on the arguments of an operation was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation has nothing to work on (no eligible terms, no pseudo-positives, ...).
    #[error("empty result: {0}")]
    Empty(String),

    #[error("invalid matrix cache: {0}")]
    Cache(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
