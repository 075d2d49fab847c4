use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input document; `offset` is a byte offset into the input.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("state error: {0}")]
    State(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("cannot ingest {path} ({line}:{column}): {message}")]
    Ingestion {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("provider error: {message}")]
    Provider { message: String, retryable: bool },

    #[error("environment error: {0}")]
    Environment(String),

    #[error("serving error: {0}")]
    Serving(String),

    #[error("route conflict: {0}")]
    Conflict(String),

    #[error("path {} escapes workspace root", .0.display())]
    Confinement(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad configuration, missing inputs, or the host
    /// environment rather than by a pipeline stage failing on its data.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Environment(_)
                | Error::Parameter(_)
                | Error::Format(_)
                | Error::Io(_)
                | Error::Confinement(_)
        )
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Provider { retryable: true, .. })
    }
}
