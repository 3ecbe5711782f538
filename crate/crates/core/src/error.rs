use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum FedError {
    /// A configuration value or a shape that does not fit the model.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with inputs that violate its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A dataset file could not be ingested.
    #[error("ingestion error for user `{user}`: {reason}")]
    Ingest { user: String, reason: String },

    /// Malformed dataset or config file (not tied to a single user).
    #[error("malformed input {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An internal invariant was breached (a bug, not bad input).
    #[error("internal invariant breached: {0}")]
    Internal(String),
}

impl FedError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FedError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FedError>;
