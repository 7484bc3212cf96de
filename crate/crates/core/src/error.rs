use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside its admissible range (alpha, tau, output size, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Structurally inconsistent input: shape mismatch, misaligned arrays, duplicates.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("{method} requires {missing}")]
    MethodRequirements {
        method: &'static str,
        missing: &'static str,
    },

    #[error("failed to load {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("not found: {0}")]
    Lookup(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's input rather than the environment.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Serialize(_))
    }
}
