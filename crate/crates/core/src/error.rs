use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("exact tour solver limited to {cap} targets, got {requested}")]
    Capacity { requested: usize, cap: usize },

    #[error("no candidate vehicle to receive target {target}")]
    NoCandidate { target: usize },

    #[error("allocation lower bounds infeasible: need {required} targets, only {available} free")]
    Infeasible { required: usize, available: usize },

    #[error("exact oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("LP relaxation failed: {0}")]
    Lp(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
