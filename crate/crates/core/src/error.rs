use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the emulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A request exceeds what the dense representation or a specialized
    /// model supports.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("exact compilation refused: {0}")]
    Refused(String),

    #[error("malformed pulse program: {0}")]
    Program(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("insufficient peaks: found {found}, need {needed}")]
    InsufficientPeaks { found: usize, needed: usize },

    #[error("sweep point {index} (tau = {tau} s) failed: {source}")]
    SweepPoint {
        index: usize,
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
