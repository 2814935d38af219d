use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pairsim_core::Error),
}

impl CliError {
    pub(crate) fn key(key: &str, message: impl Into<String>) -> Self {
        CliError::ConfigKey {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            _ => EXIT_CONFIG,
        }
    }

    /// Follow-up hint for precondition failures.
    pub fn directive(&self) -> Option<&'static str> {
        match self {
            CliError::Core(e) => match innermost(e) {
                pairsim_core::Error::Refused(_) => {
                    Some("exact compilation needs equal single-particle energies; rerun with --path trotter")
                }
                pairsim_core::Error::InsufficientPeaks { .. } => Some(
                    "the amplitude series does not resolve two lines; check the grid and coupling",
                ),
                pairsim_core::Error::Capacity(_) => {
                    Some("the request exceeds the supported register size or readout model")
                }
                _ => None,
            },
            _ => None,
        }
    }
}

fn innermost(e: &pairsim_core::Error) -> &pairsim_core::Error {
    match e {
        pairsim_core::Error::SweepPoint { source, .. } => innermost(source),
        other => other,
    }
}

fn core_exit_code(e: &pairsim_core::Error) -> i32 {
    use pairsim_core::Error as E;
    match innermost(e) {
        E::Refused(_) | E::InsufficientPeaks { .. } | E::Capacity(_) => EXIT_PRECONDITION,
        _ => EXIT_CONFIG,
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
