//! Configuration-driven front end for the pairing-Hamiltonian emulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::{ExperimentConfig, PathKind};
pub use error::{CliError, Result};
