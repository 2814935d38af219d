//! Classical emulator of NMR quantum simulation of the spin-analogy pairing
//! Hamiltonian: model construction, pulse compilation, readout emulation,
//! and double-Fourier-transform spectroscopy.

pub mod emulator;
pub mod error;
pub mod pairing;
pub mod pulse;
pub mod quantum;
pub mod spectroscopy;

pub use emulator::{
    AmplitudeSeries, EvolutionPath, InitialState, ObservedLine, ReadoutConfig, ReadoutMode,
    SweepOptions, TauGrid,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use pairing::{PairingParams, SpectrumOracle};
pub use pulse::{NmrMachineSpec, PulseEvent, PulseProgram};
pub use quantum::{QOperator, QState};
pub use spectroscopy::{Peak, SpectrumResult};
