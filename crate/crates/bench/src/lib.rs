//! Shared fixtures for the pipeline benchmarks.

use pairsim_core::emulator::ReadoutConfig;
use pairsim_core::{NmrMachineSpec, PairingParams};

/// Default two-spin model, machine and readout.
pub fn two_spin_setup() -> (PairingParams, NmrMachineSpec, ReadoutConfig) {
    let machine = NmrMachineSpec::two_qubit_default();
    let readout = ReadoutConfig::default_for(&machine);
    (PairingParams::two_qubit_default(), machine, readout)
}

/// `n` qubits with staggered energies around 10 kHz and a 1 Hz coupling.
pub fn chain(n: usize) -> PairingParams {
    let eps: Vec<f64> = (0..n).map(|i| 1.0e4 + 250.0 * i as f64).collect();
    PairingParams::from_hz(&eps, 1.0).expect("valid chain")
}
