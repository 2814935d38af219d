//! NMR-native pulse programs and their compilation from `exp(−i·H_p·τ)`.
//!
//! A program is a time-ordered list of events: hard rf pulses about ±x/±y,
//! composite z-rotations built from three rf pulses, and free evolution under
//! the scalar J coupling. Replaying the events gives the unitary the program
//! implements; that unitary is what every compile path is checked against.

mod compile;
mod text;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pairing::PairingParams;
use crate::quantum::{Pauli, QOperator};

pub use compile::{
    compile_exact, compile_exact_with, map_durations, reduce_periodic, trotterize,
    z_composite_expand, RawDurations, Reduction, TrotterOrder,
};
pub use text::{emit_pulse_program, parse_pulse_program, read_pulse_program, write_pulse_program};

/// J coupling of ¹³C-labelled chloroform, Hz.
pub const DEFAULT_J_HZ: f64 = 214.9;
/// 90° pulse width giving a ~40 μs z-rotation period.
pub const DEFAULT_PW90_S: f64 = 10e-6;

/// Spectrometer constants the compiler needs.
#[derive(Clone, Debug, PartialEq)]
pub struct NmrMachineSpec {
    j_hz: f64,
    pw90_s: Vec<f64>,
}

impl NmrMachineSpec {
    pub fn new(j_hz: f64, pw90_s: Vec<f64>) -> Result<Self> {
        if !(j_hz > 0.0 && j_hz.is_finite()) {
            return Err(Error::arg(format!("J coupling must be positive, got {j_hz}")));
        }
        if pw90_s.is_empty() || pw90_s.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::arg("90-degree pulse widths must be positive"));
        }
        Ok(Self { j_hz, pw90_s })
    }

    pub fn two_qubit_default() -> Self {
        Self {
            j_hz: DEFAULT_J_HZ,
            pw90_s: vec![DEFAULT_PW90_S; 2],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.pw90_s.len()
    }

    pub fn j_hz(&self) -> f64 {
        self.j_hz
    }

    pub fn pw90_s(&self) -> &[f64] {
        &self.pw90_s
    }

    /// rf nutation rate ω_i of `qubit`, rad/s.
    pub fn rabi_rate(&self, qubit: usize) -> f64 {
        PI / 2.0 / self.pw90_s[qubit]
    }

    /// Duration of a 2π rotation on `qubit`.
    pub fn z_period(&self, qubit: usize) -> f64 {
        2.0 * PI / self.rabi_rate(qubit)
    }

    /// Period of J evolution, `2/J`.
    pub fn j_period(&self) -> f64 {
        2.0 / self.j_hz
    }
}

/// rf phase axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Axis {
    fn pauli(self) -> (Pauli, f64) {
        match self {
            Axis::PlusX => (Pauli::X, 1.0),
            Axis::MinusX => (Pauli::X, -1.0),
            Axis::PlusY => (Pauli::Y, 1.0),
            Axis::MinusY => (Pauli::Y, -1.0),
        }
    }

    /// `exp(−i·(angle/2)·σ_axis)`.
    pub fn rotation(self, angle: f64) -> Matrix2<Complex64> {
        let (p, sign) = self.pauli();
        let c = Complex64::new((angle / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -sign * (angle / 2.0).sin());
        Matrix2::identity() * c + p.matrix() * s
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::PlusX => "+x",
            Axis::MinusX => "-x",
            Axis::PlusY => "+y",
            Axis::MinusY => "-y",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+x" | "x" => Ok(Axis::PlusX),
            "-x" => Ok(Axis::MinusX),
            "+y" | "y" => Ok(Axis::PlusY),
            "-y" => Ok(Axis::MinusY),
            other => Err(Error::Program(format!("unknown axis `{other}`"))),
        }
    }
}

/// One step of a pulse program. Qubits are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseEvent {
    /// Hard pulse of `angle` radians about `axis`.
    Rf {
        qubit: usize,
        axis: Axis,
        angle: f64,
        duration: f64,
    },
    /// `exp(−i·(angle/2)·σz)` realized as (π/2)₋ₓ, (angle)_y, (π/2)ₓ in time order.
    ZComposite {
        qubit: usize,
        angle: f64,
        duration: f64,
    },
    /// Free evolution under `(πJ/2)·σz^a σz^b` for `duration` seconds.
    JDelay { qubits: (usize, usize), duration: f64 },
}

impl PulseEvent {
    pub fn duration(&self) -> f64 {
        match self {
            PulseEvent::Rf { duration, .. }
            | PulseEvent::ZComposite { duration, .. }
            | PulseEvent::JDelay { duration, .. } => *duration,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PulseEvent::Rf { .. } => "rf",
            PulseEvent::ZComposite { .. } => "zcomp",
            PulseEvent::JDelay { .. } => "jdelay",
        }
    }

    fn validate(&self, machine: &NmrMachineSpec) -> Result<()> {
        let n = machine.num_qubits();
        let check_qubit = |q: usize| {
            if q >= n {
                Err(Error::Program(format!("qubit {} out of range", q + 1)))
            } else {
                Ok(())
            }
        };
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Program(format!("{what} must be finite")))
            }
        };
        match *self {
            PulseEvent::Rf {
                qubit,
                angle,
                duration,
                ..
            } => {
                check_qubit(qubit)?;
                finite(angle, "rf angle")?;
                finite(duration, "rf duration")?;
                if !(angle > 0.0 && angle <= 2.0 * PI) {
                    return Err(Error::Program(format!("rf angle {angle} outside (0, 2π]")));
                }
                let expected = angle / machine.rabi_rate(qubit);
                if (duration - expected).abs() > 1e-12 * expected {
                    return Err(Error::Program(format!(
                        "rf duration {duration} inconsistent with angle {angle}"
                    )));
                }
            }
            PulseEvent::ZComposite {
                qubit,
                angle,
                duration,
            } => {
                check_qubit(qubit)?;
                finite(angle, "z angle")?;
                finite(duration, "z duration")?;
                if angle < 0.0 || duration < 0.0 {
                    return Err(Error::Program("negative z rotation".into()));
                }
            }
            PulseEvent::JDelay {
                qubits: (a, b),
                duration,
            } => {
                check_qubit(a)?;
                check_qubit(b)?;
                finite(duration, "J delay")?;
                if a == b {
                    return Err(Error::Program("J delay needs two distinct qubits".into()));
                }
                if duration < 0.0 {
                    return Err(Error::Program(format!("negative J delay {duration}")));
                }
            }
        }
        Ok(())
    }
}

/// Compiled program with the inputs it was compiled from.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseProgram {
    pub events: Vec<PulseEvent>,
    /// Simulated-evolution time, seconds.
    pub tau: f64,
    pub params: PairingParams,
    pub machine: NmrMachineSpec,
}

impl PulseProgram {
    pub fn empty(tau: f64, params: PairingParams, machine: NmrMachineSpec) -> Self {
        Self {
            events: Vec::new(),
            tau,
            params,
            machine,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.machine.num_qubits()
    }

    /// Sum of event durations, seconds.
    pub fn total_duration(&self) -> f64 {
        self.events.iter().map(PulseEvent::duration).sum()
    }

    /// Total time spent in J delays.
    pub fn coupling_duration(&self) -> f64 {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::JDelay { .. }))
            .map(PulseEvent::duration)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.num_qubits() != self.machine.num_qubits() {
            return Err(Error::Program(format!(
                "model has {} qubits, machine has {}",
                self.params.num_qubits(),
                self.machine.num_qubits()
            )));
        }
        self.events.iter().try_for_each(|e| e.validate(&self.machine))
    }
}

/// Unitary implemented by the program, events applied in time order.
pub fn sequence_to_unitary(prog: &PulseProgram) -> Result<QOperator> {
    replay_with_coupling(prog, prog.machine.j_hz())
}

/// Replays the program assuming a coupling constant of `j_hz`.
///
/// Passing anything other than the program's own J models a miscalibrated
/// spectrometer; the verification suite uses a sign-flipped J as a negative
/// control.
pub fn replay_with_coupling(prog: &PulseProgram, j_hz: f64) -> Result<QOperator> {
    prog.validate()?;
    let mut u = QOperator::identity(prog.num_qubits())?;
    for event in &prog.events {
        match *event {
            PulseEvent::Rf {
                qubit, axis, angle, ..
            } => u.apply_single_qubit(&axis.rotation(angle), qubit),
            PulseEvent::ZComposite { qubit, angle, .. } => {
                for (axis, a) in compile::z_composite_angles(angle) {
                    u.apply_single_qubit(&axis.rotation(a), qubit);
                }
            }
            PulseEvent::JDelay {
                qubits: (a, b),
                duration,
            } => u.apply_zz_phase(a, b, PI * j_hz * duration / 2.0),
        }
    }
    Ok(u)
}
