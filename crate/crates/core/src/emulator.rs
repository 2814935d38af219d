//! Emulation of the NMR experiment: initial state, evolution, and readout.
//!
//! Readout follows the spectrometer: the free induction decay of one nucleus
//! is synthesized under the rotating-frame internal Hamiltonian (both spins
//! on resonance, only the `(πJ/2)σzσz` term survives), Fourier transformed,
//! and the chosen line is integrated. Each nucleus has its own receiver
//! channel, so the FID of qubit `q` is `tr(ρ(t)·σ⁺_q)`.
//!
//! Repeating this over a grid of simulated-evolution times yields one complex
//! amplitude per τ, phase-referenced to the first grid point.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::pairing::{build_hp, PairingParams};
use crate::pulse::{
    compile_exact, sequence_to_unitary, trotterize, NmrMachineSpec, PulseProgram, TrotterOrder,
};
use crate::quantum::{
    eigh, expm_hermitian, pauli_string_to_operator, qubit_mask, Pauli, PauliString, QOperator,
    QState,
};

/// Initial-state descriptor.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Hadamard on the last qubit of `|0…0⟩`: `(|0…00⟩ + |0…01⟩)/√2`.
    Default,
    /// Explicit amplitudes; normalized on preparation.
    Amplitudes(Vec<Complex64>),
}

pub fn prepare_initial_state(n: usize, spec: &InitialState) -> Result<QState> {
    match spec {
        InitialState::Default => {
            let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n.min(63)];
            if amps.len() < 2 {
                return Err(Error::arg("qubit count must be positive"));
            }
            amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            amps[1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            QState::new(n, amps)
        }
        InitialState::Amplitudes(a) => QState::new(n, a.clone()),
    }
}

/// Applies `exp(−i·H_p·τ)`.
pub fn evolve_exact(state: &QState, p: &PairingParams, tau: f64) -> Result<QState> {
    if p.num_qubits() != state.num_qubits() {
        return Err(Error::arg(format!(
            "model has {} qubits, state has {}",
            p.num_qubits(),
            state.num_qubits()
        )));
    }
    state.evolve(&expm_hermitian(&build_hp(p)?, tau)?)
}

/// Applies the unitary a pulse program implements.
pub fn evolve_compiled(state: &QState, prog: &PulseProgram) -> Result<QState> {
    if prog.num_qubits() != state.num_qubits() {
        return Err(Error::arg(format!(
            "program acts on {} qubits, state has {}",
            prog.num_qubits(),
            state.num_qubits()
        )));
    }
    state.evolve(&sequence_to_unitary(prog)?)
}

/// One line of a two-spin spectrum: nucleus `qubit` flipping while the other
/// spin sits in `partner_state`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObservedLine {
    /// 0-based observed nucleus.
    pub qubit: usize,
    /// 0 or 1.
    pub partner_state: u8,
}

impl ObservedLine {
    /// The ¹H (qubit 2) line `|00⟩ ↔ |01⟩`.
    pub const PROTON: ObservedLine = ObservedLine {
        qubit: 1,
        partner_state: 0,
    };
    /// The ¹³C (qubit 1) line `|00⟩ ↔ |10⟩`.
    pub const CARBON: ObservedLine = ObservedLine {
        qubit: 0,
        partner_state: 0,
    };

    /// Basis indices `(lower, upper)` with the observed qubit in `|0⟩`/`|1⟩`.
    pub fn transition(&self, n: usize) -> Result<(usize, usize)> {
        if n != 2 {
            return Err(Error::Capacity(format!(
                "readout model covers two spins, got {n}"
            )));
        }
        if self.qubit >= n || self.partner_state > 1 {
            return Err(Error::arg(format!("invalid observed line {self:?}")));
        }
        let partner = 1 - self.qubit;
        let lower = if self.partner_state == 1 {
            qubit_mask(n, partner)
        } else {
            0
        };
        Ok((lower, lower | qubit_mask(n, self.qubit)))
    }

    /// Rotating-frame line frequency, Hz: `+J/2` with the partner in `|0⟩`.
    pub fn frequency_hz(&self, machine: &NmrMachineSpec) -> f64 {
        if self.partner_state == 0 {
            machine.j_hz() / 2.0
        } else {
            -machine.j_hz() / 2.0
        }
    }
}

/// Acquisition and processing parameters for the first Fourier transform.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutConfig {
    /// Power of two, at least 256.
    pub samples: usize,
    /// Seconds between samples.
    pub dwell: f64,
    /// Exponential apodization rate, 1/s.
    pub line_broadening: f64,
    /// Integration half-width around the nominal line, Hz.
    pub half_width_hz: f64,
    pub observed: ObservedLine,
    /// Optional per-qubit T2, seconds.
    pub t2: Option<Vec<f64>>,
    /// Free evolution between the end of the program and the first sample.
    pub acquisition_delay: f64,
}

impl ReadoutConfig {
    /// 4096 samples at 1 ms, 1 s⁻¹ broadening, half-width J/4, ¹H line.
    pub fn default_for(machine: &NmrMachineSpec) -> Self {
        Self {
            samples: 4096,
            dwell: 1e-3,
            line_broadening: 1.0,
            half_width_hz: machine.j_hz() / 4.0,
            observed: ObservedLine::PROTON,
            t2: None,
            acquisition_delay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if self.samples < 256 || !self.samples.is_power_of_two() {
            return bad(format!(
                "fid sample count must be a power of two ≥ 256, got {}",
                self.samples
            ));
        }
        if !(self.dwell > 0.0 && self.dwell.is_finite()) {
            return bad(format!("dwell time must be positive, got {}", self.dwell));
        }
        if !(self.half_width_hz > 0.0 && self.half_width_hz.is_finite()) {
            return bad(format!(
                "integration half-width must be positive, got {}",
                self.half_width_hz
            ));
        }
        if !(self.line_broadening >= 0.0 && self.line_broadening.is_finite()) {
            return bad("line broadening must be non-negative".into());
        }
        if !(self.acquisition_delay >= 0.0 && self.acquisition_delay.is_finite()) {
            return bad("acquisition delay must be non-negative".into());
        }
        if let Some(t2) = &self.t2 {
            if t2.iter().any(|t| !(*t > 0.0)) {
                return bad("T2 values must be positive".into());
            }
        }
        Ok(())
    }
}

/// Rotating-frame internal Hamiltonian `(πJ/2)·σz¹σz²` in rad/s.
pub fn internal_hamiltonian(machine: &NmrMachineSpec) -> Result<QOperator> {
    pauli_string_to_operator(
        &PauliString::pair(2, 0, 1, Pauli::Z, PI * machine.j_hz() / 2.0),
        2,
    )
}

/// `σ⁺ = σx + iσy` on `qubit`.
fn raising(qubit: usize, n: usize) -> Result<QOperator> {
    let x = pauli_string_to_operator(&PauliString::single(n, qubit, Pauli::X, 1.0), n)?;
    let y = pauli_string_to_operator(&PauliString::single(n, qubit, Pauli::Y, 1.0), n)?;
    Ok(&x + &y.scale(Complex64::new(0.0, 1.0)))
}

/// FID of the observed nucleus.
pub fn simulate_fid(
    state: &QState,
    machine: &NmrMachineSpec,
    cfg: &ReadoutConfig,
) -> Result<Vec<Complex64>> {
    simulate_fid_channel(state, machine, cfg, cfg.observed.qubit)
}

/// FID `tr(e^{−iHt}·ρ·e^{iHt}·σ⁺_q)` of the receiver channel of `qubit`.
///
/// The trace is evaluated in the eigenbasis of the internal Hamiltonian,
/// where each coherence `ρ̃_ij` precesses at `λ_i − λ_j`.
pub fn simulate_fid_channel(
    state: &QState,
    machine: &NmrMachineSpec,
    cfg: &ReadoutConfig,
    qubit: usize,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let n = state.num_qubits();
    if n != 2 || machine.num_qubits() != 2 {
        return Err(Error::Capacity(format!(
            "readout model covers two spins, got {n}"
        )));
    }
    if qubit >= n {
        return Err(Error::arg(format!("qubit {} out of range", qubit + 1)));
    }
    let h = eigh(&internal_hamiltonian(machine)?)?;
    let v = h.vectors.matrix();
    let rho = v.adjoint() * state.density_matrix().matrix() * v;
    let obs = v.adjoint() * raising(qubit, n)?.matrix() * v;
    let dim = rho.nrows();
    // c_ij = ρ̃_ij·Õ_ji, precessing at ω_ij = λ_i − λ_j.
    let mut terms: Vec<(Complex64, f64)> = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let c = rho[(i, j)] * obs[(j, i)];
            if c.norm() > 0.0 {
                terms.push((c, h.values[i] - h.values[j]));
            }
        }
    }
    let t2 = cfg.t2.as_ref().map(|t| t[qubit.min(t.len() - 1)]);
    Ok((0..cfg.samples)
        .map(|k| {
            let t_acq = k as f64 * cfg.dwell;
            let t = cfg.acquisition_delay + t_acq;
            let signal: Complex64 = terms
                .iter()
                .map(|&(c, w)| c * Complex64::from_polar(1.0, -w * t))
                .sum();
            let decay = t2.map_or(1.0, |t2| (-t / t2).exp());
            signal * decay * (-cfg.line_broadening * t_acq).exp()
        })
        .collect())
}

/// Spectrum of an FID on a Hz axis (negative frequencies for the upper half).
#[derive(Clone, Debug, PartialEq)]
pub struct FidSpectrum {
    pub freqs_hz: Vec<f64>,
    pub values: Vec<Complex64>,
    pub dwell: f64,
}

/// `X[m] = Σ_k x_k·e^{−2πi·mk/N}`; the input length must be a power of two.
pub fn first_ft(samples: &[Complex64], dwell: f64) -> Result<FidSpectrum> {
    let n = samples.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::arg(format!(
            "FID length {n} is not a power of two (pad explicitly)"
        )));
    }
    if !(dwell > 0.0) {
        return Err(Error::arg("dwell time must be positive"));
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * dwell);
    let freqs_hz = (0..n)
        .map(|m| {
            if m < n / 2 {
                m as f64 * df
            } else {
                (m as f64 - n as f64) * df
            }
        })
        .collect();
    Ok(FidSpectrum {
        freqs_hz,
        values: buf,
        dwell,
    })
}

fn window_bins(spectrum: &FidSpectrum, line_hz: f64, half_width: f64) -> Result<Vec<usize>> {
    let n = spectrum.values.len();
    let nyquist = 1.0 / (2.0 * spectrum.dwell);
    if !(line_hz.abs() < nyquist) {
        return Err(Error::Configuration(format!(
            "line at {line_hz} Hz is outside the ±{nyquist} Hz spectral window"
        )));
    }
    let bins: Vec<usize> = (0..n)
        .filter(|&m| (spectrum.freqs_hz[m] - line_hz).abs() <= half_width)
        .collect();
    if bins.is_empty() {
        return Err(Error::Configuration(format!(
            "integration window ±{half_width} Hz around {line_hz} Hz contains no bins"
        )));
    }
    Ok(bins)
}

/// Window sum that a unit-amplitude line at `line_hz` would produce.
///
/// Closed-form geometric series: `Σ_m (1 − r^N) / (1 − r·e^{−2πi m/N})` with
/// `r = e^{(2πi·f − λ)·dwell}`.
fn unit_line_response(line_hz: f64, bins: &[usize], n: usize, cfg: &ReadoutConfig) -> Complex64 {
    let r = Complex64::new(-cfg.line_broadening * cfg.dwell, TAU * line_hz * cfg.dwell).exp();
    let rn = r.powu(n as u32);
    bins.iter()
        .map(|&m| {
            let w = Complex64::from_polar(1.0, -TAU * m as f64 / n as f64);
            (Complex64::new(1.0, 0.0) - rn) / (Complex64::new(1.0, 0.0) - r * w)
        })
        .sum()
}

/// Integrates the spectrum within ±half-width of `line_hz`.
///
/// The sum is divided by the response of a unit line at the same position,
/// so a noiseless line of complex amplitude `a` yields `a`. On the default
/// pipeline at τ = 0 this is `1 + 0i`.
pub fn extract_peak_amplitude(
    spectrum: &FidSpectrum,
    line_hz: f64,
    cfg: &ReadoutConfig,
) -> Result<Complex64> {
    let bins = window_bins(spectrum, line_hz, cfg.half_width_hz)?;
    let raw: Complex64 = bins.iter().map(|&m| spectrum.values[m]).sum();
    let unit = unit_line_response(line_hz, &bins, spectrum.values.len(), cfg);
    Ok(raw / unit)
}

/// Amplitudes of several lines sharing one spectrum.
///
/// Each line's window also collects the tails of the others, so the window
/// sums are unmixed with the matrix of unit-line responses `R[w][l]`.
pub fn extract_line_amplitudes(
    spectrum: &FidSpectrum,
    lines_hz: &[f64],
    cfg: &ReadoutConfig,
) -> Result<Vec<Complex64>> {
    let n = spectrum.values.len();
    let windows = lines_hz
        .iter()
        .map(|&f| window_bins(spectrum, f, cfg.half_width_hz))
        .collect::<Result<Vec<_>>>()?;
    let k = lines_hz.len();
    let response = DMatrix::from_fn(k, k, |w, l| unit_line_response(lines_hz[l], &windows[w], n, cfg));
    let raw = DVector::from_iterator(
        k,
        windows
            .iter()
            .map(|bins| bins.iter().map(|&m| spectrum.values[m]).sum::<Complex64>()),
    );
    response
        .lu()
        .solve(&raw)
        .map(|a| a.iter().copied().collect())
        .ok_or_else(|| Error::Configuration("integration windows of distinct lines coincide".into()))
}

/// FID → first FT → integration of the observed line, unmixed from the
/// partner line of the same channel.
pub fn readout_amplitude(
    state: &QState,
    machine: &NmrMachineSpec,
    cfg: &ReadoutConfig,
) -> Result<Complex64> {
    let fid = simulate_fid(state, machine, cfg)?;
    let spectrum = first_ft(&fid, cfg.dwell)?;
    let observed = cfg.observed;
    let partner = ObservedLine {
        partner_state: 1 - observed.partner_state,
        ..observed
    };
    let lines = [observed.frequency_hz(machine), partner.frequency_hz(machine)];
    Ok(extract_line_amplitudes(&spectrum, &lines, cfg)?[0])
}

/// Line amplitude read straight off the density matrix: `2·ρ_upper,lower`.
pub fn projected_amplitude(state: &QState, line: ObservedLine) -> Result<Complex64> {
    let (lower, upper) = line.transition(state.num_qubits())?;
    let a = state.amplitudes();
    Ok(2.0 * a[upper] * a[lower].conj())
}

/// Uniform grid of simulated-evolution times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauGrid {
    pub count: usize,
    pub start: f64,
    pub increment: f64,
}

impl TauGrid {
    /// 64 points from 0 with increment 1/(2π) s.
    pub fn standard() -> Self {
        Self {
            count: 64,
            start: 0.0,
            increment: 1.0 / TAU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Configuration("grid count must be at least 1".into()));
        }
        if !(self.start >= 0.0 && self.start.is_finite()) {
            return Err(Error::Configuration("grid start must be non-negative".into()));
        }
        if self.count > 1 && !(self.increment > 0.0 && self.increment.is_finite()) {
            return Err(Error::Configuration("grid increment must be positive".into()));
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.start + k as f64 * self.increment)
            .collect()
    }
}

/// How the propagator for each grid point is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionPath {
    Exact,
    Compiled,
    Trotter { steps: usize, order: TrotterOrder },
}

/// How the line amplitude is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadoutMode {
    /// FID synthesis, first FT, window integration.
    Fid,
    /// Direct transition matrix element.
    Projection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub path: EvolutionPath,
    pub readout: ReadoutMode,
    pub initial: InitialState,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            path: EvolutionPath::Compiled,
            readout: ReadoutMode::Fid,
            initial: InitialState::Default,
        }
    }
}

/// One complex amplitude per simulated-evolution time.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeSeries {
    pub taus: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    /// Unit phasor of the raw k = 0 amplitude, divided out of every point.
    pub phase_reference: Complex64,
}

impl AmplitudeSeries {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Grid spacing, checking uniformity to 1e-12 relative.
    pub fn increment(&self) -> Result<f64> {
        if self.taus.len() < 2 {
            return Err(Error::arg("series needs at least two points for a spacing"));
        }
        let dt = (self.taus[self.taus.len() - 1] - self.taus[0]) / (self.taus.len() - 1) as f64;
        for (k, w) in self.taus.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(self.taus[k + 1].abs()) {
                return Err(Error::arg(format!("tau grid is not uniform at point {}", k + 1)));
            }
        }
        if !(dt > 0.0) {
            return Err(Error::arg("tau grid must be increasing"));
        }
        Ok(dt)
    }
}

/// Final state after evolving the prepared state for `tau` along `path`.
pub fn evolve_along(
    state: &QState,
    p: &PairingParams,
    m: &NmrMachineSpec,
    tau: f64,
    path: EvolutionPath,
) -> Result<QState> {
    match path {
        EvolutionPath::Exact => evolve_exact(state, p, tau),
        EvolutionPath::Compiled => evolve_compiled(state, &compile_exact(p, m, tau)?),
        EvolutionPath::Trotter { steps, order } => {
            evolve_compiled(state, &trotterize(p, m, tau, steps, order)?)
        }
    }
}

/// Runs the experiment at every grid point and phase-references the result.
///
/// Points run in parallel and are collected in grid order; the first failing
/// point (lowest index) aborts the sweep.
pub fn run_tau_sweep(
    p: &PairingParams,
    m: &NmrMachineSpec,
    cfg: &ReadoutConfig,
    grid: &TauGrid,
    opts: &SweepOptions,
) -> Result<AmplitudeSeries> {
    grid.validate()?;
    cfg.validate()?;
    let taus = grid.taus();
    let initial = prepare_initial_state(p.num_qubits(), &opts.initial)?;
    let raw: Vec<Result<Complex64>> = taus
        .par_iter()
        .enumerate()
        .map(|(index, &tau)| {
            let point = || -> Result<Complex64> {
                let fin = evolve_along(&initial, p, m, tau, opts.path)?;
                match opts.readout {
                    ReadoutMode::Fid => readout_amplitude(&fin, m, cfg),
                    ReadoutMode::Projection => projected_amplitude(&fin, cfg.observed),
                }
            };
            point().map_err(|e| Error::SweepPoint {
                index,
                tau,
                source: Box::new(e),
            })
        })
        .collect();
    let raw: Vec<Complex64> = raw.into_iter().collect::<Result<_>>()?;
    let first = raw[0];
    if first.norm() < 1e-12 {
        return Err(Error::Configuration(
            "reference experiment (k = 0) shows no signal on the observed line".into(),
        ));
    }
    let phase_reference = first / first.norm();
    let mut amplitudes: Vec<Complex64> = raw.iter().map(|a| a * phase_reference.conj()).collect();
    // The reference point is real by construction; drop the rounding residue.
    amplitudes[0] = Complex64::new(first.norm(), 0.0);
    Ok(AmplitudeSeries {
        amplitudes,
        taus,
        phase_reference,
    })
}

/// `cos(Vτ)·e^{iετ}` for the default state with ε₁ = ε₂ = ε.
pub fn amplitude_law(p: &PairingParams, tau: f64) -> Complex64 {
    (p.v() * tau).cos() * Complex64::from_polar(1.0, p.eps()[0] * tau)
}

pub const AMPLITUDE_CSV_HEADER: &str = "k,tau_s,re,im";

/// Amplitude CSV: optional `#` comment lines, header `k,tau_s,re,im`, then one
/// row per point with 17 significant digits.
pub fn amplitude_csv(series: &AmplitudeSeries, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{AMPLITUDE_CSV_HEADER}");
    for (k, (tau, a)) in series.taus.iter().zip(&series.amplitudes).enumerate() {
        let _ = writeln!(out, "{k},{tau:.16e},{:.16e},{:.16e}", a.re, a.im);
    }
    out
}

pub fn parse_amplitude_csv(text: &str) -> Result<AmplitudeSeries> {
    let mut taus = Vec::new();
    let mut amplitudes = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != AMPLITUDE_CSV_HEADER {
                return Err(Error::arg(format!(
                    "line {}: expected header `{AMPLITUDE_CSV_HEADER}`",
                    i + 1
                )));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::arg(format!("line {}: bad number `{s}`", i + 1)))
        };
        if fields.len() != 4 {
            return Err(Error::arg(format!("line {}: expected 4 columns", i + 1)));
        }
        let k: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("line {}: bad index", i + 1)))?;
        if k != taus.len() {
            return Err(Error::arg(format!("line {}: rows out of order", i + 1)));
        }
        taus.push(num(fields[1])?);
        amplitudes.push(Complex64::new(num(fields[2])?, num(fields[3])?));
    }
    if !seen_header {
        return Err(Error::arg("missing amplitude CSV header"));
    }
    Ok(AmplitudeSeries {
        taus,
        amplitudes,
        phase_reference: Complex64::new(1.0, 0.0),
    })
}

pub fn read_amplitude_csv(path: &Path) -> Result<AmplitudeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_amplitude_csv(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
