//! Subcommand implementations. Each writes its artifacts under the config's
//! output directory and returns a printable summary.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pairsim_core::emulator::{
    amplitude_csv, parse_amplitude_csv, run_tau_sweep, AmplitudeSeries,
};
use pairsim_core::pairing::{diagonalize, gap_report, one_pair_splitting};
use pairsim_core::pulse::{
    compile_exact, emit_pulse_program, map_durations, reduce_periodic, sequence_to_unitary,
    trotterize, PulseProgram,
};
use pairsim_core::quantum::{expm_hermitian, unitary_distance};
use pairsim_core::spectroscopy::{
    detect_peaks, folded_carrier_hz, measure_splitting, measure_splitting_with_carrier,
    second_ft_with, spectrum_csv, straddles_wrap, Peak, SpectrumResult,
};
use pairsim_core::{pairing::build_hp, Error as CoreError};

use crate::config::{ExperimentConfig, PathKind};
use crate::error::{CliError, Result};

/// Files written and text for stdout; `passed` is false when a comparison
/// or check failed.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn write_output(cfg: &ExperimentConfig, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn hz(rad_per_s: f64) -> f64 {
    rad_per_s / TAU
}

pub fn run_diag(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let oracle = diagonalize(&p)?;
    let gap = gap_report(one_pair_splitting(&p)?)?;
    let mut out = comment_block(&cfg.header("diag"));
    out.push_str("index,eigenvalue_hz,excitations\n");
    for (i, (e, k)) in oracle.eigenvalues.iter().zip(&oracle.excitations).enumerate() {
        let _ = writeln!(out, "{i},{:.16e},{k}", hz(*e));
    }
    let _ = writeln!(out, "# splitting_hz {:.16e}", gap.splitting_hz);
    let _ = writeln!(out, "# note {}", gap.note);
    let file = write_output(cfg, "diag.csv", &out)?;

    let mut summary = String::new();
    for (e, k) in oracle.eigenvalues.iter().zip(&oracle.excitations) {
        let _ = writeln!(summary, "{:>16.6} Hz  (excitations {k})", hz(*e));
    }
    let _ = writeln!(summary, "one-pair splitting: {:.6} Hz", gap.splitting_hz);
    Ok(Outcome {
        summary,
        files: vec![file],
        passed: true,
    })
}

/// Program for `tau` along the config's path; the exact path has none.
pub fn build_program(cfg: &ExperimentConfig, tau: f64) -> Result<PulseProgram> {
    let (p, m) = (cfg.params()?, cfg.machine()?);
    match cfg.path {
        PathKind::Compiled => Ok(compile_exact(&p, &m, tau)?),
        PathKind::Trotter => Ok(trotterize(
            &p,
            &m,
            tau,
            cfg.trotter_steps,
            cfg.trotter_order(),
        )?),
        PathKind::Exact => Err(CliError::key(
            "path",
            "compile needs a pulse-level path (compiled or trotter)",
        )),
    }
}

pub fn run_compile(cfg: &ExperimentConfig, tau: f64) -> Result<Outcome> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(CliError::key("tau", format!("must be non-negative, got {tau}")));
    }
    let (p, m) = (cfg.params()?, cfg.machine()?);
    let prog = build_program(cfg, tau)?;
    let distance = unitary_distance(&sequence_to_unitary(&prog)?, &expm_hermitian(&build_hp(&p)?, tau)?)?;

    // Config echo goes after the program's own header lines.
    let program_text = emit_pulse_program(&prog);
    let split = program_text
        .lines()
        .position(|l| !l.starts_with('#'))
        .unwrap_or(program_text.lines().count());
    let mut text = String::new();
    for l in program_text.lines().take(split) {
        let _ = writeln!(text, "{l}");
    }
    text.push_str(&comment_block(&cfg.header("compile")[2..]));
    for l in program_text.lines().skip(split) {
        let _ = writeln!(text, "{l}");
    }
    let program_file = write_output(cfg, "program.txt", &text)?;

    let mut report = comment_block(&cfg.header("compile report"));
    let _ = writeln!(report, "tau_s = {tau:e}");
    let _ = writeln!(report, "path = {}", cfg.path);
    if cfg.path == PathKind::Trotter {
        let _ = writeln!(report, "trotter_steps = {}", cfg.trotter_steps);
        let _ = writeln!(report, "trotter_order = {}", cfg.trotter_order);
    }
    if p.num_qubits() == 2 {
        let raw = map_durations(&p, &m, tau)?;
        let red = reduce_periodic(&raw, &m);
        for (q, (r, d)) in raw.thetas.iter().zip(&red.thetas).enumerate() {
            let _ = writeln!(report, "theta_{}_raw_rad = {r:e}", q + 1);
            let _ = writeln!(report, "theta_{}_reduced_rad = {d:e}", q + 1);
        }
        let _ = writeln!(report, "tau3_raw_s = {:e}", raw.tau3);
        let _ = writeln!(report, "tau3_reduced_s = {:e}", red.tau3);
    }
    let _ = writeln!(report, "events = {}", prog.events.len());
    let _ = writeln!(report, "total_duration_s = {:e}", prog.total_duration());
    let _ = writeln!(report, "coupling_duration_s = {:e}", prog.coupling_duration());
    let _ = writeln!(report, "distance_to_exact = {distance:e}");
    let report_file = write_output(cfg, "program_report.txt", &report)?;

    let summary = format!(
        "{} events, total {:.6e} s, distance to exact propagator {distance:.3e}\n",
        prog.events.len(),
        prog.total_duration()
    );
    Ok(Outcome {
        summary,
        files: vec![program_file, report_file],
        passed: true,
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<AmplitudeSeries> {
    Ok(run_tau_sweep(
        &cfg.params()?,
        &cfg.machine()?,
        &cfg.readout(),
        &cfg.grid(),
        &cfg.sweep_options(),
    )?)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let series = sweep(cfg)?;
    let file = write_output(cfg, "amplitudes.csv", &amplitude_csv(&series, &cfg.header("sweep")))?;
    Ok(Outcome {
        summary: format!("{} amplitudes along the {} path\n", series.len(), cfg.path),
        files: vec![file],
        passed: true,
    })
}

/// Second-FT analysis of one amplitude series.
#[derive(Clone, Debug)]
pub struct SpectrumAnalysis {
    pub raw: SpectrumResult,
    pub padded: SpectrumResult,
    pub peaks: Vec<Peak>,
    /// Along the arc containing the folded carrier.
    pub splitting_hz: f64,
    /// Shorter circular distance; differs from `splitting_hz` when the
    /// splitting exceeds half the sampling rate.
    pub circular_hz: f64,
    pub straddles_wrap: bool,
    pub predicted_hz: f64,
    /// One bin of the unpadded transform.
    pub tolerance_hz: f64,
}

impl SpectrumAnalysis {
    pub fn passed(&self) -> bool {
        (self.splitting_hz - self.predicted_hz).abs() <= self.tolerance_hz
    }
}

pub fn analyze_spectrum(cfg: &ExperimentConfig, series: &AmplitudeSeries) -> Result<SpectrumAnalysis> {
    if series.len() < 2 {
        return Err(CliError::key("grid_count", "spectrum needs at least 2 grid points"));
    }
    let p = cfg.params()?;
    let raw = second_ft_with(series, 1, cfg.window)?;
    let padded = second_ft_with(series, cfg.zero_pad, cfg.window)?;
    let peaks = detect_peaks(&padded, cfg.threshold_fraction)?;
    let carrier = folded_carrier_hz(&p, padded.sample_rate_hz);
    let splitting_hz = measure_splitting_with_carrier(&peaks, padded.sample_rate_hz, carrier)?;
    Ok(SpectrumAnalysis {
        circular_hz: measure_splitting(&peaks, padded.sample_rate_hz)?,
        straddles_wrap: straddles_wrap(&peaks, padded.sample_rate_hz)?,
        tolerance_hz: raw.resolution_hz(),
        raw,
        padded,
        peaks,
        splitting_hz,
        predicted_hz: hz(one_pair_splitting(&p)?),
    })
}

/// Loads an amplitude CSV; its echoed config is returned when present.
pub fn load_series(path: &Path) -> Result<(AmplitudeSeries, Option<ExperimentConfig>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let series = parse_amplitude_csv(&text).map_err(|e| {
        CliError::Core(CoreError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    })?;
    Ok((series, ExperimentConfig::from_output_header(&text)?))
}

pub fn run_spectrum(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<Outcome> {
    let series = match input {
        Some(path) => load_series(path)?.0,
        None => sweep(cfg)?,
    };
    let a = analyze_spectrum(cfg, &series)?;
    let header = cfg.header("spectrum");
    let raw_file = write_output(cfg, "spectrum.csv", &spectrum_csv(&a.raw, &[], None, &header))?;
    let padded_file = write_output(
        cfg,
        "spectrum_padded.csv",
        &spectrum_csv(&a.padded, &a.peaks, Some(a.splitting_hz), &header),
    )?;
    let verdict = if a.passed() { "PASS" } else { "FAIL" };
    let mut report = comment_block(&header);
    for pk in &a.peaks {
        let _ = writeln!(report, "peak_hz = {:.10} magnitude = {:.10}", pk.freq_hz, pk.magnitude);
    }
    let _ = writeln!(report, "splitting_hz = {:.10}", a.splitting_hz);
    let _ = writeln!(report, "circular_splitting_hz = {:.10}", a.circular_hz);
    let _ = writeln!(report, "straddles_wrap = {}", a.straddles_wrap);
    let _ = writeln!(report, "predicted_hz = {:.10}", a.predicted_hz);
    let _ = writeln!(report, "tolerance_hz = {:.10}", a.tolerance_hz);
    let _ = writeln!(report, "result = {verdict}");
    let report_file = write_output(cfg, "spectrum_report.txt", &report)?;
    let summary = format!(
        "measured splitting {:.4} Hz, predicted {:.4} Hz (tolerance {:.4} Hz): {verdict}\n",
        a.splitting_hz, a.predicted_hz, a.tolerance_hz
    );
    Ok(Outcome {
        summary,
        files: vec![raw_file, padded_file, report_file],
        passed: a.passed(),
    })
}
