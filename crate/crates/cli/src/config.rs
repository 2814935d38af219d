//! `key = value` experiment configuration.
//!
//! Frequencies are in Hz and times in seconds. `#` starts a comment. List
//! values are comma separated; a single value is broadcast to every qubit.
//!
//! | key | default |
//! |---|---|
//! | `num_qubits` | 2 |
//! | `eps_hz` | 10000 |
//! | `v_hz` | 1 |
//! | `j_hz` | 214.9 |
//! | `pw90_s` | 1e-5 |
//! | `grid_count` | 64 |
//! | `grid_start_s` | 0 |
//! | `grid_increment_s` | 1/(2π) |
//! | `fid_samples` | 4096 |
//! | `dwell_s` | 1e-3 |
//! | `line_broadening_per_s` | 1 |
//! | `half_width_hz` | j_hz/4 |
//! | `observed_qubit` | 2 |
//! | `observed_partner_state` | 0 |
//! | `t2_s` | none |
//! | `acquisition_delay_s` | 0 |
//! | `initial_state` | `default`, or `re:im,re:im,…` |
//! | `path` | `compiled` (`exact`, `trotter`) |
//! | `trotter_steps` | 32 |
//! | `trotter_order` | 2 |
//! | `threshold_fraction` | 0.5 |
//! | `zero_pad` | 4 |
//! | `window` | `none` (`hann`) |
//! | `out_dir` | `.` |

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use pairsim_core::emulator::{
    EvolutionPath, InitialState, ObservedLine, ReadoutConfig, SweepOptions, TauGrid,
};
use pairsim_core::pulse::{NmrMachineSpec, TrotterOrder};
use pairsim_core::spectroscopy::Window;
use pairsim_core::PairingParams;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
const ECHO_PREFIX: &str = "config: ";

const KEYS: &[&str] = &[
    "num_qubits",
    "eps_hz",
    "v_hz",
    "j_hz",
    "pw90_s",
    "grid_count",
    "grid_start_s",
    "grid_increment_s",
    "fid_samples",
    "dwell_s",
    "line_broadening_per_s",
    "half_width_hz",
    "observed_qubit",
    "observed_partner_state",
    "t2_s",
    "acquisition_delay_s",
    "initial_state",
    "path",
    "trotter_steps",
    "trotter_order",
    "threshold_fraction",
    "zero_pad",
    "window",
    "out_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    Compiled,
    Exact,
    Trotter,
}

impl FromStr for PathKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "compiled" => Ok(PathKind::Compiled),
            "exact" => Ok(PathKind::Exact),
            "trotter" => Ok(PathKind::Trotter),
            other => Err(format!("expected compiled, exact or trotter, got `{other}`")),
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Compiled => "compiled",
            PathKind::Exact => "exact",
            PathKind::Trotter => "trotter",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub num_qubits: usize,
    pub eps_hz: Vec<f64>,
    pub v_hz: f64,
    pub j_hz: f64,
    pub pw90_s: Vec<f64>,
    pub grid_count: usize,
    pub grid_start_s: f64,
    pub grid_increment_s: f64,
    pub fid_samples: usize,
    pub dwell_s: f64,
    pub line_broadening_per_s: f64,
    pub half_width_hz: f64,
    /// 1-based.
    pub observed_qubit: usize,
    pub observed_partner_state: u8,
    pub t2_s: Option<Vec<f64>>,
    pub acquisition_delay_s: f64,
    pub initial_state: InitialState,
    pub path: PathKind,
    pub trotter_steps: usize,
    pub trotter_order: u32,
    pub threshold_fraction: f64,
    pub zero_pad: usize,
    pub window: Window,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_qubits: 2,
            eps_hz: vec![1.0e4; 2],
            v_hz: 1.0,
            j_hz: 214.9,
            pw90_s: vec![1.0e-5; 2],
            grid_count: 64,
            grid_start_s: 0.0,
            grid_increment_s: 1.0 / TAU,
            fid_samples: 4096,
            dwell_s: 1.0e-3,
            line_broadening_per_s: 1.0,
            half_width_hz: 214.9 / 4.0,
            observed_qubit: 2,
            observed_partner_state: 0,
            t2_s: None,
            acquisition_delay_s: 0.0,
            initial_state: InitialState::Default,
            path: PathKind::Compiled,
            trotter_steps: 32,
            trotter_order: 2,
            threshold_fraction: 0.5,
            zero_pad: 4,
            window: Window::None,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::key(key, format!("cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v)).collect()
}

fn broadcast(key: &str, values: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values),
        len => Err(CliError::key(
            key,
            format!("expected 1 or {n} values, got {len}"),
        )),
    }
}

fn parse_initial_state(value: &str) -> Result<InitialState> {
    if value == "default" {
        return Ok(InitialState::Default);
    }
    value
        .split(',')
        .map(|pair| {
            let (re, im) = pair.split_once(':').ok_or_else(|| {
                CliError::key("initial_state", format!("expected `re:im`, got `{pair}`"))
            })?;
            Ok(Complex64::new(
                parse_num("initial_state", re)?,
                parse_num("initial_state", im)?,
            ))
        })
        .collect::<Result<Vec<_>>>()
        .map(InitialState::Amplitudes)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::ConfigSyntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::key(key, "unknown key"));
            }
            if entries.insert(key, value).is_some() {
                return Err(CliError::key(key, "given more than once"));
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &BTreeMap<&str, &str>) -> Result<Self> {
        let d = Self::default();
        let get = |k: &str| e.get(k).copied();
        let num_qubits = match get("num_qubits") {
            Some(v) => parse_num("num_qubits", v)?,
            None => get("eps_hz").map_or(d.num_qubits, |v| v.split(',').count().max(2)),
        };
        let list = |key: &str, default: f64| -> Result<Vec<f64>> {
            match get(key) {
                Some(v) => broadcast(key, parse_list(key, v)?, num_qubits),
                None => Ok(vec![default; num_qubits]),
            }
        };
        let scalar = |key: &str, default: f64| -> Result<f64> {
            get(key).map_or(Ok(default), |v| parse_num(key, v))
        };
        let count = |key: &str, default: usize| -> Result<usize> {
            get(key).map_or(Ok(default), |v| parse_num(key, v))
        };
        let j_hz = scalar("j_hz", d.j_hz)?;
        let cfg = Self {
            num_qubits,
            eps_hz: list("eps_hz", d.eps_hz[0])?,
            v_hz: scalar("v_hz", d.v_hz)?,
            j_hz,
            pw90_s: list("pw90_s", d.pw90_s[0])?,
            grid_count: count("grid_count", d.grid_count)?,
            grid_start_s: scalar("grid_start_s", d.grid_start_s)?,
            grid_increment_s: scalar("grid_increment_s", d.grid_increment_s)?,
            fid_samples: count("fid_samples", d.fid_samples)?,
            dwell_s: scalar("dwell_s", d.dwell_s)?,
            line_broadening_per_s: scalar("line_broadening_per_s", d.line_broadening_per_s)?,
            half_width_hz: scalar("half_width_hz", j_hz / 4.0)?,
            observed_qubit: count("observed_qubit", d.observed_qubit)?,
            observed_partner_state: get("observed_partner_state")
                .map_or(Ok(d.observed_partner_state), |v| {
                    parse_num("observed_partner_state", v)
                })?,
            t2_s: match get("t2_s") {
                None | Some("none") => None,
                Some(v) => Some(broadcast("t2_s", parse_list("t2_s", v)?, num_qubits)?),
            },
            acquisition_delay_s: scalar("acquisition_delay_s", d.acquisition_delay_s)?,
            initial_state: get("initial_state")
                .map_or(Ok(InitialState::Default), parse_initial_state)?,
            path: get("path").map_or(Ok(d.path), |v| {
                v.parse().map_err(|m: String| CliError::key("path", m))
            })?,
            trotter_steps: count("trotter_steps", d.trotter_steps)?,
            trotter_order: get("trotter_order")
                .map_or(Ok(d.trotter_order), |v| parse_num("trotter_order", v))?,
            threshold_fraction: scalar("threshold_fraction", d.threshold_fraction)?,
            zero_pad: count("zero_pad", d.zero_pad)?,
            window: get("window").map_or(Ok(d.window), |v| {
                v.parse().map_err(|e: pairsim_core::Error| CliError::key("window", e.to_string()))
            })?,
            out_dir: get("out_dir").map_or(d.out_dir, PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every key, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        let fail = |k: &str, m: String| Err(CliError::key(k, m));
        let n = self.num_qubits;
        if !(1..=pairsim_core::quantum::MAX_QUBITS).contains(&n) {
            return fail("num_qubits", format!("must lie in 1..=8, got {n}"));
        }
        if self.eps_hz.len() != n || self.eps_hz.iter().any(|e| !e.is_finite()) {
            return fail("eps_hz", format!("need {n} finite values"));
        }
        if !self.v_hz.is_finite() {
            return fail("v_hz", "must be finite".into());
        }
        if !(self.j_hz > 0.0 && self.j_hz.is_finite()) {
            return fail("j_hz", format!("must be positive, got {}", self.j_hz));
        }
        if self.pw90_s.len() != n || self.pw90_s.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return fail("pw90_s", format!("need {n} positive values"));
        }
        if self.grid_count == 0 {
            return fail("grid_count", "must be at least 1".into());
        }
        if !(self.grid_start_s >= 0.0 && self.grid_start_s.is_finite()) {
            return fail("grid_start_s", "must be non-negative".into());
        }
        if !(self.grid_increment_s > 0.0 && self.grid_increment_s.is_finite()) {
            return fail("grid_increment_s", "must be positive".into());
        }
        if self.fid_samples < 256 || !self.fid_samples.is_power_of_two() {
            return fail(
                "fid_samples",
                format!("must be a power of two ≥ 256, got {}", self.fid_samples),
            );
        }
        if !(self.dwell_s > 0.0 && self.dwell_s.is_finite()) {
            return fail("dwell_s", "must be positive".into());
        }
        if !(self.line_broadening_per_s >= 0.0 && self.line_broadening_per_s.is_finite()) {
            return fail("line_broadening_per_s", "must be non-negative".into());
        }
        if !(self.half_width_hz > 0.0 && self.half_width_hz.is_finite()) {
            return fail("half_width_hz", "must be positive".into());
        }
        if self.observed_qubit == 0 || self.observed_qubit > n {
            return fail("observed_qubit", format!("must lie in 1..={n}"));
        }
        if self.observed_partner_state > 1 {
            return fail("observed_partner_state", "must be 0 or 1".into());
        }
        if let Some(t2) = &self.t2_s {
            if t2.len() != n || t2.iter().any(|t| !(*t > 0.0)) {
                return fail("t2_s", format!("need {n} positive values or `none`"));
            }
        }
        if !(self.acquisition_delay_s >= 0.0 && self.acquisition_delay_s.is_finite()) {
            return fail("acquisition_delay_s", "must be non-negative".into());
        }
        if let InitialState::Amplitudes(a) = &self.initial_state {
            if a.len() != 1 << n {
                return fail(
                    "initial_state",
                    format!("need {} amplitudes, got {}", 1usize << n, a.len()),
                );
            }
            let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            if !(norm > 0.0 && norm.is_finite()) {
                return fail("initial_state", "amplitudes must have positive norm".into());
            }
        }
        if self.trotter_steps == 0 {
            return fail("trotter_steps", "must be at least 1".into());
        }
        if !(1..=2).contains(&self.trotter_order) {
            return fail("trotter_order", "must be 1 or 2".into());
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return fail("threshold_fraction", "must lie in (0, 1]".into());
        }
        if self.zero_pad == 0 {
            return fail("zero_pad", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// `key = value` lines in canonical order; `parse` reads them back to an
    /// equal config.
    pub fn to_lines(&self) -> Vec<String> {
        let state = match &self.initial_state {
            InitialState::Default => "default".to_string(),
            InitialState::Amplitudes(a) => a
                .iter()
                .map(|z| format!("{}:{}", z.re, z.im))
                .collect::<Vec<_>>()
                .join(","),
        };
        vec![
            format!("num_qubits = {}", self.num_qubits),
            format!("eps_hz = {}", join(&self.eps_hz)),
            format!("v_hz = {}", self.v_hz),
            format!("j_hz = {}", self.j_hz),
            format!("pw90_s = {}", join(&self.pw90_s)),
            format!("grid_count = {}", self.grid_count),
            format!("grid_start_s = {}", self.grid_start_s),
            format!("grid_increment_s = {}", self.grid_increment_s),
            format!("fid_samples = {}", self.fid_samples),
            format!("dwell_s = {}", self.dwell_s),
            format!("line_broadening_per_s = {}", self.line_broadening_per_s),
            format!("half_width_hz = {}", self.half_width_hz),
            format!("observed_qubit = {}", self.observed_qubit),
            format!("observed_partner_state = {}", self.observed_partner_state),
            format!(
                "t2_s = {}",
                self.t2_s.as_deref().map_or("none".to_string(), join)
            ),
            format!("acquisition_delay_s = {}", self.acquisition_delay_s),
            format!("initial_state = {state}"),
            format!("path = {}", self.path),
            format!("trotter_steps = {}", self.trotter_steps),
            format!("trotter_order = {}", self.trotter_order),
            format!("threshold_fraction = {}", self.threshold_fraction),
            format!("zero_pad = {}", self.zero_pad),
            format!("window = {}", self.window),
            format!("out_dir = {}", self.out_dir.display()),
        ]
    }

    /// Comment lines (without the leading `# `) opening every output file.
    pub fn header(&self, kind: &str) -> Vec<String> {
        let mut lines = vec![
            format!("pairsim {kind}"),
            format!("format_version = {FORMAT_VERSION}"),
        ];
        lines.extend(self.to_lines().into_iter().map(|l| format!("{ECHO_PREFIX}{l}")));
        lines
    }

    /// Recovers the config echoed into an output file's header, if any.
    pub fn from_output_header(text: &str) -> Result<Option<Self>> {
        let echoed: Vec<&str> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# ")?.strip_prefix(ECHO_PREFIX))
            .collect();
        if echoed.is_empty() {
            return Ok(None);
        }
        Self::parse(&echoed.join("\n")).map(Some)
    }

    pub fn params(&self) -> Result<PairingParams> {
        PairingParams::from_hz(&self.eps_hz, self.v_hz).map_err(|e| CliError::key("eps_hz", e.to_string()))
    }

    pub fn machine(&self) -> Result<NmrMachineSpec> {
        NmrMachineSpec::new(self.j_hz, self.pw90_s.clone())
            .map_err(|e| CliError::key("j_hz", e.to_string()))
    }

    pub fn readout(&self) -> ReadoutConfig {
        ReadoutConfig {
            samples: self.fid_samples,
            dwell: self.dwell_s,
            line_broadening: self.line_broadening_per_s,
            half_width_hz: self.half_width_hz,
            observed: ObservedLine {
                qubit: self.observed_qubit - 1,
                partner_state: self.observed_partner_state,
            },
            t2: self.t2_s.clone(),
            acquisition_delay: self.acquisition_delay_s,
        }
    }

    pub fn grid(&self) -> TauGrid {
        TauGrid {
            count: self.grid_count,
            start: self.grid_start_s,
            increment: self.grid_increment_s,
        }
    }

    pub fn trotter_order(&self) -> TrotterOrder {
        if self.trotter_order == 1 {
            TrotterOrder::First
        } else {
            TrotterOrder::Second
        }
    }

    pub fn evolution_path(&self) -> EvolutionPath {
        match self.path {
            PathKind::Compiled => EvolutionPath::Compiled,
            PathKind::Exact => EvolutionPath::Exact,
            PathKind::Trotter => EvolutionPath::Trotter {
                steps: self.trotter_steps,
                order: self.trotter_order(),
            },
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            path: self.evolution_path(),
            initial: self.initial_state.clone(),
            ..SweepOptions::default()
        }
    }
}
