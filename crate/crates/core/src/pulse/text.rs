//! Line-oriented pulse-program format.
//!
//! ```text
//! # pairsim pulse program
//! # format_version = 1
//! # num_qubits = 2
//! # tau_s = 1.5915494309189535e-1
//! # eps_rad_s = 6.283185307179586e4,6.283185307179586e4
//! # v_rad_s = 6.283185307179586e0
//! # j_hz = 2.149e2
//! # pw90_s = 1e-5,1e-5
//! zcomp 1 - 3.452176277278305e0 8.70306e-5
//! rf 1 -y 1.5707963267948966e0 1e-5
//! jdelay 1,2 - - 1.4812e-3
//! ```
//!
//! Body lines are `kind qubit(s) axis angle_rad duration_s`, qubits 1-based,
//! `-` for fields the event kind does not carry. Floats use the shortest
//! representation that parses back to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::{Axis, NmrMachineSpec, PulseEvent, PulseProgram};
use crate::error::{Error, Result};
use crate::pairing::PairingParams;

pub const FORMAT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn emit_pulse_program(prog: &PulseProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# pairsim pulse program");
    let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
    let _ = writeln!(out, "# num_qubits = {}", prog.num_qubits());
    let _ = writeln!(out, "# tau_s = {:e}", prog.tau);
    let _ = writeln!(out, "# eps_rad_s = {}", join(prog.params.eps()));
    let _ = writeln!(out, "# v_rad_s = {:e}", prog.params.v());
    let _ = writeln!(out, "# j_hz = {:e}", prog.machine.j_hz());
    let _ = writeln!(out, "# pw90_s = {}", join(prog.machine.pw90_s()));
    for event in &prog.events {
        let _ = match *event {
            PulseEvent::Rf {
                qubit,
                axis,
                angle,
                duration,
            } => writeln!(out, "rf {} {axis} {angle:e} {duration:e}", qubit + 1),
            PulseEvent::ZComposite {
                qubit,
                angle,
                duration,
            } => writeln!(out, "zcomp {} - {angle:e} {duration:e}", qubit + 1),
            PulseEvent::JDelay {
                qubits: (a, b),
                duration,
            } => writeln!(out, "jdelay {},{} - - {duration:e}", a + 1, b + 1),
        };
    }
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Program(format!("line {line}: bad number `{s}`")))
}

fn parse_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',').map(|v| parse_f64(v, line)).collect()
}

fn parse_qubit(s: &str, line: usize) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(q) if q >= 1 => Ok(q - 1),
        _ => Err(Error::Program(format!("line {line}: bad qubit `{s}`"))),
    }
}

fn parse_event(fields: &[&str], line: usize) -> Result<PulseEvent> {
    if fields.len() != 5 {
        return Err(Error::Program(format!(
            "line {line}: expected 5 fields, got {}",
            fields.len()
        )));
    }
    match fields[0] {
        "rf" => Ok(PulseEvent::Rf {
            qubit: parse_qubit(fields[1], line)?,
            axis: fields[2]
                .parse::<Axis>()
                .map_err(|e| Error::Program(format!("line {line}: {e}")))?,
            angle: parse_f64(fields[3], line)?,
            duration: parse_f64(fields[4], line)?,
        }),
        "zcomp" => Ok(PulseEvent::ZComposite {
            qubit: parse_qubit(fields[1], line)?,
            angle: parse_f64(fields[3], line)?,
            duration: parse_f64(fields[4], line)?,
        }),
        "jdelay" => {
            let (a, b) = fields[1]
                .split_once(',')
                .ok_or_else(|| Error::Program(format!("line {line}: J delay needs `a,b`")))?;
            Ok(PulseEvent::JDelay {
                qubits: (parse_qubit(a, line)?, parse_qubit(b, line)?),
                duration: parse_f64(fields[4], line)?,
            })
        }
        other => Err(Error::Program(format!("line {line}: unknown event `{other}`"))),
    }
}

pub fn parse_pulse_program(text: &str) -> Result<PulseProgram> {
    let mut version = None;
    let mut tau = None;
    let mut eps = None;
    let mut v = None;
    let mut j = None;
    let mut pw90 = None;
    let mut events = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('#') {
            let Some((key, value)) = header.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "format_version" => {
                    version = Some(value.parse::<u32>().map_err(|_| {
                        Error::Program(format!("line {line}: bad format version `{value}`"))
                    })?)
                }
                "tau_s" => tau = Some(parse_f64(value, line)?),
                "eps_rad_s" => eps = Some(parse_list(value, line)?),
                "v_rad_s" => v = Some(parse_f64(value, line)?),
                "j_hz" => j = Some(parse_f64(value, line)?),
                "pw90_s" => pw90 = Some(parse_list(value, line)?),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        events.push(parse_event(&fields, line)?);
    }

    match version {
        Some(FORMAT_VERSION) => {}
        Some(other) => {
            return Err(Error::Program(format!("unsupported format version {other}")))
        }
        None => return Err(Error::Program("missing format_version header".into())),
    }
    let missing = |k: &str| Error::Program(format!("missing `{k}` header"));
    let params = PairingParams::new(eps.ok_or_else(|| missing("eps_rad_s"))?, v.ok_or_else(|| missing("v_rad_s"))?)?;
    let machine = NmrMachineSpec::new(j.ok_or_else(|| missing("j_hz"))?, pw90.ok_or_else(|| missing("pw90_s"))?)?;
    let prog = PulseProgram {
        events,
        tau: tau.ok_or_else(|| missing("tau_s"))?,
        params,
        machine,
    };
    prog.validate()?;
    Ok(prog)
}

pub fn write_pulse_program(prog: &PulseProgram, path: &Path) -> Result<()> {
    std::fs::write(path, emit_pulse_program(prog)).map_err(|e| Error::io(path, e))
}

pub fn read_pulse_program(path: &Path) -> Result<PulseProgram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pulse_program(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
