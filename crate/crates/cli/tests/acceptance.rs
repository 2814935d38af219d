//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
//! Runs without the libtest harness so the lines always reach the output.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pairsim_cli::commands::{analyze_spectrum, sweep};
use pairsim_cli::verify::{compile_vs_exact, reduction_equivalence, trotter_errors};
use pairsim_cli::ExperimentConfig;
use pairsim_core::emulator::{
    amplitude_law, evolve_along, prepare_initial_state, projected_amplitude, run_tau_sweep,
    EvolutionPath, InitialState, ObservedLine, ReadoutMode, SweepOptions,
};
use pairsim_core::pairing::{build_hp, diagonalize, total_z};
use pairsim_core::pulse::{map_durations, reduce_periodic, TrotterOrder};
use pairsim_core::{NmrMachineSpec, PairingParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPLITTING_TOL_HZ: f64 = 0.1;
const GAP_RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const AMPLITUDE_TOL: f64 = 1e-6;
const UNITARY_TOL: f64 = 1e-10;
const TAU3_TARGET_S: f64 = 0.2489e-3;
const TAU3_TOL_S: f64 = 1e-6;
const SPECTRUM_REL_TOL: f64 = 1e-9;
const COMMUTATOR_TOL: f64 = 1e-12;
const RATIO_WINDOW: (f64, f64) = (3.0, 5.0);
/// Step counts at which `|ε₁ − ε₂|/2 · τ/k < 1 rad` for the instance below.
const TROTTER_STEPS: [usize; 3] = [4096, 8192, 16384];
const LITERAL_STEPS: [usize; 3] = [4, 8, 16];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Criterion = fn() -> Outcome;

fn defaults() -> (ExperimentConfig, PairingParams, NmrMachineSpec) {
    let cfg = ExperimentConfig::default();
    let p = cfg.params().unwrap();
    let m = cfg.machine().unwrap();
    (cfg, p, m)
}

fn gap_reproduction() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let series = sweep(&cfg).unwrap();
    let a = analyze_spectrum(&cfg, &series).unwrap();
    let elapsed = start.elapsed();
    let ok = (a.splitting_hz - 2.0).abs() <= SPLITTING_TOL_HZ && elapsed < GAP_RUNTIME_LIMIT;
    outcome(
        ok,
        format!(
            "splitting {:.4} Hz (expected 2.0 ± {SPLITTING_TOL_HZ}), {:.2} s",
            a.splitting_hz,
            elapsed.as_secs_f64()
        ),
    )
}

fn amplitude_law_holds() -> Outcome {
    let (cfg, p, _) = defaults();
    let series = sweep(&cfg).unwrap();
    let worst = series
        .taus
        .iter()
        .zip(&series.amplitudes)
        .map(|(&t, a)| (a - amplitude_law(&p, t)).norm())
        .fold(0.0, f64::max);
    let anchor = series.amplitudes[0];
    outcome(
        worst < AMPLITUDE_TOL,
        format!("max deviation {worst:.2e}, k=0 amplitude {anchor}"),
    )
}

fn magnitude_conservation() -> Outcome {
    let (cfg, p, m) = defaults();
    let initial = prepare_initial_state(2, &InitialState::Default).unwrap();
    let worst = cfg
        .grid()
        .taus()
        .iter()
        .map(|&tau| {
            let fin = evolve_along(&initial, &p, &m, tau, EvolutionPath::Compiled).unwrap();
            let a1 = projected_amplitude(&fin, ObservedLine::CARBON).unwrap();
            let a2 = projected_amplitude(&fin, ObservedLine::PROTON).unwrap();
            (a1.norm_sqr() + a2.norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst < AMPLITUDE_TOL, format!("max ||A1|²+|A2|²−1| {worst:.2e}"))
}

fn exact_decomposition() -> Outcome {
    let (cfg, p, m) = defaults();
    let d = compile_vs_exact(&p, &m, &cfg.grid().taus(), false).unwrap();
    outcome(d < UNITARY_TOL, format!("max distance over 64 points {d:.2e}"))
}

fn periodicity_reduction() -> Outcome {
    let (cfg, p, m) = defaults();
    let tau = cfg.grid().taus()[63];
    let reduced = reduce_periodic(&map_durations(&p, &m, tau).unwrap(), &m);
    let d = reduction_equivalence(&p, &m, tau).unwrap();
    let ok = (reduced.tau3 - TAU3_TARGET_S).abs() < TAU3_TOL_S && d < UNITARY_TOL;
    outcome(
        ok,
        format!(
            "tau3 at k=63 {:.4} ms, reduced vs unreduced distance {d:.2e}",
            reduced.tau3 * 1e3
        ),
    )
}

fn diagonalization_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let eps = rng.gen_range(-1.0e5..1.0e5);
        let v = rng.gen_range(-1.0e3..1.0e3);
        let p = PairingParams::new(vec![eps; 2], v).unwrap();
        let got = diagonalize(&p).unwrap().eigenvalues;
        let mut expected = vec![-eps, -v, v, eps];
        expected.sort_by(f64::total_cmp);
        let scale = eps.abs().max(v.abs());
        for (g, e) in got.iter().zip(&expected) {
            worst_rel = worst_rel.max((g - e).abs() / scale);
        }
    }
    let mut worst_comm = 0.0f64;
    for n in 1..=5 {
        for _ in 0..10 {
            let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0e5..1.0e5)).collect();
            let p = PairingParams::new(eps, rng.gen_range(-1.0e3..1.0e3)).unwrap();
            let h = build_hp(&p).unwrap();
            let c = h.commutator(&total_z(n).unwrap()).max_abs_entry();
            worst_comm = worst_comm.max(c);
        }
    }
    outcome(
        worst_rel < SPECTRUM_REL_TOL && worst_comm <= COMMUTATOR_TOL,
        format!("spectrum rel error {worst_rel:.2e}, max |[H, Σσz]| {worst_comm:.2e}"),
    )
}

fn trotter_instance() -> (PairingParams, NmrMachineSpec, f64) {
    (
        PairingParams::from_hz(&[1.0e4, 1.3e4], 1.0).unwrap(),
        NmrMachineSpec::two_qubit_default(),
        0.3,
    )
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn trotter_extension() -> Outcome {
    let (p, m, tau) = trotter_instance();
    let r = ratios(&trotter_errors(&p, &m, tau, &TROTTER_STEPS, TrotterOrder::Second).unwrap());
    let ok = r.iter().all(|x| (RATIO_WINDOW.0..=RATIO_WINDOW.1).contains(x));
    outcome(ok, format!("steps {TROTTER_STEPS:?}, ratios {r:.4?}"))
}

fn dual_path() -> Outcome {
    let (cfg, p, m) = defaults();
    let run = |readout| {
        run_tau_sweep(
            &p,
            &m,
            &cfg.readout(),
            &cfg.grid(),
            &SweepOptions {
                readout,
                ..SweepOptions::default()
            },
        )
        .unwrap()
    };
    let fid = run(ReadoutMode::Fid);
    let proj = run(ReadoutMode::Projection);
    let worst = fid
        .amplitudes
        .iter()
        .zip(&proj.amplitudes)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    outcome(worst < AMPLITUDE_TOL, format!("max |A_fid − A_proj| {worst:.2e}"))
}

fn parameter_sensitivity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (v_hz, expected) in [(0.5, 1.0), (1.5, 3.0), (2.0, 4.0)] {
        let cfg = ExperimentConfig {
            v_hz,
            ..ExperimentConfig::default()
        };
        let a = analyze_spectrum(&cfg, &sweep(&cfg).unwrap()).unwrap();
        ok &= (a.splitting_hz - expected).abs() <= SPLITTING_TOL_HZ;
        parts.push(format!("V {v_hz} Hz → {:.4} Hz", a.splitting_hz));
    }
    outcome(ok, parts.join(", "))
}

fn main() -> ExitCode {
    // libtest flags such as `--nocapture` are irrelevant here; `--list` must
    // report no tests so tooling that enumerates targets stays quiet.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Criterion); 9] = [
        ("gap reproduction", gap_reproduction),
        ("amplitude law", amplitude_law_holds),
        ("magnitude conservation", magnitude_conservation),
        ("exact decomposition", exact_decomposition),
        ("periodicity reduction", periodicity_reduction),
        ("diagonalization oracle", diagonalization_oracle),
        ("trotter extension", trotter_extension),
        ("dual-path equivalence", dual_path),
        ("parameter sensitivity", parameter_sensitivity),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict}: {name}: {}", i + 1, o.detail);
        failures += usize::from(!o.passed);
    }

    let (p, m, tau) = trotter_instance();
    let literal = ratios(&trotter_errors(&p, &m, tau, &LITERAL_STEPS, TrotterOrder::Second).unwrap());
    println!(
        "info: trotter ratios at steps {LITERAL_STEPS:?} (pre-asymptotic, {:.0} rad per step): {literal:.4?}",
        (p.eps()[1] - p.eps()[0]).abs() / 2.0 * tau / LITERAL_STEPS[0] as f64
    );

    if failures == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
