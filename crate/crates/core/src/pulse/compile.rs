use std::f64::consts::{PI, TAU};

use super::{Axis, NmrMachineSpec, PulseEvent, PulseProgram};
use crate::error::{Error, Result};
use crate::pairing::PairingParams;

/// Rotation angles and J-evolution time before periodicity reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDurations {
    /// z-rotation angle per qubit, `θ_i = ε_i·τ` (rad).
    pub thetas: Vec<f64>,
    /// J-evolution time matching the coupling term, seconds.
    pub tau3: f64,
}

/// Whether compiled angles and delays are folded into one period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    None,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrotterOrder {
    First,
    Second,
}

impl TrotterOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            1 => Ok(TrotterOrder::First),
            2 => Ok(TrotterOrder::Second),
            o => Err(Error::arg(format!("Trotter order must be 1 or 2, got {o}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            TrotterOrder::First => 1,
            TrotterOrder::Second => 2,
        }
    }
}

/// Maps a simulated-evolution time onto z angles and a J delay.
///
/// The Ising gate of a J delay of length τ₃ is `exp(−i(πJτ₃/2)σzσz)`, and it
/// has to reproduce `exp(−i(Vτ/2)σσ)`, so `πJτ₃ = Vτ` with V in rad/s and J
/// in Hz, i.e. `τ₃ = 2·(V/2π)·τ / J`.
pub fn map_durations(p: &PairingParams, m: &NmrMachineSpec, tau: f64) -> Result<RawDurations> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::arg(format!("tau must be finite and non-negative, got {tau}")));
    }
    let v_hz = p.v() / TAU;
    Ok(RawDurations {
        thetas: p.eps().iter().map(|e| e * tau).collect(),
        tau3: 2.0 * v_hz * tau / m.j_hz(),
    })
}

fn fold(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // A value equal to the period (after rounding) is a full turn.
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Folds z angles into `[0, 2π)` and τ₃ into `[0, 2/J)`.
///
/// Both are global-phase-preserving: a 2π z-rotation is `−I` on its qubit
/// and a full J period is `−I` on the register.
pub fn reduce_periodic(raw: &RawDurations, m: &NmrMachineSpec) -> RawDurations {
    RawDurations {
        thetas: raw.thetas.iter().map(|&t| fold(t, TAU)).collect(),
        tau3: fold(raw.tau3, m.j_period()),
    }
}

/// The (π/2)₋ₓ, (θ)_y, (π/2)ₓ pulse triple in time order.
///
/// The product `R_x(π/2)·R_y(θ)·R_{−x}(π/2)` rotates the y axis onto z, so the
/// triple equals `exp(−i(θ/2)σz)`. Read as an operator product, left to
/// right, this is the familiar (π/2)ₓ − (θ)_y − (π/2)₋ₓ composite.
pub(super) fn z_composite_angles(theta: f64) -> [(Axis, f64); 3] {
    [
        (Axis::MinusX, PI / 2.0),
        (Axis::PlusY, theta),
        (Axis::PlusX, PI / 2.0),
    ]
}

/// Expands a z rotation on `qubit` into its three rf pulses.
pub fn z_composite_expand(
    qubit: usize,
    theta: f64,
    m: &NmrMachineSpec,
) -> Result<Vec<PulseEvent>> {
    if !(0.0..TAU).contains(&theta) {
        return Err(Error::arg(format!("z angle {theta} outside [0, 2π)")));
    }
    if qubit >= m.num_qubits() {
        return Err(Error::arg(format!("qubit {} out of range", qubit + 1)));
    }
    let rate = m.rabi_rate(qubit);
    Ok(z_composite_angles(theta)
        .into_iter()
        .filter(|&(_, a)| a > 0.0)
        .map(|(axis, angle)| PulseEvent::Rf {
            qubit,
            axis,
            angle,
            duration: angle / rate,
        })
        .collect())
}

fn z_event(qubit: usize, theta: f64, m: &NmrMachineSpec) -> Option<PulseEvent> {
    (theta != 0.0).then(|| PulseEvent::ZComposite {
        qubit,
        angle: theta,
        duration: (PI + theta) / m.rabi_rate(qubit),
    })
}

fn rf90(qubit: usize, axis: Axis, m: &NmrMachineSpec) -> PulseEvent {
    PulseEvent::Rf {
        qubit,
        axis,
        angle: PI / 2.0,
        duration: m.pw90_s()[qubit],
    }
}

/// `exp(−i(πJτ₃/2)(σxσx + σyσy))` on the pair `(a, b)`.
///
/// The J delay is conjugated by y pulses to become σxσx, then by x pulses
/// to become σyσy. The two pieces commute.
fn coupling_events(a: usize, b: usize, tau3: f64, m: &NmrMachineSpec) -> Vec<PulseEvent> {
    if tau3 == 0.0 {
        return Vec::new();
    }
    let delay = PulseEvent::JDelay {
        qubits: (a, b),
        duration: tau3,
    };
    vec![
        rf90(a, Axis::MinusY, m),
        rf90(b, Axis::MinusY, m),
        delay.clone(),
        rf90(a, Axis::PlusY, m),
        rf90(b, Axis::PlusY, m),
        rf90(a, Axis::PlusX, m),
        rf90(b, Axis::PlusX, m),
        delay,
        rf90(a, Axis::MinusX, m),
        rf90(b, Axis::MinusX, m),
    ]
}

fn check_machine(p: &PairingParams, m: &NmrMachineSpec) -> Result<()> {
    if p.num_qubits() != m.num_qubits() {
        return Err(Error::arg(format!(
            "model has {} qubits but machine describes {}",
            p.num_qubits(),
            m.num_qubits()
        )));
    }
    Ok(())
}

fn reduced(raw: RawDurations, m: &NmrMachineSpec, reduction: Reduction) -> Result<RawDurations> {
    match reduction {
        Reduction::Periodic => Ok(reduce_periodic(&raw, m)),
        Reduction::None => {
            if raw.thetas.iter().any(|&t| t < 0.0) || raw.tau3 < 0.0 {
                return Err(Error::arg(
                    "negative rotation or delay cannot be emitted without periodic reduction",
                ));
            }
            Ok(raw)
        }
    }
}

/// Exact two-qubit compilation with periodicity reduction.
pub fn compile_exact(p: &PairingParams, m: &NmrMachineSpec, tau: f64) -> Result<PulseProgram> {
    compile_exact_with(p, m, tau, Reduction::Periodic)
}

/// Exact two-qubit compilation: z rotations followed by the two conjugated
/// J delays. Valid only when ε₁ = ε₂, where all four terms commute.
pub fn compile_exact_with(
    p: &PairingParams,
    m: &NmrMachineSpec,
    tau: f64,
    reduction: Reduction,
) -> Result<PulseProgram> {
    if p.num_qubits() != 2 {
        return Err(Error::Capacity(format!(
            "exact compilation supports 2 qubits, got {}",
            p.num_qubits()
        )));
    }
    check_machine(p, m)?;
    if !p.has_uniform_eps() {
        return Err(Error::Refused(
            "ε₁ ≠ ε₂, so the field and coupling terms do not commute; use the trotter path".into(),
        ));
    }
    let d = reduced(map_durations(p, m, tau)?, m, reduction)?;
    let mut events: Vec<PulseEvent> = d
        .thetas
        .iter()
        .enumerate()
        .filter_map(|(q, &t)| z_event(q, t, m))
        .collect();
    events.extend(coupling_events(0, 1, d.tau3, m));
    Ok(PulseProgram {
        events,
        tau,
        params: p.clone(),
        machine: m.clone(),
    })
}

fn field_fragment(p: &PairingParams, m: &NmrMachineSpec, dt: f64) -> Result<Vec<PulseEvent>> {
    let d = reduce_periodic(&map_durations(p, m, dt)?, m);
    Ok(d.thetas
        .iter()
        .enumerate()
        .filter_map(|(q, &t)| z_event(q, t, m))
        .collect())
}

fn pair_fragment(
    p: &PairingParams,
    m: &NmrMachineSpec,
    (a, b): (usize, usize),
    dt: f64,
) -> Result<Vec<PulseEvent>> {
    let d = reduce_periodic(&map_durations(p, m, dt)?, m);
    Ok(coupling_events(a, b, d.tau3, m))
}

/// Product-formula compilation for arbitrary ε_m.
///
/// Each of the `steps` slices covers `τ/steps`. First order applies the
/// field then every pair coupling. Second order is the symmetric splitting
/// `F(h/2)·C₁(h/2)…C_k(h)…C₁(h/2)·F(h/2)`. When all terms commute both are
/// exact.
pub fn trotterize(
    p: &PairingParams,
    m: &NmrMachineSpec,
    tau: f64,
    steps: usize,
    order: TrotterOrder,
) -> Result<PulseProgram> {
    if steps == 0 {
        return Err(Error::arg("Trotter step count must be at least 1"));
    }
    check_machine(p, m)?;
    map_durations(p, m, tau)?;
    let n = p.num_qubits();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let h = tau / steps as f64;

    let mut slice = Vec::new();
    match order {
        TrotterOrder::First => {
            slice.extend(field_fragment(p, m, h)?);
            for &pair in &pairs {
                slice.extend(pair_fragment(p, m, pair, h)?);
            }
        }
        TrotterOrder::Second => {
            let half_field = field_fragment(p, m, h / 2.0)?;
            slice.extend(half_field.iter().cloned());
            if let Some((&last, rest)) = pairs.split_last() {
                for &pair in rest {
                    slice.extend(pair_fragment(p, m, pair, h / 2.0)?);
                }
                slice.extend(pair_fragment(p, m, last, h)?);
                for &pair in rest.iter().rev() {
                    slice.extend(pair_fragment(p, m, pair, h / 2.0)?);
                }
            }
            slice.extend(half_field);
        }
    }

    let mut events = Vec::with_capacity(slice.len() * steps);
    for _ in 0..steps {
        events.extend(slice.iter().cloned());
    }
    Ok(PulseProgram {
        events,
        tau,
        params: p.clone(),
        machine: m.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::build_hp;
    use crate::pulse::{sequence_to_unitary, PulseProgram};
    use crate::quantum::{
        expm_hermitian, phase_aligned_error, unitary_distance, Pauli, QOperator,
    };
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> (PairingParams, NmrMachineSpec) {
        (
            PairingParams::two_qubit_default(),
            NmrMachineSpec::two_qubit_default(),
        )
    }

    fn exact(p: &PairingParams, tau: f64) -> QOperator {
        expm_hermitian(&build_hp(p).unwrap(), tau).unwrap()
    }

    fn rz(theta: f64) -> QOperator {
        expm_hermitian(&Pauli::Z.operator().scale(Complex64::new(theta / 2.0, 0.0)), 1.0).unwrap()
    }

    fn one_qubit_program(events: Vec<PulseEvent>) -> QOperator {
        let m = NmrMachineSpec::new(214.9, vec![10e-6]).unwrap();
        let p = PairingParams::new(vec![1.0], 0.0).unwrap();
        let prog = PulseProgram {
            events,
            tau: 0.0,
            params: p,
            machine: m,
        };
        sequence_to_unitary(&prog).unwrap()
    }

    #[test]
    fn durations_match_table_increment() {
        let (p, m) = defaults();
        let tau = 1.0 / TAU;
        let d = map_durations(&p, &m, tau).unwrap();
        let expected = 1.0 / (PI * 214.9);
        assert!((d.tau3 - expected).abs() < 1e-15);
        assert!((d.tau3 - 1.4805e-3).abs() / 1.4805e-3 < 1e-3);
        for t in &d.thetas {
            assert!((t - 1.0e4).abs() < 1e-9);
        }
        let z = map_durations(&p, &m, 0.0).unwrap();
        assert_eq!(z.thetas, vec![0.0, 0.0]);
        assert_eq!(z.tau3, 0.0);
        assert!(map_durations(&p, &m, -1.0).is_err());
    }

    #[test]
    fn reduction_fixtures() {
        let m = NmrMachineSpec::two_qubit_default();
        let raw = RawDurations {
            thetas: vec![4.0 * PI, 1.0e4],
            tau3: 63.0 / (PI * 214.9),
        };
        let r = reduce_periodic(&raw, &m);
        assert_eq!(r.thetas[0], 0.0);
        // 10⁴ − 1591·2π, from a 40-digit evaluation.
        assert!((r.thetas[1] - 3.452_176_277_277_915).abs() < 1e-9);
        // 63/(π·214.9) mod 2/214.9, from a 40-digit evaluation.
        assert!((r.tau3 - 2.490_592_348_944_267e-4).abs() < 1e-15);
        assert!((r.tau3 - 0.2489e-3).abs() < 1e-6);
        assert!(r.tau3 < m.j_period());

        let full_turn = reduce_periodic(
            &RawDurations {
                thetas: vec![TAU, 0.0],
                tau3: m.j_period(),
            },
            &m,
        );
        assert_eq!(full_turn.thetas[0], 0.0);
        assert_eq!(full_turn.tau3, 0.0);
    }

    #[test]
    fn z_composite_fixtures() {
        let m = NmrMachineSpec::new(214.9, vec![10e-6]).unwrap();
        let id = one_qubit_program(z_composite_expand(0, 0.0, &m).unwrap());
        assert!(unitary_distance(&id, &QOperator::identity(1).unwrap()).unwrap() < 1e-12);

        let pi = one_qubit_program(z_composite_expand(0, PI, &m).unwrap());
        let diag = QOperator::from_matrix(nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![
                Complex64::from_polar(1.0, -PI / 2.0),
                Complex64::from_polar(1.0, PI / 2.0),
            ]),
        ))
        .unwrap();
        assert!(unitary_distance(&pi, &diag).unwrap() < 1e-12);

        let u = one_qubit_program(z_composite_expand(0, 1.234, &m).unwrap());
        assert!(unitary_distance(&u, &rz(1.234)).unwrap() < 1e-12);
        assert!(u.max_abs_diff(&rz(1.234)) < 1e-12);

        assert!(z_composite_expand(0, TAU, &m).is_err());
        assert!(z_composite_expand(0, -0.1, &m).is_err());
        assert!(z_composite_expand(1, 0.1, &m).is_err());
    }

    #[test]
    fn zero_tau_compiles_to_identity() {
        let (p, m) = defaults();
        let prog = compile_exact(&p, &m, 0.0).unwrap();
        assert!(prog.events.is_empty());
        let u = sequence_to_unitary(&prog).unwrap();
        assert!(unitary_distance(&u, &QOperator::identity(2).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn exact_compile_matches_propagator() {
        let (p, m) = defaults();
        let tau = 1.0 / TAU;
        let prog = compile_exact(&p, &m, tau).unwrap();
        let u = sequence_to_unitary(&prog).unwrap();
        assert!(u.is_unitary());
        assert!(unitary_distance(&u, &exact(&p, tau)).unwrap() < 1e-10);
    }

    #[test]
    fn reduction_keeps_unitary_at_last_grid_point() {
        let (p, m) = defaults();
        let tau = 63.0 / TAU;
        let reduced = compile_exact(&p, &m, tau).unwrap();
        let raw = compile_exact_with(&p, &m, tau, Reduction::None).unwrap();
        let ur = sequence_to_unitary(&reduced).unwrap();
        let uu = sequence_to_unitary(&raw).unwrap();
        assert!(unitary_distance(&ur, &uu).unwrap() < 1e-10);
        assert!(raw.coupling_duration() > 0.18);
        assert!(reduced.coupling_duration() < 2.0 * m.j_period());
    }

    #[test]
    fn reduced_program_fits_decoherence_budget() {
        let (p, m) = defaults();
        for k in 0..64 {
            let prog = compile_exact(&p, &m, k as f64 / TAU).unwrap();
            // Two J delays, each under one period, plus sub-millisecond pulses.
            assert!(prog.total_duration() < 2.0 * m.j_period() + 1e-3);
            let delays = prog.coupling_duration();
            assert!(prog.total_duration() - delays < 1e-3);
        }
    }

    #[test]
    fn exact_compile_refusals() {
        let m = NmrMachineSpec::two_qubit_default();
        let p = PairingParams::from_hz(&[1.0e4, 1.3e4], 1.0).unwrap();
        assert!(matches!(compile_exact(&p, &m, 0.1), Err(Error::Refused(_))));
        let p3 = PairingParams::from_hz(&[1.0e4; 3], 1.0).unwrap();
        let m3 = NmrMachineSpec::new(214.9, vec![1e-5; 3]).unwrap();
        assert!(matches!(compile_exact(&p3, &m3, 0.1), Err(Error::Capacity(_))));
    }

    #[test]
    fn trotter_is_exact_when_terms_commute() {
        let (p, m) = defaults();
        for (steps, order) in [(1, TrotterOrder::First), (3, TrotterOrder::Second), (8, TrotterOrder::First)] {
            let prog = trotterize(&p, &m, 0.7, steps, order).unwrap();
            let u = sequence_to_unitary(&prog).unwrap();
            assert!(unitary_distance(&u, &exact(&p, 0.7)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn trotter_short_time_first_order() {
        let m = NmrMachineSpec::two_qubit_default();
        let p = PairingParams::from_hz(&[1.0e4, 1.3e4], 1.0).unwrap();
        let tau = 1e-4;
        let prog = trotterize(&p, &m, tau, 1, TrotterOrder::First).unwrap();
        let u = sequence_to_unitary(&prog).unwrap();
        assert!(unitary_distance(&u, &exact(&p, tau)).unwrap() < 1e-6);
    }

    fn trotter_error(p: &PairingParams, tau: f64, steps: usize, order: TrotterOrder) -> f64 {
        let m = NmrMachineSpec::two_qubit_default();
        let prog = trotterize(p, &m, tau, steps, order).unwrap();
        let u = sequence_to_unitary(&prog).unwrap();
        phase_aligned_error(&u, &exact(p, tau)).unwrap()
    }

    #[test]
    fn trotter_second_order_convergence() {
        // Asymptotic once the detuning phase per step, |ε₁−ε₂|/2·τ/steps,
        // drops below one radian (about 2.8·10³ steps here).
        let p = PairingParams::from_hz(&[1.0e4, 1.3e4], 1.0).unwrap();
        let tau = 0.3;
        let errs: Vec<f64> = [4096, 8192, 16384]
            .iter()
            .map(|&s| trotter_error(&p, tau, s, TrotterOrder::Second))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}, errors {errs:?}");
        }
    }

    #[test]
    fn trotter_first_order_convergence() {
        // Detuning comparable to V, so the O(h) term is not masked.
        let p = PairingParams::new(vec![1.0, 3.0], 1.5).unwrap();
        let tau = 0.5;
        let e1 = trotter_error(&p, tau, 64, TrotterOrder::First);
        let e2 = trotter_error(&p, tau, 128, TrotterOrder::First);
        let ratio = e1 / e2;
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trotter_three_qubits_converges() {
        let p = PairingParams::new(vec![3.0, -1.0, 2.0], 1.5).unwrap();
        let m = NmrMachineSpec::new(214.9, vec![1e-5; 3]).unwrap();
        let h = build_hp(&p).unwrap();
        let target = expm_hermitian(&h, 0.8).unwrap();
        let err = |s| {
            let u = sequence_to_unitary(&trotterize(&p, &m, 0.8, s, TrotterOrder::Second).unwrap())
                .unwrap();
            phase_aligned_error(&u, &target).unwrap()
        };
        let ratio = err(32) / err(64);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        assert!(trotterize(&p, &m, 0.8, 0, TrotterOrder::First).is_err());
    }

    proptest::proptest! {
        #[test]
        fn z_composite_is_z_rotation(theta in 0.0f64..TAU) {
            let m = NmrMachineSpec::new(214.9, vec![10e-6]).unwrap();
            let u = one_qubit_program(z_composite_expand(0, theta, &m).unwrap());
            proptest::prop_assert!(unitary_distance(&u, &rz(theta)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn reduction_preserves_unitary_for_random_durations() {
        let (p, m) = defaults();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let raw = RawDurations {
                thetas: vec![rng.gen_range(0.0..1.0e4); 2],
                tau3: rng.gen_range(0.0..0.2),
            };
            let red = reduce_periodic(&raw, &m);
            let build = |d: &RawDurations| {
                let mut events: Vec<PulseEvent> = d
                    .thetas
                    .iter()
                    .enumerate()
                    .filter_map(|(q, &t)| z_event(q, t, &m))
                    .collect();
                events.extend(coupling_events(0, 1, d.tau3, &m));
                sequence_to_unitary(&PulseProgram {
                    events,
                    tau: 0.0,
                    params: p.clone(),
                    machine: m.clone(),
                })
                .unwrap()
            };
            assert!(unitary_distance(&build(&raw), &build(&red)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn whole_grid_compiles_exactly() {
        let (p, m) = defaults();
        for k in 0..64 {
            let tau = k as f64 / TAU;
            let u = sequence_to_unitary(&compile_exact(&p, &m, tau).unwrap()).unwrap();
            let d = unitary_distance(&u, &exact(&p, tau)).unwrap();
            assert!(d < 1e-10, "k = {k}: {d}");
        }
    }
}
