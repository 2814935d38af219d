//! Second Fourier transform over the simulated-evolution time and peak analysis.
//!
//! The amplitude series `A(τ_k)` is sampled at `1/Δτ`, so line frequencies
//! appear folded into `[0, 1/Δτ)`. Peak positions are refined by a parabola
//! through the log magnitudes of the three bins around each local maximum.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::emulator::AmplitudeSeries;
use crate::error::{Error, Result};
use crate::pairing::PairingParams;

/// Fewest grid points accepted by the second transform.
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub bin: usize,
    /// Interpolated position in `[0, rate)`.
    pub freq_hz: f64,
    /// Interpolated magnitude.
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    /// `m·rate/len`, covering `[0, rate)`.
    pub freqs_hz: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitudes: Vec<f64>,
    pub sample_rate_hz: f64,
    /// Number of grid points before zero padding.
    pub source_len: usize,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.values.len() as f64
    }

    /// Bin width of the unpadded transform.
    pub fn resolution_hz(&self) -> f64 {
        self.sample_rate_hz / self.source_len as f64
    }
}

/// Taper applied to the amplitude series before the second transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Window {
    #[default]
    None,
    /// Periodic Hann, `sin²(πk/K)`.
    Hann,
}

impl Window {
    fn weight(self, k: usize, len: usize) -> f64 {
        match self {
            Window::None => 1.0,
            Window::Hann => (std::f64::consts::PI * k as f64 / len as f64).sin().powi(2),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Window::None),
            "hann" => Ok(Window::Hann),
            other => Err(Error::arg(format!("unknown window `{other}` (none, hann)"))),
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Window::None => "none",
            Window::Hann => "hann",
        })
    }
}

/// `F[m] = Σ_k A_k·e^{−2πi·mk/K}` without padding.
pub fn second_ft(series: &AmplitudeSeries) -> Result<SpectrumResult> {
    second_ft_padded(series, 1)
}

/// Second transform of the series followed by `(factor − 1)·K` zeros.
pub fn second_ft_padded(series: &AmplitudeSeries, factor: usize) -> Result<SpectrumResult> {
    second_ft_with(series, factor, Window::None)
}

/// Windowed, zero-padded second transform.
pub fn second_ft_with(
    series: &AmplitudeSeries,
    factor: usize,
    window: Window,
) -> Result<SpectrumResult> {
    if series.len() < MIN_POINTS {
        return Err(Error::arg(format!(
            "second transform needs at least {MIN_POINTS} points, got {}",
            series.len()
        )));
    }
    if factor == 0 {
        return Err(Error::arg("zero-padding factor must be at least 1"));
    }
    let dt = series.increment()?;
    let len = series.len() * factor;
    let count = series.len();
    let mut buf: Vec<Complex64> = series
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| a * window.weight(k, count))
        .collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let rate = 1.0 / dt;
    Ok(SpectrumResult {
        freqs_hz: (0..len).map(|m| m as f64 * rate / len as f64).collect(),
        magnitudes: buf.iter().map(|z| z.norm()).collect(),
        values: buf,
        sample_rate_hz: rate,
        source_len: series.len(),
    })
}

/// Circular local maxima at or above `threshold_fraction` of the largest
/// magnitude, strongest first.
pub fn detect_peaks(spec: &SpectrumResult, threshold_fraction: f64) -> Result<Vec<Peak>> {
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::arg(format!(
            "peak threshold must lie in (0, 1], got {threshold_fraction}"
        )));
    }
    let mags = &spec.magnitudes;
    let n = mags.len();
    if n < 3 {
        return Err(Error::arg("spectrum too short for peak detection"));
    }
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let mut peaks: Vec<Peak> = (0..n)
        .filter_map(|m| {
            let (prev, here, next) = (mags[(m + n - 1) % n], mags[m], mags[(m + 1) % n]);
            if !(here > prev && here >= next && here >= threshold_fraction * max) {
                return None;
            }
            let (delta, magnitude) = if prev.min(next) <= 1e-12 * here {
                (0.0, here)
            } else {
                let (a, b, c) = (prev.ln(), here.ln(), next.ln());
                let denom = a - 2.0 * b + c;
                let d = if denom < 0.0 {
                    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
                } else {
                    0.0
                };
                (d, (b - 0.25 * (a - c) * d).exp())
            };
            let freq = ((m as f64 + delta) * spec.bin_width_hz()).rem_euclid(spec.sample_rate_hz);
            Some(Peak {
                bin: m,
                freq_hz: freq,
                magnitude,
            })
        })
        .collect();
    peaks.sort_by(|x, y| {
        y.magnitude
            .total_cmp(&x.magnitude)
            .then(x.freq_hz.total_cmp(&y.freq_hz))
    });
    Ok(peaks)
}

fn two_strongest(peaks: &[Peak]) -> Result<(f64, f64)> {
    match peaks {
        [a, b, ..] => Ok((a.freq_hz, b.freq_hz)),
        _ => Err(Error::InsufficientPeaks {
            found: peaks.len(),
            needed: 2,
        }),
    }
}

/// Shorter circular distance between the two strongest peaks.
pub fn measure_splitting(peaks: &[Peak], sample_rate_hz: f64) -> Result<f64> {
    let (a, b) = two_strongest(peaks)?;
    let d = (a - b).rem_euclid(sample_rate_hz);
    Ok(d.min(sample_rate_hz - d))
}

/// True when the two strongest peaks sit on opposite sides of the wrap point
/// closer than they are directly, so circular and linear distances differ.
pub fn straddles_wrap(peaks: &[Peak], sample_rate_hz: f64) -> Result<bool> {
    let (a, b) = two_strongest(peaks)?;
    Ok((a - b).abs() > 0.5 * sample_rate_hz)
}

/// Distance between the two strongest peaks along the arc that contains the
/// folded carrier, so splittings beyond half the sampling rate survive.
pub fn measure_splitting_with_carrier(
    peaks: &[Peak],
    sample_rate_hz: f64,
    carrier_hz: f64,
) -> Result<f64> {
    let (a, b) = two_strongest(peaks)?;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let inner = hi - lo;
    let inner_mid = 0.5 * (lo + hi);
    let outer_mid = (inner_mid + 0.5 * sample_rate_hz).rem_euclid(sample_rate_hz);
    let circ = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(sample_rate_hz);
        d.min(sample_rate_hz - d)
    };
    let carrier = carrier_hz.rem_euclid(sample_rate_hz);
    if circ(inner_mid, carrier) <= circ(outer_mid, carrier) {
        Ok(inner)
    } else {
        Ok(sample_rate_hz - inner)
    }
}

/// Mean single-particle frequency folded into `[0, rate)`.
pub fn folded_carrier_hz(p: &PairingParams, sample_rate_hz: f64) -> f64 {
    (p.mean_eps() / TAU).rem_euclid(sample_rate_hz)
}

/// Spectrum CSV: `#` comment lines, header `freq_hz,re,im,mag`, rows, then a
/// `# peak <freq> <mag>` line per peak and `# splitting_hz <value>` if known.
pub fn spectrum_csv(
    spec: &SpectrumResult,
    peaks: &[Peak],
    splitting_hz: Option<f64>,
    comments: &[String],
) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "freq_hz,re,im,mag");
    for ((f, z), mag) in spec.freqs_hz.iter().zip(&spec.values).zip(&spec.magnitudes) {
        let _ = writeln!(out, "{f:.16e},{:.16e},{:.16e},{mag:.16e}", z.re, z.im);
    }
    for p in peaks {
        let _ = writeln!(out, "# peak {:.16e} {:.16e}", p.freq_hz, p.magnitude);
    }
    if let Some(s) = splitting_hz {
        let _ = writeln!(out, "# splitting_hz {s:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::{amplitude_law, run_tau_sweep, ReadoutConfig, SweepOptions, TauGrid};
    use crate::pulse::NmrMachineSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(amplitudes: Vec<Complex64>, dt: f64) -> AmplitudeSeries {
        AmplitudeSeries {
            taus: (0..amplitudes.len()).map(|k| k as f64 * dt).collect(),
            amplitudes,
            phase_reference: c(1.0, 0.0),
        }
    }

    fn law_series(p: &PairingParams, count: usize) -> AmplitudeSeries {
        let dt = 1.0 / TAU;
        series((0..count).map(|k| amplitude_law(p, k as f64 * dt)).collect(), dt)
    }

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(k, v)| v * Complex64::from_polar(1.0, -TAU * ((m * k) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn random_series(seed: u64, n: usize) -> AmplitudeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        series(
            (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
            0.1,
        )
    }

    #[test]
    fn matches_naive_dft() {
        let s = random_series(1, 64);
        let spec = second_ft(&s).unwrap();
        for (a, b) in spec.values.iter().zip(naive_dft(&s.amplitudes)) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_eq!(spec.freqs_hz[0], 0.0);
        assert!((spec.sample_rate_hz - 10.0).abs() < 1e-12);
        assert!(spec.freqs_hz.iter().all(|f| *f < spec.sample_rate_hz));
    }

    #[test]
    fn non_power_of_two_lengths_work() {
        let s = random_series(2, 40);
        let spec = second_ft(&s).unwrap();
        for (a, b) in spec.values.iter().zip(naive_dft(&s.amplitudes)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn padding_appends_zeros() {
        let s = random_series(3, 16);
        let spec = second_ft_padded(&s, 4).unwrap();
        let mut padded = s.amplitudes.clone();
        padded.resize(64, c(0.0, 0.0));
        for (a, b) in spec.values.iter().zip(naive_dft(&padded)) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_eq!(spec.source_len, 16);
        assert!((spec.resolution_hz() - 4.0 * spec.bin_width_hz()).abs() < 1e-12);
    }

    #[test]
    fn input_validation() {
        assert!(second_ft(&random_series(4, 7)).is_err());
        let mut s = random_series(4, 16);
        s.taus[5] += 1e-6;
        assert!(second_ft(&s).is_err());
        assert!(second_ft_padded(&random_series(4, 16), 0).is_err());
    }

    #[test]
    fn single_tone_lands_on_its_bin() {
        let n = 64;
        let bin = 9;
        let s = series(
            (0..n)
                .map(|k| Complex64::from_polar(1.0, TAU * (bin * k) as f64 / n as f64))
                .collect(),
            1.0,
        );
        let spec = second_ft(&s).unwrap();
        let peaks = detect_peaks(&spec, 0.5).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].bin, bin);
        assert!((peaks[0].freq_hz - bin as f64 / n as f64).abs() < 1e-12);
        assert!((peaks[0].magnitude - n as f64).abs() < 1e-9);
        assert!(matches!(
            measure_splitting(&peaks, spec.sample_rate_hz),
            Err(Error::InsufficientPeaks { found: 1, needed: 2 })
        ));
    }

    #[test]
    fn interpolation_tracks_off_grid_tone() {
        let n = 64;
        for frac in [0.1, 0.25, 0.4] {
            let f = (20.0 + frac) / n as f64;
            let s = series(
                (0..n)
                    .map(|k| Complex64::from_polar(1.0, TAU * f * k as f64))
                    .collect(),
                1.0,
            );
            let spec = second_ft_padded(&s, 4).unwrap();
            let peaks = detect_peaks(&spec, 0.5).unwrap();
            assert!((peaks[0].freq_hz - f).abs() < 0.05 / n as f64, "frac {frac}");
        }
    }

    #[test]
    fn threshold_validation_and_silence() {
        let spec = second_ft(&series(vec![c(0.0, 0.0); 16], 1.0)).unwrap();
        assert!(detect_peaks(&spec, 0.5).unwrap().is_empty());
        assert!(detect_peaks(&spec, 0.0).is_err());
        assert!(detect_peaks(&spec, 1.5).is_err());
    }

    #[test]
    fn splitting_fixtures() {
        let peak = |f: f64, mag: f64| Peak {
            bin: 0,
            freq_hz: f,
            magnitude: mag,
        };
        let rate = TAU;
        let peaks = [peak(2.4522, 30.0), peak(4.4522, 29.0), peak(1.0, 1.0)];
        assert!((measure_splitting(&peaks, rate).unwrap() - 2.0).abs() < 1e-12);
        // Wrapped pair.
        let peaks = [peak(0.2, 1.0), peak(6.0, 1.0)];
        assert!((measure_splitting(&peaks, rate).unwrap() - (rate - 5.8)).abs() < 1e-12);
        // Pair wider than half the rate: carrier decides the arc.
        let peaks = [peak(1.4522, 1.0), peak(5.4522, 1.0)];
        assert!((measure_splitting(&peaks, rate).unwrap() - (rate - 4.0)).abs() < 1e-12);
        let s = measure_splitting_with_carrier(&peaks, rate, 3.4522).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
        let s = measure_splitting_with_carrier(&peaks, rate, 3.4522 + rate / 2.0).unwrap();
        assert!((s - (rate - 4.0)).abs() < 1e-12);
        assert!(measure_splitting(&[], rate).is_err());
    }

    #[test]
    fn default_lines_fold_to_expected_positions() {
        let p = PairingParams::two_qubit_default();
        let spec = second_ft(&law_series(&p, 64)).unwrap();
        let peaks = detect_peaks(&spec, 0.5).unwrap();
        assert!(peaks.len() >= 2);
        let res = spec.resolution_hz();
        let carrier = folded_carrier_hz(&p, spec.sample_rate_hz);
        assert!((carrier - 3.452176277277915).abs() < 1e-9);
        let mut top = [peaks[0].freq_hz, peaks[1].freq_hz];
        top.sort_by(f64::total_cmp);
        assert!((top[0] - (carrier - 1.0)).abs() < res);
        assert!((top[1] - (carrier + 1.0)).abs() < res);
        let s = measure_splitting(&peaks, spec.sample_rate_hz).unwrap();
        assert!((s - 2.0).abs() < res);
    }

    #[test]
    fn emulated_sweep_gives_expected_splitting() {
        let p = PairingParams::two_qubit_default();
        let m = NmrMachineSpec::two_qubit_default();
        let cfg = ReadoutConfig::default_for(&m);
        let s = run_tau_sweep(&p, &m, &cfg, &TauGrid::standard(), &SweepOptions::default())
            .unwrap();
        let spec = second_ft_padded(&s, 4).unwrap();
        let peaks = detect_peaks(&spec, 0.5).unwrap();
        let split = measure_splitting(&peaks, spec.sample_rate_hz).unwrap();
        assert!((split - 2.0).abs() < spec.resolution_hz());
        assert!((peaks[0].magnitude - peaks[1].magnitude).abs() < 0.05 * peaks[0].magnitude);
    }

    #[test]
    fn hann_window_tapers_ends() {
        let s = series(vec![c(1.0, 0.0); 16], 1.0);
        let spec = second_ft_with(&s, 1, Window::Hann).unwrap();
        // Σ sin²(πk/K) = K/2.
        assert!((spec.values[0] - c(8.0, 0.0)).norm() < 1e-12);
        assert!((spec.values[1] - c(-4.0, 0.0)).norm() < 1e-12);
        assert!((spec.values[15] - c(-4.0, 0.0)).norm() < 1e-12);
        assert!(spec.values[2..15].iter().all(|z| z.norm() < 1e-12));
        assert_eq!("hann".parse::<Window>().unwrap(), Window::Hann);
        assert!("kaiser".parse::<Window>().is_err());
    }

    #[test]
    fn wrap_straddle_detection() {
        let peak = |f: f64| Peak {
            bin: 0,
            freq_hz: f,
            magnitude: 1.0,
        };
        assert!(straddles_wrap(&[peak(0.2), peak(6.0)], TAU).unwrap());
        assert!(!straddles_wrap(&[peak(2.45), peak(4.45)], TAU).unwrap());
    }

    #[test]
    fn csv_layout() {
        let p = PairingParams::two_qubit_default();
        let spec = second_ft(&law_series(&p, 16)).unwrap();
        let peaks = detect_peaks(&spec, 0.5).unwrap();
        let text = spectrum_csv(&spec, &peaks, Some(2.0), &["cfg".into()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# cfg");
        assert_eq!(lines[1], "freq_hz,re,im,mag");
        assert_eq!(lines.len(), 2 + 16 + peaks.len() + 1);
        assert!(lines.last().unwrap().starts_with("# splitting_hz 2.0"));
    }

    proptest::proptest! {
        #[test]
        fn parseval(seed in 0u64..1000, n in 8usize..80) {
            let s = random_series(seed, n);
            let spec = second_ft(&s).unwrap();
            let time: f64 = s.amplitudes.iter().map(|z| z.norm_sqr()).sum();
            let freq: f64 = spec.values.iter().map(|z| z.norm_sqr()).sum();
            proptest::prop_assert!((freq - n as f64 * time).abs() < 1e-9 * freq.max(1.0));
        }

        #[test]
        fn conjugate_series_mirrors_spectrum(seed in 0u64..1000, n in 8usize..80) {
            let s = random_series(seed, n);
            let conj = series(s.amplitudes.iter().map(|z| z.conj()).collect(), 0.1);
            let a = second_ft(&s).unwrap();
            let b = second_ft(&conj).unwrap();
            for m in 0..n {
                proptest::prop_assert!((b.values[m] - a.values[(n - m) % n].conj()).norm() < 1e-9);
            }
        }

        #[test]
        fn magnitudes_ignore_global_phase(seed in 0u64..1000, phase in 0.0..TAU) {
            let s = random_series(seed, 32);
            let rot = Complex64::from_polar(1.0, phase);
            let r = series(s.amplitudes.iter().map(|z| z * rot).collect(), 0.1);
            let a = second_ft(&s).unwrap();
            let b = second_ft(&r).unwrap();
            for (x, y) in a.magnitudes.iter().zip(&b.magnitudes) {
                proptest::prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn splitting_tracks_coupling(v_hz in 0.5f64..2.5) {
            let p = PairingParams::new(vec![TAU * 1e4; 2], TAU * v_hz).unwrap();
            let spec = second_ft_padded(&law_series(&p, 64), 4).unwrap();
            let peaks = detect_peaks(&spec, 0.5).unwrap();
            let carrier = folded_carrier_hz(&p, spec.sample_rate_hz);
            let split = measure_splitting_with_carrier(&peaks, spec.sample_rate_hz, carrier).unwrap();
            proptest::prop_assert!((split - 2.0 * v_hz).abs() < spec.resolution_hz(), "{} vs {}", split, 2.0 * v_hz);
        }
    }
}
