//! Phase-noise time-series generation from a phase power spectral density.
//!
//! Each positive-frequency bin of the density is sampled with two independent
//! standard Gaussians scaled by `sqrt(S_phi/2)`, mirrored by conjugation onto
//! the negative half, and inverse-Fourier-transformed into a real signal.
//! The double-sided grid has an odd number of bins (no Nyquist bin), so every
//! tabulated frequency carries a full complex amplitude and the ensemble
//! variance of the signal equals `total_power / (2 pi)^2` exactly.
//!
//! All randomness flows through explicit 64-bit seeds. A trajectory `i` of a
//! campaign derives its own seed with [`derive_seed`], so results do not
//! depend on scheduling or worker count.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spectrum::PhaseSpectrum;

/// Overall synthesis scale: `sqrt(delta_nu / 2) / (2 pi)`. The `1/(2 pi)`
/// accounts for densities tabulated against ordinary frequency while the
/// signal is a phase in radians.
fn synthesis_scale(delta_nu: f64) -> f64 {
    (delta_nu / 2.0).sqrt() / TAU
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and an index path, e.g.
/// `derive_seed(master, &[sweep_index, realization_index])`. Stable across
/// platforms and releases; campaign manifests record the derived values.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = master;
    let mut h = splitmix64(&mut state);
    for &p in parts {
        let mut s = h ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h = splitmix64(&mut s);
    }
    h
}

/// One stochastic draw of the double-sided complex amplitude spectrum.
///
/// Bins are indexed DFT-style: `bins[k]` holds frequency `+k * delta_nu` for
/// `k <= (n-1)/2` and `-(n-k) * delta_nu` above. The length is always odd,
/// bin 0 (DC) is zero, and `bins[n-k] = conj(bins[k])` bit-exactly.
#[derive(Debug, Clone)]
pub struct SampledSpectrum {
    bins: Vec<C64>,
    delta_nu: f64,
    seed: u64,
}

impl SampledSpectrum {
    /// Wrap an externally built bin array, enforcing the symmetry invariants.
    pub fn from_bins(bins: Vec<C64>, delta_nu: f64, seed: u64) -> Result<Self> {
        if bins.len() < 3 || bins.len() % 2 == 0 {
            return Err(Error::Domain(format!(
                "double-sided bin count must be odd and >= 3, got {}",
                bins.len()
            )));
        }
        if !(delta_nu.is_finite() && delta_nu > 0.0) {
            return Err(Error::Domain(format!("delta_nu must be > 0, got {delta_nu}")));
        }
        let s = SampledSpectrum { bins, delta_nu, seed };
        s.check_symmetry()?;
        Ok(s)
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.bins.len();
        if self.bins[0].im != 0.0 {
            return Err(Error::Symmetry("DC bin must be purely real".into()));
        }
        for k in 1..=(n - 1) / 2 {
            if self.bins[n - k] != self.bins[k].conj() {
                return Err(Error::Symmetry(format!(
                    "bin {} is not the conjugate of bin {}",
                    n - k,
                    k
                )));
            }
        }
        Ok(())
    }

    pub fn bins(&self) -> &[C64] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn delta_nu(&self) -> f64 {
        self.delta_nu
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Scale every bin by a real factor (synthesis is linear in the bins).
    pub fn scaled(&self, factor: f64) -> SampledSpectrum {
        SampledSpectrum {
            bins: self.bins.iter().map(|&b| b * factor).collect(),
            delta_nu: self.delta_nu,
            seed: self.seed,
        }
    }
}

/// Map each tabulated frequency to its integer bin index `k = nu / delta_nu`.
fn grid_bin_indices(spec: &PhaseSpectrum) -> Result<Vec<usize>> {
    let dn = spec.delta_nu();
    spec.freqs()
        .iter()
        .map(|&f| {
            let k = (f / dn).round();
            if (f - k * dn).abs() > 1e-6 * dn.max(f.abs()) || k < 1.0 {
                return Err(Error::Domain(format!(
                    "frequency {f} MHz is not an integer multiple of delta_nu = {dn} MHz; \
                     synthesis requires an FFT-aligned grid"
                )));
            }
            Ok(k as usize)
        })
        .collect()
}

/// Draw a stochastic amplitude spectrum from `spec` with the given seed.
/// Deterministic: a fixed `(spec, seed)` pair yields bit-identical bins.
pub fn sample_spectrum(spec: &PhaseSpectrum, seed: u64) -> Result<SampledSpectrum> {
    let indices = grid_bin_indices(spec)?;
    let k_max = *indices.last().unwrap();
    let n = 2 * k_max + 1;
    let mut bins = vec![C64::new(0.0, 0.0); n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (&k, &s) in indices.iter().zip(spec.values()) {
        // Two quadratures with variance S_phi/2 each; drawn even for zero
        // bins to keep the stream layout independent of the density values.
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let amp = (s / 2.0).sqrt();
        let z = C64::new(re * amp, im * amp);
        bins[k] = z;
        bins[n - k] = z.conj();
    }
    Ok(SampledSpectrum { bins, delta_nu: spec.delta_nu(), seed })
}

/// Uniformly sampled real phase signal in radians.
#[derive(Debug, Clone)]
pub struct PhaseSignal {
    samples: Vec<f64>,
    dt: f64,
    seed: u64,
}

impl PhaseSignal {
    pub fn new(samples: Vec<f64>, dt: f64, seed: u64) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("signal samples must be finite".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        Ok(PhaseSignal { samples, dt, seed })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample interval in microseconds.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Signal duration `len * dt` in microseconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Zero-order-hold value at time `t` (clamped to the last sample).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = ((t / self.dt).floor().max(0.0) as usize).min(self.samples.len() - 1);
        self.samples[idx]
    }

    /// Population variance of the samples.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        self.samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n
    }

    /// Multiply every sample by `m`, preserving metadata.
    pub fn scaled(&self, m: f64) -> Result<PhaseSignal> {
        if !m.is_finite() {
            return Err(Error::Domain(format!("scale factor must be finite, got {m}")));
        }
        Ok(PhaseSignal {
            samples: self.samples.iter().map(|&s| s * m).collect(),
            dt: self.dt,
            seed: self.seed,
        })
    }

    /// Finite-difference time derivative in rad/us: central differences in
    /// the interior, one-sided at the ends.
    pub fn derivative(&self) -> Result<PhaseSignal> {
        let n = self.samples.len();
        if n < 3 {
            return Err(Error::Domain(format!("derivative needs >= 3 samples, got {n}")));
        }
        let s = &self.samples;
        let mut d = Vec::with_capacity(n);
        d.push((s[1] - s[0]) / self.dt);
        for j in 1..n - 1 {
            d.push((s[j + 1] - s[j - 1]) / (2.0 * self.dt));
        }
        d.push((s[n - 1] - s[n - 2]) / self.dt);
        Ok(PhaseSignal { samples: d, dt: self.dt, seed: self.seed })
    }
}

/// Inverse-transform a sampled spectrum into a real phase signal.
///
/// `phi_j = sqrt(2 delta_nu)/(4 pi) * sum_k bins[k] e^{2 pi i j k / n}`; the
/// imaginary residue must stay below `1e-10` of the signal RMS and is then
/// discarded. The sample interval is `1/(n delta_nu)`.
pub fn synthesize_signal(sampled: &SampledSpectrum) -> Result<PhaseSignal> {
    sampled.check_symmetry()?;
    let n = sampled.bins.len();
    let mut buf: Vec<C64> = sampled.bins.clone();
    let mut planner = FftPlanner::new();
    // rustfft's inverse transform is the unnormalized sum over e^{+2 pi i jk/n}.
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = synthesis_scale(sampled.delta_nu);
    let (mut sum_re2, mut sum_im2) = (0.0, 0.0);
    for z in &buf {
        sum_re2 += z.re * z.re;
        sum_im2 += z.im * z.im;
    }
    let total = sum_re2 + sum_im2;
    if total > 0.0 && (sum_im2 / total).sqrt() > 1e-10 {
        return Err(Error::Symmetry(format!(
            "imaginary residue {:.3e} of signal RMS after inverse transform",
            (sum_im2 / total).sqrt()
        )));
    }
    let samples = buf.iter().map(|z| z.re * scale).collect();
    PhaseSignal::new(samples, 1.0 / (n as f64 * sampled.delta_nu), sampled.seed)
}

/// Sample and synthesize in one step.
pub fn generate_signal(spec: &PhaseSpectrum, seed: u64) -> Result<PhaseSignal> {
    synthesize_signal(&sample_spectrum(spec, seed)?)
}

/// Unnormalized autocovariance of the density at lag `tau` (us):
/// `A(tau) = delta_nu/(2 pi)^2 * sum_nu S_phi(nu) cos(2 pi nu tau)`.
/// `A(0)` equals `total_power/(2 pi)^2`, the ensemble signal variance.
pub fn analytic_autocovariance(spec: &PhaseSpectrum, tau: f64) -> f64 {
    let mut acc = 0.0;
    for (&nu, &s) in spec.freqs().iter().zip(spec.values()) {
        acc += s * (TAU * nu * tau).cos();
    }
    acc * spec.delta_nu() / (TAU * TAU)
}

/// Autocorrelation of the density over a lag grid, normalized to `A(0) = 1`
/// for comparison with [`empirical_autocorrelation`].
pub fn analytic_autocorrelation(spec: &PhaseSpectrum, taus: &[f64]) -> Result<Vec<f64>> {
    let duration = 1.0 / spec.delta_nu();
    let a0 = analytic_autocovariance(spec, 0.0);
    if a0 <= 0.0 {
        return Err(Error::DegenerateSignal("zero-power spectrum has no autocorrelation".into()));
    }
    taus.iter()
        .map(|&tau| {
            if !(0.0..=duration).contains(&tau) {
                return Err(Error::Domain(format!(
                    "lag {tau} us outside signal duration {duration} us"
                )));
            }
            Ok(analytic_autocovariance(spec, tau) / a0)
        })
        .collect()
}

/// Normalized empirical autocorrelation at an integer sample lag: the Pearson
/// correlation between the signal and its shifted copy over the overlap.
pub fn empirical_autocorrelation_at_lag(signal: &PhaseSignal, lag: usize) -> Result<f64> {
    let n = signal.samples.len();
    if lag >= n {
        return Err(Error::Domain(format!("lag {lag} >= signal length {n}")));
    }
    let m = n - lag;
    let head = &signal.samples[..m];
    let tail = &signal.samples[lag..];
    let mean_h = head.iter().sum::<f64>() / m as f64;
    let mean_t = tail.iter().sum::<f64>() / m as f64;
    let (mut cov, mut var_h, mut var_t) = (0.0, 0.0, 0.0);
    for j in 0..m {
        let a = head[j] - mean_h;
        let b = tail[j] - mean_t;
        cov += a * b;
        var_h += a * a;
        var_t += b * b;
    }
    if var_h == 0.0 || var_t == 0.0 {
        return Err(Error::DegenerateSignal(
            "autocorrelation of a zero-variance signal is undefined".into(),
        ));
    }
    Ok(cov / (var_h.sqrt() * var_t.sqrt()))
}

/// Normalized empirical autocorrelation at a time lag in microseconds
/// (rounded to the nearest sample).
pub fn empirical_autocorrelation(signal: &PhaseSignal, tau: f64) -> Result<f64> {
    if tau < 0.0 || tau >= signal.duration() {
        return Err(Error::Domain(format!(
            "lag {tau} us outside [0, {}) us",
            signal.duration()
        )));
    }
    empirical_autocorrelation_at_lag(signal, (tau / signal.dt).round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synthesize_default_spectrum, DefaultSpectrumParams};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn flat_spectrum(n: usize, value: f64) -> PhaseSpectrum {
        let delta = 0.01;
        let freqs: Vec<f64> = (1..=n).map(|k| delta * k as f64).collect();
        PhaseSpectrum::new(freqs, vec![value; n]).unwrap()
    }

    #[test]
    fn zero_spectrum_gives_zero_signal() {
        let spec = flat_spectrum(16, 0.0);
        let sampled = sample_spectrum(&spec, 7).unwrap();
        assert!(sampled.bins().iter().all(|b| *b == C64::new(0.0, 0.0)));
        let sig = synthesize_signal(&sampled).unwrap();
        assert!(sig.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = flat_spectrum(32, 1.5);
        let a = sample_spectrum(&spec, 42).unwrap();
        let b = sample_spectrum(&spec, 42).unwrap();
        assert_eq!(a.bins(), b.bins());
        let c = sample_spectrum(&spec, 43).unwrap();
        assert_ne!(a.bins(), c.bins());
    }

    #[test]
    fn bins_are_conjugate_symmetric_with_real_dc() {
        let spec = flat_spectrum(9, 2.0);
        let s = sample_spectrum(&spec, 3).unwrap();
        let n = s.n_bins();
        assert_eq!(n % 2, 1);
        assert_eq!(s.bins()[0], C64::new(0.0, 0.0));
        for k in 1..=(n - 1) / 2 {
            assert_eq!(s.bins()[n - k], s.bins()[k].conj());
        }
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let spec = flat_spectrum(4, 1.0);
        let mut bins = sample_spectrum(&spec, 1).unwrap().bins().to_vec();
        let n = bins.len();
        bins[n - 1] += C64::new(0.0, 1e-3);
        let err = SampledSpectrum::from_bins(bins, spec.delta_nu(), 1).unwrap_err();
        assert!(matches!(err, Error::Symmetry(_)), "{err}");
    }

    #[test]
    fn mean_bin_power_reproduces_density() {
        // Monte-Carlo moment oracle: E|S_n(nu)|^2 = S_phi(nu) per bin.
        let spec = flat_spectrum(8, 3.0);
        let draws = 4000;
        let mut acc = vec![0.0; 8];
        for i in 0..draws {
            let s = sample_spectrum(&spec, derive_seed(99, &[i])).unwrap();
            for (j, a) in acc.iter_mut().enumerate() {
                *a += s.bins()[j + 1].norm_sqr();
            }
        }
        // |S_n|^2 is exponential with mean S and std S: SE = S/sqrt(draws).
        let se = 3.0 / (draws as f64).sqrt();
        for a in acc {
            assert_abs_diff_eq!(a / draws as f64, 3.0, epsilon = 3.0 * se);
        }
    }

    #[test]
    fn single_tone_synthesizes_to_cosine() {
        // One hot bin at k0 (plus conjugate) must give a pure cosine at
        // nu0 = k0 * delta_nu with amplitude 2 * scale * a.
        let delta_nu = 0.05;
        let k0 = 5;
        let n = 2 * 64 + 1;
        let a = 1.7;
        let mut bins = vec![C64::new(0.0, 0.0); n];
        bins[k0] = C64::new(a, 0.0);
        bins[n - k0] = C64::new(a, 0.0);
        let sampled = SampledSpectrum::from_bins(bins, delta_nu, 0).unwrap();
        let sig = synthesize_signal(&sampled).unwrap();
        let amp = 2.0 * synthesis_scale(delta_nu) * a;
        let nu0 = k0 as f64 * delta_nu;
        for (j, &s) in sig.samples().iter().enumerate() {
            let t = j as f64 * sig.dt();
            assert_abs_diff_eq!(s, amp * (TAU * nu0 * t).cos(), epsilon = 1e-12);
        }
        // Empirical autocorrelation of a pure tone tracks cos(2 pi nu0 tau)
        // up to O(1/n) window-truncation effects.
        for lag in [2, 5, 9] {
            let got = empirical_autocorrelation_at_lag(&sig, lag).unwrap();
            let expect = (TAU * nu0 * lag as f64 * sig.dt()).cos();
            assert_abs_diff_eq!(got, expect, epsilon = 0.05);
        }
    }

    #[test]
    fn ensemble_variance_matches_analytic_covariance_at_zero_lag() {
        let spec = flat_spectrum(32, 2.0);
        let m = 100;
        let vars: Vec<f64> = (0..m)
            .map(|i| generate_signal(&spec, derive_seed(5, &[i])).unwrap().variance())
            .collect();
        let mean = vars.iter().sum::<f64>() / m as f64;
        let sd = (vars.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64).sqrt();
        let se = sd / (m as f64).sqrt();
        let expect = analytic_autocovariance(&spec, 0.0);
        assert_relative_eq!(expect, spec.total_power() / (TAU * TAU), max_relative = 1e-12);
        assert_abs_diff_eq!(mean, expect, epsilon = 3.0 * se);
    }

    #[test]
    fn analytic_autocorrelation_normalizes_and_restricts_lags() {
        let spec = flat_spectrum(16, 1.0);
        let a = analytic_autocorrelation(&spec, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-14);
        let too_far = 1.0 / spec.delta_nu() + 1.0;
        assert!(matches!(
            analytic_autocorrelation(&spec, &[too_far]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn analytic_autocorrelation_of_single_tone_is_cosine() {
        let delta = 0.02;
        let spec = PhaseSpectrum::new(vec![delta, 2.0 * delta], vec![0.0, 4.0]).unwrap();
        let taus: Vec<f64> = (0..40).map(|i| i as f64 * 0.3).collect();
        let a = analytic_autocorrelation(&spec, &taus).unwrap();
        for (&tau, &val) in taus.iter().zip(&a) {
            assert_abs_diff_eq!(val, (TAU * 2.0 * delta * tau).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn empirical_autocorrelation_is_one_at_zero_lag() {
        let spec = flat_spectrum(32, 1.0);
        let sig = generate_signal(&spec, 11).unwrap();
        assert_eq!(empirical_autocorrelation_at_lag(&sig, 0).unwrap(), 1.0);
    }

    #[test]
    fn white_signal_decorrelates_at_large_lag() {
        // A flat phase density over the full band is white: correlations at
        // lags well beyond dt vanish at the 3/sqrt(n) level.
        let spec = flat_spectrum(256, 1.0);
        let sig = generate_signal(&spec, 23).unwrap();
        let n = sig.len() as f64;
        for lag in [40, 80, 160] {
            let a = empirical_autocorrelation_at_lag(&sig, lag).unwrap();
            assert!(a.abs() < 3.0 / n.sqrt() * 3.0, "lag {lag}: {a}");
        }
    }

    #[test]
    fn zero_variance_signal_is_degenerate() {
        let sig = PhaseSignal::new(vec![2.0; 64], 0.1, 0).unwrap();
        assert!(matches!(
            empirical_autocorrelation_at_lag(&sig, 1),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn mean_empirical_autocorrelation_tracks_analytic() {
        let spec = synthesize_default_spectrum(&DefaultSpectrumParams {
            delta_nu_mhz: 1.0 / 64.0,
            nu_min_mhz: 1.0 / 64.0,
            nu_max_mhz: 2.0,
            ..DefaultSpectrumParams::default()
        })
        .unwrap();
        let m = 30;
        let lags: Vec<usize> = (0..20).map(|i| i * 4).collect();
        let mut acc = vec![0.0; lags.len()];
        let mut acc2 = vec![0.0; lags.len()];
        let mut dt = 0.0;
        for i in 0..m {
            let sig = generate_signal(&spec, derive_seed(77, &[i])).unwrap();
            dt = sig.dt();
            for (j, &lag) in lags.iter().enumerate() {
                let a = empirical_autocorrelation_at_lag(&sig, lag).unwrap();
                acc[j] += a;
                acc2[j] += a * a;
            }
        }
        let taus: Vec<f64> = lags.iter().map(|&l| l as f64 * dt).collect();
        let analytic = analytic_autocorrelation(&spec, &taus).unwrap();
        for j in 0..lags.len() {
            let mean = acc[j] / m as f64;
            let var = (acc2[j] - acc[j] * acc[j] / m as f64) / (m as f64 - 1.0);
            let se = (var.max(0.0) / m as f64).sqrt();
            assert!(
                (mean - analytic[j]).abs() <= 3.0 * se + 1e-9,
                "lag {}: mean {} vs analytic {} (se {})",
                lags[j],
                mean,
                analytic[j],
                se
            );
        }
    }

    #[test]
    fn scaling_signal_scales_variance_quadratically() {
        let spec = flat_spectrum(64, 1.0);
        let sig = generate_signal(&spec, 9).unwrap();
        assert_eq!(sig.scaled(1.0).unwrap().samples(), sig.samples());
        assert!(sig.scaled(0.0).unwrap().samples().iter().all(|&s| s == 0.0));
        let v0 = sig.variance();
        let v10 = sig.scaled(10.0).unwrap().variance();
        assert_relative_eq!(v10, 100.0 * v0, max_relative = 1e-10);
    }

    #[test]
    fn synthesis_is_linear_in_the_bins() {
        let spec = flat_spectrum(32, 1.0);
        let sampled = sample_spectrum(&spec, 4).unwrap();
        let a = synthesize_signal(&sampled.scaled(2.5)).unwrap();
        let b = synthesize_signal(&sampled).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_relative_eq!(*x, 2.5 * y, max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_and_ramp() {
        let c = PhaseSignal::new(vec![0.7; 32], 0.5, 0).unwrap();
        assert!(c.derivative().unwrap().samples().iter().all(|&d| d == 0.0));
        let dt = 0.25;
        let ramp: Vec<f64> = (0..32).map(|j| 3.0 * j as f64 * dt).collect();
        let r = PhaseSignal::new(ramp, dt, 0).unwrap();
        for &d in r.derivative().unwrap().samples() {
            assert_abs_diff_eq!(d, 3.0, epsilon = 1e-12);
        }
        let tiny = PhaseSignal::new(vec![1.0, 2.0], 0.1, 0).unwrap();
        assert!(matches!(tiny.derivative(), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_of_tone_is_analytic_to_second_order() {
        let dt = 0.01;
        let nu = 0.8;
        let a = 0.4;
        let samples: Vec<f64> = (0..400).map(|j| a * (TAU * nu * j as f64 * dt).cos()).collect();
        let sig = PhaseSignal::new(samples, dt, 0).unwrap();
        let d = sig.derivative().unwrap();
        // Central-difference error bound: (2 pi nu)^3 a dt^2 / 6.
        let bound = (TAU * nu).powi(3) * a * dt * dt / 6.0 * 1.1;
        for (j, &v) in d.samples().iter().enumerate().skip(1).take(sig.len() - 2) {
            let t = j as f64 * dt;
            let exact = -TAU * nu * a * (TAU * nu * t).sin();
            assert_abs_diff_eq!(v, exact, epsilon = bound);
        }
    }

    #[test]
    fn derived_seeds_do_not_collide_on_campaign_grids() {
        use std::collections::HashSet;
        let mut seen = HashSet::new();
        for sweep in 0..64u64 {
            for real in 0..256u64 {
                assert!(seen.insert(derive_seed(0xDEAD_BEEF, &[sweep, real])));
            }
        }
        // Different masters decorrelate too.
        assert_ne!(derive_seed(1, &[0, 0]), derive_seed(2, &[0, 0]));
    }

    #[test]
    fn zero_order_hold_lookup() {
        let sig = PhaseSignal::new(vec![1.0, 2.0, 3.0], 0.5, 0).unwrap();
        assert_eq!(sig.value_at(0.0), 1.0);
        assert_eq!(sig.value_at(0.49), 1.0);
        assert_eq!(sig.value_at(0.5), 2.0);
        assert_eq!(sig.value_at(10.0), 3.0);
    }
}
