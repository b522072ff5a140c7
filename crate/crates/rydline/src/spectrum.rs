//! Noise power spectral densities on uniform frequency grids.
//!
//! Two densities appear: frequency noise `S_nu` (MHz^2/MHz) and phase noise
//! `S_phi` (rad^2/MHz), related by `S_phi(nu) = S_nu(nu) / nu^2`. Grids are
//! strictly increasing, uniformly spaced, and strictly positive; power
//! integrals are left-endpoint Riemann sums so that synthesis normalization
//! and `total_power` agree bin by bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on grid-spacing uniformity.
pub const GRID_UNIFORMITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
struct SpectrumData {
    freqs: Vec<f64>,
    values: Vec<f64>,
    delta_nu: f64,
}

impl SpectrumData {
    fn new(freqs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if freqs.len() < 2 {
            return Err(Error::Format(format!(
                "spectrum needs at least 2 rows, got {}",
                freqs.len()
            )));
        }
        if freqs.len() != values.len() {
            return Err(Error::Format("frequency/value column length mismatch".into()));
        }
        for &f in &freqs {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::Grid(format!("frequencies must be finite and > 0, got {f}")));
            }
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::Domain(format!("density must be finite, got {v}")));
            }
            if v < 0.0 {
                return Err(Error::Domain(format!("density must be >= 0, got {v}")));
            }
        }
        let mut min_d = f64::INFINITY;
        let mut max_d = f64::NEG_INFINITY;
        for pair in freqs.windows(2) {
            let d = pair[1] - pair[0];
            if d <= 0.0 {
                return Err(Error::Grid(format!(
                    "frequencies must be strictly increasing near {}",
                    pair[0]
                )));
            }
            min_d = min_d.min(d);
            max_d = max_d.max(d);
        }
        if max_d / min_d - 1.0 > GRID_UNIFORMITY_TOL {
            return Err(Error::Grid(format!(
                "grid spacing non-uniform: spacings range {min_d} to {max_d}"
            )));
        }
        let delta_nu = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
        Ok(SpectrumData { freqs, values, delta_nu })
    }

    fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.delta_nu
    }
}

/// One-sided frequency-noise power spectral density, MHz^2/MHz vs MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpectrum(SpectrumData);

/// One-sided phase-noise power spectral density, rad^2/MHz vs MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum(SpectrumData);

/// Which density a two-column table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Frequency,
    Phase,
}

impl std::str::FromStr for SpectrumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(SpectrumKind::Frequency),
            "phase" => Ok(SpectrumKind::Phase),
            other => Err(Error::Config(format!("unknown spectrum kind `{other}`"))),
        }
    }
}

/// Parse a two-column whitespace- or comma-separated table. Lines starting
/// with `#` and blank lines are ignored.
fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::Format(format!(
                "line {}: expected 2 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let f: f64 = cols[0]
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad frequency `{}`", lineno + 1, cols[0])))?;
        let v: f64 = cols[1]
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad density `{}`", lineno + 1, cols[1])))?;
        freqs.push(f);
        values.push(v);
    }
    Ok((freqs, values))
}

macro_rules! spectrum_common {
    ($ty:ident) => {
        impl $ty {
            /// Build from raw arrays, validating all grid invariants.
            pub fn new(freqs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
                SpectrumData::new(freqs, values).map(Self)
            }

            /// Parse from a two-column text table.
            pub fn from_table(text: &str) -> Result<Self> {
                let (freqs, values) = parse_table(text)?;
                Self::new(freqs, values)
            }

            pub fn freqs(&self) -> &[f64] {
                &self.0.freqs
            }

            pub fn values(&self) -> &[f64] {
                &self.0.values
            }

            /// Grid spacing in MHz.
            pub fn delta_nu(&self) -> f64 {
                self.0.delta_nu
            }

            /// Highest tabulated frequency (Nyquist frequency of synthesis).
            pub fn nyquist(&self) -> f64 {
                *self.0.freqs.last().unwrap()
            }

            pub fn len(&self) -> usize {
                self.0.freqs.len()
            }

            pub fn is_empty(&self) -> bool {
                false
            }

            /// Frequency of the largest density bin.
            pub fn peak_frequency(&self) -> f64 {
                let (i, _) = self
                    .0
                    .values
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                        if v > bv { (i, v) } else { (bi, bv) }
                    });
                self.0.freqs[i]
            }

            /// Render as a two-column table (inverse of `from_table`).
            pub fn to_table(&self) -> String {
                let mut out = String::new();
                for (f, v) in self.0.freqs.iter().zip(&self.0.values) {
                    out.push_str(&format!("{f:.12e} {v:.12e}\n"));
                }
                out
            }
        }
    };
}

spectrum_common!(FrequencySpectrum);
spectrum_common!(PhaseSpectrum);

impl FrequencySpectrum {
    /// Convert to a phase-noise density via `S_phi = S_nu / nu^2`.
    pub fn to_phase(&self) -> Result<PhaseSpectrum> {
        if self.0.freqs.iter().any(|&f| f == 0.0) {
            return Err(Error::Domain("zero frequency bin in S_nu -> S_phi conversion".into()));
        }
        let values = self
            .0
            .values
            .iter()
            .zip(&self.0.freqs)
            .map(|(&v, &f)| v / (f * f))
            .collect();
        PhaseSpectrum::new(self.0.freqs.clone(), values)
    }
}

impl PhaseSpectrum {
    /// Convert back to a frequency-noise density via `S_nu = nu^2 S_phi`.
    pub fn to_frequency(&self) -> Result<FrequencySpectrum> {
        let values = self
            .0
            .values
            .iter()
            .zip(&self.0.freqs)
            .map(|(&v, &f)| v * (f * f))
            .collect();
        FrequencySpectrum::new(self.0.freqs.clone(), values)
    }

    /// Total noise power: left-endpoint Riemann sum `sum S_phi * delta_nu`,
    /// in rad^2.
    pub fn total_power(&self) -> f64 {
        self.0.total_power()
    }

    /// Rescale the frequency grid by `kappa`, then renormalize the densities
    /// by a single constant so the total power is unchanged. `kappa = 1` is a
    /// bin-exact identity.
    pub fn rescaled(&self, kappa: f64) -> Result<PhaseSpectrum> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
        }
        let freqs: Vec<f64> = self.0.freqs.iter().map(|&f| f * kappa).collect();
        let scaled = SpectrumData::new(freqs, self.0.values.clone())?;
        let norm = self.0.total_power() / scaled.total_power();
        let values = scaled.values.iter().map(|&v| v * norm).collect();
        PhaseSpectrum::new(scaled.freqs, values)
    }
}

/// Parameters of the synthetic stand-in for a measured diode-laser noise
/// spectrum: a white frequency-noise floor (which becomes a `1/nu^2` phase
/// tail) plus a single servo bump that dominates the phase density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefaultSpectrumParams {
    /// White frequency-noise floor, MHz^2/MHz.
    pub floor_snu: f64,
    /// Servo-bump center, MHz.
    pub bump_center_mhz: f64,
    /// Servo-bump Gaussian width, MHz.
    pub bump_width_mhz: f64,
    /// Servo-bump peak height in the phase density, rad^2/MHz.
    pub bump_height: f64,
    /// Lowest grid frequency, MHz.
    pub nu_min_mhz: f64,
    /// Highest grid frequency, MHz.
    pub nu_max_mhz: f64,
    /// Grid spacing, MHz. Signal duration after synthesis is `1/delta_nu`.
    pub delta_nu_mhz: f64,
}

impl Default for DefaultSpectrumParams {
    fn default() -> Self {
        // Bump center 3 V_dd / 2 pi ~= 0.477 MHz for V_dd = 1 rad/us; grid
        // spacing 1/512 MHz gives a 512 us synthesized signal.
        DefaultSpectrumParams {
            floor_snu: 1e-4,
            bump_center_mhz: 3.0 / std::f64::consts::TAU,
            bump_width_mhz: 0.06,
            bump_height: 3.5,
            nu_min_mhz: 4.0 / 512.0,
            nu_max_mhz: 1312.0 / 512.0,
            delta_nu_mhz: 1.0 / 512.0,
        }
    }
}

/// Build the default surrogate phase spectrum: `floor_snu / nu^2` plus a
/// Gaussian servo bump centered at `bump_center_mhz`. The discrete peak of
/// the result sits on the grid bin nearest the bump center.
pub fn synthesize_default_spectrum(params: &DefaultSpectrumParams) -> Result<PhaseSpectrum> {
    let p = params;
    for (name, v) in [
        ("floor_snu", p.floor_snu),
        ("bump_center_mhz", p.bump_center_mhz),
        ("bump_width_mhz", p.bump_width_mhz),
        ("bump_height", p.bump_height),
        ("nu_min_mhz", p.nu_min_mhz),
        ("nu_max_mhz", p.nu_max_mhz),
        ("delta_nu_mhz", p.delta_nu_mhz),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    if p.bump_center_mhz < p.nu_min_mhz || p.bump_center_mhz > p.nu_max_mhz {
        return Err(Error::Domain(format!(
            "bump center {} outside grid [{}, {}]",
            p.bump_center_mhz, p.nu_min_mhz, p.nu_max_mhz
        )));
    }
    // Grid bins at exact integer multiples of delta_nu so the synthesis FFT
    // can place them without interpolation.
    let k_min = (p.nu_min_mhz / p.delta_nu_mhz).round().max(1.0) as usize;
    let k_max = (p.nu_max_mhz / p.delta_nu_mhz).round() as usize;
    if k_max <= k_min {
        return Err(Error::Domain("nu_max must exceed nu_min by at least one bin".into()));
    }
    let mut freqs = Vec::with_capacity(k_max - k_min + 1);
    let mut values = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        let nu = k as f64 * p.delta_nu_mhz;
        let tail = p.floor_snu / (nu * nu);
        let arg = (nu - p.bump_center_mhz) / p.bump_width_mhz;
        let bump = p.bump_height * (-0.5 * arg * arg).exp();
        freqs.push(nu);
        values.push(tail + bump);
    }
    PhaseSpectrum::new(freqs, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn loads_minimal_phase_table() {
        let s = PhaseSpectrum::from_table("0.1 1.0\n0.2 1.0").unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.delta_nu(), 0.1, max_relative = 1e-12);
        assert_relative_eq!(s.nyquist(), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn accepts_comments_and_commas() {
        let s = FrequencySpectrum::from_table("# a comment\n0.1, 2.0\n\n0.2, 2.0\n0.3 2.0").unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn rejects_spacing_mismatch() {
        let err = PhaseSpectrum::from_table("0.1 1.0\n0.25 1.0\n0.3 1.0").unwrap_err();
        assert!(matches!(err, Error::Grid(_)), "{err}");
    }

    #[test]
    fn rejects_negative_density() {
        let err = PhaseSpectrum::from_table("0.1 1.0\n0.2 -1.0").unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn rejects_single_row() {
        let err = PhaseSpectrum::from_table("0.1 1.0").unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        let err = PhaseSpectrum::from_table("0.0 1.0\n0.1 1.0").unwrap_err();
        assert!(matches!(err, Error::Grid(_)), "{err}");
    }

    #[test]
    fn rejects_near_uniform_grid_beyond_tolerance() {
        // Third spacing off by 1e-6 relative: must be rejected.
        let f = vec![0.1, 0.2, 0.3, 0.4 + 1e-7];
        let err = PhaseSpectrum::new(f, vec![1.0; 4]).unwrap_err();
        assert!(matches!(err, Error::Grid(_)), "{err}");
    }

    #[test]
    fn frequency_to_phase_pointwise() {
        let s = FrequencySpectrum::new(vec![1.0, 2.0], vec![4.0, 4.0]).unwrap();
        let p = s.to_phase().unwrap();
        assert_relative_eq!(p.values()[0], 4.0, max_relative = 1e-15);
        assert_relative_eq!(p.values()[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn conversion_round_trips() {
        let s = synthesize_default_spectrum(&DefaultSpectrumParams::default()).unwrap();
        let back = s.to_frequency().unwrap().to_phase().unwrap();
        for (a, b) in s.values().iter().zip(back.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn total_power_flat_spectrum() {
        let freqs: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
        let s = PhaseSpectrum::new(freqs, vec![2.0; 10]).unwrap();
        assert_relative_eq!(s.total_power(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn total_power_zero_spectrum() {
        let s = PhaseSpectrum::new(vec![0.1, 0.2], vec![0.0, 0.0]).unwrap();
        assert_eq!(s.total_power(), 0.0);
    }

    #[test]
    fn rescale_identity_is_bit_exact() {
        let s = synthesize_default_spectrum(&DefaultSpectrumParams::default()).unwrap();
        let r = s.rescaled(1.0).unwrap();
        assert_eq!(s.freqs(), r.freqs());
        assert_eq!(s.values(), r.values());
    }

    #[test]
    fn rescale_flat_spectrum_halves_density() {
        // kappa = 2 on a flat spectrum over [0.1, 1.0]: grid doubles, density
        // halves, power checked against an independent trapezoid sum.
        let freqs: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
        let s = PhaseSpectrum::new(freqs, vec![1.0; 10]).unwrap();
        let r = s.rescaled(2.0).unwrap();
        assert_relative_eq!(r.freqs()[0], 0.2, max_relative = 1e-12);
        assert_relative_eq!(r.nyquist(), 2.0, max_relative = 1e-12);
        for &v in r.values() {
            assert_relative_eq!(v, 0.5, max_relative = 1e-12);
        }
        let trapezoid = |sp: &PhaseSpectrum| -> f64 {
            sp.values()
                .windows(2)
                .zip(sp.freqs().windows(2))
                .map(|(v, f)| 0.5 * (v[0] + v[1]) * (f[1] - f[0]))
                .sum()
        };
        // Left sums and trapezoids agree here because the density is flat.
        assert_relative_eq!(trapezoid(&r) + 0.5 * 0.2, r.total_power(), max_relative = 1e-12);
    }

    #[test]
    fn rescale_rejects_nonpositive_kappa() {
        let s = PhaseSpectrum::new(vec![0.1, 0.2], vec![1.0, 1.0]).unwrap();
        assert!(matches!(s.rescaled(0.0), Err(Error::Domain(_))));
        assert!(matches!(s.rescaled(-2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn default_spectrum_peaks_at_bump_center() {
        let params = DefaultSpectrumParams::default();
        let s = synthesize_default_spectrum(&params).unwrap();
        assert!((s.peak_frequency() - params.bump_center_mhz).abs() <= 0.5 * s.delta_nu() * 1.0001);
        // Paper anchor: peak at 3 V_dd / 2 pi ~ 0.48 MHz.
        assert!((s.peak_frequency() - 0.48).abs() < 0.01);
        let p = s.total_power();
        assert!(p.is_finite() && p > 0.0);
    }

    #[test]
    fn default_spectrum_without_bump_decays() {
        let params = DefaultSpectrumParams {
            bump_height: 1e-300, // effectively zero; zero itself is rejected
            ..DefaultSpectrumParams::default()
        };
        let s = synthesize_default_spectrum(&params).unwrap();
        for w in s.values().windows(2) {
            assert!(w[1] < w[0], "floor-only phase spectrum must decay monotonically");
        }
    }

    #[test]
    fn default_spectrum_rejects_center_outside_grid() {
        let params = DefaultSpectrumParams {
            bump_center_mhz: 10.0,
            ..DefaultSpectrumParams::default()
        };
        assert!(matches!(synthesize_default_spectrum(&params), Err(Error::Domain(_))));
    }

    #[test]
    fn rescale_peak_moves_below_original_for_kappa_under_one() {
        let s = synthesize_default_spectrum(&DefaultSpectrumParams::default()).unwrap();
        let r = s.rescaled(0.9).unwrap();
        assert!(r.peak_frequency() < s.peak_frequency());
        assert_relative_eq!(r.peak_frequency(), 0.9 * s.peak_frequency(), max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn rescale_preserves_power(
            kappa in 0.1f64..10.0,
            n in 4usize..64,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let delta = 0.01 + rng.gen::<f64>();
            let freqs: Vec<f64> = (1..=n).map(|k| delta * k as f64).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 5.0).collect();
            let s = PhaseSpectrum::new(freqs, values).unwrap();
            let r = s.rescaled(kappa).unwrap();
            prop_assert!((r.total_power() - s.total_power()).abs()
                <= 1e-9 * s.total_power().max(1e-300));
        }
    }
}
