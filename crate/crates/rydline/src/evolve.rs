//! Propagation through time-dependent, noise-modulated Hamiltonians.
//!
//! Each step applies the exact exponential of the midpoint Hamiltonian,
//! `psi <- exp(-i H(t_mid) dt) psi`, evaluated matrix-free by a Lanczos
//! (Krylov) expansion converged to near machine precision. The rule is
//! second order in `dt` for time-dependent Hamiltonians and preserves the
//! norm, so unitarity is a checked invariant rather than an assumption.
//!
//! Noise enters either as a drive phase (`lab-phase` frame) or, after the
//! exact gauge transformation `psi -> exp(-i phi n) psi`, as an effective
//! detuning `delta_eff = delta - phi_dot` with the drive phase set to zero
//! (`rotating-detuning` frame). Phase values use zero-order hold on the
//! synthesis grid; `phi_dot` is the held central-difference derivative.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{eigensystem_for, EigCache, Sector};
use crate::error::{Error, Result};
use crate::model::{
    drive_operator, interaction_diagonal, occupation_diagonal, z2_order_parameter, ChainParams,
    HamiltonianAction, OperatorMatrix, StateVector,
};
use crate::noisegen::PhaseSignal;

/// One linear ramp: both laser parameters interpolate linearly over
/// `duration` microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub omega_start: f64,
    pub omega_end: f64,
    pub delta_start: f64,
    pub delta_end: f64,
}

/// Piecewise-linear schedule for `(Omega(t), delta(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    segments: Vec<Segment>,
}

impl RampSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Domain("schedule needs at least one segment".into()));
        }
        for s in &segments {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::Domain(format!(
                    "segment duration must be > 0, got {}",
                    s.duration
                )));
            }
        }
        for pair in segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if (a.omega_end - b.omega_start).abs() > 1e-12 || (a.delta_end - b.delta_start).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "parameter jump across segment join: ({}, {}) -> ({}, {})",
                    a.omega_end, a.delta_end, b.omega_start, b.delta_start
                )));
            }
        }
        Ok(RampSchedule { segments })
    }

    /// The three-step preparation ramp in `v_dd` units: step 1 raises the
    /// drive `0.1 -> 1.0` at `delta = -3`, step 2 sweeps the detuning
    /// `-3 -> 1.1` at full drive, step 3 lowers the drive back to `0.1`.
    pub fn three_step(t1: f64, t2: f64, t3: f64, v_dd: f64) -> Result<Self> {
        RampSchedule::new(vec![
            Segment {
                duration: t1,
                omega_start: 0.1 * v_dd,
                omega_end: 1.0 * v_dd,
                delta_start: -3.0 * v_dd,
                delta_end: -3.0 * v_dd,
            },
            Segment {
                duration: t2,
                omega_start: 1.0 * v_dd,
                omega_end: 1.0 * v_dd,
                delta_start: -3.0 * v_dd,
                delta_end: 1.1 * v_dd,
            },
            Segment {
                duration: t3,
                omega_start: 1.0 * v_dd,
                omega_end: 0.1 * v_dd,
                delta_start: 1.1 * v_dd,
                delta_end: 1.1 * v_dd,
            },
        ])
    }

    /// Step 3 alone (the simulated part of the preparation): drive
    /// `1.0 -> 0.1` at fixed `delta = 1.1`, starting from the exact ground
    /// state of the initial Hamiltonian.
    pub fn final_step(t3: f64, v_dd: f64) -> Result<Self> {
        RampSchedule::new(vec![Segment {
            duration: t3,
            omega_start: 1.0 * v_dd,
            omega_end: 0.1 * v_dd,
            delta_start: 1.1 * v_dd,
            delta_end: 1.1 * v_dd,
        }])
    }

    /// Constant-parameter schedule (quench experiments).
    pub fn constant(omega: f64, delta: f64, duration: f64) -> Result<Self> {
        RampSchedule::new(vec![Segment {
            duration,
            omega_start: omega,
            omega_end: omega,
            delta_start: delta,
            delta_end: delta,
        }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `(Omega, delta)` at time `t`, clamped to the schedule ends.
    pub fn params_at(&self, t: f64) -> (f64, f64) {
        let mut start = 0.0;
        for s in &self.segments {
            if t <= start + s.duration {
                let x = ((t - start) / s.duration).clamp(0.0, 1.0);
                return (
                    s.omega_start + x * (s.omega_end - s.omega_start),
                    s.delta_start + x * (s.delta_end - s.delta_start),
                );
            }
            start += s.duration;
        }
        let last = self.segments.last().unwrap();
        (last.omega_end, last.delta_end)
    }

    /// `(dOmega/dt, ddelta/dt)` of the segment containing `t`.
    pub fn rates_at(&self, t: f64) -> (f64, f64) {
        let mut start = 0.0;
        for s in &self.segments {
            if t <= start + s.duration {
                return (
                    (s.omega_end - s.omega_start) / s.duration,
                    (s.delta_end - s.delta_start) / s.duration,
                );
            }
            start += s.duration;
        }
        (0.0, 0.0)
    }
}

/// Which representation absorbs the drive-phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    LabPhase,
    RotatingDetuning,
}

impl std::str::FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab-phase" | "lab" => Ok(Frame::LabPhase),
            "rotating-detuning" | "rotating" => Ok(Frame::RotatingDetuning),
            other => Err(Error::Config(format!("unknown frame `{other}`"))),
        }
    }
}

/// Step size, frame, and recording cadence for one propagation.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    /// Step in microseconds; must not exceed the noise sample interval.
    pub dt: f64,
    pub frame: Frame,
    /// Steps between observable snapshots; 0 records only the endpoints.
    pub record_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { dt: 1e-2, frame: Frame::LabPhase, record_stride: 0 }
    }
}

/// Default step: `1e-2 / v_dd`, shrunk to the noise sample interval if that
/// is finer.
pub fn default_dt(v_dd: f64, noise: Option<&PhaseSignal>) -> f64 {
    let base = 1e-2 / v_dd;
    match noise {
        Some(sig) => base.min(sig.dt()),
        None => base,
    }
}

/// Observables snapshot along a trajectory. `energy` is taken in the
/// noiseless instantaneous Hamiltonian `H(Omega(t), delta(t), phi = 0)`.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub omega: f64,
    pub delta: f64,
    pub energy: f64,
    pub h_int: f64,
    pub z2: f64,
    pub norm: f64,
    /// Instantaneous ground fidelity, when requested.
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub final_state: StateVector,
    pub noise_seed: Option<u64>,
}

impl Trajectory {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().unwrap()
    }
}

const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX: usize = 48;

/// Lanczos workspace for `exp(-i H dt) psi` with full reorthogonalization.
struct KrylovExpm {
    dim: usize,
    basis: Vec<Array1<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    work: Array1<C64>,
}

impl KrylovExpm {
    fn new(dim: usize) -> Self {
        KrylovExpm {
            dim,
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            work: Array1::zeros(dim),
        }
    }

    /// `exp(-i dt T_m) e_1` for the real symmetric tridiagonal `T_m`.
    fn tridiag_exp_column(alpha: &[f64], beta: &[f64], dt: f64) -> Result<Vec<C64>> {
        let m = alpha.len();
        if m == 1 {
            return Ok(vec![C64::from_polar(1.0, -dt * alpha[0])]);
        }
        // beta[i] couples v_i to v_{i+1}.
        let mut t = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let (evals, evecs) = t.eigh(UPLO::Lower)?;
        let mut y = vec![C64::new(0.0, 0.0); m];
        for k in 0..m {
            let phase = C64::from_polar(1.0, -dt * evals[k]);
            let w = evecs[(0, k)];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += evecs[(i, k)] * w * phase;
            }
        }
        Ok(y)
    }

    /// Apply `exp(-i H dt)` to `psi` in place. `h_apply` must compute
    /// `dst = H src` for a fixed Hermitian `H`.
    fn step<F>(&mut self, h_apply: F, dt: f64, psi: &mut Array1<C64>) -> Result<()>
    where
        F: Fn(&Array1<C64>, &mut Array1<C64>),
    {
        let beta0 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if beta0 == 0.0 {
            return Err(Error::Integration("cannot propagate the zero vector".into()));
        }
        self.basis.clear();
        self.alpha.clear();
        self.beta.clear();
        self.basis.push(psi.mapv(|z| z / beta0));

        let mut y: Vec<C64> = Vec::new();
        let mut converged = false;
        for j in 0..KRYLOV_MAX {
            h_apply(&self.basis[j], &mut self.work);
            let alpha_j: f64 = self.basis[j]
                .iter()
                .zip(self.work.iter())
                .map(|(v, w)| (v.conj() * w).re)
                .sum();
            self.alpha.push(alpha_j);
            {
                let vj = &self.basis[j];
                for (w, v) in self.work.iter_mut().zip(vj.iter()) {
                    *w -= v * alpha_j;
                }
            }
            if j > 0 {
                let beta_j = self.beta[j - 1];
                let vprev = &self.basis[j - 1];
                for (w, v) in self.work.iter_mut().zip(vprev.iter()) {
                    *w -= v * beta_j;
                }
            }
            // Full reorthogonalization keeps the basis orthonormal to
            // machine precision over long campaigns.
            for v in &self.basis {
                let overlap: C64 = v.iter().zip(self.work.iter()).map(|(a, b)| a.conj() * b).sum();
                for (w, vi) in self.work.iter_mut().zip(v.iter()) {
                    *w -= vi * overlap;
                }
            }
            let beta_next = self.work.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            self.beta.push(beta_next);

            y = Self::tridiag_exp_column(&self.alpha, &self.beta, dt)?;
            let scale = self.alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            let happy = beta_next <= 1e-14 * scale.max(1.0);
            let err = beta_next * y[y.len() - 1].norm() * dt.abs();
            if happy || err < KRYLOV_TOL {
                converged = true;
                break;
            }
            self.basis.push(self.work.mapv(|z| z / beta_next));
        }
        if !converged {
            return Err(Error::Integration(format!(
                "Krylov expansion did not reach {KRYLOV_TOL:.1e} within {KRYLOV_MAX} vectors \
                 (step too large for this spectrum?)"
            )));
        }
        psi.fill(C64::new(0.0, 0.0));
        for (v, &c) in self.basis.iter().zip(y.iter()) {
            let c = c * beta0;
            for (p, vi) in psi.iter_mut().zip(v.iter()) {
                *p += vi * c;
            }
        }
        Ok(())
    }
}

fn record_snapshot(
    time: f64,
    schedule: &RampSchedule,
    action: &HamiltonianAction,
    h_int: &Array1<f64>,
    z2: &Array1<f64>,
    psi: &Array1<C64>,
    fidelity_source: Option<(&EigCache, Sector, &ChainParams)>,
) -> Result<TrajectoryRecord> {
    let (omega, delta) = schedule.params_at(time);
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let energy = action.expectation(omega, delta, 0.0, psi);
    let weight = |d: &Array1<f64>| d.iter().zip(psi.iter()).map(|(&a, z)| a * z.norm_sqr()).sum::<f64>();
    let fidelity = match fidelity_source {
        None => None,
        Some((cache, sector, params)) => {
            let eig = cache.get(params, omega, delta, sector)?;
            Some(eig.ground_fidelity(&StateVector(psi.clone())))
        }
    };
    Ok(TrajectoryRecord {
        time,
        omega,
        delta,
        energy,
        h_int: weight(h_int),
        z2: weight(z2),
        norm,
        fidelity,
    })
}

/// Propagate `psi0` through `schedule`, optionally modulated by a phase
/// signal. Errors if the noise does not cover the schedule, if `cfg.dt`
/// undercuts the noise grid, or if the final norm drifted beyond `1e-8`.
///
/// `fidelity_cache` additionally records the instantaneous ground fidelity
/// at every snapshot (one diagonalization per distinct `(Omega, delta)`).
pub fn evolve(
    params: &ChainParams,
    psi0: &StateVector,
    schedule: &RampSchedule,
    noise: Option<&PhaseSignal>,
    cfg: &EvolutionConfig,
    fidelity_cache: Option<(&EigCache, Sector)>,
) -> Result<Trajectory> {
    let dim = params.dim();
    if psi0.dim() != dim {
        return Err(Error::Domain(format!(
            "state dimension {} does not match chain dimension {dim}",
            psi0.dim()
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "initial state must be normalized (norm {})",
            psi0.norm()
        )));
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {}", cfg.dt)));
    }
    let total = schedule.total_duration();
    let mut phi_dot = None;
    if let Some(sig) = noise {
        if cfg.dt > sig.dt() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "dt = {} exceeds the noise sample interval {}; the noise grid \
                 must not be sub-sampled",
                cfg.dt,
                sig.dt()
            )));
        }
        if sig.duration() + 1e-9 * total.max(1.0) < total {
            return Err(Error::Coverage(format!(
                "noise covers {} us but the schedule lasts {} us; synthesize a \
                 longer signal (smaller delta_nu) instead of wrapping around",
                sig.duration(),
                total
            )));
        }
        if cfg.frame == Frame::RotatingDetuning {
            phi_dot = Some(sig.derivative()?);
        }
    }

    let action = HamiltonianAction::new(params);
    let h_int_diag = interaction_diagonal(params);
    let z2_diag = match z2_order_parameter(params) {
        OperatorMatrix::Diagonal(d) => d,
        OperatorMatrix::Dense(_) => unreachable!(),
    };
    let fid = fidelity_cache.map(|(c, s)| (c, s, params));

    let mut psi = psi0.0.clone();
    let mut krylov = KrylovExpm::new(dim);
    let mut records = Vec::new();
    records.push(record_snapshot(0.0, schedule, &action, &h_int_diag, &z2_diag, &psi, fid)?);

    let mut seg_start = 0.0;
    let mut steps_done = 0usize;
    for seg in schedule.segments() {
        // Steps aligned to segment boundaries so ramp kinks never fall
        // inside a step.
        let n_steps = (seg.duration / cfg.dt).ceil().max(1.0) as usize;
        let dt = seg.duration / n_steps as f64;
        for i in 0..n_steps {
            let t_mid = seg_start + (i as f64 + 0.5) * dt;
            let (omega, delta) = schedule.params_at(t_mid);
            let (delta_eff, phi) = match (noise, cfg.frame) {
                (None, _) => (delta, 0.0),
                (Some(sig), Frame::LabPhase) => (delta, sig.value_at(t_mid)),
                // Exact gauge pairing for the e^{-i phi}|0><1| drive
                // convention: delta_eff = delta - phi_dot.
                (Some(_), Frame::RotatingDetuning) => {
                    (delta - phi_dot.as_ref().unwrap().value_at(t_mid), 0.0)
                }
            };
            krylov.step(
                |src, dst| action.apply_into(omega, delta_eff, phi, src, dst),
                dt,
                &mut psi,
            )?;
            steps_done += 1;
            let at_end = std::ptr::eq(seg, schedule.segments().last().unwrap()) && i == n_steps - 1;
            if !at_end && cfg.record_stride > 0 && steps_done % cfg.record_stride == 0 {
                let t = seg_start + (i as f64 + 1.0) * dt;
                records.push(record_snapshot(t, schedule, &action, &h_int_diag, &z2_diag, &psi, fid)?);
            }
        }
        seg_start += seg.duration;
    }
    records.push(record_snapshot(total, schedule, &action, &h_int_diag, &z2_diag, &psi, fid)?);

    let norm = records.last().unwrap().norm;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Integration(format!(
            "norm drifted to {norm} (> 1e-8 tolerance) over {steps_done} steps"
        )));
    }
    Ok(Trajectory {
        records,
        final_state: StateVector(psi),
        noise_seed: noise.map(|s| s.seed()),
    })
}

/// Squared overlap of `psi` with the (possibly degenerate) ground multiplet
/// of `H(omega, delta, 0)`.
pub fn instantaneous_ground_fidelity(
    psi: &StateVector,
    params: &ChainParams,
    omega: f64,
    delta: f64,
    cache: &EigCache,
) -> Result<f64> {
    let eig = cache.get(params, omega, delta, Sector::Full)?;
    Ok(eig.ground_fidelity(psi))
}

/// Adiabaticity ratio `|<E_m|dH/dt|E_n>| / |E_m - E_n|` for one eigenpair.
#[derive(Debug, Clone, Copy)]
pub struct AdiabaticityEntry {
    pub lower: usize,
    pub upper: usize,
    pub ratio: f64,
    /// Pair excluded because the gap is below the degeneracy threshold;
    /// `ratio` is NaN.
    pub degenerate: bool,
}

/// Rank how strongly the schedule derivative couples the lowest
/// `n_levels` eigenpairs of `H(omega, delta, 0)` against their gaps. Small
/// ratios everywhere mean the instantaneous adiabatic constraint holds.
pub fn adiabaticity_diagnostic(
    params: &ChainParams,
    omega: f64,
    delta: f64,
    domega_dt: f64,
    ddelta_dt: f64,
    n_levels: usize,
) -> Result<Vec<AdiabaticityEntry>> {
    let eig = eigensystem_for(params, omega, delta, Sector::Full)?;
    let n_levels = n_levels.min(eig.len());
    // dH/dt = dOmega/dt * (drive at unit Rabi) - ddelta/dt * n.
    let drive = drive_operator(params, 0.0).to_dense();
    let occ = occupation_diagonal(params);
    let mut hdot = drive.mapv(|z| z * domega_dt);
    for (i, &o) in occ.iter().enumerate() {
        hdot[(i, i)] -= C64::new(ddelta_dt * o, 0.0);
    }
    let tol = eig.degeneracy_threshold();
    let mut out = Vec::new();
    for m in 0..n_levels {
        let hv = hdot.dot(&eig.vectors.column(m).to_owned());
        for n in (m + 1)..n_levels {
            let gap = (eig.energies[n] - eig.energies[m]).abs();
            if gap <= tol {
                out.push(AdiabaticityEntry { lower: m, upper: n, ratio: f64::NAN, degenerate: true });
                continue;
            }
            let elem: C64 = eig
                .vectors
                .column(n)
                .iter()
                .zip(hv.iter())
                .map(|(v, w)| v.conj() * w)
                .sum();
            out.push(AdiabaticityEntry {
                lower: m,
                upper: n,
                ratio: elem.norm() / gap,
                degenerate: false,
            });
        }
    }
    Ok(out)
}
