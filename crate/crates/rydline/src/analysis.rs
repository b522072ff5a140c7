//! Exact diagonalization and spectral diagnostics.
//!
//! Eigensystems always carry full-space eigenvectors (sector results are
//! lifted back), with eigenvector phases fixed by making the largest-modulus
//! component real and positive so matrix-element tables are reproducible.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exec;
use crate::io::{self, EigRecord};
use crate::model::{
    build_hamiltonian, occupation_diagonal, ChainParams, OperatorMatrix, SectorBasis, StateVector,
};

/// Which part of the reflection-symmetry decomposition to diagonalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    Full,
    Symmetric,
    Antisymmetric,
}

impl Sector {
    pub fn tag(self) -> u8 {
        match self {
            Sector::Full => 0,
            Sector::Symmetric => 1,
            Sector::Antisymmetric => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Sector::Full),
            1 => Ok(Sector::Symmetric),
            2 => Ok(Sector::Antisymmetric),
            other => Err(Error::Format(format!("unknown sector tag {other}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Full => "full",
            Sector::Symmetric => "sym",
            Sector::Antisymmetric => "anti",
        }
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Sector::Full),
            "symmetric" | "sym" => Ok(Sector::Symmetric),
            "antisymmetric" | "anti" => Ok(Sector::Antisymmetric),
            other => Err(Error::Config(format!("unknown sector `{other}`"))),
        }
    }
}

/// Complete spectrum of one Hamiltonian (or one symmetry sector of it),
/// energies ascending, eigenvectors as full-space columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub energies: Array1<f64>,
    /// `dim_full x n_levels`, column `i` is `|E_i>`.
    pub vectors: Array2<C64>,
    pub n_sites: usize,
    pub v_dd: f64,
    pub omega: f64,
    pub delta: f64,
    pub sector: Sector,
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn dim_full(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Energy threshold below which two levels count as degenerate:
    /// `1e-9` of the spectral scale.
    pub fn degeneracy_threshold(&self) -> f64 {
        let scale = self
            .energies
            .iter()
            .fold(0.0f64, |m, &e| m.max(e.abs()))
            .max(1e-300);
        1e-9 * scale
    }

    /// Indices of the (possibly degenerate) ground multiplet.
    pub fn ground_indices(&self) -> Vec<usize> {
        let tol = self.degeneracy_threshold();
        let e0 = self.energies[0];
        (0..self.len())
            .take_while(|&i| self.energies[i] - e0 <= tol)
            .collect()
    }

    pub fn ground_state(&self) -> StateVector {
        StateVector(self.vectors.column(0).to_owned())
    }

    /// Eigenbasis coefficients `<E_i|psi>` for every level.
    pub fn coefficients(&self, psi: &StateVector) -> Array1<C64> {
        let conj = psi.0.mapv(|z| z.conj());
        self.vectors.t().dot(&conj).mapv(|z| z.conj())
    }

    /// Ranges of consecutive indices whose energies agree within the
    /// degeneracy threshold.
    pub fn degenerate_blocks(&self) -> Vec<std::ops::Range<usize>> {
        let tol = self.degeneracy_threshold();
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 1..=self.len() {
            if i == self.len() || self.energies[i] - self.energies[i - 1] > tol {
                blocks.push(start..i);
                start = i;
            }
        }
        blocks
    }

    /// Squared overlap of `psi` with the ground multiplet (projection onto
    /// the full degenerate subspace).
    pub fn ground_fidelity(&self, psi: &StateVector) -> f64 {
        self.ground_indices()
            .into_iter()
            .map(|i| {
                let col = self.vectors.column(i);
                let ov: C64 = col.iter().zip(psi.0.iter()).map(|(v, p)| v.conj() * p).sum();
                ov.norm_sqr()
            })
            .sum()
    }
}

/// Rotate each eigenvector so its largest-modulus component is real-positive.
fn fix_phases(vectors: &mut Array2<C64>) {
    for mut col in vectors.columns_mut() {
        let mut best = 0usize;
        let mut best_mod = -1.0;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm_sqr();
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        let z = col[best];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            col.mapv_inplace(|v| v * phase);
        }
    }
}

fn hermiticity_guard(h: &OperatorMatrix) -> Result<()> {
    if let OperatorMatrix::Dense(m) = h {
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        let res = h.hermiticity_residual();
        if res > 1e-10 * scale {
            return Err(Error::Domain(format!(
                "diagonalize requires a Hermitian operator (residual {res:.3e})"
            )));
        }
    }
    Ok(())
}

/// Diagonalize a Hermitian operator, optionally restricted to one
/// reflection-symmetry sector. Returns ascending energies and full-space
/// eigenvector columns (sector vectors are lifted).
pub fn diagonalize(h: &OperatorMatrix, sector: Sector) -> Result<(Array1<f64>, Array2<C64>)> {
    hermiticity_guard(h)?;
    let dim = h.dim();
    if !dim.is_power_of_two() {
        return Err(Error::Domain(format!("operator dimension {dim} is not 2^N")));
    }
    let n_sites = dim.trailing_zeros() as usize;
    let (energies, vectors) = match sector {
        Sector::Full => match h {
            OperatorMatrix::Diagonal(d) => {
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
                let energies = Array1::from_iter(order.iter().map(|&i| d[i]));
                let mut vectors = Array2::zeros((dim, dim));
                for (col, &i) in order.iter().enumerate() {
                    vectors[(i, col)] = C64::new(1.0, 0.0);
                }
                (energies, vectors)
            }
            OperatorMatrix::Dense(m) => {
                let (e, v) = m.eigh(UPLO::Lower)?;
                // eigh on a row-major complex array effectively diagonalizes
                // the transpose (= conjugate, for Hermitian input), so the
                // eigenvectors come back conjugated.
                (e, v.mapv(|z| z.conj()))
            }
        },
        Sector::Symmetric | Sector::Antisymmetric => {
            let params = ChainParams::unrestricted(n_sites, 1.0)?;
            let basis = if sector == Sector::Symmetric {
                SectorBasis::symmetric(&params)
            } else {
                SectorBasis::antisymmetric(&params)
            };
            let dense = h.to_dense();
            let projected = basis.project_dense(&dense);
            let (energies, sector_vectors) = {
                let (e, v) = projected.eigh(UPLO::Lower)?;
                (e, v.mapv(|z| z.conj()))
            };
            let mut vectors = Array2::zeros((dim, basis.dim()));
            for (c, col) in sector_vectors.columns().into_iter().enumerate() {
                let lifted = basis.lift(&col.to_owned());
                vectors.column_mut(c).assign(&lifted);
            }
            (energies, vectors)
        }
    };
    let mut vectors = vectors;
    fix_phases(&mut vectors);
    Ok((energies, vectors))
}

/// Diagonalize the chain Hamiltonian at `(omega, delta)`; the spectrum is
/// independent of the drive phase, so `phi = 0` is used.
pub fn eigensystem_for(
    params: &ChainParams,
    omega: f64,
    delta: f64,
    sector: Sector,
) -> Result<Eigensystem> {
    let h = build_hamiltonian(params, omega, delta, 0.0);
    let (energies, vectors) = diagonalize(&h, sector)?;
    Ok(Eigensystem {
        energies,
        vectors,
        n_sites: params.n_sites,
        v_dd: params.v_dd,
        omega,
        delta,
        sector,
    })
}

/// Gap between the ground and first excited level of the full spectrum.
#[derive(Debug, Clone, Copy)]
pub struct GapInfo {
    pub gap: f64,
    /// Set when the "gap" is below the degeneracy threshold; `gap` is then
    /// reported as zero.
    pub degenerate: bool,
}

pub fn ground_gap(params: &ChainParams, omega: f64, delta: f64) -> Result<GapInfo> {
    let eig = eigensystem_for(params, omega, delta, Sector::Full)?;
    let raw = eig.energies[1] - eig.energies[0];
    if raw <= eig.degeneracy_threshold() {
        Ok(GapInfo { gap: 0.0, degenerate: true })
    } else {
        Ok(GapInfo { gap: raw, degenerate: false })
    }
}

/// Ground-state Rydberg fraction `<n>/N` over a parameter grid. Rows follow
/// `omega_grid`, columns follow `delta_grid`. Grid points run in parallel.
pub fn phase_diagram(
    params: &ChainParams,
    omega_grid: &[f64],
    delta_grid: &[f64],
    sector: Sector,
) -> Result<Array2<f64>> {
    let occupation = occupation_diagonal(params);
    let n = params.n_sites as f64;
    let tasks = omega_grid.len() * delta_grid.len();
    let results = exec::map_tasks(tasks, |idx| -> Result<f64> {
        let omega = omega_grid[idx / delta_grid.len()];
        let delta = delta_grid[idx % delta_grid.len()];
        let eig = eigensystem_for(params, omega, delta, sector)?;
        let gs = eig.ground_state();
        let frac = occupation
            .iter()
            .zip(gs.0.iter())
            .map(|(&occ, z)| occ * z.norm_sqr())
            .sum::<f64>()
            / n;
        Ok(frac)
    });
    let mut map = Array2::zeros((omega_grid.len(), delta_grid.len()));
    for (idx, r) in results.into_iter().enumerate() {
        map[(idx / delta_grid.len(), idx % delta_grid.len())] = r?;
    }
    Ok(map)
}

/// Squared matrix elements `|<E_j|A|E_i>|^2` for one source level `i`.
#[derive(Debug, Clone)]
pub struct MatrixElementColumn {
    pub source: usize,
    /// Indexed by target level `j`.
    pub squared: Vec<f64>,
}

/// Tabulate `|<E_j|A|E_i>|^2` against the eigensystem's levels for each
/// requested source index.
pub fn operator_matrix_elements(
    a: &OperatorMatrix,
    eig: &Eigensystem,
    rows: &[usize],
) -> Result<Vec<MatrixElementColumn>> {
    if a.dim() != eig.dim_full() {
        return Err(Error::Domain(format!(
            "operator dimension {} does not match eigensystem {}",
            a.dim(),
            eig.dim_full()
        )));
    }
    rows.iter()
        .map(|&i| {
            if i >= eig.len() {
                return Err(Error::Domain(format!(
                    "level index {i} out of range (have {})",
                    eig.len()
                )));
            }
            let av = a.apply(&eig.vectors.column(i).to_owned());
            let coeffs = eig.coefficients(&StateVector(av));
            Ok(MatrixElementColumn {
                source: i,
                squared: coeffs.iter().map(|z| z.norm_sqr()).collect(),
            })
        })
        .collect()
}

/// Spread/gap structure of one spectrum: clusters are maximal runs of
/// levels separated by gaps below `factor x median gap`.
#[derive(Debug, Clone, Copy)]
pub struct ClusterMetric {
    pub n_clusters: usize,
    pub max_intra_spread: f64,
    pub min_inter_gap: f64,
    /// `max_intra_spread / min_inter_gap`; infinite once clusters merge
    /// into one.
    pub ratio: f64,
}

pub fn cluster_metric(energies: &[f64], gap_factor: f64) -> ClusterMetric {
    let mut gaps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return ClusterMetric { n_clusters: 1, max_intra_spread: 0.0, min_inter_gap: 0.0, ratio: f64::INFINITY };
    }
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = gap_factor * median;
    let mut boundaries = Vec::new();
    for (i, g) in gaps.iter_mut().enumerate() {
        if *g > threshold {
            boundaries.push(i);
        }
    }
    let mut clusters = Vec::new();
    let mut start = 0;
    for &b in &boundaries {
        clusters.push(start..=b);
        start = b + 1;
    }
    clusters.push(start..=energies.len() - 1);
    let max_intra = clusters
        .iter()
        .map(|c| energies[*c.end()] - energies[*c.start()])
        .fold(0.0f64, f64::max);
    let min_inter = boundaries
        .iter()
        .map(|&b| energies[b + 1] - energies[b])
        .fold(f64::INFINITY, f64::min);
    if boundaries.is_empty() {
        ClusterMetric {
            n_clusters: 1,
            max_intra_spread: max_intra,
            min_inter_gap: 0.0,
            ratio: f64::INFINITY,
        }
    } else {
        ClusterMetric {
            n_clusters: boundaries.len() + 1,
            max_intra_spread: max_intra,
            min_inter_gap: min_inter,
            ratio: max_intra / min_inter,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SectorSweepPoint {
    pub omega: f64,
    pub energies: Vec<f64>,
    pub clusters: ClusterMetric,
}

/// Symmetric-sector spectra across a Rabi-frequency grid at fixed detuning,
/// with the cluster metric per point.
pub fn sector_spectrum_sweep(
    params: &ChainParams,
    omega_grid: &[f64],
    delta: f64,
    gap_factor: f64,
) -> Result<Vec<SectorSweepPoint>> {
    let results = exec::map_tasks(omega_grid.len(), |i| -> Result<SectorSweepPoint> {
        let eig = eigensystem_for(params, omega_grid[i], delta, Sector::Symmetric)?;
        let energies = eig.energies.to_vec();
        let clusters = cluster_metric(&energies, gap_factor);
        Ok(SectorSweepPoint { omega: omega_grid[i], energies, clusters })
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    n_sites: usize,
    sector: Sector,
    omega: u64,
    delta: u64,
    v_dd: u64,
}

/// File-name-safe cache key; distinct parameter bits map to distinct keys.
pub fn cache_key(params: &ChainParams, omega: f64, delta: f64, sector: Sector) -> String {
    format!(
        "n{}-{}-om{}-de{}-v{}",
        params.n_sites,
        sector.label(),
        omega,
        delta,
        params.v_dd
    )
}

/// Eigensystem cache: in-memory map shared across campaign workers, with an
/// optional disk directory so CLI invocations can reuse expensive N = 11
/// diagonalizations. Access is serialized; diagonalization itself runs
/// outside the lock.
pub struct EigCache {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<CacheKey, Arc<Eigensystem>>>,
}

impl Default for EigCache {
    fn default() -> Self {
        Self::new()
    }
}

impl EigCache {
    pub fn new() -> Self {
        EigCache { dir: None, mem: Mutex::new(HashMap::new()) }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(EigCache { dir: Some(dir), mem: Mutex::new(HashMap::new()) })
    }

    fn key(params: &ChainParams, omega: f64, delta: f64, sector: Sector) -> CacheKey {
        CacheKey {
            n_sites: params.n_sites,
            sector,
            omega: omega.to_bits(),
            delta: delta.to_bits(),
            v_dd: params.v_dd.to_bits(),
        }
    }

    fn path_for(&self, params: &ChainParams, omega: f64, delta: f64, sector: Sector) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.eig", cache_key(params, omega, delta, sector))))
    }

    /// Fetch or compute the eigensystem for `(params, omega, delta, sector)`.
    pub fn get(
        &self,
        params: &ChainParams,
        omega: f64,
        delta: f64,
        sector: Sector,
    ) -> Result<Arc<Eigensystem>> {
        let key = Self::key(params, omega, delta, sector);
        if let Some(hit) = self.mem.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        if let Some(path) = self.path_for(params, omega, delta, sector) {
            if path.exists() {
                let rec = io::read_eig_record(&path)?;
                let eig = record_to_eigensystem(rec)?;
                if eig.n_sites == params.n_sites
                    && eig.omega.to_bits() == omega.to_bits()
                    && eig.delta.to_bits() == delta.to_bits()
                    && eig.v_dd.to_bits() == params.v_dd.to_bits()
                {
                    let arc = Arc::new(eig);
                    self.mem.lock().unwrap().insert(key, arc.clone());
                    return Ok(arc);
                }
                return Err(Error::Format(format!(
                    "cache file {} does not match its key",
                    path.display()
                )));
            }
        }
        let eig = Arc::new(eigensystem_for(params, omega, delta, sector)?);
        if let Some(path) = self.path_for(params, omega, delta, sector) {
            io::write_eig_record(&path, &eigensystem_to_record(&eig))?;
        }
        self.mem.lock().unwrap().insert(key, eig.clone());
        Ok(eig)
    }
}

fn eigensystem_to_record(eig: &Eigensystem) -> EigRecord {
    EigRecord {
        n_sites: eig.n_sites as u64,
        sector_tag: eig.sector.tag(),
        omega: eig.omega,
        delta: eig.delta,
        v_dd: eig.v_dd,
        energies: eig.energies.clone(),
        vectors: eig.vectors.clone(),
    }
}

pub(crate) fn record_to_eigensystem(rec: EigRecord) -> Result<Eigensystem> {
    Ok(Eigensystem {
        energies: rec.energies,
        vectors: rec.vectors,
        n_sites: rec.n_sites as usize,
        v_dd: rec.v_dd,
        omega: rec.omega,
        delta: rec.delta,
        sector: Sector::from_tag(rec.sector_tag)?,
    })
}

/// Load an eigensystem by cache key from a cache directory (CLI entry).
pub fn load_cached_eigensystem(dir: &std::path::Path, key: &str) -> Result<Eigensystem> {
    let path = dir.join(format!("{key}.eig"));
    if !path.exists() {
        return Err(Error::Config(format!(
            "no cached eigensystem `{key}` in {}",
            dir.display()
        )));
    }
    record_to_eigensystem(io::read_eig_record(&path)?)
}
