//! Operators and states for an N-site open-boundary Rydberg chain.
//!
//! Basis convention: computational product states indexed by the integer
//! whose binary expansion lists the sites with site 1 as the most
//! significant bit, `|b_1 b_2 ... b_N>`. A set bit is a Rydberg excitation;
//! the local number operator `n_k = |1><1|_k` has eigenvalues {0, 1}. All
//! serialized states and operators use this ordering.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest chain dense state vectors support (dim 8192).
pub const MAX_SITES: usize = 13;

/// Chain geometry and interaction strength. Interactions decay as the cube
/// of the site distance with the lattice constant absorbed into `v_dd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub n_sites: usize,
    /// Dipole-dipole interaction strength, rad/us.
    pub v_dd: f64,
}

impl ChainParams {
    /// Production constructor: odd `n_sites >= 3` (even chains develop a
    /// central domain wall and are excluded from campaigns).
    pub fn new(n_sites: usize, v_dd: f64) -> Result<Self> {
        let p = Self::unrestricted(n_sites, v_dd)?;
        if n_sites < 3 || n_sites % 2 == 0 {
            return Err(Error::Domain(format!(
                "chain length must be odd and >= 3, got {n_sites}"
            )));
        }
        Ok(p)
    }

    /// Test/diagnostic constructor allowing any `n_sites >= 1`, including the
    /// even domain-wall cases and single sites.
    pub fn unrestricted(n_sites: usize, v_dd: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Domain("chain needs at least one site".into()));
        }
        if n_sites > MAX_SITES {
            return Err(Error::Capacity(format!(
                "n_sites = {n_sites} exceeds dense-state limit {MAX_SITES}"
            )));
        }
        if !(v_dd.is_finite() && v_dd > 0.0) {
            return Err(Error::Domain(format!("v_dd must be > 0, got {v_dd}")));
        }
        Ok(ChainParams { n_sites, v_dd })
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }
}

/// Occupation of `site` (1-indexed) in basis state `state`.
#[inline]
pub fn site_bit(state: usize, site: usize, n_sites: usize) -> bool {
    (state >> (n_sites - site)) & 1 == 1
}

#[inline]
fn site_mask(site: usize, n_sites: usize) -> usize {
    1 << (n_sites - site)
}

/// Basis index of the spatially reflected state `|b_N ... b_1>`.
pub fn reflect_state(state: usize, n_sites: usize) -> usize {
    let mut out = 0usize;
    for k in 0..n_sites {
        if (state >> k) & 1 == 1 {
            out |= 1 << (n_sites - 1 - k);
        }
    }
    out
}

/// Complex amplitude vector over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Array1<C64>);

impl StateVector {
    /// The computational basis state `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Array1::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        Ok(StateVector(self.0.mapv(|z| z / n)))
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Hermitian operator on the chain Hilbert space. Diagonal observables keep
/// a compact representation; everything else is dense.
#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Dense(Array2<C64>),
    Diagonal(Array1<f64>),
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        match self {
            OperatorMatrix::Dense(m) => m.nrows(),
            OperatorMatrix::Diagonal(d) => d.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, OperatorMatrix::Diagonal(_))
    }

    pub fn diagonal(&self) -> Option<&Array1<f64>> {
        match self {
            OperatorMatrix::Diagonal(d) => Some(d),
            OperatorMatrix::Dense(_) => None,
        }
    }

    /// Materialize as a dense matrix.
    pub fn to_dense(&self) -> Array2<C64> {
        match self {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Diagonal(d) => {
                let mut m = Array2::zeros((d.len(), d.len()));
                for (i, &v) in d.iter().enumerate() {
                    m[(i, i)] = C64::new(v, 0.0);
                }
                m
            }
        }
    }

    /// Largest entry of `|M - M^dagger|`; zero for diagonal storage.
    pub fn hermiticity_residual(&self) -> f64 {
        match self {
            OperatorMatrix::Diagonal(_) => 0.0,
            OperatorMatrix::Dense(m) => {
                let mut worst = 0.0f64;
                for i in 0..m.nrows() {
                    for j in 0..=i {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        match self {
            OperatorMatrix::Dense(m) => m.dot(v),
            OperatorMatrix::Diagonal(d) => {
                Array1::from_iter(d.iter().zip(v.iter()).map(|(&a, &b)| a * b))
            }
        }
    }

    /// Real expectation value `<psi|A|psi>` of a Hermitian operator.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        match self {
            OperatorMatrix::Diagonal(d) => d
                .iter()
                .zip(psi.0.iter())
                .map(|(&a, z)| a * z.norm_sqr())
                .sum(),
            OperatorMatrix::Dense(m) => {
                let w = m.dot(&psi.0);
                psi.0.iter().zip(w.iter()).map(|(a, b)| (a.conj() * b).re).sum()
            }
        }
    }

    pub fn trace(&self) -> C64 {
        match self {
            OperatorMatrix::Diagonal(d) => C64::new(d.sum(), 0.0),
            OperatorMatrix::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).sum(),
        }
    }
}

/// Diagonal of the pair interaction `v_dd sum_{k<l} n_k n_l / |k-l|^3`.
pub fn interaction_diagonal(params: &ChainParams) -> Array1<f64> {
    let n = params.n_sites;
    let dim = params.dim();
    let mut diag = Array1::zeros(dim);
    for b in 0..dim {
        let mut acc = 0.0;
        for k in 1..=n {
            if !site_bit(b, k, n) {
                continue;
            }
            for l in (k + 1)..=n {
                if site_bit(b, l, n) {
                    let d = (l - k) as f64;
                    acc += 1.0 / (d * d * d);
                }
            }
        }
        diag[b] = params.v_dd * acc;
    }
    diag
}

/// Diagonal of the total number operator `sum_k n_k`.
pub fn occupation_diagonal(params: &ChainParams) -> Array1<f64> {
    Array1::from_iter((0..params.dim()).map(|b| b.count_ones() as f64))
}

/// Interaction Hamiltonian as an observable; equals the full Hamiltonian at
/// `omega = 0, delta = 0`.
pub fn interaction_observable(params: &ChainParams) -> OperatorMatrix {
    OperatorMatrix::Diagonal(interaction_diagonal(params))
}

/// Total Rydberg number operator `n = sum_k n_k`.
pub fn total_number_operator(params: &ChainParams) -> OperatorMatrix {
    OperatorMatrix::Diagonal(occupation_diagonal(params))
}

/// Staggered Z2 (antiferromagnetic) order parameter,
/// `sum_{k != l} sigma_z^k (-1)^{k+l} sigma_z^l / (N(N-1))`: +1 on either
/// Neel state, bounded by 1 in magnitude everywhere.
pub fn z2_order_parameter(params: &ChainParams) -> OperatorMatrix {
    let n = params.n_sites;
    let dim = params.dim();
    let norm = (n * (n - 1)) as f64;
    let mut diag = Array1::zeros(dim);
    for b in 0..dim {
        // sum_{k != l} (-1)^{k+l} s_k s_l = q^2 - N with q = sum_k (-1)^k s_k.
        let mut q = 0.0;
        for k in 1..=n {
            let s = if site_bit(b, k, n) { 1.0 } else { -1.0 };
            q += if k % 2 == 0 { s } else { -s };
        }
        diag[b] = (q * q - n as f64) / norm;
    }
    OperatorMatrix::Diagonal(diag)
}

/// Drive operator at unit Rabi frequency:
/// `(1/2) sum_k [e^{-i phi} |0><1|_k + e^{i phi} |1><0|_k]`.
pub fn drive_operator(params: &ChainParams, phi: f64) -> OperatorMatrix {
    let n = params.n_sites;
    let dim = params.dim();
    let lower = C64::from_polar(0.5, -phi); // removes an excitation
    let raise = C64::from_polar(0.5, phi);
    let mut m = Array2::zeros((dim, dim));
    for b in 0..dim {
        for k in 1..=n {
            let target = b ^ site_mask(k, n);
            if site_bit(b, k, n) {
                m[(target, b)] += lower;
            } else {
                m[(target, b)] += raise;
            }
        }
    }
    OperatorMatrix::Dense(m)
}

/// Full chain Hamiltonian
/// `(Omega/2) sum_k [e^{-i phi}|0><1|_k + h.c.] - delta sum_k n_k + H_int`.
pub fn build_hamiltonian(params: &ChainParams, omega: f64, delta: f64, phi: f64) -> OperatorMatrix {
    let dim = params.dim();
    let interaction = interaction_diagonal(params);
    let occupation = occupation_diagonal(params);
    let mut m = match drive_operator(params, phi) {
        OperatorMatrix::Dense(mut d) => {
            d.mapv_inplace(|z| z * omega);
            d
        }
        OperatorMatrix::Diagonal(_) => unreachable!(),
    };
    for b in 0..dim {
        m[(b, b)] += C64::new(interaction[b] - delta * occupation[b], 0.0);
    }
    OperatorMatrix::Dense(m)
}

/// Reflection about the chain center: the permutation
/// `|b_1 ... b_N> -> |b_N ... b_1>`. Hermitian, squares to the identity, and
/// commutes with the chain Hamiltonian for every `(omega, delta, phi)`.
pub fn reflection_operator(params: &ChainParams) -> OperatorMatrix {
    let dim = params.dim();
    let mut m = Array2::zeros((dim, dim));
    for b in 0..dim {
        m[(reflect_state(b, params.n_sites), b)] = C64::new(1.0, 0.0);
    }
    OperatorMatrix::Dense(m)
}

/// Reflection parity of a symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorParity {
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SectorColumn {
    /// A reflection-invariant computational state, kept as-is.
    Palindrome(usize),
    /// `(|b> +/- |Rb>)/sqrt(2)` with `b < Rb`.
    Pair(usize, usize),
}

/// Orthonormal basis of one reflection-symmetry sector, stored as sparse
/// columns over the computational basis.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    parity: SectorParity,
    dim_full: usize,
    columns: Vec<SectorColumn>,
}

impl SectorBasis {
    fn build(params: &ChainParams, parity: SectorParity) -> SectorBasis {
        let dim = params.dim();
        let mut columns = Vec::new();
        for b in 0..dim {
            let rb = reflect_state(b, params.n_sites);
            if b == rb {
                if parity == SectorParity::Symmetric {
                    columns.push(SectorColumn::Palindrome(b));
                }
            } else if b < rb {
                columns.push(SectorColumn::Pair(b, rb));
            }
        }
        SectorBasis { parity, dim_full: dim, columns }
    }

    /// Symmetric sector, dimension `(2^N + 2^ceil(N/2)) / 2`.
    pub fn symmetric(params: &ChainParams) -> SectorBasis {
        Self::build(params, SectorParity::Symmetric)
    }

    /// Antisymmetric sector, dimension `(2^N - 2^ceil(N/2)) / 2`.
    pub fn antisymmetric(params: &ChainParams) -> SectorBasis {
        Self::build(params, SectorParity::Antisymmetric)
    }

    pub fn parity(&self) -> SectorParity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn dim_full(&self) -> usize {
        self.dim_full
    }

    fn pair_sign(&self) -> f64 {
        match self.parity {
            SectorParity::Symmetric => 1.0,
            SectorParity::Antisymmetric => -1.0,
        }
    }

    /// Sector coordinates of a full-space vector (`B^dagger psi`).
    pub fn project_state(&self, psi: &Array1<C64>) -> Array1<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.pair_sign();
        Array1::from_iter(self.columns.iter().map(|col| match *col {
            SectorColumn::Palindrome(b) => psi[b],
            SectorColumn::Pair(b, rb) => (psi[b] + sign * psi[rb]) * r,
        }))
    }

    /// Full-space vector from sector coordinates (`B c`).
    pub fn lift(&self, coords: &Array1<C64>) -> Array1<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.pair_sign();
        let mut out = Array1::zeros(self.dim_full);
        for (col, &c) in self.columns.iter().zip(coords.iter()) {
            match *col {
                SectorColumn::Palindrome(b) => out[b] += c,
                SectorColumn::Pair(b, rb) => {
                    out[b] += c * r;
                    out[rb] += sign * c * r;
                }
            }
        }
        out
    }

    /// Weight of `psi` inside this sector, `|B^dagger psi|^2`.
    pub fn population(&self, psi: &Array1<C64>) -> f64 {
        self.project_state(psi).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Project a dense operator into the sector (`B^dagger M B`).
    pub fn project_dense(&self, m: &Array2<C64>) -> Array2<C64> {
        let d = self.dim();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.pair_sign();
        let entries = |col: &SectorColumn| -> [(usize, f64); 2] {
            match *col {
                SectorColumn::Palindrome(b) => [(b, 1.0), (b, 0.0)],
                SectorColumn::Pair(b, rb) => [(b, r), (rb, sign * r)],
            }
        };
        let mut out = Array2::zeros((d, d));
        for (ci, col_i) in self.columns.iter().enumerate() {
            let ei = entries(col_i);
            for (cj, col_j) in self.columns.iter().enumerate() {
                let ej = entries(col_j);
                let mut acc = C64::new(0.0, 0.0);
                for &(row, wi) in &ei {
                    if wi == 0.0 {
                        continue;
                    }
                    for &(colm, wj) in &ej {
                        if wj == 0.0 {
                            continue;
                        }
                        acc += m[(row, colm)] * wi * wj;
                    }
                }
                out[(ci, cj)] = acc;
            }
        }
        out
    }

    /// Materialize the basis columns as a dense `dim_full x dim` matrix.
    pub fn to_dense(&self) -> Array2<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.pair_sign();
        let mut m = Array2::zeros((self.dim_full, self.dim()));
        for (c, col) in self.columns.iter().enumerate() {
            match *col {
                SectorColumn::Palindrome(b) => m[(b, c)] = C64::new(1.0, 0.0),
                SectorColumn::Pair(b, rb) => {
                    m[(b, c)] = C64::new(r, 0.0);
                    m[(rb, c)] = C64::new(sign * r, 0.0);
                }
            }
        }
        m
    }
}

/// Symmetric-sector basis transform (palindromes plus symmetrized pairs).
pub fn symmetric_sector_basis(params: &ChainParams) -> SectorBasis {
    SectorBasis::symmetric(params)
}

/// Matrix-free application of the chain Hamiltonian, used by the
/// propagator's Krylov steps. The interaction and occupation diagonals are
/// precomputed once per chain; `omega`, `delta`, and `phi` vary per step.
#[derive(Debug, Clone)]
pub struct HamiltonianAction {
    n_sites: usize,
    dim: usize,
    interaction: Array1<f64>,
    occupation: Array1<f64>,
}

impl HamiltonianAction {
    pub fn new(params: &ChainParams) -> Self {
        HamiltonianAction {
            n_sites: params.n_sites,
            dim: params.dim(),
            interaction: interaction_diagonal(params),
            occupation: occupation_diagonal(params),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dst = H(omega, delta, phi) src`.
    pub fn apply_into(
        &self,
        omega: f64,
        delta: f64,
        phi: f64,
        src: &Array1<C64>,
        dst: &mut Array1<C64>,
    ) {
        debug_assert_eq!(src.len(), self.dim);
        debug_assert_eq!(dst.len(), self.dim);
        for b in 0..self.dim {
            dst[b] = src[b] * (self.interaction[b] - delta * self.occupation[b]);
        }
        if omega == 0.0 {
            return;
        }
        let lower = C64::from_polar(0.5 * omega, -phi);
        let raise = C64::from_polar(0.5 * omega, phi);
        for k in 1..=self.n_sites {
            let mask = site_mask(k, self.n_sites);
            for b in 0..self.dim {
                let amp = if b & mask != 0 { lower } else { raise };
                dst[b ^ mask] += amp * src[b];
            }
        }
    }

    /// Real expectation value of `H(omega, delta, phi)` in `psi`.
    pub fn expectation(&self, omega: f64, delta: f64, phi: f64, psi: &Array1<C64>) -> f64 {
        let mut w = Array1::zeros(self.dim);
        self.apply_into(omega, delta, phi, psi, &mut w);
        psi.iter().zip(w.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}
