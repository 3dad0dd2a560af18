//! Finite operator representations of the bath.
//!
//! Fermionic modes use a Jordan–Wigner chain with mode 0 as the leftmost
//! tensor factor, `c_k = Z^{⊗k} ⊗ σ⁻ ⊗ I^{⊗(M-k-1)}`, in the per-mode basis
//! `{|0⟩, |1⟩}` (empty, occupied). Bosonic modes are truncated at `n_max`
//! quanta. Units are `ħ = k_B = 1`, so mode frequencies equal mode energies.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest fermionic bath that [`build_fermion_ops`] will represent densely.
pub const MAX_FERMION_MODES: usize = 12;
/// Largest Hilbert-space dimension of a truncated bosonic bath.
pub const MAX_BOSON_DIM: usize = 4096;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Fermi,
    /// Bosonic modes entering the coupling bilinearly, `q_k q_l`.
    BoseBilinear,
}

/// A discrete bath of `M` modes with an antisymmetric coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    energies: Vec<f64>,
    coupling: DMatrix<f64>,
    beta: f64,
    statistics: Statistics,
    boson_truncation: usize,
}

impl BathSpec {
    pub fn new(
        statistics: Statistics,
        energies: Vec<f64>,
        coupling: DMatrix<f64>,
        beta: f64,
        boson_truncation: usize,
    ) -> Result<Self> {
        let m = energies.len();
        if m == 0 {
            return Err(Error::Validation("bath needs at least one mode".into()));
        }
        if coupling.nrows() != m || coupling.ncols() != m {
            return Err(Error::Validation(format!(
                "coupling matrix is {}x{}, expected {m}x{m}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        for (k, &e) in energies.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Validation(format!("energy E[{k}] = {e} must be finite and > 0")));
            }
        }
        for k in 0..m {
            for l in 0..m {
                let g = coupling[(k, l)];
                if !g.is_finite() {
                    return Err(Error::Validation(format!("coupling g[{k}][{l}] is not finite")));
                }
                if g != -coupling[(l, k)] {
                    return Err(Error::Validation(format!(
                        "coupling is not antisymmetric: g[{k}][{l}] = {g}, g[{l}][{k}] = {}",
                        coupling[(l, k)]
                    )));
                }
            }
        }
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::Validation(format!("beta = {beta} must be >= 0")));
        }
        if statistics == Statistics::BoseBilinear && boson_truncation == 0 {
            return Err(Error::Validation("boson truncation n_max must be >= 1".into()));
        }
        Ok(Self { energies, coupling, beta, statistics, boson_truncation })
    }

    pub fn fermi(energies: Vec<f64>, coupling: DMatrix<f64>, beta: f64) -> Result<Self> {
        Self::new(Statistics::Fermi, energies, coupling, beta, 1)
    }

    pub fn bose_bilinear(energies: Vec<f64>, coupling: DMatrix<f64>, beta: f64, n_max: usize) -> Result<Self> {
        Self::new(Statistics::BoseBilinear, energies, coupling, beta, n_max)
    }

    /// Antisymmetric matrix from its strict upper triangle, `upper[(k, l)]` for `k < l`.
    pub fn antisymmetric_from_upper(m: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(m, m);
        for &(k, l, v) in entries {
            g[(k, l)] = v;
            g[(l, k)] = -v;
        }
        g
    }

    pub fn num_modes(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Mode frequency; identical to the energy with `ħ = 1`.
    pub fn omega(&self, k: usize) -> f64 {
        self.energies[k]
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn g(&self, k: usize, l: usize) -> f64 {
        self.coupling[(k, l)]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn boson_truncation(&self) -> usize {
        self.boson_truncation
    }

    /// Sum of `g_kl²` over all ordered pairs.
    pub fn coupling_norm_sq(&self) -> f64 {
        self.coupling.iter().map(|g| g * g).sum()
    }

    pub fn with_coupling_scaled(&self, lambda: f64) -> Self {
        Self { coupling: &self.coupling * lambda, ..self.clone() }
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.statistics, self.energies.clone(), self.coupling.clone(), beta, self.boson_truncation)
    }

    pub fn with_statistics(&self, statistics: Statistics, boson_truncation: usize) -> Result<Self> {
        Self::new(statistics, self.energies.clone(), self.coupling.clone(), self.beta, boson_truncation)
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k < self.num_modes() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: k, len: self.num_modes() })
        }
    }

    /// Per-mode Hilbert-space dimension.
    pub fn local_dim(&self) -> usize {
        match self.statistics {
            Statistics::Fermi => 2,
            Statistics::BoseBilinear => self.boson_truncation + 1,
        }
    }

    /// Dimension of the full bath Hilbert space, subject to the size guards.
    pub fn hilbert_dim(&self) -> Result<usize> {
        let m = self.num_modes();
        match self.statistics {
            Statistics::Fermi => {
                if m > MAX_FERMION_MODES {
                    return Err(Error::Size(format!("{m} fermionic modes exceed the limit of {MAX_FERMION_MODES}")));
                }
                Ok(1 << m)
            }
            Statistics::BoseBilinear => boson_dim(m, self.boson_truncation),
        }
    }

    /// Coefficient of `Q_k Q_l` in the bath part of the interaction.
    ///
    /// Fermionic quadratures anticommute, so `Q_k Q_l` (k ≠ l) is anti-Hermitian
    /// and the Hermitian coupling carries a factor `i g_kl`. Bosonic quadratures
    /// commute and an antisymmetric form would vanish identically, so the
    /// bilinear bosonic coupling mirrors the upper triangle,
    /// `s_kl = s_lk = g_{min(k,l), max(k,l)}`.
    pub fn coupling_coefficient(&self, k: usize, l: usize) -> Complex64 {
        match self.statistics {
            Statistics::Fermi => I * self.coupling[(k, l)],
            Statistics::BoseBilinear => Complex64::from(self.coupling[(k.min(l), k.max(l))]),
        }
    }

    /// Smallest `n_max` for which `e^{-β E_min n} (n + 1) < tail` for every mode.
    pub fn boson_truncation_for_tail(energies: &[f64], beta: f64, tail: f64) -> Result<usize> {
        let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        if beta.is_nan() || beta <= 0.0 || e_min.is_nan() || e_min <= 0.0 {
            return Err(Error::Divergence("truncation rule needs beta > 0 and positive energies".into()));
        }
        let mut n = 1usize;
        while (-beta * e_min * n as f64).exp() * (n as f64 + 1.0) >= tail {
            n += 1;
            if n > MAX_BOSON_DIM {
                return Err(Error::Size("boson truncation rule does not converge".into()));
            }
        }
        Ok(n)
    }

    /// Normalised thermal populations of mode `k` over its local levels.
    pub fn mode_populations(&self, k: usize) -> Vec<f64> {
        let x = self.beta * self.energies[k];
        let weights: Vec<f64> =
            (0..self.local_dim()).map(|n| if n == 0 { 1.0 } else { (-x * n as f64).exp() }).collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }
}

fn boson_dim(m: usize, n_max: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..m {
        dim = dim
            .checked_mul(n_max + 1)
            .filter(|&d| d <= MAX_BOSON_DIM)
            .ok_or_else(|| Error::Size(format!("(n_max+1)^M = {}^{m} exceeds {MAX_BOSON_DIM}", n_max + 1)))?;
    }
    Ok(dim)
}

/// Bosonic bath coupled linearly to the system; used only through its kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBoseBathSpec {
    omega: Vec<f64>,
    c: Vec<f64>,
    m: Vec<f64>,
    beta: f64,
}

impl LinearBoseBathSpec {
    pub fn new(omega: Vec<f64>, c: Vec<f64>, m: Vec<f64>, beta: f64) -> Result<Self> {
        let n = omega.len();
        if n == 0 || c.len() != n || m.len() != n {
            return Err(Error::Validation(format!(
                "linear bosonic bath needs equal non-empty omega/c/m, got {}/{}/{}",
                n,
                c.len(),
                m.len()
            )));
        }
        for k in 0..n {
            if !(omega[k].is_finite() && omega[k] > 0.0) {
                return Err(Error::Validation(format!("omega[{k}] = {} must be > 0", omega[k])));
            }
            if !(m[k].is_finite() && m[k] > 0.0) {
                return Err(Error::Validation(format!("m[{k}] = {} must be > 0", m[k])));
            }
            if !c[k].is_finite() {
                return Err(Error::Validation(format!("c[{k}] is not finite")));
            }
        }
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::Validation(format!("beta = {beta} must be >= 0")));
        }
        Ok(Self { omega, c, m, beta })
    }

    pub fn num_modes(&self) -> usize {
        self.omega.len()
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn m(&self) -> &[f64] {
        &self.m
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Dense complex square matrix acting on a bath (or system ⊗ bath) space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Validation(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_entries(entries: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self { entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint() }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self { entries: &self.entries * z }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self { entries: &self.entries * &other.entries + &other.entries * &self.entries }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self { entries: &self.entries * &other.entries - &other.entries * &self.entries }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |H - H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol * self.max_abs().max(1.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { entries: &self.entries * &rhs.entries }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { entries: &self.entries - &rhs.entries }
    }
}

fn kron_chain(sites: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, ONE);
    for s in sites {
        out = out.kronecker(s);
    }
    out
}

fn site_identity(d: usize) -> DMatrix<Complex64> {
    DMatrix::identity(d, d)
}

fn parity_site() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, -ONE]))
}

fn lowering_site(d: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::from((n as f64).sqrt());
    }
    a
}

/// Site factors of a single-mode operator `op` placed on mode `k`, including
/// the Jordan–Wigner parity string for fermions.
fn mode_sites(
    statistics: Statistics,
    m: usize,
    local: usize,
    k: usize,
    op: DMatrix<Complex64>,
) -> Vec<DMatrix<Complex64>> {
    (0..m)
        .map(|j| {
            if j == k {
                op.clone()
            } else if j < k && statistics == Statistics::Fermi {
                parity_site()
            } else {
                site_identity(local)
            }
        })
        .collect()
}

/// Site-wise product of two tensor-product strings.
fn site_product(a: &[DMatrix<Complex64>], b: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Jordan–Wigner annihilation operators `c_0 … c_{M-1}`.
pub fn build_fermion_ops(m: usize) -> Result<Vec<OperatorMatrix>> {
    if m == 0 || m > MAX_FERMION_MODES {
        return Err(Error::Size(format!("fermion mode count {m} outside 1..={MAX_FERMION_MODES}")));
    }
    Ok((0..m)
        .map(|k| {
            let sites = mode_sites(Statistics::Fermi, m, 2, k, lowering_site(2));
            OperatorMatrix::from_entries(kron_chain(&sites))
        })
        .collect())
}

/// Truncated bosonic annihilation operators, `n_max + 1` levels per mode.
pub fn build_boson_ops(m: usize, n_max: usize) -> Result<Vec<OperatorMatrix>> {
    if m == 0 || n_max == 0 {
        return Err(Error::Size(format!("boson bath needs M >= 1 and n_max >= 1, got {m}, {n_max}")));
    }
    boson_dim(m, n_max)?;
    let local = n_max + 1;
    Ok((0..m)
        .map(|k| {
            let sites = mode_sites(Statistics::BoseBilinear, m, local, k, lowering_site(local));
            OperatorMatrix::from_entries(kron_chain(&sites))
        })
        .collect())
}

/// Annihilation operators appropriate to the bath statistics.
pub fn bath_annihilators(bath: &BathSpec) -> Result<Vec<OperatorMatrix>> {
    bath.hilbert_dim()?;
    match bath.statistics() {
        Statistics::Fermi => build_fermion_ops(bath.num_modes()),
        Statistics::BoseBilinear => build_boson_ops(bath.num_modes(), bath.boson_truncation()),
    }
}

/// Occupation numbers of every mode for each basis index; mode 0 is the most
/// significant digit.
fn occupations(bath: &BathSpec, index: usize) -> impl Iterator<Item = usize> + '_ {
    let local = bath.local_dim();
    let m = bath.num_modes();
    (0..m).map(move |k| (index / local.pow((m - 1 - k) as u32)) % local)
}

/// `H_B = Σ_k E_k n_k`, diagonal in the occupation basis.
pub fn bath_hamiltonian(bath: &BathSpec) -> Result<OperatorMatrix> {
    let dim = bath.hilbert_dim()?;
    let diag: Vec<Complex64> = (0..dim)
        .map(|i| {
            let e: f64 = occupations(bath, i).zip(bath.energies()).map(|(n, e)| n as f64 * e).sum();
            Complex64::from(e)
        })
        .collect();
    Ok(OperatorMatrix::from_entries(DMatrix::from_diagonal(&DVector::from_vec(diag))))
}

/// Normalised Gibbs state `e^{-β H_B} / Z` (zero chemical potential).
pub fn thermal_state(bath: &BathSpec) -> Result<OperatorMatrix> {
    let dim = bath.hilbert_dim()?;
    let pops: Vec<Vec<f64>> = (0..bath.num_modes()).map(|k| bath.mode_populations(k)).collect();
    let diag: Vec<Complex64> = (0..dim)
        .map(|i| {
            let p: f64 = occupations(bath, i).enumerate().map(|(k, n)| pops[k][n]).product();
            Complex64::from(p)
        })
        .collect();
    Ok(OperatorMatrix::from_entries(DMatrix::from_diagonal(&DVector::from_vec(diag))))
}

/// Diagonal of the thermal state, without building the dense matrix.
pub(crate) fn thermal_diagonal(bath: &BathSpec) -> Result<Vec<f64>> {
    let dim = bath.hilbert_dim()?;
    let pops: Vec<Vec<f64>> = (0..bath.num_modes()).map(|k| bath.mode_populations(k)).collect();
    Ok((0..dim).map(|i| occupations(bath, i).enumerate().map(|(k, n)| pops[k][n]).product()).collect())
}

fn quadrature_site(local: usize, omega: f64, t: f64) -> DMatrix<Complex64> {
    let a = lowering_site(local);
    let phase = Complex64::from_polar(1.0, -omega * t);
    &a * phase + a.adjoint() * phase.conj()
}

fn quadrature_sites(bath: &BathSpec, k: usize, t: f64) -> Vec<DMatrix<Complex64>> {
    let local = bath.local_dim();
    mode_sites(bath.statistics(), bath.num_modes(), local, k, quadrature_site(local, bath.omega(k), t))
}

/// Interaction-picture quadrature `Q_k(t) = c_k e^{-iω_k t} + c_k† e^{iω_k t}`.
pub fn quadrature(bath: &BathSpec, k: usize, t: f64) -> Result<OperatorMatrix> {
    bath.check_mode(k)?;
    bath.hilbert_dim()?;
    Ok(OperatorMatrix::from_entries(kron_chain(&quadrature_sites(bath, k, t))))
}

/// Bath operator of the interaction at time `t`,
/// `B(t) = Σ_{k≠l} coupling_coefficient(k, l) Q_k(t) Q_l(t)`.
///
/// The full interaction is `σ_z ⊗ B(0)`; `B` is Hermitian for both statistics.
pub fn coupling_operator(bath: &BathSpec, t: f64) -> Result<OperatorMatrix> {
    let dim = bath.hilbert_dim()?;
    let m = bath.num_modes();
    let sites: Vec<_> = (0..m).map(|k| quadrature_sites(bath, k, t)).collect();
    let mut b = DMatrix::zeros(dim, dim);
    for k in 0..m {
        for l in 0..m {
            let coef = bath.coupling_coefficient(k, l);
            if k == l || coef == ZERO {
                continue;
            }
            b += kron_chain(&site_product(&sites[k], &sites[l])) * coef;
        }
    }
    Ok(OperatorMatrix::from_entries(b))
}

/// Eigendecomposition of a Hermitian matrix, reusable for many propagation times.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl HermitianSpectrum {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if !h.is_hermitian(1e-12) {
            return Err(Error::Validation(format!("matrix is not Hermitian (defect {:.3e})", h.hermiticity_defect())));
        }
        let sym = (h.entries() + h.entries().adjoint()) * Complex64::from(0.5);
        let eig = SymmetricEigen::new(sym);
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    /// `e^{-i H dt}`.
    pub fn propagator(&self, dt: f64) -> OperatorMatrix {
        let phases = self.values.map(|e| Complex64::from_polar(1.0, -e * dt));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        OperatorMatrix::from_entries(scaled * self.vectors.adjoint())
    }
}

/// `e^{-i H dt}` for Hermitian `H`, via its spectral decomposition.
pub fn propagator(h: &OperatorMatrix, dt: f64) -> Result<OperatorMatrix> {
    Ok(HermitianSpectrum::new(h)?.propagator(dt))
}
