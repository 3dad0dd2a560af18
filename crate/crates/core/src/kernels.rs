//! Influence kernels, their temperature limits, and the discretised quadratic
//! influence action.
//!
//! Kernels are the real/imaginary split of `2C(τ, 0)`: `k^R = 2 Re C` and
//! `k^I = 2i Im C`, with `C` from [`crate::correlations::two_time_analytic`].
//! `k^I` is stored as a purely imaginary complex number.

use num_complex::Complex64;

use crate::correlations::{self, SpectralLine};
use crate::error::{Error, Result};
use crate::fock::{BathSpec, LinearBoseBathSpec, Statistics};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `|ν dt|` the diagonal slice integral uses its power series.
pub const SERIES_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub tau: f64,
    pub k_real: Complex64,
    pub k_imag: Complex64,
}

impl KernelPair {
    fn zero(tau: f64) -> Self {
        Self { tau, k_real: ZERO, k_imag: ZERO }
    }

    fn accumulate(&mut self, other: &KernelPair) {
        self.k_real += other.k_real;
        self.k_imag += other.k_imag;
    }
}

/// Contribution of the ordered mode pair `(k, l)` to a bilinear kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKernel {
    pub k: usize,
    pub l: usize,
    pub pair: KernelPair,
}

fn hyperbolic(bath: &BathSpec, k: usize) -> Result<f64> {
    let x = 0.5 * bath.beta() * bath.energies()[k];
    match bath.statistics() {
        Statistics::Fermi => Ok(x.tanh()),
        Statistics::BoseBilinear if x == 0.0 => {
            Err(Error::Divergence("bilinear bosonic kernels diverge at beta = 0".into()))
        }
        Statistics::BoseBilinear => Ok(1.0 / x.tanh()),
    }
}

/// Per-pair kernels for either bilinear bath.
///
/// Fermi: `k^R_kl = 4g²[c_k c_l − T_k T_l s_k s_l]`, `k^I_kl = −4ig²[T_k s_k c_l + T_l c_k s_l]`.
/// Bosons: `k^R_kl = 4g²[K_k K_l c_k c_l − s_k s_l]`, `k^I_kl = −4ig²[K_k c_k s_l + K_l s_k c_l]`,
/// with `T = tanh(βE/2)`, `K = coth(βE/2)`, `c = cos ωτ`, `s = sin ωτ`.
pub fn mode_resolved_kernels(bath: &BathSpec, tau: f64) -> Result<Vec<ModeKernel>> {
    let m = bath.num_modes();
    let h: Vec<f64> = (0..m).map(|k| hyperbolic(bath, k)).collect::<Result<_>>()?;
    let sc: Vec<(f64, f64)> = (0..m).map(|k| (bath.omega(k) * tau).sin_cos()).collect();
    let mut out = Vec::with_capacity(m * m);
    for k in 0..m {
        for l in 0..m {
            let g = bath.g(k, l);
            if k == l || g == 0.0 {
                continue;
            }
            let w = 4.0 * g * g;
            let (sk, ck) = sc[k];
            let (sl, cl) = sc[l];
            let (re, im) = match bath.statistics() {
                Statistics::Fermi => (ck * cl - h[k] * h[l] * sk * sl, h[k] * sk * cl + h[l] * ck * sl),
                Statistics::BoseBilinear => (h[k] * h[l] * ck * cl - sk * sl, h[k] * ck * sl + h[l] * sk * cl),
            };
            out.push(ModeKernel {
                k,
                l,
                pair: KernelPair { tau, k_real: Complex64::from(w * re), k_imag: -I * (w * im) },
            });
        }
    }
    Ok(out)
}

fn summed(bath: &BathSpec, tau: f64) -> Result<KernelPair> {
    let mut total = KernelPair::zero(tau);
    for mk in mode_resolved_kernels(bath, tau)? {
        total.accumulate(&mk.pair);
    }
    Ok(total)
}

pub fn fermi_kernels(bath: &BathSpec, tau: f64) -> Result<KernelPair> {
    if bath.statistics() != Statistics::Fermi {
        return Err(Error::Validation("fermi_kernels needs a fermionic bath".into()));
    }
    summed(bath, tau)
}

pub fn bose_bilinear_kernels(bath: &BathSpec, tau: f64) -> Result<KernelPair> {
    if bath.statistics() != Statistics::BoseBilinear {
        return Err(Error::Validation("bose_bilinear_kernels needs a bilinear bosonic bath".into()));
    }
    summed(bath, tau)
}

/// `k^R = Σ c²/(2mω) coth(βω/2) cos ωτ`, `k^I = i Σ c²/(2mω) sin ωτ`.
pub fn bose_linear_kernels(spec: &LinearBoseBathSpec, tau: f64) -> Result<KernelPair> {
    if spec.beta() == 0.0 {
        return Err(Error::Divergence("linear bosonic kernels diverge at beta = 0".into()));
    }
    let mut out = KernelPair::zero(tau);
    for k in 0..spec.num_modes() {
        let w = spec.omega()[k];
        let amp = spec.c()[k].powi(2) / (2.0 * spec.m()[k] * w);
        let coth = 1.0 / (0.5 * spec.beta() * w).tanh();
        let (s, c) = (w * tau).sin_cos();
        out.k_real += amp * coth * c;
        out.k_imag += I * (amp * s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    LowT,
    HighT,
}

/// Temperature-limit forms of the fermionic kernels.
///
/// LowT: `k^R ≈ 4Σg² cos((ω_k+ω_l)τ)`, `k^I ≈ −4iΣg² sin((ω_k+ω_l)τ)`.
/// HighT: `k^I ≈ 0`, `k^R ≈ 4Σg² cos ω_kτ cos ω_lτ`.
pub fn kernel_limits(bath: &BathSpec, tau: f64, regime: Regime) -> Result<KernelPair> {
    if bath.statistics() != Statistics::Fermi {
        return Err(Error::Validation("kernel limits are defined for fermionic baths".into()));
    }
    let m = bath.num_modes();
    let mut out = KernelPair::zero(tau);
    for k in 0..m {
        for l in 0..m {
            let g = bath.g(k, l);
            if k == l || g == 0.0 {
                continue;
            }
            let w = 4.0 * g * g;
            let (wk, wl) = (bath.omega(k), bath.omega(l));
            match regime {
                Regime::LowT => {
                    let (s, c) = ((wk + wl) * tau).sin_cos();
                    out.k_real += w * c;
                    out.k_imag -= I * (w * s);
                }
                Regime::HighT => out.k_real += w * (wk * tau).cos() * (wl * tau).cos(),
            }
        }
    }
    Ok(out)
}

/// Slice-pair integrals of the two-time correlation on a uniform grid.
///
/// `eta[i][j] = ∫_{slice i} dt1 ∫_{slice j} dt2 C(t1, t2)` for `i > j`; the
/// diagonal uses the ordered half-square `t2 < t1` within slice `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTable {
    n: usize,
    dt: f64,
    /// `eta[i - j]` for the off-diagonal entries (stationary), index 0 holds the diagonal.
    by_lag: Vec<Complex64>,
    spectrum: Vec<SpectralLine>,
}

impl InfluenceTable {
    pub fn from_spectrum(spectrum: Vec<SpectralLine>, n: usize, dt: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("influence table needs at least one slice".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Validation(format!("slice width dt = {dt} must be > 0")));
        }
        let mut by_lag = vec![ZERO; n];
        for line in &spectrum {
            by_lag[0] += line.weight * diagonal_integral(line.frequency, dt);
            let x = line.frequency * dt;
            let block = line.weight * dt * dt * sinc(0.5 * x).powi(2);
            for (lag, slot) in by_lag.iter_mut().enumerate().skip(1) {
                *slot += block * Complex64::from_polar(1.0, -x * lag as f64);
            }
        }
        if by_lag.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence("influence coefficients are not finite".into()));
        }
        Ok(Self { n, dt, by_lag, spectrum })
    }

    pub fn zeros(n: usize, dt: f64) -> Result<Self> {
        Self::from_spectrum(Vec::new(), n, dt)
    }

    pub fn num_slices(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `eta[i][j]` for `j ≤ i < N`.
    pub fn eta(&self, i: usize, j: usize) -> Complex64 {
        assert!(j <= i && i < self.n, "eta index ({i}, {j}) outside the ordered table");
        self.by_lag[i - j]
    }

    /// `eta` as a function of the slice lag `i − j`.
    pub fn eta_by_lag(&self) -> &[Complex64] {
        &self.by_lag
    }

    pub fn spectrum(&self) -> &[SpectralLine] {
        &self.spectrum
    }

    pub fn is_zero(&self) -> bool {
        self.spectrum.iter().all(|l| l.weight == 0.0)
    }

    /// Same spectrum on a different grid.
    pub fn regrid(&self, n: usize, dt: f64) -> Result<Self> {
        Self::from_spectrum(self.spectrum.clone(), n, dt)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^dt dt1 ∫_0^t1 dt2 e^{-iν(t1−t2)} = dt² Σ_n (−iνdt)^n / (n+2)!`.
fn diagonal_integral(nu: f64, dt: f64) -> Complex64 {
    let x = nu * dt;
    if x.abs() < SERIES_THRESHOLD {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for n in 1..24 {
            term *= -I * x / (n as f64 + 2.0);
            sum += term;
        }
        sum * dt * dt
    } else {
        dt / (I * nu) + (1.0 - Complex64::from_polar(1.0, -x)) / (nu * nu)
    }
}

/// Influence table of a bilinear bath on `n` slices of width `dt`.
pub fn eta_coefficients(bath: &BathSpec, n: usize, dt: f64) -> Result<InfluenceTable> {
    InfluenceTable::from_spectrum(correlations::correlation_spectrum(bath)?, n, dt)
}

/// Forward and backward `σ_z` histories, one `±1` value per slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathPair {
    x: Vec<i8>,
    y: Vec<i8>,
}

impl PathPair {
    pub fn new(x: Vec<i8>, y: Vec<i8>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Validation(format!("path lengths differ: {} vs {}", x.len(), y.len())));
        }
        if x.iter().chain(&y).any(|&v| v != 1 && v != -1) {
            return Err(Error::Validation("path entries must be +1 or -1".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[i8] {
        &self.x
    }

    pub fn y(&self) -> &[i8] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `S = i Σ_{i≥j} (X_i − Y_i)(X_j η_ij − Y_j η*_ij)`, so that the path weight
/// is `e^{iS}` and equals the Gaussian influence functional.
pub fn fv_action(paths: &PathPair, table: &InfluenceTable) -> Result<Complex64> {
    if paths.len() != table.num_slices() {
        return Err(Error::Validation(format!(
            "path length {} does not match {} slices",
            paths.len(),
            table.num_slices()
        )));
    }
    Ok(I * action_sum(paths.x(), paths.y(), table.eta_by_lag()))
}

/// `Σ_{i≥j} (X_i − Y_i)(X_j η_{i−j} − Y_j η*_{i−j})`.
pub(crate) fn action_sum(x: &[i8], y: &[i8], by_lag: &[Complex64]) -> Complex64 {
    let mut s = ZERO;
    for i in 0..x.len() {
        let xi = f64::from(x[i] - y[i]);
        if xi == 0.0 {
            continue;
        }
        for j in 0..=i {
            let e = by_lag[i - j];
            s += xi * (f64::from(x[j]) * e - f64::from(y[j]) * e.conj());
        }
    }
    s
}
