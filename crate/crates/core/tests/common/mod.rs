//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use fvkernel::correlations::{Side, SuperIndexVector};
use fvkernel::dynamics::{Qubit, SystemSpec, TimeGrid, TrajectorySeries};
use fvkernel::fock::{build_boson_ops, build_fermion_ops};
use fvkernel::kernels::{fv_action, InfluenceTable, PathPair};
use fvkernel::{BathSpec, Statistics};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Adaptive Simpson quadrature of a complex integrand.
pub fn simpson<F: Fn(f64) -> C>(f: &F, a: f64, b: f64, tol: f64) -> C {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> C>(f: &F, a: f64, b: f64, fa: C, fm: C, fb: C, whole: C, tol: f64, depth: u32) -> C {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_{a1}^{b1} dt1 ∫_{lo(t1)}^{hi(t1)} dt2 f(t1, t2)` by nested adaptive Simpson.
pub fn simpson2<F, L, H>(f: &F, a1: f64, b1: f64, lo: &L, hi: &H, tol: f64) -> C
where
    F: Fn(f64, f64) -> C,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let outer = |t1: f64| {
        let (l, h) = (lo(t1), hi(t1));
        if h <= l {
            return C::new(0.0, 0.0);
        }
        simpson(&|t2| f(t1, t2), l, h, tol * 1e-2)
    };
    simpson(&outer, a1, b1, tol)
}

/// Matrix exponential `e^{A}` by scaling and squaring of a Taylor series.
pub fn expm(a: &DMatrix<C>) -> DMatrix<C> {
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.25 {
        s += 1;
    }
    let scaled = a / C::from(2f64.powi(s as i32));
    let n = a.nrows();
    let mut term = DMatrix::<C>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C::from(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `e^{-iHt}` for a Hermitian 2×2 `H = h0 I + h·σ` in closed form.
pub fn expm_qubit(h: &Qubit, t: f64) -> Qubit {
    let h0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let hz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let hx = h[(1, 0)].re;
    let hy = h[(1, 0)].im;
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    let (s, co) = (r * t).sin_cos();
    let f = if r > 0.0 { s / r } else { t };
    let phase = C::from_polar(1.0, -h0 * t);
    let m = Qubit::new(c(co, -f * hz), c(-f * hy, -f * hx), c(f * hy, -f * hx), c(co, f * hz));
    m * phase
}

/// Reduced dynamics by explicit enumeration of all `4^n` forward/backward
/// paths, using the same symmetric splitting as the library.
pub fn brute_force_pathsum(sys: &SystemSpec, table: &InfluenceTable, grid: &TimeGrid) -> Vec<Qubit> {
    let n = grid.num_slices();
    let dt = grid.dt();
    let h = sys.hamiltonian();
    let g = expm_qubit(&h, dt);
    let half = expm_qubit(&h, 0.5 * dt);
    let rho_in = half * sys.rho0() * half.adjoint();
    let mut out = vec![*sys.rho0()];
    for steps in 1..=n {
        let sub = table.regrid(steps, dt).unwrap();
        let mut red = Qubit::zeros();
        for code in 0..4usize.pow(steps as u32) {
            let s: Vec<usize> = (0..steps).map(|i| (code >> (2 * i)) & 3).collect();
            let x: Vec<usize> = s.iter().map(|v| v >> 1).collect();
            let y: Vec<usize> = s.iter().map(|v| v & 1).collect();
            let mut amp = rho_in[(x[0], y[0])];
            for i in 1..steps {
                amp *= g[(x[i], x[i - 1])] * g[(y[i], y[i - 1])].conj();
            }
            let sig = |b: usize| if b == 0 { 1i8 } else { -1i8 };
            let p = PathPair::new(x.iter().map(|&b| sig(b)).collect(), y.iter().map(|&b| sig(b)).collect()).unwrap();
            let action = fv_action(&p, &sub).unwrap();
            amp *= (C::i() * action).exp();
            red[(x[steps - 1], y[steps - 1])] += amp;
        }
        out.push(half * red * half.adjoint());
    }
    out
}

pub fn max_state_gap(a: &[Qubit], b: &[Qubit]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
}

pub fn traj_gap(a: &TrajectorySeries, b: &TrajectorySeries) -> f64 {
    max_state_gap(a.states(), b.states())
}

/// Dense bath pieces rebuilt from the ladder operators: `H_B`, `B(0)`, and `e^{-βH_B}/Z`.
pub struct DenseBath {
    pub h: DMatrix<C>,
    pub b0: DMatrix<C>,
    pub rho: DMatrix<C>,
}

impl DenseBath {
    pub fn new(bath: &BathSpec) -> Self {
        let m = bath.num_modes();
        let ops: Vec<DMatrix<C>> = match bath.statistics() {
            Statistics::Fermi => build_fermion_ops(m).unwrap(),
            Statistics::BoseBilinear => build_boson_ops(m, bath.boson_truncation()).unwrap(),
        }
        .into_iter()
        .map(|o| o.into_entries())
        .collect();
        let dim = ops[0].nrows();
        let mut h = DMatrix::<C>::zeros(dim, dim);
        for (k, a) in ops.iter().enumerate() {
            h += a.adjoint() * a * c(bath.energies()[k], 0.0);
        }
        let q: Vec<DMatrix<C>> = ops.iter().map(|a| a + a.adjoint()).collect();
        let mut b0 = DMatrix::<C>::zeros(dim, dim);
        for k in 0..m {
            for l in 0..m {
                if k == l {
                    continue;
                }
                let coef = match bath.statistics() {
                    Statistics::Fermi => c(0.0, bath.coupling()[(k, l)]),
                    Statistics::BoseBilinear => c(bath.coupling()[(k.min(l), k.max(l))], 0.0),
                };
                b0 += &q[k] * &q[l] * coef;
            }
        }
        let w = expm(&(&h * c(-bath.beta(), 0.0)));
        let z = w.trace();
        Self { h, b0, rho: w / z }
    }

    /// `B(t) = e^{iHt} B(0) e^{-iHt}`.
    pub fn b_at(&self, t: f64) -> DMatrix<C> {
        let u = expm(&(&self.h * c(0.0, -t)));
        u.adjoint() * &self.b0 * u
    }

    /// `Tr[(Left insertions, later first) ρ (Right insertions, earlier first)]`
    /// for distinct times.
    pub fn ordered_trace(&self, times: &[f64], d: &SuperIndexVector) -> C {
        let mut left: Vec<usize> = (0..times.len()).filter(|&i| d.sides()[i] == Side::Left).collect();
        let mut right: Vec<usize> = (0..times.len()).filter(|&i| d.sides()[i] == Side::Right).collect();
        left.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).unwrap());
        right.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());
        let dim = self.h.nrows();
        let mut m = DMatrix::<C>::identity(dim, dim);
        for &i in &left {
            m *= self.b_at(times[i]);
        }
        m *= &self.rho;
        for &i in &right {
            m *= self.b_at(times[i]);
        }
        m.trace()
    }
}
