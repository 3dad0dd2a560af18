//! Bath correlation functions: thermal pair expectations, the analytic
//! two-time correlation, exact multi-time super-operator traces, the fourth
//! cumulant and an index-grouping decomposition of the four-time function.
//!
//! The bath insertion at time `t` is `B(t)` from [`crate::fock::coupling_operator`].
//! A `Left` insertion multiplies the bath state from the left and is ordered
//! by descending time; a `Right` insertion multiplies from the right and is
//! ordered by ascending time. Equal times keep their argument order.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, BathSpec, Statistics};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Acts from the left of the bath state (`>` / `+`).
    Left,
    /// Acts from the right of the bath state (`<` / `−`).
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperIndexVector(Vec<Side>);

impl SuperIndexVector {
    pub fn new(sides: Vec<Side>) -> Self {
        Self(sides)
    }

    pub fn all_left(n: usize) -> Self {
        Self(vec![Side::Left; n])
    }

    /// Bit `i` of `bits` set means insertion `i` acts from the right.
    pub fn from_bits(n: usize, bits: u32) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { Side::Right } else { Side::Left }).collect())
    }

    /// All `2^n` placements in [`Self::from_bits`] order.
    pub fn all_combinations(n: usize) -> impl Iterator<Item = Self> {
        (0..1u32 << n).map(move |b| Self::from_bits(n, b))
    }

    pub fn sides(&self) -> &[Side] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sub-vector at the given positions.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self(idx.iter().map(|&i| self.0[i]).collect())
    }
}

impl fmt::Display for SuperIndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Side::Left => "L",
                Side::Right => "R",
            })?;
        }
        Ok(())
    }
}

/// A multi-time correlation value together with its arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSample {
    pub times: Vec<f64>,
    pub d: SuperIndexVector,
    pub value: Complex64,
}

/// Positions of the insertions in operator-product order for
/// `Tr[(Left, descending) ρ (Right, ascending)] = Tr[(Right, ascending)(Left, descending) ρ]`.
pub fn super_operator_order(times: &[f64], d: &SuperIndexVector) -> Vec<usize> {
    let mut right: Vec<usize> = (0..times.len()).filter(|&i| d.sides()[i] == Side::Right).collect();
    let mut left: Vec<usize> = (0..times.len()).filter(|&i| d.sides()[i] == Side::Left).collect();
    right.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    left.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
    right.extend(left);
    right
}

fn check_args(times: &[f64], d: &SuperIndexVector) -> Result<()> {
    if times.is_empty() || times.len() != d.len() {
        return Err(Error::Validation(format!(
            "need matching non-empty times and indices, got {} and {}",
            times.len(),
            d.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Validation(format!("time {t} is not finite")));
    }
    Ok(())
}

fn hyperbolic_factor(bath: &BathSpec, k: usize) -> Result<f64> {
    let x = 0.5 * bath.beta() * bath.energies()[k];
    match bath.statistics() {
        Statistics::Fermi => Ok(x.tanh()),
        Statistics::BoseBilinear => {
            if x == 0.0 {
                Err(Error::Divergence("bosonic pair expectation diverges at beta = 0".into()))
            } else {
                Ok(1.0 / x.tanh())
            }
        }
    }
}

/// Weights `(a, b)` with `⟨Q_k(t1) Q_k(t2)⟩ = a e^{-iωτ} + b e^{iωτ}`, `τ = t1 − t2`.
pub(crate) fn pair_weights(bath: &BathSpec, k: usize) -> Result<(f64, f64)> {
    let h = hyperbolic_factor(bath, k)?;
    Ok(match bath.statistics() {
        Statistics::Fermi => (0.5 * (1.0 + h), 0.5 * (1.0 - h)),
        Statistics::BoseBilinear => (0.5 * (h + 1.0), 0.5 * (h - 1.0)),
    })
}

/// Thermal `⟨Q_k(t1) Q_k(t2)⟩`.
///
/// Fermi: `cos ωτ − i tanh(βE/2) sin ωτ`; bosons: `coth(βE/2) cos ωτ − i sin ωτ`.
pub fn pair_expectation(bath: &BathSpec, k: usize, t1: f64, t2: f64) -> Result<Complex64> {
    bath.check_mode(k)?;
    let h = hyperbolic_factor(bath, k)?;
    let (s, c) = (bath.omega(k) * (t1 - t2)).sin_cos();
    Ok(match bath.statistics() {
        Statistics::Fermi => Complex64::new(c, -h * s),
        Statistics::BoseBilinear => Complex64::new(h * c, -s),
    })
}

/// `C(t1, t2) = ⟨B(t1) B(t2)⟩ = 2 Σ_{k≠l} g_kl² ⟨Q_k Q_k⟩⟨Q_l Q_l⟩` for both statistics.
pub fn two_time_analytic(bath: &BathSpec, t1: f64, t2: f64) -> Result<Complex64> {
    let m = bath.num_modes();
    let p: Vec<Complex64> = (0..m).map(|k| pair_expectation(bath, k, t1, t2)).collect::<Result<_>>()?;
    let mut c = ZERO;
    for k in 0..m {
        for l in 0..m {
            let g = bath.g(k, l);
            if k != l && g != 0.0 {
                c += 2.0 * g * g * p[k] * p[l];
            }
        }
    }
    Ok(c)
}

/// One term `weight · e^{-i frequency τ}` of the two-time correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub weight: f64,
    pub frequency: f64,
}

/// Decomposition `C(τ) = Σ w_r e^{-i ν_r τ}` with nonnegative weights and
/// equal frequencies merged. Lines are sorted by frequency.
pub fn correlation_spectrum(bath: &BathSpec) -> Result<Vec<SpectralLine>> {
    let m = bath.num_modes();
    let weights: Vec<(f64, f64)> = (0..m).map(|k| pair_weights(bath, k)).collect::<Result<_>>()?;
    let mut lines = Vec::new();
    for k in 0..m {
        for l in 0..m {
            let g = bath.g(k, l);
            if k == l || g == 0.0 {
                continue;
            }
            let (ak, bk) = weights[k];
            let (al, bl) = weights[l];
            let (wk, wl) = (bath.omega(k), bath.omega(l));
            let pre = 2.0 * g * g;
            for (w, nu) in [(ak * al, wk + wl), (ak * bl, wk - wl), (bk * al, wl - wk), (bk * bl, -(wk + wl))] {
                if w != 0.0 {
                    lines.push(SpectralLine { weight: pre * w, frequency: nu });
                }
            }
        }
    }
    lines.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let mut merged: Vec<SpectralLine> = Vec::with_capacity(lines.len());
    for line in lines {
        match merged.last_mut() {
            Some(last) if (last.frequency - line.frequency).abs() <= 1e-13 * last.frequency.abs().max(1.0) => {
                last.weight += line.weight;
            }
            _ => merged.push(line),
        }
    }
    Ok(merged)
}

/// Dense insertions `B(t_i)` and the thermal diagonal, built once per call site.
struct Insertions {
    ops: Vec<DMatrix<Complex64>>,
    rho: Vec<f64>,
}

impl Insertions {
    fn build(bath: &BathSpec, times: &[f64]) -> Result<Self> {
        let rho = fock::thermal_diagonal(bath)?;
        let mut ops: Vec<DMatrix<Complex64>> = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            match times[..i].iter().position(|&s| s == t) {
                Some(j) => ops.push(ops[j].clone()),
                None => ops.push(fock::coupling_operator(bath, t)?.into_entries()),
            }
        }
        Ok(Self { ops, rho })
    }

    /// Ordered trace over the insertions at positions `idx`.
    fn trace(&self, times: &[f64], d: &SuperIndexVector, idx: &[usize]) -> Complex64 {
        let sub_times: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let order = super_operator_order(&sub_times, &d.select(idx));
        let seq: Vec<&DMatrix<Complex64>> = order.iter().map(|&o| &self.ops[idx[o]]).collect();
        diagonal_state_trace(&seq, &self.rho)
    }
}

/// `Tr[A_1 ⋯ A_n ρ]` for diagonal `ρ`.
fn diagonal_state_trace(seq: &[&DMatrix<Complex64>], rho: &[f64]) -> Complex64 {
    let last = seq[seq.len() - 1];
    if seq.len() == 1 {
        return (0..rho.len()).map(|j| last[(j, j)] * rho[j]).sum();
    }
    let mut head = seq[0].clone();
    for a in &seq[1..seq.len() - 1] {
        head *= *a;
    }
    let mut acc = ZERO;
    for j in 0..rho.len() {
        if rho[j] == 0.0 {
            continue;
        }
        let mut s = ZERO;
        for i in 0..rho.len() {
            s += head[(j, i)] * last[(i, j)];
        }
        acc += s * rho[j];
    }
    acc
}

/// Exact `Tr[(Left insertions, descending time) ρ_B (Right insertions, ascending time)]`.
pub fn multitime_trace(bath: &BathSpec, times: &[f64], d: &SuperIndexVector) -> Result<Complex64> {
    check_args(times, d)?;
    let ins = Insertions::build(bath, times)?;
    let all: Vec<usize> = (0..times.len()).collect();
    Ok(ins.trace(times, d, &all))
}

/// Fourth cumulant and its constituents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulant4 {
    pub g4: Complex64,
    /// `C(1234)`.
    pub full: Complex64,
    /// `C(12)C(34)`, `C(13)C(24)`, `C(14)C(23)`.
    pub pair_products: [Complex64; 3],
}

impl Cumulant4 {
    /// `|G4| / (|C(1234)| + Σ |C(ij)C(kl)|)`, zero when every term vanishes.
    pub fn normalized(&self) -> f64 {
        let s = self.full.norm() + self.pair_products.iter().map(|p| p.norm()).sum::<f64>();
        if s == 0.0 {
            0.0
        } else {
            self.g4.norm() / s
        }
    }
}

const PAIRINGS: [[[usize; 2]; 2]; 3] = [[[0, 1], [2, 3]], [[0, 2], [1, 3]], [[0, 3], [1, 2]]];

/// `G4 = C(1234) − C(12)C(34) − C(13)C(24) − C(14)C(23)` with matching index sub-vectors.
pub fn cumulant4(bath: &BathSpec, times: &[f64; 4], d: &SuperIndexVector) -> Result<Cumulant4> {
    check_args(times, d)?;
    let ins = Insertions::build(bath, times)?;
    let full = ins.trace(times, d, &[0, 1, 2, 3]);
    let mut pair_products = [ZERO; 3];
    for (p, [a, b]) in pair_products.iter_mut().zip(PAIRINGS) {
        *p = ins.trace(times, d, &a) * ins.trace(times, d, &b);
    }
    let g4 = full - pair_products.iter().sum::<Complex64>();
    Ok(Cumulant4 { g4, full, pair_products })
}

/// `|⟨Q_k(t1)Q_k(t2)Q_k(t3)Q_k(t4)⟩ − (⟨12⟩⟨34⟩ − ⟨13⟩⟨24⟩ + ⟨14⟩⟨23⟩)|`, lhs by exact trace.
pub fn wick_check(bath: &BathSpec, k: usize, times: &[f64; 4]) -> Result<f64> {
    if bath.statistics() != Statistics::Fermi {
        return Err(Error::Validation("wick_check needs a fermionic bath".into()));
    }
    bath.check_mode(k)?;
    let rho = fock::thermal_diagonal(bath)?;
    let q: Vec<DMatrix<Complex64>> =
        times.iter().map(|&t| fock::quadrature(bath, k, t).map(|o| o.into_entries())).collect::<Result<_>>()?;
    let lhs = diagonal_state_trace(&[&q[0], &q[1], &q[2], &q[3]], &rho);
    let p = |i: usize, j: usize| pair_expectation(bath, k, times[i], times[j]);
    let rhs = p(0, 1)? * p(2, 3)? - p(0, 2)? * p(1, 3)? + p(0, 3)? * p(1, 2)?;
    Ok((lhs - rhs).norm())
}

/// Index-grouping decomposition of the four-time function.
///
/// Case I collects assignments where four distinct modes each appear twice,
/// case II one mode four times and two modes twice, case III two modes four
/// times each. The counter terms are the products of analytic two-time
/// functions, split the same way by the number of modes shared between the
/// two factors (0, 1 or 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingReport {
    pub case_i: Complex64,
    pub case_ii: Complex64,
    pub case_iii: Complex64,
    pub counter_terms: Complex64,
    pub counter_case_i: Complex64,
    pub counter_case_ii: Complex64,
    pub counter_case_iii: Complex64,
    pub exact_trace: Complex64,
}

impl PairingReport {
    pub fn case_sum(&self) -> Complex64 {
        self.case_i + self.case_ii + self.case_iii
    }

    /// `|Σ cases − exact| / max(|exact|, |Σ cases|)`.
    pub fn trace_residual(&self) -> f64 {
        relative_gap(self.case_sum(), self.exact_trace)
    }

    /// `|Σ cases − counter terms| / max(|Σ cases|, |counter terms|)`.
    pub fn counter_residual(&self) -> f64 {
        relative_gap(self.case_sum(), self.counter_terms)
    }
}

fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Wick expansion of `⟨x_1 ⋯ x_n⟩` over single-mode quadratures; only
/// same-mode contractions survive. Fermionic contractions carry the sign of
/// the crossing.
fn wick_expand(ops: &mut Vec<(usize, usize)>, pairs: &[Vec<Complex64>], n_times: usize, fermi: bool) -> Complex64 {
    if ops.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let first = ops.remove(0);
    let mut acc = ZERO;
    for j in 0..ops.len() {
        if ops[j].0 != first.0 {
            continue;
        }
        let partner = ops.remove(j);
        let contraction = pairs[first.0][first.1 * n_times + partner.1];
        let sign = if fermi && j % 2 == 1 { -1.0 } else { 1.0 };
        acc += sign * contraction * wick_expand(ops, pairs, n_times, fermi);
        ops.insert(j, partner);
    }
    ops.insert(0, first);
    acc
}

/// Grouping class from mode multiplicities: 0 ↔ case I, 1 ↔ case II, 2 ↔ case III.
fn grouping_class(modes: &[usize; 8], m: usize) -> Option<usize> {
    let mut counts = vec![0usize; m];
    for &k in modes {
        counts[k] += 1;
    }
    let mut fours = 0;
    for &c in &counts {
        match c {
            0 | 2 => {}
            4 => fours += 1,
            _ => return None,
        }
    }
    Some(fours)
}

/// Explicit enumeration of all `(k_i, l_i)` assignments in the four-time
/// function, grouped by case, plus the matching counter terms.
pub fn pairing_decomposition(bath: &BathSpec, times: &[f64; 4], d: &SuperIndexVector) -> Result<PairingReport> {
    check_args(times, d)?;
    let m = bath.num_modes();
    let fermi = bath.statistics() == Statistics::Fermi;

    // pairs[k][a*4+b] = ⟨Q_k(t_a) Q_k(t_b)⟩
    let pairs: Vec<Vec<Complex64>> = (0..m)
        .map(|k| (0..16).map(|ab| pair_expectation(bath, k, times[ab / 4], times[ab % 4])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let order = super_operator_order(times, d);
    let couplings: Vec<(usize, usize, Complex64)> = (0..m)
        .flat_map(|k| (0..m).map(move |l| (k, l)))
        .filter(|&(k, l)| k != l)
        .map(|(k, l)| (k, l, bath.coupling_coefficient(k, l)))
        .filter(|&(_, _, c)| c != ZERO)
        .collect();

    let mut cases = [ZERO; 3];
    let nc = couplings.len();
    let mut seq: Vec<(usize, usize)> = Vec::with_capacity(8);
    let mut assign = [0usize; 4];
    let total = nc.pow(4);
    for code in 0..total {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % nc;
            c /= nc;
        }
        let mut modes = [0usize; 8];
        for (slot, &pos) in order.iter().enumerate() {
            let (k, l, _) = couplings[assign[pos]];
            modes[2 * slot] = k;
            modes[2 * slot + 1] = l;
        }
        let Some(class) = grouping_class(&modes, m) else { continue };
        let coef: Complex64 = assign.iter().map(|&a| couplings[a].2).product();
        seq.clear();
        for (slot, &pos) in order.iter().enumerate() {
            seq.push((modes[2 * slot], pos));
            seq.push((modes[2 * slot + 1], pos));
        }
        cases[class] += coef * wick_expand(&mut seq, &pairs, 4, fermi);
    }

    let mut counters = [ZERO; 3];
    for [[a, b], [c, e]] in PAIRINGS {
        let (a, b) = ordered_pair(times, d, a, b);
        let (c, e) = ordered_pair(times, d, c, e);
        for k in 0..m {
            for l in 0..m {
                let g = bath.g(k, l);
                if k == l || g == 0.0 {
                    continue;
                }
                let left = 2.0 * g * g * pairs[k][a * 4 + b] * pairs[l][a * 4 + b];
                for k2 in 0..m {
                    for l2 in 0..m {
                        let g2 = bath.g(k2, l2);
                        if k2 == l2 || g2 == 0.0 {
                            continue;
                        }
                        let shared = [k2, l2].iter().filter(|&&x| x == k || x == l).count();
                        let right = 2.0 * g2 * g2 * pairs[k2][c * 4 + e] * pairs[l2][c * 4 + e];
                        counters[shared] += left * right;
                    }
                }
            }
        }
    }

    let exact_trace = multitime_trace(bath, times, d)?;
    Ok(PairingReport {
        case_i: cases[0],
        case_ii: cases[1],
        case_iii: cases[2],
        counter_terms: counters.iter().sum(),
        counter_case_i: counters[0],
        counter_case_ii: counters[1],
        counter_case_iii: counters[2],
        exact_trace,
    })
}

/// Operator order of a two-insertion sub-function.
fn ordered_pair(times: &[f64; 4], d: &SuperIndexVector, a: usize, b: usize) -> (usize, usize) {
    let o = super_operator_order(&[times[a], times[b]], &d.select(&[a, b]));
    let idx = [a, b];
    (idx[o[0]], idx[o[1]])
}

/// Analytic two-insertion super-operator correlation `C^{d_1 d_2}(t_1, t_2)`.
pub fn two_time_super(bath: &BathSpec, times: &[f64; 2], d: &SuperIndexVector) -> Result<Complex64> {
    check_args(times, d)?;
    let o = super_operator_order(times, d);
    two_time_analytic(bath, times[o[0]], times[o[1]])
}
