//! Harmonic surrogate of the quadratic influence functional.
//!
//! Each spectral line `w e^{-iντ}` of the correlation function is the vacuum
//! correlation of a mode `b` with `H = ν b†b + σ_z √w (b + b†)`. Propagating
//! the qubit with these modes under the same symmetric splitting as the path
//! sum reproduces the full-memory path sum, up to Fock truncation of the modes.

use nalgebra::{DMatrix, SymmetricEigen, Vector2};
use num_complex::Complex64;

use super::{Qubit, SystemSpec, TimeGrid, TrajectorySeries};
use crate::error::{Error, Result};
use crate::fock::{HermitianSpectrum, OperatorMatrix};
use crate::kernels::InfluenceTable;

/// Largest state-vector length (qubit ⊗ modes).
const MAX_DIM: usize = 1 << 21;
/// Bound on the neglected Poisson weight `α^{2n}/n!` per mode.
const TAIL: f64 = 1e-24;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct Mode {
    levels: usize,
    /// Slice propagators for `σ_z = +1` and `σ_z = −1`.
    u: [Vec<Complex64>; 2],
}

fn levels_for(amplitude: f64) -> usize {
    let a2 = amplitude * amplitude;
    let mut n = 1usize;
    let mut term = a2;
    while term >= TAIL {
        n += 1;
        term *= a2 / n as f64;
    }
    n + 1
}

fn modes(table: &InfluenceTable, grid: &TimeGrid) -> Vec<(f64, f64, usize)> {
    let horizon = grid.tf() - grid.t0();
    table
        .spectrum()
        .iter()
        .filter(|l| l.weight > 0.0)
        .map(|l| {
            let a = l.weight.sqrt();
            (a, l.frequency, levels_for(a * horizon))
        })
        .collect()
}

/// State-vector length the surrogate would need on this grid.
pub fn pseudomode_dimension(table: &InfluenceTable, grid: &TimeGrid) -> usize {
    modes(table, grid).iter().fold(2usize, |d, m| d.saturating_mul(m.2))
}

/// Row-major `e^{-i h dt}` for one mode with `σ_z = x`.
fn slice_propagator(a: f64, nu: f64, x: f64, levels: usize, dt: f64) -> Result<Vec<Complex64>> {
    let mut h = DMatrix::<Complex64>::zeros(levels, levels);
    for n in 0..levels {
        h[(n, n)] = Complex64::from(nu * n as f64);
        if n + 1 < levels {
            let c = Complex64::from(x * a * ((n + 1) as f64).sqrt());
            h[(n, n + 1)] = c;
            h[(n + 1, n)] = c;
        }
    }
    Ok(HermitianSpectrum::new(&OperatorMatrix::new(h)?)?.propagator(dt).into_entries().transpose().as_slice().to_vec())
}

/// Apply `u[σ]` to tensor axis `axis` of a row-major state with `dims`, where
/// axis 0 is the qubit and selects `σ`. `u` is stored row-major.
fn apply_mode(psi: &mut [Complex64], dims: &[usize], axis: usize, u: &[Vec<Complex64>; 2], buf: &mut Vec<Complex64>) {
    let d = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let half = psi.len() / 2;
    let block = d * stride;
    buf.resize(block, ZERO);
    for start in (0..psi.len()).step_by(block) {
        let m = &u[start / half];
        let src = &mut psi[start..start + block];
        buf.copy_from_slice(src);
        for (r, out) in src.chunks_exact_mut(stride).enumerate() {
            out.fill(ZERO);
            for (c, inp) in buf.chunks_exact(stride).enumerate() {
                let w = m[r * d + c];
                if w == ZERO {
                    continue;
                }
                for (o, x) in out.iter_mut().zip(inp) {
                    *o += w * x;
                }
            }
        }
    }
}

fn apply_system(psi: &mut [Complex64], g: &Qubit) {
    let half = psi.len() / 2;
    let (up, down) = psi.split_at_mut(half);
    for (a, b) in up.iter_mut().zip(down.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = g[(0, 0)] * x + g[(0, 1)] * y;
        *b = g[(1, 0)] * x + g[(1, 1)] * y;
    }
}

fn reduced(psi: &[Complex64]) -> Qubit {
    let half = psi.len() / 2;
    let (up, down) = psi.split_at(half);
    let mut r = Qubit::zeros();
    for (a, b) in up.iter().zip(down) {
        r[(0, 0)] += a * a.conj();
        r[(0, 1)] += a * b.conj();
        r[(1, 0)] += b * a.conj();
        r[(1, 1)] += b * b.conj();
    }
    r
}

/// Full-memory path sum evaluated through the harmonic surrogate.
pub fn harmonic_surrogate_dynamics(
    sys: &SystemSpec,
    table: &InfluenceTable,
    grid: &TimeGrid,
) -> Result<TrajectorySeries> {
    let dim = pseudomode_dimension(table, grid);
    if dim > MAX_DIM {
        return Err(Error::Size(format!("harmonic surrogate needs dimension {dim}, limit {MAX_DIM}")));
    }
    let dt = grid.dt();
    let mut built = Vec::new();
    for (a, nu, levels) in modes(table, grid) {
        built.push(Mode {
            levels,
            u: [slice_propagator(a, nu, 1.0, levels, dt)?, slice_propagator(a, nu, -1.0, levels, dt)?],
        });
    }
    let mut dims = vec![2usize];
    dims.extend(built.iter().map(|m| m.levels));

    let g = sys.propagator(dt);
    let half = sys.propagator(0.5 * dt);
    let rho0 = DMatrix::from_iterator(2, 2, sys.rho0().iter().cloned());
    let eig = SymmetricEigen::new(rho0);

    let n = grid.num_slices();
    let mut acc = vec![Qubit::zeros(); n + 1];
    let mut buf = Vec::new();
    for (p, v) in eig.eigenvalues.iter().zip(eig.eigenvectors.column_iter()) {
        if *p <= 1e-15 {
            continue;
        }
        let mut psi = vec![ZERO; dim];
        let hv = half * Vector2::new(v[0], v[1]);
        psi[0] = hv[0];
        psi[dim / 2] = hv[1];
        for step in 0..n {
            if step > 0 {
                apply_system(&mut psi, &g);
            }
            for (axis, m) in built.iter().enumerate() {
                apply_mode(&mut psi, &dims, axis + 1, &m.u, &mut buf);
            }
            acc[step + 1] += reduced(&psi) * Complex64::from(*p);
        }
    }
    let mut states = vec![*sys.rho0()];
    states.extend(acc.into_iter().skip(1).map(|r| half * r * half.adjoint()));
    TrajectorySeries::new(grid.times(), states)
}
