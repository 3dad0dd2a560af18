//! Forward/backward path sum with the quadratic influence weight.
//!
//! One time step is split symmetrically: `e^{-iH_S dt/2}`, a slice on which
//! `σ_z` is frozen on both branches and the bath acts through the influence
//! coefficients, then `e^{-iH_S dt/2}`. Adjacent half steps merge into full
//! system propagators on the bonds between slices. Slice values are labelled
//! `s = 2x + y` with `x, y ∈ {0, 1}` the forward and backward basis indices.

use num_complex::Complex64;

use super::{pseudomode, Qubit, SystemSpec, TimeGrid, TrajectorySeries};
use crate::error::{Error, Result};
use crate::kernels::InfluenceTable;

/// Largest memory depth of the augmented tensor (`4^K` stored entries).
pub const MAX_MEMORY: usize = 10;
/// Full-memory runs up to this many slices use the tensor; longer runs use
/// the harmonic surrogate of the influence functional.
const FULL_TENSOR_SLICES: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn sigma(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `exp(−(X_i − Y_i)(X_j η − Y_j η*))` for slice values `s_i`, `s_j`.
fn influence_factor(s_i: usize, s_j: usize, eta: Complex64) -> Complex64 {
    let xi = sigma(s_i >> 1) - sigma(s_i & 1);
    if xi == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    (-(xi * (sigma(s_j >> 1) * eta - sigma(s_j & 1) * eta.conj()))).exp()
}

fn reduced(tensor: &[Complex64]) -> Qubit {
    let mut r = Qubit::zeros();
    for (idx, a) in tensor.iter().enumerate() {
        let s = idx % 4;
        r[(s >> 1, s & 1)] += a;
    }
    r
}

fn check_grid(table: &InfluenceTable, grid: &TimeGrid) -> Result<()> {
    if table.num_slices() != grid.num_slices() {
        return Err(Error::Validation(format!(
            "influence table has {} slices, grid has {}",
            table.num_slices(),
            grid.num_slices()
        )));
    }
    if (table.dt() - grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::Validation(format!("table dt {} differs from grid dt {}", table.dt(), grid.dt())));
    }
    Ok(())
}

/// Reduced dynamics from the path sum with influence memory of `memory`
/// slices (`None` for the full history).
pub fn pathsum_reduced_dynamics(
    sys: &SystemSpec,
    table: &InfluenceTable,
    grid: &TimeGrid,
    memory: Option<usize>,
) -> Result<TrajectorySeries> {
    check_grid(table, grid)?;
    let n = grid.num_slices();
    match memory {
        Some(k) => {
            if k > n {
                return Err(Error::Validation(format!("memory {k} exceeds the {n} slices")));
            }
            if k > MAX_MEMORY {
                return Err(Error::Size(format!("memory {k} exceeds the tensor limit {MAX_MEMORY}")));
            }
            tensor_dynamics(sys, table, grid, k.min(n - 1))
        }
        None if table.is_zero() => tensor_dynamics(sys, table, grid, 0),
        None if n - 1 <= FULL_TENSOR_SLICES => tensor_dynamics(sys, table, grid, n - 1),
        None => match pseudomode::harmonic_surrogate_dynamics(sys, table, grid) {
            Err(Error::Size(_)) if n - 1 <= MAX_MEMORY => tensor_dynamics(sys, table, grid, n - 1),
            other => other,
        },
    }
}

fn tensor_dynamics(sys: &SystemSpec, table: &InfluenceTable, grid: &TimeGrid, k: usize) -> Result<TrajectorySeries> {
    let n = grid.num_slices();
    let dt = grid.dt();
    let eta = table.eta_by_lag();
    let g = sys.propagator(dt);
    let half = sys.propagator(0.5 * dt);
    let rho_in = half * sys.rho0() * half.adjoint();

    let mut prop = [[ZERO; 4]; 4];
    for (s_new, row) in prop.iter_mut().enumerate() {
        for (s_prev, p) in row.iter_mut().enumerate() {
            *p = g[(s_new >> 1, s_prev >> 1)] * g[(s_new & 1, s_prev & 1)].conj();
        }
    }
    let factors: Vec<[[Complex64; 4]; 4]> = (0..=k)
        .map(|lag| {
            let mut f = [[ZERO; 4]; 4];
            for (s_new, row) in f.iter_mut().enumerate() {
                for (s_old, v) in row.iter_mut().enumerate() {
                    *v = influence_factor(s_new, if lag == 0 { s_new } else { s_old }, eta[lag]);
                }
            }
            f
        })
        .collect();

    let stored = k.max(1);
    let mut tensor: Vec<Complex64> = (0..4).map(|s| rho_in[(s >> 1, s & 1)] * factors[0][s][s]).collect();
    let mut digits = 1usize;
    let mut states = vec![*sys.rho0()];
    states.push(half * reduced(&tensor) * half.adjoint());

    for _ in 1..n {
        let new_digits = (digits + 1).min(stored);
        let modulus = 4usize.pow(new_digits as u32);
        let mut next = vec![ZERO; modulus];
        let lags = digits.min(k);
        for (old, &a) in tensor.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let s_prev = old % 4;
            for s_new in 0..4 {
                let mut w = a * prop[s_new][s_prev] * factors[0][s_new][s_new];
                let mut rest = old;
                for f in &factors[1..=lags] {
                    w *= f[s_new][rest % 4];
                    rest /= 4;
                }
                next[(old * 4 + s_new) % modulus] += w;
            }
        }
        tensor = next;
        digits = new_digits;
        states.push(half * reduced(&tensor) * half.adjoint());
    }
    TrajectorySeries::new(grid.times(), states)
}
