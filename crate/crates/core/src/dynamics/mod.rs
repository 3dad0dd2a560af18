//! Reduced qubit dynamics: exact propagation of system ⊗ bath, and a
//! path sum weighted by the quadratic influence action.
//!
//! The qubit Hamiltonian is `H_S = ε/2 σ_z + Δ/2 σ_x` in the basis
//! `{|↑⟩, |↓⟩}` with `σ_z|↑⟩ = |↑⟩`; the system couples to the bath through
//! `σ_z ⊗ B`.

mod exact;
mod pathsum;
mod pseudomode;
mod scaling;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, OperatorMatrix};

pub use exact::exact_reduced_dynamics;
pub use pathsum::{pathsum_reduced_dynamics, MAX_MEMORY};
pub use pseudomode::{harmonic_surrogate_dynamics, pseudomode_dimension};
pub use scaling::{error_scaling, richardson, ScalingReport};

/// 2×2 complex matrix.
pub type Qubit = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn sigma_x() -> Qubit {
    Qubit::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Qubit {
    Qubit::new(ZERO, -Complex64::i(), Complex64::i(), ZERO)
}

pub fn sigma_z() -> Qubit {
    Qubit::new(ONE, ZERO, ZERO, -ONE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    epsilon: f64,
    delta: f64,
    rho0: Qubit,
}

impl SystemSpec {
    pub fn new(epsilon: f64, delta: f64, rho0: Qubit) -> Result<Self> {
        if !epsilon.is_finite() || !delta.is_finite() {
            return Err(Error::Validation("epsilon and delta must be finite".into()));
        }
        if (rho0 - rho0.adjoint()).iter().any(|z| z.norm() > 1e-12) {
            return Err(Error::Validation("initial state is not Hermitian".into()));
        }
        if (rho0.trace() - ONE).norm() > 1e-12 {
            return Err(Error::Validation(format!("initial state has trace {}", rho0.trace())));
        }
        let (p, q) = (rho0[(0, 0)].re, rho0[(1, 1)].re);
        let det = p * q - rho0[(0, 1)].norm_sqr();
        if p < -1e-12 || q < -1e-12 || det < -1e-12 {
            return Err(Error::Validation("initial state is not positive semidefinite".into()));
        }
        Ok(Self { epsilon, delta, rho0 })
    }

    /// `|↑⟩⟨↑|`.
    pub fn spin_up() -> Qubit {
        Qubit::new(ONE, ZERO, ZERO, ZERO)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho0(&self) -> &Qubit {
        &self.rho0
    }

    pub fn hamiltonian(&self) -> Qubit {
        sigma_z() * Complex64::from(0.5 * self.epsilon) + sigma_x() * Complex64::from(0.5 * self.delta)
    }

    /// `e^{-i H_S t}`.
    pub(crate) fn propagator(&self, t: f64) -> Qubit {
        let h = OperatorMatrix::from_entries(DMatrix::from_iterator(2, 2, self.hamiltonian().iter().cloned()));
        let u = fock::propagator(&h, t).expect("system Hamiltonian is Hermitian");
        Qubit::from_iterator(u.entries().iter().cloned())
    }
}

/// Uniform grid `t_n = t0 + n (tf − t0) / N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && tf > t0) {
            return Err(Error::Validation(format!("time grid needs tf > t0, got [{t0}, {tf}]")));
        }
        if n == 0 {
            return Err(Error::Validation("time grid needs at least one slice".into()));
        }
        Ok(Self { t0, tf, n })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn num_slices(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        (self.tf - self.t0) / self.n as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n).map(|i| self.t0 + i as f64 * dt).collect()
    }

    /// Same interval with `factor` times as many slices.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n: self.n * factor, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Sz,
    Sx,
    Sy,
    Purity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    times: Vec<f64>,
    rho: Vec<Qubit>,
}

impl TrajectorySeries {
    pub fn new(times: Vec<f64>, rho: Vec<Qubit>) -> Result<Self> {
        if times.len() != rho.len() || times.is_empty() {
            return Err(Error::Validation("trajectory needs one state per time".into()));
        }
        Ok(Self { times, rho })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Qubit] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_deviation(&self) -> f64 {
        self.rho.iter().map(|r| (r.trace() - ONE).norm()).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.rho.iter().map(|r| (r - r.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }
}

pub fn observable(rho: &Qubit, which: Observable) -> f64 {
    match which {
        Observable::Sz => (rho[(0, 0)] - rho[(1, 1)]).re,
        Observable::Sx => 2.0 * rho[(0, 1)].re,
        Observable::Sy => -2.0 * rho[(0, 1)].im,
        Observable::Purity => (rho * rho).trace().re,
    }
}

pub fn observable_series(traj: &TrajectorySeries, which: Observable) -> Vec<f64> {
    traj.rho.iter().map(|r| observable(r, which)).collect()
}

/// Trace norm of `a − b` for Hermitian 2×2 matrices.
pub fn trace_distance(a: &Qubit, b: &Qubit) -> f64 {
    let d = a - b;
    let mean = 0.5 * (d[(0, 0)].re + d[(1, 1)].re);
    let half = 0.5 * (d[(0, 0)].re - d[(1, 1)].re);
    let r = (half * half + d[(0, 1)].norm_sqr()).sqrt();
    (mean + r).abs() + (mean - r).abs()
}

/// `max_n ‖a_n − b_n‖₁` over two trajectories on the same grid.
pub fn max_trace_distance(a: &TrajectorySeries, b: &TrajectorySeries) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!("trajectory lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a.rho.iter().zip(&b.rho).map(|(x, y)| trace_distance(x, y)).fold(0.0, f64::max))
}
