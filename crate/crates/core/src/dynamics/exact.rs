use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Qubit, SystemSpec, TimeGrid, TrajectorySeries};
use crate::error::{Error, Result};
use crate::fock::{self, BathSpec, HermitianSpectrum, OperatorMatrix};

/// Largest system ⊗ bath dimension propagated exactly.
pub const MAX_TOTAL_DIM: usize = 8192;

/// `ρ_S(t_n) = Tr_B[e^{-iH t}(ρ0 ⊗ ρ_B)e^{iH t}]`, `t = t_n − t0`, with
/// `H = H_S ⊗ I + σ_z ⊗ B(0) + I ⊗ H_B` and the system as the left factor.
pub fn exact_reduced_dynamics(sys: &SystemSpec, bath: &BathSpec, grid: &TimeGrid) -> Result<TrajectorySeries> {
    let db = bath.hilbert_dim()?;
    let d = 2 * db;
    if d > MAX_TOTAL_DIM {
        return Err(Error::Size(format!("total dimension {d} exceeds {MAX_TOTAL_DIM}")));
    }
    let hs = DMatrix::from_iterator(2, 2, sys.hamiltonian().iter().cloned());
    let sz = DMatrix::from_iterator(2, 2, super::sigma_z().iter().cloned());
    let b = fock::coupling_operator(bath, 0.0)?.into_entries();
    let hb = fock::bath_hamiltonian(bath)?.into_entries();
    let id_s = DMatrix::<Complex64>::identity(2, 2);
    let id_b = DMatrix::<Complex64>::identity(db, db);
    let h = hs.kronecker(&id_b) + sz.kronecker(&b) + id_s.kronecker(&hb);
    let spectrum = HermitianSpectrum::new(&OperatorMatrix::new(h)?)?;

    let rho0 = DMatrix::from_iterator(2, 2, sys.rho0().iter().cloned());
    let init = rho0.kronecker(fock::thermal_state(bath)?.entries());
    let v = spectrum.vectors();
    let r = v.adjoint() * init * v;
    let lambda = spectrum.values();

    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let elapsed = t - grid.t0();
        let mut rt = r.clone();
        for a in 0..d {
            for c in 0..d {
                rt[(a, c)] *= Complex64::from_polar(1.0, -(lambda[a] - lambda[c]) * elapsed);
            }
        }
        let full = v * rt * v.adjoint();
        let mut red = Qubit::zeros();
        for s in 0..2 {
            for s2 in 0..2 {
                red[(s, s2)] = (0..db).map(|k| full[(s * db + k, s2 * db + k)]).sum();
            }
        }
        states.push(red);
    }
    TrajectorySeries::new(times, states)
}
