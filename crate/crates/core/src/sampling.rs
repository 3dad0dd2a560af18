//! Seeded random baths, times and paths for property checks and CLI runs.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fock::{BathSpec, Statistics};
use crate::kernels::PathPair;

/// Inverse temperatures drawn by [`random_bath`].
pub const BETAS: [f64; 3] = [0.1, 1.0, 10.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Antisymmetric coupling with independent upper entries uniform in `[-g_max, g_max]`.
pub fn random_coupling<R: Rng>(rng: &mut R, m: usize, g_max: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in k + 1..m {
            let v = rng.gen_range(-g_max..=g_max);
            g[(k, l)] = v;
            g[(l, k)] = -v;
        }
    }
    g
}

/// Energies uniform in `[0.5, 2]`, couplings uniform in `[-0.3, 0.3]`, β from [`BETAS`].
pub fn random_bath<R: Rng>(rng: &mut R, m: usize, statistics: Statistics, n_max: usize) -> Result<BathSpec> {
    let energies: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let g = random_coupling(rng, m, 0.3);
    let beta = BETAS[rng.gen_range(0..BETAS.len())];
    BathSpec::new(statistics, energies, g, beta, n_max)
}

pub fn random_times<R: Rng, const N: usize>(rng: &mut R, t_max: f64) -> [f64; N] {
    std::array::from_fn(|_| rng.gen_range(0.0..t_max))
}

pub fn random_path<R: Rng>(rng: &mut R, n: usize) -> PathPair {
    let mut draw = || -> Vec<i8> { (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect() };
    let x = draw();
    let y = draw();
    PathPair::new(x, y).expect("entries are ±1")
}
