use num_complex::Complex64;

use super::{exact_reduced_dynamics, max_trace_distance, pathsum_reduced_dynamics};
use super::{SystemSpec, TimeGrid, TrajectorySeries};
use crate::error::{Error, Result};
use crate::fock::BathSpec;
use crate::kernels::eta_coefficients;

/// Distances at or below this level are treated as numerical noise in the fit.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub lambdas: Vec<f64>,
    /// `max_t ‖ρ_exact − ρ_path‖₁` per coupling scale.
    pub distances: Vec<f64>,
    /// Least-squares slope of `log D` against `log λ`; `None` when fewer than
    /// two distances exceed the noise floor.
    pub slope: Option<f64>,
}

impl ScalingReport {
    pub fn inconclusive(&self) -> bool {
        self.slope.is_none()
    }
}

/// `(4 ρ_{dt/2} − ρ_dt) / 3` on the coarse grid; `fine` has twice the slices.
pub fn richardson(coarse: &TrajectorySeries, fine: &TrajectorySeries) -> Result<TrajectorySeries> {
    if fine.len() != 2 * coarse.len() - 1 {
        return Err(Error::Validation(format!(
            "fine trajectory has {} points, expected {}",
            fine.len(),
            2 * coarse.len() - 1
        )));
    }
    let states = coarse
        .states()
        .iter()
        .zip(fine.states().iter().step_by(2))
        .map(|(c, f)| (f * Complex64::from(4.0) - c) / Complex64::from(3.0))
        .collect();
    TrajectorySeries::new(coarse.times().to_vec(), states)
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let used: Vec<(f64, f64)> =
        points.iter().filter(|&&(_, d)| d > NOISE_FLOOR).map(|&(l, d)| (l.ln(), d.ln())).collect();
    if used.len() < 2 {
        return None;
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Error of the Richardson-extrapolated path sum against exact dynamics for
/// couplings `λ g`, and the fitted power of `λ`.
pub fn error_scaling(
    sys: &SystemSpec,
    bath_template: &BathSpec,
    grid: &TimeGrid,
    lambdas: &[f64],
) -> Result<ScalingReport> {
    if lambdas.len() < 2 || lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Validation("need at least two positive coupling scales".into()));
    }
    let fine_grid = grid.refined(2);
    let mut distances = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let bath = bath_template.with_coupling_scaled(lambda);
        let exact = exact_reduced_dynamics(sys, &bath, grid)?;
        let coarse =
            pathsum_reduced_dynamics(sys, &eta_coefficients(&bath, grid.num_slices(), grid.dt())?, grid, None)?;
        let fine = pathsum_reduced_dynamics(
            sys,
            &eta_coefficients(&bath, fine_grid.num_slices(), fine_grid.dt())?,
            &fine_grid,
            None,
        )?;
        distances.push(max_trace_distance(&exact, &richardson(&coarse, &fine)?)?);
    }
    let points: Vec<(f64, f64)> = lambdas.iter().cloned().zip(distances.iter().cloned()).collect();
    Ok(ScalingReport { lambdas: lambdas.to_vec(), distances, slope: fit_slope(&points) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&l: &f64| (l, 3.0 * l.powi(6))).collect();
        assert!((fit_slope(&pts).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_makes_fit_inconclusive() {
        assert_eq!(fit_slope(&[(0.1, 1e-13), (0.2, 1e-14), (0.4, 2e-12)]), None);
    }
}
