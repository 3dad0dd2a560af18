use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{BathConfig, Command, RunConfig};
use super::output::{Cell, Scalar, Table};
use crate::correlations::{self, SuperIndexVector};
use crate::dynamics::{self, Observable, TrajectorySeries};
use crate::error::{Error, Result};
use crate::fock::{BathSpec, Statistics};
use crate::kernels::{self, KernelPair, Regime};
use crate::sampling;

/// Result table, scalar summary and overall verdict of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub summary: BTreeMap<String, Scalar>,
    pub passed: bool,
}

struct Summary {
    values: BTreeMap<String, Scalar>,
    passed: bool,
}

impl Summary {
    fn new(cfg: &RunConfig) -> Self {
        let mut values = BTreeMap::new();
        values.insert("command".into(), Scalar::Text(cfg.command.name().into()));
        values.insert("seed".into(), Scalar::Int(cfg.seed));
        values.insert("samples".into(), Scalar::Int(cfg.samples as u64));
        for (k, v) in &cfg.tolerances {
            values.insert(format!("tol_{k}"), Scalar::Num(*v));
        }
        Self { values, passed: true }
    }

    fn num(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), Scalar::Num(v));
    }

    fn flag(&mut self, key: &str, v: bool) {
        self.values.insert(key.into(), Scalar::Bool(v));
    }

    fn text(&mut self, key: &str, v: &str) {
        self.values.insert(key.into(), Scalar::Text(v.into()));
    }

    /// Record a tolerance verdict; NaN never passes.
    fn check(&mut self, tolerance: &str, ok: bool) {
        self.flag(&format!("pass_{tolerance}"), ok);
        self.passed &= ok;
    }

    fn finish(mut self, table: Table) -> Outcome {
        self.flag("pass", self.passed);
        Outcome { table, summary: self.values, passed: self.passed }
    }
}

fn tol(cfg: &RunConfig, key: &str) -> f64 {
    cfg.tolerances[key]
}

/// Fixed bath, or one seeded draw for `random_modes` configurations.
fn bilinear_bath(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<BathSpec> {
    match &cfg.bath {
        BathConfig::Bilinear(b) => Ok(b.clone()),
        BathConfig::Random { modes, statistics, n_max } => sampling::random_bath(rng, *modes, *statistics, *n_max),
        BathConfig::Linear(_) => Err(Error::Config(format!("`{}` needs a bilinear bath", cfg.command))),
    }
}

fn max_of(acc: &mut f64, v: f64) {
    if v > *acc || v.is_nan() {
        *acc = v;
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Kernels => run_kernels(cfg),
        Command::Corr => run_corr(cfg),
        Command::G4check => run_g4check(cfg),
        Command::Pairing => run_pairing(cfg),
        Command::Dynamics => run_dynamics(cfg),
        Command::Scaling => run_scaling(cfg),
    }
}

fn kernel_row(table: &mut Table, family: &str, k: &KernelPair) {
    table.push(vec![
        family.into(),
        k.tau.into(),
        k.k_real.re.into(),
        k.k_real.im.into(),
        k.k_imag.re.into(),
        k.k_imag.im.into(),
    ]);
}

fn parity_residual(f: impl Fn(f64) -> Result<KernelPair>, tau: f64) -> Result<f64> {
    let (p, m) = (f(tau)?, f(-tau)?);
    Ok((m.k_real - p.k_real).norm().max((m.k_imag + p.k_imag).norm()))
}

fn run_kernels(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec!["family", "tau", "kR_re", "kR_im", "kI_re", "kI_im"]);
    let taus = cfg.grid.times();
    let mut parity = 0.0f64;

    if let BathConfig::Linear(spec) = &cfg.bath {
        for &tau in &taus {
            kernel_row(&mut table, "bose_linear", &kernels::bose_linear_kernels(spec, tau)?);
            max_of(&mut parity, parity_residual(|t| kernels::bose_linear_kernels(spec, t), tau)?);
        }
        summary.num("max_parity_residual", parity);
        summary.check("kernel_identity", parity <= tol(cfg, "kernel_identity"));
        return Ok(summary.finish(table));
    }

    let mut rng = sampling::rng(cfg.seed);
    let bath = bilinear_bath(cfg, &mut rng)?;
    let fermi = bath.with_statistics(Statistics::Fermi, 1)?;
    let bose = if bath.beta() > 0.0 {
        Some(bath.with_statistics(Statistics::BoseBilinear, bath.boson_truncation().max(1))?)
    } else {
        None
    };

    let mut consistency = 0.0f64;
    let mut substitution = 0.0f64;
    for &tau in &taus {
        let kf = kernels::fermi_kernels(&fermi, tau)?;
        kernel_row(&mut table, "fermi", &kf);
        kernel_row(&mut table, "fermi_lowT", &kernels::kernel_limits(&fermi, tau, Regime::LowT)?);
        kernel_row(&mut table, "fermi_highT", &kernels::kernel_limits(&fermi, tau, Regime::HighT)?);
        max_of(&mut parity, parity_residual(|t| kernels::fermi_kernels(&fermi, t), tau)?);
        let c = correlations::two_time_analytic(&fermi, tau, 0.0)?;
        max_of(
            &mut consistency,
            (kf.k_real - 2.0 * c.re).norm().max((kf.k_imag - Complex64::new(0.0, 2.0 * c.im)).norm()),
        );

        if let Some(bose) = &bose {
            kernel_row(&mut table, "bose_bilinear", &kernels::bose_bilinear_kernels(bose, tau)?);
            max_of(&mut parity, parity_residual(|t| kernels::bose_bilinear_kernels(bose, t), tau)?);
            let mf = kernels::mode_resolved_kernels(&fermi, tau)?;
            let mb = kernels::mode_resolved_kernels(bose, tau)?;
            for (f, b) in mf.iter().zip(&mb) {
                let x = |k: usize| 1.0 / (0.5 * bath.beta() * bath.energies()[k]).tanh();
                let scale = x(f.k) * x(f.l);
                max_of(
                    &mut substitution,
                    (b.pair.k_real - f.pair.k_real * scale).norm().max((b.pair.k_imag - f.pair.k_imag * scale).norm()),
                );
            }
        }
    }
    summary.num("max_parity_residual", parity);
    summary.num("max_consistency_residual", consistency);
    summary.num("max_substitution_residual", substitution);
    let worst = parity.max(consistency).max(substitution);
    summary.check("kernel_identity", worst <= tol(cfg, "kernel_identity"));
    Ok(summary.finish(table))
}

fn sample_bath(cfg: &RunConfig, rng: &mut ChaCha8Rng, fixed: &Option<BathSpec>) -> Result<BathSpec> {
    match fixed {
        Some(b) => Ok(b.clone()),
        None => bilinear_bath(cfg, rng),
    }
}

fn fixed_bath(cfg: &RunConfig) -> Result<Option<BathSpec>> {
    match &cfg.bath {
        BathConfig::Bilinear(b) => Ok(Some(b.clone())),
        BathConfig::Random { .. } => Ok(None),
        BathConfig::Linear(_) => Err(Error::Config(format!("`{}` needs a bilinear bath", cfg.command))),
    }
}

fn draw_time(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(cfg.grid.t0()..cfg.grid.tf())
}

fn run_corr(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec!["t1", "t2", "C_re", "C_im", "trace_re", "trace_im", "absdiff"]);
    let mut rng = sampling::rng(cfg.seed);
    let fixed = fixed_bath(cfg)?;
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let bath = sample_bath(cfg, &mut rng, &fixed)?;
        let (t1, t2) = (draw_time(cfg, &mut rng), draw_time(cfg, &mut rng));
        let c = correlations::two_time_analytic(&bath, t1, t2)?;
        let tr = correlations::multitime_trace(&bath, &[t1, t2], &SuperIndexVector::all_left(2))?;
        let diff = (c - tr).norm();
        max_of(&mut worst, diff);
        table.push(vec![t1.into(), t2.into(), c.re.into(), c.im.into(), tr.re.into(), tr.im.into(), diff.into()]);
    }
    summary.num("max_absdiff", worst);
    summary.check("corr_abs", worst <= tol(cfg, "corr_abs"));
    Ok(summary.finish(table))
}

fn run_g4check(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec!["sample_id", "d_combo", "normalized_abs_G4"]);
    let mut rng = sampling::rng(cfg.seed);
    let fixed = fixed_bath(cfg)?;
    let mut worst = 0.0f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for sample in 0..cfg.samples {
        let bath = sample_bath(cfg, &mut rng, &fixed)?;
        let times: [f64; 4] = std::array::from_fn(|_| draw_time(cfg, &mut rng));
        for d in SuperIndexVector::all_combinations(4) {
            let r = correlations::cumulant4(&bath, &times, &d)?.normalized();
            max_of(&mut worst, r);
            total += r;
            count += 1;
            table.push(vec![sample.into(), d.to_string().into(), r.into()]);
        }
    }
    summary.num("max_normalized_abs_G4", worst);
    summary.num("mean_normalized_abs_G4", total / count as f64);
    summary.check("g4_normalized", worst <= tol(cfg, "g4_normalized"));
    Ok(summary.finish(table))
}

fn run_pairing(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec![
        "sample_id",
        "d_combo",
        "caseI_re",
        "caseI_im",
        "caseII_re",
        "caseII_im",
        "caseIII_re",
        "caseIII_im",
        "counter_re",
        "counter_im",
        "counterI_re",
        "counterI_im",
        "counterII_re",
        "counterII_im",
        "counterIII_re",
        "counterIII_im",
        "trace_re",
        "trace_im",
        "trace_residual",
        "counter_residual",
    ]);
    let mut rng = sampling::rng(cfg.seed);
    let fixed = fixed_bath(cfg)?;
    let (mut worst_trace, mut worst_counter) = (0.0f64, 0.0f64);
    for sample in 0..cfg.samples {
        let bath = sample_bath(cfg, &mut rng, &fixed)?;
        let times: [f64; 4] = std::array::from_fn(|_| draw_time(cfg, &mut rng));
        let d = SuperIndexVector::from_bits(4, rng.gen_range(0..16));
        let r = correlations::pairing_decomposition(&bath, &times, &d)?;
        let (tr, cr) = (r.trace_residual(), r.counter_residual());
        max_of(&mut worst_trace, tr);
        max_of(&mut worst_counter, cr);
        let mut row: Vec<Cell> = vec![sample.into(), d.to_string().into()];
        for z in [
            r.case_i,
            r.case_ii,
            r.case_iii,
            r.counter_terms,
            r.counter_case_i,
            r.counter_case_ii,
            r.counter_case_iii,
            r.exact_trace,
        ] {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        row.push(tr.into());
        row.push(cr.into());
        table.push(row);
    }
    summary.num("max_trace_residual", worst_trace);
    summary.num("max_counter_residual", worst_counter);
    summary.check("pairing_trace_rel", worst_trace <= tol(cfg, "pairing_trace_rel"));
    summary.check("pairing_counter_rel", worst_counter <= tol(cfg, "pairing_counter_rel"));
    Ok(summary.finish(table))
}

fn trajectory_rows(table: &mut Table, method: &str, traj: &TrajectorySeries) {
    let sz = dynamics::observable_series(traj, Observable::Sz);
    let sx = dynamics::observable_series(traj, Observable::Sx);
    let purity = dynamics::observable_series(traj, Observable::Purity);
    for (i, (t, rho)) in traj.times().iter().zip(traj.states()).enumerate() {
        let dev = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        table.push(vec![method.into(), (*t).into(), sz[i].into(), sx[i].into(), purity[i].into(), dev.into()]);
    }
}

fn run_dynamics(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec!["method", "t", "sz", "sx", "purity", "trace_dev"]);
    let sys = cfg.system.as_ref().ok_or_else(|| Error::Config("missing `[system]` section".into()))?;
    let mut rng = sampling::rng(cfg.seed);
    let bath = bilinear_bath(cfg, &mut rng)?;
    let exact = dynamics::exact_reduced_dynamics(sys, &bath, &cfg.grid)?;
    let table_eta = kernels::eta_coefficients(&bath, cfg.grid.num_slices(), cfg.grid.dt())?;
    let path = dynamics::pathsum_reduced_dynamics(sys, &table_eta, &cfg.grid, cfg.memory)?;
    trajectory_rows(&mut table, "exact", &exact);
    trajectory_rows(&mut table, "pathsum", &path);
    let trace_dev = exact.max_trace_deviation().max(path.max_trace_deviation());
    let herm = exact.max_hermiticity_defect().max(path.max_hermiticity_defect());
    summary.num("max_trace_dev", trace_dev);
    summary.num("max_hermiticity_defect", herm);
    summary.num("max_trace_distance", dynamics::max_trace_distance(&exact, &path)?);
    summary.text("memory", &cfg.memory.map_or("full".to_string(), |k| k.to_string()));
    summary.check("trace_dev", trace_dev <= tol(cfg, "trace_dev"));
    summary.check("hermiticity", herm <= tol(cfg, "hermiticity"));
    Ok(summary.finish(table))
}

fn run_scaling(cfg: &RunConfig) -> Result<Outcome> {
    let mut summary = Summary::new(cfg);
    let mut table = Table::new(vec!["lambda", "D"]);
    let sys = cfg.system.as_ref().ok_or_else(|| Error::Config("missing `[system]` section".into()))?;
    let mut rng = sampling::rng(cfg.seed);
    let bath = bilinear_bath(cfg, &mut rng)?;
    let report = dynamics::error_scaling(sys, &bath, &cfg.grid, &cfg.lambdas)?;
    for (l, d) in report.lambdas.iter().zip(&report.distances) {
        table.push(vec![(*l).into(), (*d).into()]);
    }
    summary.num("slope", report.slope.unwrap_or(f64::NAN));
    summary.flag("inconclusive", report.inconclusive());
    summary.check("slope_min", report.slope.is_some_and(|s| s >= tol(cfg, "slope_min")));
    summary.check("slope_max", report.slope.is_some_and(|s| s <= tol(cfg, "slope_max")));
    Ok(summary.finish(table))
}
