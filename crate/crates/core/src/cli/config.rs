//! Run configuration: a TOML document with `[run]`, `[bath]`, `[system]`,
//! `[grid]` and `[tolerances]` tables. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::dynamics::{Qubit, SystemSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::fock::{BathSpec, LinearBoseBathSpec, Statistics};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUTPUT: &str = "fvkernel-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Kernels,
    Corr,
    G4check,
    Pairing,
    Dynamics,
    Scaling,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Kernels, Command::Corr, Command::G4check, Command::Pairing, Command::Dynamics, Command::Scaling];

    pub fn name(self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Corr => "corr",
            Command::G4check => "g4check",
            Command::Pairing => "pairing",
            Command::Dynamics => "dynamics",
            Command::Scaling => "scaling",
        }
    }

    /// Tolerances checked by the command and their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::Kernels => &[("kernel_identity", 1e-12)],
            Command::Corr => &[("corr_abs", 1e-11)],
            Command::G4check => &[("g4_normalized", 1e-10)],
            Command::Pairing => &[("pairing_trace_rel", 1e-10), ("pairing_counter_rel", 1e-10)],
            Command::Dynamics => &[("trace_dev", 1e-8), ("hermiticity", 1e-8)],
            Command::Scaling => &[("slope_min", 5.0), ("slope_max", 7.0)],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    command: Option<String>,
    seed: Option<u64>,
    samples: Option<usize>,
    output_dir: Option<PathBuf>,
    lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBath {
    statistics: Option<String>,
    energies: Option<Vec<f64>>,
    g: Option<Vec<Vec<f64>>>,
    beta: Option<f64>,
    n_max: Option<usize>,
    random_modes: Option<usize>,
    omega: Option<Vec<f64>>,
    c: Option<Vec<f64>>,
    m: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    epsilon: Option<f64>,
    delta: Option<f64>,
    initial: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t0: Option<f64>,
    tf: Option<f64>,
    steps: Option<usize>,
    memory: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    bath: RawBath,
    system: Option<RawSystem>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

/// Bath section after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum BathConfig {
    Bilinear(BathSpec),
    /// Seeded random bilinear bath with this many modes.
    Random {
        modes: usize,
        statistics: Statistics,
        n_max: usize,
    },
    Linear(LinearBoseBathSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub bath: BathConfig,
    pub system: Option<SystemSpec>,
    pub grid: TimeGrid,
    pub memory: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub output_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn missing(section: &str, key: &str) -> Error {
    Error::Config(format!("missing `{section}.{key}`"))
}

fn parse_statistics(s: &str) -> Result<Option<Statistics>> {
    match s {
        "fermi" => Ok(Some(Statistics::Fermi)),
        "bose_bilinear" => Ok(Some(Statistics::BoseBilinear)),
        "bose_linear" => Ok(None),
        other => {
            Err(Error::Config(format!("`bath.statistics` = `{other}` is not one of fermi, bose_bilinear, bose_linear")))
        }
    }
}

fn build_bath(raw: RawBath, command: Command) -> Result<BathConfig> {
    let statistics = parse_statistics(raw.statistics.as_deref().unwrap_or("fermi"))?;
    let Some(statistics) = statistics else {
        if command != Command::Kernels {
            return Err(Error::Config(format!(
                "bath.statistics = bose_linear is only valid for `kernels`, not `{command}`"
            )));
        }
        for (key, present) in
            [("energies", raw.energies.is_some()), ("g", raw.g.is_some()), ("random_modes", raw.random_modes.is_some())]
        {
            if present {
                return Err(Error::Config(format!("`bath.{key}` does not apply to a bose_linear bath")));
            }
        }
        let beta = raw.beta.ok_or_else(|| missing("bath", "beta"))?;
        return Ok(BathConfig::Linear(LinearBoseBathSpec::new(
            raw.omega.ok_or_else(|| missing("bath", "omega"))?,
            raw.c.ok_or_else(|| missing("bath", "c"))?,
            raw.m.ok_or_else(|| missing("bath", "m"))?,
            beta,
        )?));
    };
    for (key, present) in [("omega", raw.omega.is_some()), ("c", raw.c.is_some()), ("m", raw.m.is_some())] {
        if present {
            return Err(Error::Config(format!("`bath.{key}` only applies to a bose_linear bath")));
        }
    }
    let n_max = match (statistics, raw.n_max) {
        (Statistics::Fermi, Some(_)) => return Err(Error::Config("`bath.n_max` only applies to bosonic baths".into())),
        (Statistics::Fermi, None) => 1,
        (Statistics::BoseBilinear, n) => n.ok_or_else(|| missing("bath", "n_max"))?,
    };
    if let Some(modes) = raw.random_modes {
        if raw.energies.is_some() || raw.g.is_some() || raw.beta.is_some() {
            return Err(Error::Config("`bath.random_modes` excludes explicit energies, g and beta".into()));
        }
        if modes == 0 {
            return Err(Error::Config("`bath.random_modes` must be >= 1".into()));
        }
        return Ok(BathConfig::Random { modes, statistics, n_max });
    }
    let energies = raw.energies.ok_or_else(|| missing("bath", "energies"))?;
    let rows = raw.g.ok_or_else(|| missing("bath", "g"))?;
    let m = energies.len();
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("`bath.g` must be a {m}x{m} array")));
    }
    let g = DMatrix::from_fn(m, m, |k, l| rows[k][l]);
    let beta = raw.beta.ok_or_else(|| missing("bath", "beta"))?;
    Ok(BathConfig::Bilinear(BathSpec::new(statistics, energies, g, beta, n_max)?))
}

fn build_system(raw: RawSystem) -> Result<SystemSpec> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let rho0 = match raw.initial.as_deref().unwrap_or("up") {
        "up" => Qubit::new(one, zero, zero, zero),
        "down" => Qubit::new(zero, zero, zero, one),
        "plus" => Qubit::new(half, half, half, half),
        "mixed" => Qubit::new(half, zero, zero, half),
        other => {
            return Err(Error::Config(format!("`system.initial` = `{other}` is not one of up, down, plus, mixed")))
        }
    };
    SystemSpec::new(
        raw.epsilon.ok_or_else(|| missing("system", "epsilon"))?,
        raw.delta.ok_or_else(|| missing("system", "delta"))?,
        rho0,
    )
}

/// Parse and validate a configuration for `command`.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        Error::ConfigParse { line, message: e.message().to_string() }
    })?;

    if let Some(c) = &raw.run.command {
        let declared: Command = c.parse()?;
        if declared != command {
            return Err(Error::Config(format!("`run.command` is `{declared}` but `{command}` was requested")));
        }
    }

    let bath = build_bath(raw.bath, command)?;
    let system = match (command, raw.system) {
        (Command::Dynamics | Command::Scaling, Some(s)) => Some(build_system(s)?),
        (Command::Dynamics | Command::Scaling, None) => return Err(Error::Config("missing `[system]` section".into())),
        (_, Some(_)) => return Err(Error::Config(format!("`[system]` does not apply to `{command}`"))),
        (_, None) => None,
    };

    let (t0_default, tf_default, steps_default) = match command {
        Command::Kernels => (0.0, 10.0, 100),
        Command::Corr | Command::G4check | Command::Pairing => (0.0, 5.0, 1),
        Command::Dynamics | Command::Scaling => (0.0, 2.0, 400),
    };
    let grid = TimeGrid::new(
        raw.grid.t0.unwrap_or(t0_default),
        raw.grid.tf.unwrap_or(tf_default),
        raw.grid.steps.unwrap_or(steps_default),
    )?;

    let mut tolerances: BTreeMap<String, f64> =
        command.default_tolerances().iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (key, value) in raw.tolerances {
        if !tolerances.contains_key(&key) {
            return Err(Error::Config(format!("unknown tolerance `{key}` for `{command}`")));
        }
        if !value.is_finite() {
            return Err(Error::Config(format!("tolerance `{key}` must be finite")));
        }
        tolerances.insert(key, value);
    }

    let lambdas = raw.run.lambdas.unwrap_or_else(|| vec![0.05, 0.1, 0.2]);
    if command == Command::Scaling && (lambdas.len() < 2 || lambdas.iter().any(|l| l.is_nan() || *l <= 0.0)) {
        return Err(Error::Config("`run.lambdas` needs at least two positive values".into()));
    }
    let samples = raw.run.samples.unwrap_or(match command {
        Command::Kernels | Command::Dynamics | Command::Scaling => 1,
        Command::Corr => 50,
        Command::G4check => 100,
        Command::Pairing => 20,
    });
    if samples == 0 {
        return Err(Error::Config("`run.samples` must be >= 1".into()));
    }

    Ok(RunConfig {
        command,
        bath,
        system,
        grid,
        memory: raw.grid.memory,
        seed: raw.run.seed.unwrap_or(DEFAULT_SEED),
        samples,
        lambdas,
        output_dir: raw.run.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
        tolerances,
    })
}
