//! Command-line front end: `fvkernel <command> --config <path> [--output <dir>] [--seed <n>]`.
//!
//! Every run writes `result.csv` and `summary.json` to the output directory.
//! Exit status is 0 when every tolerance passes, 1 when any fails, and 2 on
//! configuration or I/O errors.

mod config;
mod output;
mod run;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{parse_config, BathConfig, Command, RunConfig, DEFAULT_OUTPUT, DEFAULT_SEED};
pub use output::{format_float, summary_json, write_artifacts, Cell, Scalar, Table};
pub use run::{run, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Kernels,
    Corr,
    G4check,
    Pairing,
    Dynamics,
    Scaling,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Kernels => Command::Kernels,
            CommandArg::Corr => Command::Corr,
            CommandArg::G4check => Command::G4check,
            CommandArg::Pairing => Command::Pairing,
            CommandArg::Dynamics => Command::Dynamics,
            CommandArg::Scaling => Command::Scaling,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fvkernel", version, about = "Influence kernels, bath correlations and reduced qubit dynamics")]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `run.output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Random seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

/// Parse arguments, run, write artifacts and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            println!(
                "{}: {}",
                Command::from(cli.command),
                if outcome.passed { "pass" } else { "FAIL (tolerance violated)" }
            );
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> crate::Result<Outcome> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| crate::Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text, cli.command.into())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    let outcome = run(&cfg)?;
    write_artifacts(&cfg.output_dir, &outcome.table, &outcome.summary)?;
    Ok(outcome)
}
