//! `embezzle <experiment> [--config PATH] [--seed N] [--out PATH] [--threads N]`
//! and `embezzle replay MANIFEST`.
//!
//! Exit status: 0 on success, 1 on I/O failure, 2 on a configuration error,
//! 3 on a numerical failure or a replay mismatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::experiments::{execute, replay, RunError};

#[derive(Debug, Parser)]
#[command(name = "embezzle", version, about = "Catalytic teleportation and distillation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; the manifest goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement fraction and average fidelity of input states.
    Fidelity(RunFlags),
    /// Minimal convex-split copy counts over random catalyst candidates.
    Nmin(RunFlags),
    /// Descent ratio over random initial states.
    Montecarlo(RunFlags),
    /// Embezzling-state protocol fidelity over Schmidt ranks.
    Embezzle(RunFlags),
    /// Exact and bounded embezzling catalyst consumption.
    Consumption(RunFlags),
    /// Qutrit region map for correlated and embezzling catalysts.
    QutritMap(RunFlags),
    /// Single-shot distillation plans.
    Distill(RunFlags),
    /// Re-run a manifest and compare the CSV checksum.
    Replay {
        manifest: PathBuf,
        /// Also write the regenerated CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn set_threads(n: Option<usize>) -> Result<(), RunError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(ConfigError::new("--threads", "must be positive").into());
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run_experiment(kind: ExperimentKind, flags: &RunFlags) -> Result<(), RunError> {
    set_threads(flags.threads)?;
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if flags.seed.is_some() {
        cfg.seed = flags.seed;
    }
    if flags.out.is_some() {
        cfg.output_path = flags.out.clone();
    }
    let resolved = cfg.resolve(kind)?;
    let manifest = execute(&resolved)?;
    println!(
        "{}: {} rows -> {} (sha256 {})",
        manifest.experiment,
        manifest.rows,
        manifest.output.display(),
        manifest.sha256
    );
    Ok(())
}

/// Parses `args` and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Fidelity(f) => run_experiment(ExperimentKind::Fidelity, f),
        Command::Nmin(f) => run_experiment(ExperimentKind::Nmin, f),
        Command::Montecarlo(f) => run_experiment(ExperimentKind::Montecarlo, f),
        Command::Embezzle(f) => run_experiment(ExperimentKind::Embezzle, f),
        Command::Consumption(f) => run_experiment(ExperimentKind::Consumption, f),
        Command::QutritMap(f) => run_experiment(ExperimentKind::QutritMap, f),
        Command::Distill(f) => run_experiment(ExperimentKind::Distill, f),
        Command::Replay { manifest, out, threads } => {
            match set_threads(*threads).and_then(|_| replay(manifest, out.as_deref())) {
                Ok(r) if r.matches() => {
                    println!("replay matches ({})", r.actual);
                    Ok(())
                }
                Ok(r) => {
                    eprintln!("replay mismatch: manifest {} vs regenerated {}", r.expected, r.actual);
                    return 3;
                }
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
