//! Configuration-driven front end for the bifurcation UQ pipeline.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures (the diagnostic names the failing subsystem).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "acuq",
    version,
    about = "Forward UQ for bifurcations of the stochastic Allen-Cahn equation"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bound on concurrent collocation solves. Output is byte-identical
    /// for every thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Means, variances, samples, pdfs, and cdfs of the random bifurcation
    /// points.
    Bifpoints,
    /// Mean bifurcation curves, sampled realizations, densities along the
    /// branch, and solution profiles.
    Branch,
    /// Root-mean-square convergence of the gPC surrogates against a
    /// reference budget.
    Converge,
}

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Numerical(acuq::Error),
    Io(std::io::Error),
}

impl From<acuq::Error> for AppError {
    fn from(err: acuq::Error) -> Self {
        AppError::Numerical(err)
    }
}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> Self {
        AppError::Io(err)
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "config error: {msg}"),
            AppError::Numerical(err) => write!(f, "numerical failure: {err}"),
            AppError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| AppError::Config(format!("cannot configure {threads} threads: {e}")))?;
    }
    let config_path = cli
        .config
        .ok_or_else(|| AppError::Config("--config <file> is required".into()))?;
    let config = RunConfig::load(&config_path).map_err(AppError::Config)?;
    let study = config
        .into_study(cli.out, cli.seed)
        .map_err(AppError::Config)?;
    match cli.command {
        Command::Bifpoints => commands::cmd_bifpoints(&study),
        Command::Branch => commands::cmd_branch(&study),
        Command::Converge => commands::cmd_converge(&study),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            match err {
                AppError::Config(_) | AppError::Io(_) => ExitCode::from(2),
                AppError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}
