mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::config::FileConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "fishloc", version, about = "Overhead fisheye person localization toolkit")]
struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true, env = "FISHLOC_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the lens model to world/pixel correspondences.
    Calibrate(commands::calibrate::Args),
    /// Put predicted boxes on the floor.
    Localize(commands::localize::Args),
    /// Detection and localization metrics.
    Evaluate(commands::evaluate::Args),
    /// Write synthetic scenes, annotations and optional predictions.
    Simulate(commands::simulate::Args),
    /// Rotation-equivariance loss of replayed predictions.
    EquiCheck(commands::equi_check::Args),
}

/// Settings shared by every subcommand after merging flags and config.
pub struct Global {
    pub seed: u64,
    pub format: Format,
    pub config: FileConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(config.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot start {n} threads: {e}")))?;
    }
    let global = Global {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        format: cli.format.or(config.format).unwrap_or(Format::Text),
        config,
    };
    match cli.command {
        Command::Calibrate(a) => commands::calibrate::run(a, &global),
        Command::Localize(a) => commands::localize::run(a, &global),
        Command::Evaluate(a) => commands::evaluate::run(a, &global),
        Command::Simulate(a) => commands::simulate::run(a, &global),
        Command::EquiCheck(a) => commands::equi_check::run(a, &global),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::EXIT_VALIDATION),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
