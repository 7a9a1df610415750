//! Command-line front end: reads a scenario config, runs one command and
//! writes machine-readable results.

mod commands;
mod config;
mod error;
mod history;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::RunOptions;
use crate::config::Scenario;
use crate::error::{CliError, CliResult};
use crate::report::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "beamtrain", version, about = "Statistically ranked beam training: analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file for reports; output directory for simulate and compare.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides `mc.nTrials`.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Worker threads for Monte Carlo runs; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy, relative entropy and ranking of each side.
    Entropy {
        /// Read the PMFs from a beam history file instead of the config.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Pseudo-count per beam when deriving PMFs from a history.
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
    },
    /// Expected cost of ranked search and threshold cuts.
    Analyze,
    /// Broad-beam PMF and conditional PMFs.
    Hierarchy {
        /// Split the Tx beams into this many equal groups.
        #[arg(long)]
        groups: Option<usize>,
    },
    /// Monte Carlo run of the configured strategy.
    Simulate,
    /// Monte Carlo comparison of several strategies on shared realizations.
    Compare,
}

fn load(cli: &Cli) -> CliResult<Scenario> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    Scenario::load(path)
}

fn emit(cli: &Cli, text: &str, to_file: bool) -> CliResult<()> {
    match cli.out.as_deref().filter(|_| to_file) {
        Some(path) => fs::write(path, text).map_err(CliError::io(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::io(Path::new("<stdout>")))
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let opts = RunOptions { seed: cli.seed, trials: cli.trials, threads: cli.threads };
    let out_dir = || cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::Entropy { history: Some(path), smoothing } => {
            let report = commands::entropy_from_history(path, *smoothing)?;
            emit(cli, &report.render(cli.format), true)
        }
        Command::Entropy { history: None, .. } => emit(cli, &commands::entropy(&load(cli)?).render(cli.format), true),
        Command::Analyze => emit(cli, &commands::analyze(&load(cli)?)?.render(cli.format), true),
        Command::Hierarchy { groups } => {
            emit(cli, &commands::hierarchy(&load(cli)?, *groups)?.render(cli.format), true)
        }
        Command::Simulate => {
            let report = commands::simulate(&load(cli)?, &out_dir(), opts)?;
            emit(cli, &report.render(cli.format), false)
        }
        Command::Compare => {
            let report = commands::compare(&load(cli)?, &out_dir(), opts)?;
            emit(cli, &report.render(cli.format), false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEAMTRAIN_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamtrain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
