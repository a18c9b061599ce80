//! `ensemblekit` command-line interface.
//!
//! Exit codes: 0 success, 2 malformed configuration or arguments, 3 invalid
//! input data, 4 a method failed on valid data.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::analyze::{CalibrationArgs, ClusterStackArgs, DiversityArgs, SelectArgs, StackArgs};
use commands::compare::CompareArgs;
use commands::run::RunArgs;
use commands::synth::SynthArgs;
use error::{CliError, CliResult, EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "ensemblekit", version, about = "Heterogeneous classifier ensembles from prediction matrices")]
struct Cli {
    /// Worker threads; ENSEMBLEKIT_WORKERS takes precedence. Defaults to the
    /// available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train base learners under nested cross-validation and evaluate
    /// ensemble methods.
    Run(RunArgs),
    /// Greedy or CES selection trajectory.
    Select(SelectArgs),
    /// Logistic stacking over all columns or bag-averaged classifiers.
    Stack(StackArgs),
    /// Stacking within or across clusters of correlated classifiers.
    ClusterStack(ClusterStackArgs),
    /// Pairwise diversity against pair performance.
    Diversity(DiversityArgs),
    /// Brier score against AUC for base classifiers and selection steps.
    Calibration(CalibrationArgs),
    /// Friedman and Nemenyi tests over a methods x datasets table.
    Compare(CompareArgs),
    /// Write a synthetic prediction pool.
    Synth(SynthArgs),
}

fn workers(flag: Option<usize>) -> CliResult<Option<usize>> {
    match std::env::var("ENSEMBLEKIT_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("ENSEMBLEKIT_WORKERS={v:?} is not a positive integer"))),
        },
        Err(_) => match flag {
            Some(0) => Err(CliError::config("--workers must be positive")),
            other => Ok(other),
        },
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(n) = workers(cli.workers)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    match &cli.command {
        Command::Run(a) => commands::run::cmd_run(a),
        Command::Select(a) => commands::analyze::cmd_select(a),
        Command::Stack(a) => commands::analyze::cmd_stack(a),
        Command::ClusterStack(a) => commands::analyze::cmd_cluster_stack(a),
        Command::Diversity(a) => commands::analyze::cmd_diversity(a),
        Command::Calibration(a) => commands::analyze::cmd_calibration(a),
        Command::Compare(a) => commands::compare::cmd_compare(a),
        Command::Synth(a) => commands::synth::cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
