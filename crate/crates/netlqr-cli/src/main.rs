//! `netlqr`: experiment runner for spectrally decomposed network LQR.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure,
//! 3 verification gap exceeded.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn validation(msg: String) -> Self {
        Self { code: 1, msg }
    }

    pub fn gap(msg: String) -> Self {
        Self { code: 3, msg }
    }
}

impl From<netlqr::Error> for CliError {
    fn from(e: netlqr::Error) -> Self {
        use netlqr::Error::*;
        let code = match &e {
            NonFiniteBlowup { .. } | StepTooLarge(_) | NoConvergence(_)
            | TimeOutOfRange { .. } | MissingRiccatiSamples => 2,
            _ => 1,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "netlqr", version, about = "Decomposed LQR control for networked systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral decomposition of the coupling matrix and the initial state.
    Decompose(RunArgs),
    /// Solve the decoupled Riccati equations and emit the gain schedule.
    Synthesize(RunArgs),
    /// Simulate the optimally controlled network.
    Simulate(RunArgs),
    /// Simulate and compare against the centralized Riccati oracle.
    Verify(RunArgs),
    /// Optimal consensus protocol synthesis and simulation.
    Consensus(RunArgs),
    /// Time the decomposed solves against the centralized solve.
    Bench(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the configured noise/initial-state seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the configured number of Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Also emit SVG line charts of the decomposed states and controls.
    #[arg(long)]
    pub svg: bool,
    /// Verification tolerance on the relative cost gap.
    #[arg(long)]
    pub tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose(args) => run::run_decompose(args),
        Command::Synthesize(args) => run::run_synthesize(args),
        Command::Simulate(args) => run::run_simulate(args),
        Command::Verify(args) => run::run_verify(args),
        Command::Consensus(args) => run::run_consensus(args),
        Command::Bench(args) => run::run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
