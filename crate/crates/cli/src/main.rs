mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::config::Defaults;

/// Assign Poisson-sized jobs to identical machines, minimizing the expected
/// maximum load.
#[derive(Debug, Parser)]
#[command(name = "pbalance", version)]
struct Cli {
    /// JSON defaults document (keys: epsilon, tail_tol, seed, trials,
    /// algorithm). Command-line flags override it.
    #[arg(long, global = true, env = "PB_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and write the assignment document.
    Solve(SolveArgs),
    /// Run every algorithm on one instance and print a CSV table.
    Compare(CompareArgs),
    /// Run a verification battery and write its rows as CSV.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ptas,
    Greedy,
    DetMean,
    Dp,
    Brute,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ptas => "ptas",
            Algorithm::Greedy => "greedy",
            Algorithm::DetMean => "det-mean",
            Algorithm::Dp => "dp",
            Algorithm::Brute => "brute",
        }
    }
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    /// Instance file: {"machines": m, "jobs": [rates...]}.
    #[arg(long)]
    input: PathBuf,
    /// Accuracy parameter in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// [default: ptas]
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Seed of the sampled fallback when the exact value cannot be certified. [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation tolerance of the exact expected maximum. [default: 1e-9]
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Write the document here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    /// Accuracy parameter in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed of the Monte Carlo columns. [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per algorithm. [default: 100000]
    #[arg(long)]
    trials: Option<u64>,
    /// Truncation tolerance of the exact expected maximum. [default: 1e-9]
    #[arg(long)]
    tail_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemmas,
    Appendix,
    Identities,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input: exit 1.
    Input(String),
    /// The solver or a guard refused: exit 2.
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<pbalance::Error> for CliError {
    fn from(e: pbalance::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let defaults = match &cli.config {
        Some(path) => Defaults::load(path)?,
        None => Defaults::default(),
    };
    match cli.command {
        Command::Solve(a) => commands::solve(commands::SolveOptions {
            input: a.input,
            epsilon: defaults.epsilon(a.epsilon)?,
            algorithm: a.algorithm.or(defaults.algorithm).unwrap_or(Algorithm::Ptas),
            seed: a.seed.or(defaults.seed).unwrap_or(config::SEED),
            tail_tol: a.tail_tol.or(defaults.tail_tol).unwrap_or(config::TAIL_TOL),
            output: a.output,
        }),
        Command::Compare(a) => commands::compare(commands::CompareOptions {
            input: a.input,
            epsilon: defaults.epsilon(a.epsilon)?,
            seed: a.seed.or(defaults.seed).unwrap_or(config::SEED),
            trials: a.trials.or(defaults.trials).unwrap_or(config::TRIALS),
            tail_tol: a.tail_tol.or(defaults.tail_tol).unwrap_or(config::TAIL_TOL),
        }),
        Command::Verify(a) => commands::verify(
            match a.suite {
                Suite::Lemmas => commands::VerifySuite::Lemmas,
                Suite::Appendix => commands::VerifySuite::Appendix,
                Suite::Identities => commands::VerifySuite::Identities,
            },
            a.out,
        ),
    }
}

fn main() -> ExitCode {
    // usage errors are input errors (exit 1); exit 2 is reserved for the solver
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(msg) | CliError::Solver(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.code())
        }
    }
}
