//! `root-barrier`: solve Root barriers, check the scaling family and verify
//! the embedding by simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "root-barrier",
    version,
    about = "Root barriers for the Skorokhod embedding problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the obstacle problem for every lambda and write barrier_<lambda>.csv.
    Solve(RunArgs),
    /// Check r(x)/x^2 monotonicity, nesting and self-similarity of the family.
    FamilyCheck(RunArgs),
    /// Simulate hitting times of the family and run the statistical checks.
    VerifyEmbed(RunArgs),
    /// Solve the Volterra equation for a symmetric atom-free measure.
    Volterra(RunArgs),
    /// Render barrier CSV files as an SVG figure.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Comma-separated scale parameters (overrides `lambdas`).
    #[arg(long, value_name = "L1,L2,...", value_delimiter = ',', num_args = 1)]
    lambda: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Barrier CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output SVG file, or a directory to write barriers.svg into.
    #[arg(long, value_name = "PATH", default_value = "barriers.svg")]
    out: PathBuf,
    /// Scale parameter of each input, in order. Otherwise read from
    /// `barrier_<lambda>.csv` file names, defaulting to 1.
    #[arg(long, value_name = "L1,L2,...", value_delimiter = ',', num_args = 1)]
    lambda: Option<Vec<f64>>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Cfl(String),
    Numeric(String),
    /// A verification ran and did not pass.
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cfl(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Check(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Cfl(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn load(args: RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.override_with(args.lambda, args.seed, args.out)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::solve(&load(a)?),
        Command::FamilyCheck(a) => commands::family_check(&load(a)?),
        Command::VerifyEmbed(a) => commands::verify_embed(&load(a)?),
        Command::Volterra(a) => commands::volterra(&load(a)?),
        Command::Plot(a) => plot::run(&a.inputs, &a.out, a.lambda.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("root-barrier: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
