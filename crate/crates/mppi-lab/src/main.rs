//! Command-line front end; the operations live in the library crate.
//!
//! Exit codes: 0 success, 1 failed acceptance criterion, 2 usage error
//! (including unknown scenarios), 3 numeric or oracle failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mppi_lab::commands;
use mppi_lab::config::{self, Overrides, RunConfig};
use mppi_lab::LabError;

#[derive(Parser)]
#[command(
    name = "mppi-lab",
    version,
    about = "Experiment runner for the path-integral control solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the shrinking solver and tabulate every iterate against the
    /// deterministic reference.
    Solve(RunArgs),
    /// Sweep the smoothing parameter and tabulate reference distances with
    /// fitted convergence orders.
    BiasSweep(RunArgs),
    /// Write normalized sampling-density curves over a grid (scalar
    /// scenarios only).
    PdfCurve(RunArgs),
    /// Run every solver and oracle on a two-step scenario and tabulate the
    /// optima, policy, and iterate path.
    Compare(RunArgs),
    /// Run the acceptance suite: one pass/fail line per criterion; exits 1
    /// if any fail.
    Accept(AcceptArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Registered scenario name.
    scenario: String,
    /// Monte Carlo samples per iteration.
    #[arg(long)]
    samples: Option<usize>,
    /// Shrinking iterations; 1 reproduces the single-shot solver.
    #[arg(long)]
    iterations: Option<usize>,
    /// Covariance shrink factor per iteration, in (0, 1).
    #[arg(long)]
    shrink_factor: Option<f64>,
    /// Base temperature.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Base per-step noise covariance scale.
    #[arg(long)]
    sigma0: Option<f64>,
    /// Master seed; identical seeds reproduce identical artifacts.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated sweep betas, e.g. 0.02,0.05,0.1.
    #[arg(long)]
    beta_list: Option<String>,
    /// Sweep mode: exact or sampled.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "mppi-lab-out")]
    out_dir: PathBuf,
    /// Scenario configuration file; individual flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AcceptArgs {
    /// Restrict to criteria whose names contain any of these substrings.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "mppi-lab-out")]
    out_dir: PathBuf,
}

fn resolve(args: &RunArgs) -> Result<RunConfig, LabError> {
    let overrides = Overrides {
        samples: args.samples,
        iterations: args.iterations,
        shrink_factor: args.shrink_factor,
        lambda0: args.lambda0,
        sigma0: args.sigma0,
        seed: args.seed,
        beta_list: args
            .beta_list
            .as_deref()
            .map(config::parse_beta_list)
            .transpose()?,
        mode: args.mode.as_deref().map(str::parse).transpose()?,
    };
    config::resolve(&args.scenario, args.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<usize, LabError> {
    match cli.command {
        Command::Solve(args) => {
            commands::cmd_solve(&resolve(&args)?, &args.out_dir)?;
            Ok(0)
        }
        Command::BiasSweep(args) => {
            commands::cmd_bias_sweep(&resolve(&args)?, &args.out_dir)?;
            Ok(0)
        }
        Command::PdfCurve(args) => {
            commands::cmd_pdf_curve(&resolve(&args)?, &args.out_dir)?;
            Ok(0)
        }
        Command::Compare(args) => {
            commands::cmd_compare(&resolve(&args)?, &args.out_dir)?;
            Ok(0)
        }
        Command::Accept(args) => {
            let reports = commands::cmd_accept(&args.out_dir, &args.only)?;
            Ok(reports.iter().filter(|r| !r.passed).count())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
