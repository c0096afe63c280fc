//! `shutoff`: fit, solve, advise, simulate and report for shutoff and
//! critical-peak-pricing schedules.

/// Writes a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Writes to stdout without a newline, ignoring a closed pipe.
macro_rules! say_raw {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::AdviseArgs;
use crate::config::RunConfig;
use crate::failure::{Failure, Outcome, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "shutoff", version, about = "Event scheduling under weather uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory; defaults to the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize training data and estimate the transition (and demand) model.
    Fit(Common),
    /// Solve the scenario's dynamic program and store the decision table.
    Solve(Common),
    /// Evaluate one day's decision from raw observations.
    Advise {
        #[command(flatten)]
        common: Common,
        /// Forward day being decided, 1-based.
        #[arg(long)]
        day: usize,
        /// Decision of the previous day (0 or 1).
        #[arg(long = "prev-u", default_value_t = 0)]
        prev_u: u8,
        /// Events left (scenario 1 and cpp).
        #[arg(long = "budget-left")]
        budget_left: Option<usize>,
        /// Raw readings of the latest day, comma-separated in column order.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        obs: Vec<f64>,
        /// Date of the readings, for state spaces with day types.
        #[arg(long)]
        date: Option<chrono::NaiveDate>,
        /// Current expected-cost threshold (scenario 3); defaults to the cap.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Monte Carlo comparison of the policies on simulated seasons.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulated seasons; defaults to the config's `years`.
        #[arg(long)]
        years: Option<usize>,
        /// Seed; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of simulated seasons whose daily traces are written.
        #[arg(long, default_value_t = 1)]
        traces: usize,
    },
    /// Per-year replay of the policies on the held-out test seasons.
    Report(Common),
}

fn load(common: &Common) -> Outcome<(RunConfig, PathBuf)> {
    let config = RunConfig::load(&common.config)?;
    let out = commands::output_dir(&config, common.out.clone());
    Ok((config, out))
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Fit(common) => {
            let (config, out) = load(&common)?;
            commands::fit(&config, &out)
        }
        Command::Solve(common) => {
            let (config, out) = load(&common)?;
            commands::solve(&config, &out)
        }
        Command::Advise {
            common,
            day,
            prev_u,
            budget_left,
            obs,
            date,
            alpha,
        } => {
            let (config, out) = load(&common)?;
            let args = AdviseArgs {
                day,
                prev_u,
                budget_left,
                obs,
                date,
                alpha,
            };
            say!("{}", commands::advise(&config, &out, &args)?);
            Ok(())
        }
        Command::Simulate {
            common,
            years,
            seed,
            traces,
        } => {
            let (config, out) = load(&common)?;
            let years = years.unwrap_or(config.years);
            let seed = seed.unwrap_or(config.seed);
            commands::simulate(&config, &out, years, seed, traces)
        }
        Command::Report(common) => {
            let (config, out) = load(&common)?;
            commands::report(&config, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
