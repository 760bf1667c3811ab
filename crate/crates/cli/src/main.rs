mod commands;
mod config;
mod error;

use clap::{Args, Parser, Subcommand};
use config::{load, parse_ties, FitConfig, SimConfig, FULL_SCALE_REPS};
use error::{CliError, Result};
use pairrank::EstimatorKind;
use pairrank_simlab::Method;
use std::path::PathBuf;
use std::process::ExitCode;

/// Semiparametric transformation model fits by pairwise rank likelihood.
#[derive(Parser)]
#[command(name = "pairrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit estimators to a CSV file (columns y, x1..xp, optional delta).
    Fit(FitArgs),
    /// Fit with bootstrap percentile intervals (200 replicates unless set).
    Bootstrap(FitArgs),
    /// Run a Monte Carlo study described by a TOML file.
    Simulate(SimArgs),
    /// Check the fast implementations against their literal definitions.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct FitArgs {
    csv: PathBuf,
    /// Flat TOML file with fit settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated list of prl, score, pdr4, cox.
    #[arg(long, value_delimiter = ',')]
    estimator: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    /// strict or tie_aware.
    #[arg(long)]
    ties: Option<String>,
    /// Bootstrap replicates.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Write <command>.json here instead of printing to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Flat TOML file with the design and study settings.
    config: Option<PathBuf>,
    /// Comma-separated list of prl, score, pdr4, cox, oracle.
    #[arg(long, value_delimiter = ',')]
    estimator: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    ties: Option<String>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Use the paper's 1000 replicates.
    #[arg(long, conflicts_with = "reps")]
    full_scale: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_list<T: std::str::FromStr>(items: &[String]) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    items
        .iter()
        .map(|s| s.trim().parse::<T>().map_err(|e| CliError::Config(e.to_string().trim_start_matches("invalid configuration: ").to_string())))
        .collect()
}

fn fit_config(args: &FitArgs, bootstrap_default: usize) -> Result<FitConfig> {
    let mut c: FitConfig = load(args.config.as_deref())?;
    if let Some(e) = &args.estimator {
        c.estimators = parse_list::<EstimatorKind>(e)?;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.starts {
        c.starts = v;
    }
    if let Some(v) = &args.ties {
        c.ties = parse_ties(v)?;
    }
    if let Some(v) = args.alpha {
        c.alpha = v;
    }
    match args.bootstrap {
        Some(v) => c.bootstrap = v,
        None if c.bootstrap == 0 => c.bootstrap = bootstrap_default,
        None => {}
    }
    Ok(c)
}

fn sim_config(args: &SimArgs) -> Result<SimConfig> {
    let mut c: SimConfig = load(args.config.as_deref())?;
    if let Some(e) = &args.estimator {
        c.methods = parse_list::<Method>(e)?;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.starts {
        c.starts = v;
    }
    if let Some(v) = &args.ties {
        c.ties = parse_ties(v)?;
    }
    if let Some(v) = args.bootstrap {
        c.bootstrap = v;
    }
    if let Some(v) = args.alpha {
        c.alpha = v;
    }
    if let Some(v) = args.reps {
        c.reps = v;
    }
    if args.full_scale {
        c.reps = FULL_SCALE_REPS;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let c = fit_config(&args, 0)?;
            commands::cmd_fit("fit", &args.csv, &c, args.out_dir.as_ref()).map(drop)
        }
        Command::Bootstrap(args) => {
            let c = fit_config(&args, 200)?;
            commands::cmd_fit("bootstrap", &args.csv, &c, args.out_dir.as_ref()).map(drop)
        }
        Command::Simulate(args) => {
            let c = sim_config(&args)?;
            commands::cmd_simulate(&c, &args.out_dir).map(drop)
        }
        Command::Selftest { seed } => commands::cmd_selftest(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pairrank: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
