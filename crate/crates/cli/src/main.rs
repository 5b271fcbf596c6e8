use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dwelltime::Execution;
use dwelltime_cli::commands::{self, Context};
use dwelltime_cli::{CliError, ScenarioConfig};

/// Bohmian transmission, reflection and dwell times from flux formulas, with
/// an optional trajectory oracle.
#[derive(Parser)]
#[command(name = "dwelltime", version)]
struct Cli {
    /// Scenario TOML; the built-in double-barrier scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also run the Bohmian trajectory cross-check.
    #[arg(long, global = true)]
    oracle: bool,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random trajectory sampling (overrides `trajectories.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate and write density and probe fluxes.
    Simulate,
    /// Compute dwell times and their window curves.
    Dwell,
    /// Integrate and write a sample of Bohmian trajectories.
    Trajectories,
    /// Time the formula route against serial and parallel trajectories.
    Benchmark,
    /// Check invariants; exits 1 if any fails.
    Validate,
}

fn execution(threads: Option<usize>) -> Result<Execution, CliError> {
    match threads {
        Some(0) => Err(CliError::Config { field: "--threads".into(), message: "must be at least 1".into() }),
        Some(1) => Ok(Execution::Serial),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config { field: "--threads".into(), message: e.to_string() })?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Serial),
        None if Execution::parallel_available() => Ok(Execution::Parallel),
        None => Ok(Execution::Serial),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = ScenarioConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.trajectories.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output.dir = out;
    }
    let scenario = config.to_scenario()?;
    let ctx =
        Context { out: config.output.dir.clone(), config, scenario, oracle: cli.oracle, exec: execution(cli.threads)? };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Dwell => commands::dwell(&ctx),
        Command::Trajectories => commands::trajectories(&ctx),
        Command::Benchmark => commands::benchmark(&ctx),
        Command::Validate => commands::validate(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
