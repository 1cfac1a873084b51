use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use walker_guidance::report::write_report;
use walker_guidance::scenario::{run_scenario, Scenario, ScenarioError};
use walker_guidance::sim::GuidanceMode;
use walker_guidance::StudyShape;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "walker-sim",
    version,
    about = "Run simulated walker guidance studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (mode, path, trial) cell of a scenario and write the report.
    Run(RunArgs),
    /// Print the default scenario as JSON.
    DefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory, overriding the scenario's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario seed, overriding the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep only these guidance modes.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<GuidanceMode>>,
    /// Keep only these path shapes (I, C, S).
    #[arg(long, value_delimiter = ',')]
    paths: Option<Vec<StudyShape>>,
    /// Trials per cell, overriding the scenario's.
    #[arg(long)]
    trials: Option<usize>,
}

fn load(args: &RunArgs) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut scenario =
        Scenario::parse(&text)?.filtered(args.modes.as_deref(), args.paths.as_deref());
    if let Some(out) = &args.out {
        scenario.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(trials) = args.trials {
        scenario.trials_per_cell = trials;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn run(args: RunArgs) -> ExitCode {
    let scenario = match load(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let started = Instant::now();
    let records = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: trial failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    log::info!("{} trials in {:.2?}", records.len(), started.elapsed());

    let incomplete = records.iter().filter(|r| !r.metrics.complete).count();
    if incomplete > 0 {
        log::warn!("{incomplete} trials timed out before the end of their path");
    }

    match write_report(&scenario.output_dir, &records) {
        Ok(summary) => {
            println!(
                "{} trials, {} cells, {} files written to {}",
                summary.trials,
                summary.cells.len(),
                summary.files.len(),
                scenario.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", scenario.output_dir.display());
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::DefaultConfig => {
            println!("{}", Scenario::default().to_json());
            ExitCode::SUCCESS
        }
    }
}
