//! Command-line front end for configuration-driven simulation runs.
//!
//! A run is described by a JSON config file (`--config`), by command-line
//! flags, or by both; flags override file fields. Exit codes: 0 on success,
//! 2 for configuration errors (including failed validation), 3 for numerical
//! failures during the run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use impulsive::driver::{self, RunConfig};
use impulsive::error::Error;

/// Simulate mechanical systems with affine constraints through impulsive
/// boundary transitions.
#[derive(Debug, Parser)]
#[command(name = "impulsive", version, about)]
struct Cli {
    /// Built-in scenario name (see `--list-scenarios`).
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,

    /// JSON configuration file describing the run.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Initial configuration as comma-separated numbers, e.g. "-1,0,0,0,0".
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<String>,

    /// Initial momentum as comma-separated numbers, e.g. "1,0,0,0,0".
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,

    /// Side of the surface the motion starts on.
    #[arg(long, value_parser = ["minus", "plus"])]
    side: Option<String>,

    /// Impact mode.
    #[arg(long, value_parser = ["elastic", "inelastic"])]
    mode: Option<String>,

    /// End time of the run.
    #[arg(long = "t-end", allow_hyphen_values = true)]
    t_end: Option<f64>,

    /// Fixed integration step size.
    #[arg(long)]
    dt: Option<f64>,

    /// Directory receiving trajectory.csv and events.jsonl (default "out").
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Cap on simultaneously active branches.
    #[arg(long)]
    max_branches: Option<usize>,

    /// Check the configuration and report; write nothing.
    #[arg(long)]
    validate_only: bool,

    /// List the built-in scenario names and exit.
    #[arg(long)]
    list_scenarios: bool,
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                Error::InvalidConfig(format!(
                    "{what} entry {:?} is not a number",
                    part.trim()
                ))
            })
        })
        .collect()
}

/// Merge command-line flags over the configuration file, flags winning.
fn assemble(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &cli.scenario {
        config.scenario = Some(name.clone());
        config.system = None;
    }
    if let Some(text) = &cli.q0 {
        config.q0 = Some(parse_vector(text, "q0")?);
    }
    if let Some(text) = &cli.p0 {
        config.p0 = Some(parse_vector(text, "p0")?);
    }
    if let Some(side) = &cli.side {
        config.side = Some(side.clone());
    }
    if let Some(mode) = &cli.mode {
        config.mode = Some(mode.clone());
    }
    if let Some(t_end) = cli.t_end {
        config.t_end = Some(t_end);
    }
    if let Some(dt) = cli.dt {
        config.dt = Some(dt);
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = Some(dir.clone());
    }
    if let Some(max) = cli.max_branches {
        config.max_branches = Some(max);
    }
    Ok(config)
}

fn exit_for(error: &Error) -> ExitCode {
    if error.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.list_scenarios {
        for name in impulsive::scenarios::SCENARIO_NAMES {
            match impulsive::scenarios::by_name(name) {
                Ok(scenario) => println!("{name}: {}", scenario.description),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        return ExitCode::SUCCESS;
    }

    let config = match assemble(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };

    if cli.validate_only {
        let report = driver::validate(&config);
        print!("{}", report.render());
        return if report.passed() {
            println!("validation passed");
            ExitCode::SUCCESS
        } else {
            println!("validation failed");
            ExitCode::from(2)
        };
    }

    match driver::run(&config) {
        Ok(summary) => {
            println!(
                "wrote {} trajectory rows across {} branches ({} events, {} pruned)",
                summary.rows, summary.branches, summary.events, summary.pruned
            );
            println!("trajectory: {}", summary.trajectory_path.display());
            println!("events:     {}", summary.events_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
