use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nsdual::cli::{combined_exit_code, run_batch, scenario_files, CliOptions, OUT_DIR_ENV};
use nsdual::error::EXIT_PARSE;
use nsdual::scenario::{parse_tolerance, Task};

/// Solve utility maximization scenarios on finite event trees and write
/// verified primal/dual reports.
#[derive(Debug, Parser)]
#[command(name = "nsdual", version)]
struct Args {
    /// Scenario file, or a directory whose *.json files are run concurrently.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; one subdirectory per scenario.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Tolerance override, e.g. --tol solve=1e-7 (repeatable).
    #[arg(long = "tol", value_parser = parse_tolerance)]
    tol: Vec<(String, f64)>,
    /// Seed for randomized probes; overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Task override: duality, shortfall, indifference, ladder or audit.
    #[arg(long)]
    task: Option<Task>,
    /// Worker threads for directory runs (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_PARSE as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let opts = CliOptions {
        out: args.out,
        tol: args.tol,
        seed: args.seed,
        task: args.task,
        jobs: args.jobs,
    };
    let paths = if args.scenario.is_dir() {
        match scenario_files(&args.scenario) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("{}: {e}", args.scenario.display());
                return ExitCode::from(EXIT_PARSE as u8);
            }
        }
    } else {
        vec![args.scenario]
    };
    let outcomes = run_batch(&paths, &opts);
    for o in &outcomes {
        println!("{}", serde_json::to_string(o).expect("outcome serializes"));
    }
    ExitCode::from(combined_exit_code(&outcomes) as u8)
}
