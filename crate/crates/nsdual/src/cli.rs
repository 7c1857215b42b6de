//! Driver behind the `nsdual` binary: one scenario file or a directory of
//! them, each written to its own output directory.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{RunError, EXIT_OK, EXIT_VERIFIER};
use crate::output::{to_json, write_atomic, write_report, ERROR_FILE};
use crate::run::run_scenario;
use crate::scenario::{Scenario, Task};

pub const OUT_DIR_ENV: &str = "NSDUAL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "nsdual-out";

#[derive(Debug, Clone, Default)]
pub struct CliOptions {
    pub out: Option<PathBuf>,
    pub tol: Vec<(String, f64)>,
    pub seed: Option<u64>,
    pub task: Option<Task>,
    /// Worker threads for directory runs; 0 picks the available parallelism.
    pub jobs: usize,
}

impl CliOptions {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(default_out_dir)
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub scenario: String,
    pub path: PathBuf,
    pub out_dir: PathBuf,
    pub exit_code: i32,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    scenario: &'a str,
    exit_code: i32,
    #[serde(flatten)]
    error: &'a RunError,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| String::from("scenario"))
}

fn execute(path: &Path, opts: &CliOptions, label: &mut String) -> Result<(bool, Vec<String>), RunError> {
    let mut scenario = Scenario::load(path)?;
    if let Some(t) = opts.task {
        scenario.task = t;
    }
    for (name, value) in &opts.tol {
        scenario.tolerances.insert(name.clone(), *value);
    }
    *label = scenario.label(Some(path));
    let v = scenario.validate()?;
    let report = run_scenario(&v, label, opts.seed)?;
    write_report(&report, &v.tree, &opts.out_dir().join(label.as_str()))?;
    Ok((report.passed, report.failures))
}

/// Runs one scenario file and writes its report (or `error.json`).
pub fn run_file(path: &Path, opts: &CliOptions) -> Outcome {
    let mut label = stem(path);
    let result = execute(path, opts, &mut label);
    let out_dir = opts.out_dir().join(&label);
    let (exit_code, status, reason) = match result {
        Ok((true, _)) => (EXIT_OK, "ok", None),
        Ok((false, failures)) => (EXIT_VERIFIER, "verifier_failed", Some(failures.join("; "))),
        Err(e) => {
            let code = e.exit_code();
            let record = ErrorRecord {
                scenario: &label,
                exit_code: code,
                error: &e,
            };
            let written = to_json(&record).and_then(|bytes| write_atomic(&out_dir.join(ERROR_FILE), &bytes));
            let reason = match written {
                Ok(()) => e.message.clone(),
                Err(w) => format!("{}; could not write {ERROR_FILE}: {}", e.message, w.message),
            };
            let status = match e.kind {
                crate::error::ErrorKind::Parse => "parse_error",
                crate::error::ErrorKind::Validation => "validation_error",
                crate::error::ErrorKind::Solver => "solver_error",
                crate::error::ErrorKind::Io => "io_error",
            };
            (code, status, Some(reason))
        }
    };
    Outcome {
        scenario: label,
        path: path.to_path_buf(),
        out_dir,
        exit_code,
        status,
        reason,
    }
}

/// `*.json` files of a directory in lexicographic order.
pub fn scenario_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs scenarios concurrently, one worker per scenario up to `opts.jobs`;
/// outcomes come back in input order.
pub fn run_batch(paths: &[PathBuf], opts: &CliOptions) -> Vec<Outcome> {
    let jobs = if opts.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        opts.jobs
    };
    let jobs = jobs.min(paths.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new(vec![None; paths.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = paths.get(i) else { break };
                let o = run_file(p, opts);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(o);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect()
}

/// The most severe exit code: solver > validation > parse > verifier > ok.
pub fn combined_exit_code(outcomes: &[Outcome]) -> i32 {
    outcomes.iter().map(|o| o.exit_code).max().unwrap_or(EXIT_OK)
}
