//! Report files: the JSON report, the per-atom table and the plot tables.
//! Every file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use nsdual_core::MarketTree;
use serde::Serialize;

use crate::error::RunError;
use crate::run::{Report, RunRecord};

pub const REPORT_FILE: &str = "report.json";
pub const ATOMS_FILE: &str = "atoms.csv";
pub const LADDER_FILE: &str = "ladder.csv";
pub const CURVE_FILE: &str = "dual_curve.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const MARKET_FILE: &str = "market.csv";
pub const ERROR_FILE: &str = "error.json";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunError::io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(|e| RunError::io(e.to_string()))?;
    tmp.persist(path).map_err(|e| RunError::io(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, RunError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| RunError::io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| RunError::io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| RunError::io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| RunError::io(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// `x, atom, prob, B, X*, Y*, U(X*-B), Ũ(Y*)`, one row per atom and capital.
pub fn atoms_table(runs: &[RunRecord]) -> Result<Vec<u8>, RunError> {
    table(
        &["x", "atom", "prob", "claim", "x_star", "y_star", "utility", "conjugate"],
        runs.iter().flat_map(|r| {
            r.atoms.iter().map(move |a| {
                vec![
                    num(r.x),
                    a.atom.to_string(),
                    num(a.prob),
                    num(a.claim),
                    num(a.x_star),
                    num(a.y_star),
                    num(a.utility),
                    num(a.conjugate),
                ]
            })
        }),
    )
}

pub fn ladder_table(runs: &[RunRecord]) -> Result<Vec<u8>, RunError> {
    table(
        &["x", "n", "v_n", "w_n"],
        runs.iter().flat_map(|r| {
            r.solve
                .truncation
                .iter()
                .flat_map(move |l| l.rungs.iter().map(move |g| vec![num(r.x), num(g.n), num(g.v_n), num(g.w_n)]))
        }),
    )
}

pub fn curve_table(runs: &[RunRecord]) -> Result<Vec<u8>, RunError> {
    table(
        &["x", "y", "v_tilde"],
        runs.iter()
            .flat_map(|r| r.dual_curve.iter().map(move |(y, v)| vec![num(r.x), num(*y), num(*v)])),
    )
}

pub fn scatter_table(runs: &[RunRecord]) -> Result<Vec<u8>, RunError> {
    table(
        &["x", "atom", "x_star", "y_star"],
        runs.iter().flat_map(|r| {
            r.atoms
                .iter()
                .map(move |a| vec![num(r.x), a.atom.to_string(), num(a.x_star), num(a.y_star)])
        }),
    )
}

/// `node, parent, prob, price_0, ...`.
pub fn market_table(tree: &MarketTree) -> Result<Vec<u8>, RunError> {
    let d = tree.num_assets();
    let mut header = vec![String::from("node"), String::from("parent"), String::from("prob")];
    header.extend((0..d).map(|i| format!("price_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(
        &header,
        tree.to_specs().iter().enumerate().map(|(i, s)| {
            let mut row = vec![i.to_string(), s.parent.map(|p| p.to_string()).unwrap_or_default(), num(s.prob)];
            row.extend(s.prices.iter().map(|v| num(*v)));
            row
        }),
    )
}

/// Plot tables: `(n, V_n, W_n)`, `(y, Ṽ(y))` and `(atom, X*, Y*)`. An
/// empty run list yields header-only files.
pub fn emit_plot_data(runs: &[RunRecord], dir: &Path) -> Result<(), RunError> {
    write_atomic(&dir.join(LADDER_FILE), &ladder_table(runs)?)?;
    write_atomic(&dir.join(CURVE_FILE), &curve_table(runs)?)?;
    write_atomic(&dir.join(SCATTER_FILE), &scatter_table(runs)?)?;
    Ok(())
}

/// Writes the report, the per-atom table, the market table and the plot
/// tables into `dir`.
pub fn write_report(report: &Report, tree: &MarketTree, dir: &Path) -> Result<(), RunError> {
    write_atomic(&dir.join(REPORT_FILE), &to_json(report)?)?;
    write_atomic(&dir.join(ATOMS_FILE), &atoms_table(&report.runs)?)?;
    write_atomic(&dir.join(MARKET_FILE), &market_table(tree)?)?;
    emit_plot_data(&report.runs, dir)
}
