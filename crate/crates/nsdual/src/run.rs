//! Executes a validated scenario. Pure computation; files are written by
//! [`crate::output`].

use nsdual_core::{
    admissible_class_audit, conjugate, dual_value_curve, indifference_price, shortfall_risk, solve, truncation_ladder, uniqueness_probe,
    validate_admissibility, AdmissibilityReport, AuditReport, ConjugateFunction, IndifferencePrice, NodeSpec, SolveOptions, SolveReport,
    Tolerances, UniquenessReport, UtilitySpec,
};
use serde::Serialize;

use crate::error::RunError;
use crate::scenario::{Task, Validated, SCHEMA_VERSION};

/// Random restarts used by the uniqueness probe of the duality task.
pub const UNIQUENESS_RESTARTS: usize = 4;
/// Points on the dual value curve.
pub const CURVE_POINTS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomRow {
    pub atom: usize,
    pub prob: f64,
    pub claim: f64,
    pub x_star: f64,
    pub y_star: f64,
    /// `U(X* - B)`.
    pub utility: f64,
    /// `Ũ(Y*)`.
    pub conjugate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub x: f64,
    pub solve: SolveReport,
    pub atoms: Vec<AtomRow>,
    /// `(y, Ṽ(y))` around `y*`.
    pub dual_curve: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortfall_risk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indifference: Option<IndifferencePrice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub name: String,
    pub task: Task,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub market: Vec<NodeSpec>,
    pub claim: Vec<f64>,
    pub utility: UtilitySpec,
    /// Admissibility of the utility; solutions outside the admissible class
    /// are still produced and verified.
    pub admissibility: AdmissibilityReport,
    pub passed: bool,
    pub failures: Vec<String>,
    pub runs: Vec<RunRecord>,
}

fn atom_rows(v: &Validated, u: &UtilitySpec, conj: &ConjugateFunction, r: &SolveReport) -> Vec<AtomRow> {
    let b = v.claim.payoff();
    (0..v.tree.num_atoms())
        .map(|w| AtomRow {
            atom: w,
            prob: v.tree.atom_probs()[w],
            claim: b[w],
            x_star: r.wealth[w],
            y_star: r.big_y[w],
            utility: u.value(r.wealth[w] - b[w]),
            conjugate: conj.value(r.big_y[w]),
        })
        .collect()
}

/// `y` grid on `(0, 2 y*]`, or `(0, 2]` when `y* = 0`.
pub fn curve_grid(y_star: f64) -> Vec<f64> {
    let c = if y_star > 0.0 { y_star } else { 1.0 };
    (1..=CURVE_POINTS).map(|k| 2.0 * c * k as f64 / CURVE_POINTS as f64).collect()
}

/// Largest violation of discrete convexity on a curve sampled at
/// increasing abscissae.
pub fn convexity_defect(curve: &[(f64, f64)]) -> f64 {
    curve
        .windows(3)
        .map(|w| {
            let (x0, f0) = w[0];
            let (x1, f1) = w[1];
            let (x2, f2) = w[2];
            let chord = f0 + (f2 - f0) * (x1 - x0) / (x2 - x0);
            f1 - chord
        })
        .fold(0.0f64, f64::max)
}

fn run_one(v: &Validated, u: &UtilitySpec, seed: u64, x: f64) -> Result<RunRecord, RunError> {
    let task = v.scenario.task;
    let opts = SolveOptions {
        tol: v.tol.clone(),
        cross_check: true,
        ..Default::default()
    };
    let conj = conjugate(u).map_err(RunError::from_core_solver)?;
    let solve_report = if task == Task::Shortfall {
        let loss = v.scenario.loss.as_ref().expect("validated");
        shortfall_risk(&v.tree, loss, &v.claim, x, &opts)
            .map_err(RunError::from_core_solver)?
            .report
    } else {
        solve(&v.tree, u, &v.claim, x, &opts).map_err(RunError::from_core_solver)?
    };
    let mut failures: Vec<String> = solve_report.verification.failures.clone();
    let mut dual_curve = dual_value_curve(&v.tree, &conj, &v.claim, &curve_grid(solve_report.y)).map_err(RunError::from_core_solver)?;
    // Ṽ is +∞ past the domain edge; keep the finite part
    dual_curve.retain(|p| p.1.is_finite());
    let scale = 1.0 + dual_curve.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    if convexity_defect(&dual_curve) > 1e-9 * scale {
        failures.push(String::from("dual value curve is not convex"));
    }
    let mut rec = RunRecord {
        x,
        atoms: atom_rows(v, u, &conj, &solve_report),
        dual_curve,
        uniqueness: None,
        shortfall_risk: None,
        indifference: None,
        audit: None,
        failures: Vec::new(),
        solve: solve_report,
    };
    match task {
        Task::Duality => {
            rec.uniqueness =
                Some(uniqueness_probe(&v.tree, u, &v.claim, x, UNIQUENESS_RESTARTS, seed, &v.tol).map_err(RunError::from_core_solver)?);
        }
        Task::Shortfall => rec.shortfall_risk = Some(-rec.solve.primal_value),
        Task::Indifference => {
            let p = indifference_price(&v.tree, u, &v.claim, x, v.tol.indifference).map_err(RunError::from_core_solver)?;
            let (lo, hi) = p.no_arbitrage;
            let slack = 10.0 * v.tol.indifference * (1.0 + lo.abs().max(hi.abs()));
            if !(p.price >= lo - slack && p.price <= hi + slack) {
                failures.push(format!(
                    "indifference price {} outside the no-arbitrage interval [{lo}, {hi}]",
                    p.price
                ));
            }
            rec.indifference = Some(p);
        }
        Task::Ladder => {
            let l = truncation_ladder(&v.tree, u, &v.claim, x, &v.ladder, &v.tol).map_err(RunError::from_core_solver)?;
            if !l.monotone {
                failures.push(String::from("truncation ladder W_n is not nondecreasing"));
            }
            if !l.bounded_by_w {
                failures.push(String::from("truncation ladder exceeds W"));
            }
            rec.solve.truncation = Some(l);
        }
        Task::Audit => {
            let a = admissible_class_audit(&rec.solve, &v.tree, &conj, &v.claim, &v.tol).map_err(RunError::from_core_solver)?;
            failures.extend(a.failures.iter().cloned());
            rec.audit = Some(a);
        }
    }
    rec.failures = failures;
    Ok(rec)
}

/// Runs every initial capital of the scenario. `seed` overrides the
/// scenario's own seed.
pub fn run_scenario(v: &Validated, name: &str, seed: Option<u64>) -> Result<Report, RunError> {
    let seed = seed.unwrap_or(v.scenario.seed);
    let u = match v.scenario.task {
        Task::Shortfall => v
            .scenario
            .loss
            .as_ref()
            .expect("validated")
            .to_utility()
            .map_err(RunError::from_core_validation)?,
        _ => v.scenario.utility.clone().expect("validated"),
    };
    let runs = v.xs.iter().map(|&x| run_one(v, &u, seed, x)).collect::<Result<Vec<_>, _>>()?;
    let failures: Vec<String> = runs
        .iter()
        .flat_map(|r| r.failures.iter().map(move |f| format!("x = {}: {f}", r.x)))
        .collect();
    Ok(Report {
        schema: SCHEMA_VERSION,
        name: name.to_string(),
        task: v.scenario.task,
        seed,
        tolerances: v.tol.clone(),
        market: v.tree.to_specs(),
        claim: v.claim.payoff().to_vec(),
        admissibility: validate_admissibility(&u),
        utility: u,
        passed: failures.is_empty(),
        failures,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convexity_defect_detects_concave_kinks() {
        let convex: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, (k as f64 - 4.0).powi(2))).collect();
        assert_eq!(convexity_defect(&convex), 0.0);
        let concave: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, -(k as f64).powi(2))).collect();
        assert!(convexity_defect(&concave) > 0.5);
    }

    #[test]
    fn curve_grid_is_positive_and_increasing() {
        for y in [0.0, 0.3, 5.0] {
            let g = curve_grid(y);
            assert_eq!(g.len(), CURVE_POINTS);
            assert!(g[0] > 0.0 && g.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
