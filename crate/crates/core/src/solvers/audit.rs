//! The admissible-class audit: the optimal wealth process must be a
//! martingale under `Q*` and a supermartingale under every martingale
//! measure with finite dual expectation, and the value function of the
//! dual must satisfy a growth bound `Ṽ(λ y) ≤ C Ṽ(y)` for `λ ∈ [1/2, 2]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{inner_dual_value, SolveReport, Tolerances};
use crate::conjugate::ConjugateFunction;
use crate::error::{Error, Result};
use crate::market::{martingale_polytope, replicate, wealth_process, Claim, MarketTree, MartingalePolytope};

/// `λ` values of the growth certificate.
pub const GROWTH_LAMBDAS: [f64; 5] = [0.5, 0.75, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    /// Reason the audit did not run.
    pub skipped: Option<String>,
    pub martingale_residual: f64,
    /// Number of martingale measures (or local vertices when the global
    /// list was capped) checked for the supermartingale property.
    pub vertices_checked: usize,
    /// Largest `E_Q[X_{t+1} | F_t] - X_t` over checked measures and nodes.
    pub supermartingale_excess: f64,
    /// `(y, Ṽ(y))` on the audit grid.
    pub curve: Vec<(f64, f64)>,
    /// Added to `Ṽ` to make it positive on the grid before taking ratios.
    pub growth_shift: f64,
    /// Smallest `C` with `Ṽ(λ y) + s ≤ C (Ṽ(y) + s)` over the grid.
    pub growth_constant: f64,
    pub failures: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.failures.is_empty()
    }
}

/// `Ṽ(y) = inf_Q E[Ũ(y dQ/dP) - y B dQ/dP]` at each `y`; `+∞` where no
/// martingale measure keeps `y dQ/dP` in the conjugate domain.
pub fn dual_value_curve(tree: &MarketTree, conj: &ConjugateFunction, claim: &Claim, ys: &[f64]) -> Result<Vec<(f64, f64)>> {
    let poly = martingale_polytope(tree)?;
    ys.iter()
        .map(|&y| match inner_dual_value(tree, conj, &poly, claim, y) {
            Ok((v, _)) => Ok((y, v)),
            Err(Error::Infeasible(_)) => Ok((y, f64::INFINITY)),
            Err(e) => Err(e),
        })
        .collect()
}

fn excess_under(tree: &MarketTree, q: &[f64], values: &[f64]) -> f64 {
    let mass = tree.node_mass(q);
    let mut worst = f64::NEG_INFINITY;
    for v in tree.internal_nodes() {
        if !(mass[v] > 0.0) {
            continue;
        }
        let e: f64 = tree.node(v).children.iter().map(|&c| mass[c] * values[c]).sum::<f64>() / mass[v];
        worst = worst.max(e - values[v]);
    }
    worst
}

fn local_excess(tree: &MarketTree, poly: &MartingalePolytope, values: &[f64]) -> (usize, f64) {
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for v in tree.internal_nodes() {
        let Some(local) = poly.local_at(v) else { continue };
        for q in &local.vertices {
            count += 1;
            let e: f64 = local.children.iter().zip(q).map(|(&c, w)| w * values[c]).sum();
            worst = worst.max(e - values[v]);
        }
    }
    (count, worst)
}

/// Audits the optimal wealth of a solved instance with `Y* > 0`.
pub fn admissible_class_audit(
    report: &SolveReport,
    tree: &MarketTree,
    conj: &ConjugateFunction,
    claim: &Claim,
    tol: &Tolerances,
) -> Result<AuditReport> {
    let p = tree.atom_probs();
    let min_y = report.big_y.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(min_y > tol.positivity) || !(report.y > 0.0) {
        return Ok(AuditReport {
            skipped: Some(format!("min Y* = {min_y:e} is not strictly positive")),
            ..AuditReport::default()
        });
    }
    let poly = martingale_polytope(tree)?;
    let q: Vec<f64> = p.iter().zip(&report.big_y).map(|(p, y)| p * y / report.y).collect();
    let process = match &report.strategy {
        Some(s) => wealth_process(tree, report.x, s),
        None => {
            let rep = replicate(tree, &q, &report.wealth);
            wealth_process(tree, rep.cost, &rep.strategy)
        }
    };
    let mut failures = Vec::new();
    let mut martingale_residual = 0.0f64;
    {
        let mass = tree.node_mass(&q);
        for v in tree.internal_nodes() {
            if mass[v] > 0.0 {
                let e: f64 = tree.node(v).children.iter().map(|&c| mass[c] * process[c]).sum::<f64>() / mass[v];
                martingale_residual = martingale_residual.max((e - process[v]).abs());
            }
        }
    }
    if !(martingale_residual <= tol.martingale) {
        failures.push(format!("wealth is not a Q*-martingale: residual {martingale_residual:e}"));
    }

    let finite_dual = |qv: &[f64]| qv.iter().zip(p).all(|(q, p)| conj.value(q / p).is_finite());
    let (vertices_checked, supermartingale_excess) = match &poly.vertices {
        Some(vs) => {
            let mut count = 0;
            let mut worst = f64::NEG_INFINITY;
            for v in vs.iter().filter(|v| finite_dual(v)) {
                count += 1;
                worst = worst.max(excess_under(tree, v, &process));
            }
            (count, worst)
        }
        None => local_excess(tree, &poly, &process),
    };
    let scale = 1.0 + process.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if supermartingale_excess > tol.martingale * scale {
        failures.push(format!("wealth fails the supermartingale inequality by {supermartingale_excess:e}"));
    }

    // growth certificate on a geometric grid around y*
    let base: Vec<f64> = (-4..=4).map(|k| report.y * 2f64.powi(k)).collect();
    let mut ys: Vec<f64> = Vec::new();
    for &y in &base {
        for l in GROWTH_LAMBDAS {
            ys.push(y * l);
        }
    }
    ys.retain(|y| conj.in_domain(*y) || conj.right_endpoint().is_infinite());
    ys.sort_by(|a, b| a.total_cmp(b));
    ys.dedup();
    let curve = dual_value_curve(tree, conj, claim, &ys)?;
    let lookup = |y: f64| curve.iter().find(|c| c.0 == y).map(|c| c.1);
    let lowest = curve.iter().fold(f64::INFINITY, |m, c| m.min(c.1));
    let growth_shift = if lowest > 0.0 { 0.0 } else { 1.0 - lowest };
    let mut growth_constant = 0.0f64;
    for &y in &base {
        let Some(v) = lookup(y) else { continue };
        for l in GROWTH_LAMBDAS {
            if let Some(vl) = lookup(y * l) {
                growth_constant = growth_constant.max((vl + growth_shift) / (v + growth_shift));
            }
        }
    }
    if !growth_constant.is_finite() {
        failures.push(String::from("no finite growth constant for the dual value function"));
    }
    Ok(AuditReport {
        skipped: None,
        martingale_residual,
        vertices_checked,
        supermartingale_excess,
        curve,
        growth_shift,
        growth_constant,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve, SolveOptions};
    use crate::utility::UtilitySpec;
    use alloc::vec;

    #[test]
    fn trinomial_exponential_audit() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let u = UtilitySpec::Exponential { eta: 1.0 };
        let b = Claim::zero(3);
        let r = solve(&t, &u, &b, 0.0, &SolveOptions::default()).unwrap();
        let a = admissible_class_audit(&r, &t, &crate::conjugate::conjugate(&u).unwrap(), &b, &Tolerances::default()).unwrap();
        assert!(a.passed(), "{a:?}");
        assert_eq!(a.vertices_checked, 2);
        assert!(a.growth_constant >= 1.0 && a.growth_constant.is_finite());
    }

    #[test]
    fn satiated_instances_are_skipped() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![0.5])]).unwrap();
        let b = Claim::zero(2);
        let r = solve(&t, &UtilitySpec::QuadraticShortfall, &b, 1.0, &SolveOptions::default()).unwrap();
        let c = crate::conjugate::conjugate(&UtilitySpec::QuadraticShortfall).unwrap();
        let a = admissible_class_audit(&r, &t, &c, &b, &Tolerances::default()).unwrap();
        assert!(a.skipped.is_some());
    }
}
