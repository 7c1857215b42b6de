//! Checks of the optimality system on a solved instance: duality gap,
//! atomwise subgradient inclusion, budget equality, attainability under
//! `Q*`, positivity of `Y*` and the lower bound on the bounded-domain route.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{sup_abs, weighted_dot, SolveReport, Tolerances};
use crate::conjugate::ConjugateFunction;
use crate::interval::Interval;
use crate::market::{martingale_polytope, replicate, wealth_process, Claim, MarketTree, Strategy};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    /// `|V - W| / max(1, |W|)`.
    pub relative_gap: f64,
    /// `max_ω dist(B - X*, ∂Ũ(Y*))`, with `∂Ũ` hulled over a small
    /// neighbourhood of `Y*(ω)`.
    pub inclusion_residual: f64,
    pub inclusion_per_atom: Vec<f64>,
    /// `|E[X* Y*] - x y*|`.
    pub budget_residual: f64,
    /// Present when `Y* > 0` on every atom.
    pub measure: Option<Vec<f64>>,
    /// Replication error of `X*` under `Q*`, relative to `1 + ‖X*‖∞`.
    pub replication_residual: Option<f64>,
    /// Largest conditional-expectation defect of the wealth process under `Q*`.
    pub martingale_residual: Option<f64>,
    pub min_y: f64,
    /// `Some(ok)` when positivity of `Y*` is required (`L = ∞`).
    pub positivity: Option<bool>,
    /// Bounded-domain route: `X* - B ≥ -2β`.
    pub lower_bound: Option<bool>,
    /// Bounded-domain route with `X* ≥ 0`: the replicating wealth stays nonnegative.
    pub nonnegative_attainable: Option<bool>,
    /// `y* = 0`; residuals then use the `L × 0 = 0` convention.
    pub satiated: bool,
    /// Wealth rebuilt from `Y*` alone.
    pub dual_wealth: Vec<f64>,
    pub dual_wealth_deviation: f64,
    pub failures: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `∂Ũ` hulled over `[Y - δ, Y + δ] ∩ dom`, `δ = radius (1 + Y)`.
fn enlarged_subdiff(conj: &ConjugateFunction, y: f64, radius: f64) -> Option<Interval> {
    let d = radius * (1.0 + y);
    let lo_y = (y - d).max(0.0);
    let mut hi_y = y + d;
    if !conj.in_domain(hi_y) {
        let r = conj.right_endpoint();
        hi_y = if conj.in_domain(r) { r } else { y };
    }
    let lo = conj.subdiff(lo_y).ok()?;
    let hi = conj.subdiff(hi_y).ok()?;
    Some(lo.hull(&hi))
}

/// Terminal wealth `X = B - ξ` with `ξ ∈ ∂Ũ(Y)` chosen as the same convex
/// combination of the interval endpoints on every atom, the combination
/// fixed by `E[X Y] = x y`.
pub fn reconstruct_wealth(tree: &MarketTree, conj: &ConjugateFunction, claim: &Claim, x: f64, big_y: &[f64]) -> Vec<f64> {
    let p = tree.atom_probs();
    let b = claim.payoff();
    let n = big_y.len();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for i in 0..n {
        let s = conj.subdiff(big_y[i]).unwrap_or(Interval::point(f64::NAN));
        let (a, c) = match (s.lo.is_finite(), s.hi.is_finite()) {
            (true, true) => (s.lo, s.hi),
            (false, true) => (s.hi, s.hi),
            (true, false) => (s.lo, s.lo),
            _ => (-b[i], -b[i]),
        };
        lo[i] = a;
        hi[i] = c;
    }
    let y: f64 = big_y.iter().zip(p).map(|(v, p)| v * p).sum();
    let base: f64 = (0..n).map(|i| p[i] * big_y[i] * (b[i] - lo[i])).sum();
    let width: f64 = (0..n).map(|i| p[i] * big_y[i] * (hi[i] - lo[i])).sum();
    let t = if width > 0.0 {
        ((base - x * y) / width).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (0..n).map(|i| b[i] - (lo[i] + t * (hi[i] - lo[i]))).collect()
}

fn martingale_defect(tree: &MarketTree, q: &[f64], values: &[f64]) -> f64 {
    let mass = tree.node_mass(q);
    let mut worst = 0.0f64;
    for v in tree.internal_nodes() {
        if !(mass[v] > 0.0) {
            continue;
        }
        let node = tree.node(v);
        let e: f64 = node.children.iter().map(|&c| mass[c] * values[c]).sum::<f64>() / mass[v];
        worst = worst.max((e - values[v]).abs());
    }
    worst
}

/// Evaluates the optimality system for a solved instance. Never fails;
/// anything that cannot be evaluated shows up in `failures`.
pub fn verify_duality(
    report: &SolveReport,
    tree: &MarketTree,
    u: &UtilitySpec,
    conj: &ConjugateFunction,
    claim: &Claim,
    tol: &Tolerances,
) -> Verification {
    let p = tree.atom_probs();
    let b = claim.payoff();
    let x = report.x;
    let xs = &report.wealth;
    let ys = &report.big_y;
    let n = xs.len();
    let mut failures = Vec::new();

    let relative_gap = (report.primal_value - report.dual_value).abs() / report.dual_value.abs().max(1.0);
    if !(relative_gap <= tol.solve) {
        failures.push(format!("relative duality gap {relative_gap:e} exceeds {:e}", tol.solve));
    }

    let mut inclusion_per_atom = vec![0.0; n];
    for i in 0..n {
        inclusion_per_atom[i] = match enlarged_subdiff(conj, ys[i], tol.inclusion_radius) {
            Some(s) => s.dist(b[i] - xs[i]),
            None => f64::INFINITY,
        };
    }
    let inclusion_residual = inclusion_per_atom.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(inclusion_residual <= tol.inclusion) {
        failures.push(format!(
            "subgradient inclusion residual {inclusion_residual:e} exceeds {:e}",
            tol.inclusion
        ));
    }

    let budget_residual = (weighted_dot(p, xs, ys) - x * report.y).abs();
    if !(budget_residual <= tol.budget) {
        failures.push(format!("budget residual {budget_residual:e} exceeds {:e}", tol.budget));
    }

    let min_y = ys.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let satiated = report.y == 0.0;
    let (mut measure, mut replication_residual, mut martingale_residual) = (None, None, None);
    let mut nonnegative_attainable = None;
    if min_y > tol.positivity && report.y > 0.0 {
        let q: Vec<f64> = (0..n).map(|i| p[i] * ys[i] / report.y).collect();
        let rep = replicate(tree, &q, xs);
        let scale = 1.0 + sup_abs(xs);
        let rr = rep.max_residual.max((rep.cost - x).abs()) / scale;
        if !(rr <= tol.replication) {
            failures.push(format!("replication residual {rr:e} under Q* exceeds {:e}", tol.replication));
        }
        let strategy: &Strategy = report.strategy.as_ref().unwrap_or(&rep.strategy);
        let start = if report.strategy.is_some() { x } else { rep.cost };
        let process = wealth_process(tree, start, strategy);
        let mr = martingale_defect(tree, &q, &process);
        if !(mr <= tol.martingale) {
            failures.push(format!(
                "wealth process martingale residual {mr:e} under Q* exceeds {:e}",
                tol.martingale
            ));
        }
        if report.beta.is_some() && xs.iter().all(|v| *v >= 0.0) {
            nonnegative_attainable = Some(rep.replicable && process.iter().all(|v| *v >= -tol.replication * scale));
        }
        measure = Some(q);
        replication_residual = Some(rr);
        martingale_residual = Some(mr);
    }

    let positivity = if u.satiation().is_infinite() && strictly_positive_dual_point(tree, conj) {
        let ok = min_y >= tol.positivity;
        if !ok {
            failures.push(format!("min Y* = {min_y:e} although the satiation level is infinite"));
        }
        Some(ok)
    } else {
        None
    };

    let lower_bound = report.beta.map(|beta| {
        let ok = (0..n).all(|i| xs[i] - b[i] >= -2.0 * beta - 1e-9 * (1.0 + beta));
        if !ok {
            failures.push(format!("X* - B falls below -2β = {}", -2.0 * beta));
        }
        ok
    });

    let dual_wealth = reconstruct_wealth(tree, conj, claim, x, ys);
    let dual_wealth_deviation = (0..n)
        .filter(|&i| ys[i] > 0.0 || conj.subdiff(0.0).map(|s| s.hi.is_finite()).unwrap_or(false))
        .map(|i| (dual_wealth[i] - xs[i]).abs())
        .fold(0.0f64, f64::max);

    Verification {
        relative_gap,
        inclusion_residual,
        inclusion_per_atom,
        budget_residual,
        measure,
        replication_residual,
        martingale_residual,
        min_y,
        positivity,
        lower_bound,
        nonnegative_attainable,
        satiated,
        dual_wealth,
        dual_wealth_deviation,
        failures,
    }
}

/// Some `t Z` with `Z` an interior martingale density has finite `E Ũ`.
fn strictly_positive_dual_point(tree: &MarketTree, conj: &ConjugateFunction) -> bool {
    let Ok(poly) = martingale_polytope(tree) else { return false };
    let z: Vec<f64> = poly.interior.iter().zip(tree.atom_probs()).map(|(q, p)| q / p).collect();
    let top = z.iter().fold(0.0f64, |m, v| m.max(*v));
    let r = conj.right_endpoint();
    let t = if r.is_finite() { 0.5 * r / top } else { 1.0 };
    z.iter().all(|v| conj.value(t * v).is_finite())
}
