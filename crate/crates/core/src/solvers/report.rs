//! One-call solve: admissibility, both sides of the duality, the measure
//! oracle and the verifier, bundled into a report.

use alloc::vec::Vec;

use super::{
    dual_over_measures, solve_dual, solve_primal_dynamic, solve_primal_static, verify_duality, DualOptions, PrimalOptions, SmoothingStep,
    Tolerances, TruncationLadder, Verification,
};
use crate::conjugate::{conjugate, ConjugateFunction};
use crate::elasticity::{validate_admissibility, Route};
use crate::error::Result;
use crate::market::{Claim, MarketTree, Strategy};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolveOptions {
    pub primal: PrimalOptions,
    pub dual: DualOptions,
    pub tol: Tolerances,
    /// Also solve the dual in its measure parametrization.
    pub cross_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub x: f64,
    pub route: Route,
    /// `V(x)`.
    pub primal_value: f64,
    /// `W(x)`.
    pub dual_value: f64,
    /// `W(x) - V(x)`.
    pub gap: f64,
    /// `X*` per atom.
    pub wealth: Vec<f64>,
    /// `θ*`, when the primal was solved over strategies.
    pub strategy: Option<Strategy>,
    /// `y*`.
    pub y: f64,
    /// `Y*` per atom.
    pub big_y: Vec<f64>,
    /// `β` on the bounded-domain route.
    pub beta: Option<f64>,
    pub smoothing: Vec<SmoothingStep>,
    /// `W(x)` from the measure parametrization.
    pub measure_dual_value: Option<f64>,
    pub truncation: Option<TruncationLadder>,
    pub verification: Verification,
}

/// Solves primal and dual independently and verifies the optimality
/// system. Utilities finite on the whole line are solved over strategies;
/// bounded-domain utilities over `C(x)` with `β = max(‖B‖∞, -dom/2)`.
pub fn solve(tree: &MarketTree, u: &UtilitySpec, claim: &Claim, x: f64, opts: &SolveOptions) -> Result<SolveReport> {
    u.validate()?;
    let conj = conjugate(u)?;
    solve_with(tree, u, &conj, claim, x, opts)
}

pub(crate) fn solve_with(
    tree: &MarketTree,
    u: &UtilitySpec,
    conj: &ConjugateFunction,
    claim: &Claim,
    x: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let admissibility = validate_admissibility(u);
    let left = u.domain_left();
    let (route, primal_value, wealth, strategy, beta) = if left.is_finite() {
        let beta = claim.sup_norm().max(-0.5 * left);
        let s = solve_primal_static(tree, u, claim, x, beta)?;
        (Route::BoundedDomain, s.value, s.wealth, None, Some(beta))
    } else {
        let s = solve_primal_dynamic(tree, u, claim, x, &opts.primal)?;
        let route = match admissibility.route {
            Route::NotAdmissible => Route::NotAdmissible,
            _ => Route::UnboundedDomain,
        };
        (route, s.value, s.wealth, Some(s.strategy), None)
    };
    let dual = solve_dual(tree, conj, claim, x, &opts.dual, &opts.tol)?;
    let measure_dual_value = if opts.cross_check {
        Some(dual_over_measures(tree, conj, claim, x)?.value)
    } else {
        None
    };
    let mut report = SolveReport {
        x,
        route,
        primal_value,
        dual_value: dual.value,
        gap: dual.value - primal_value,
        wealth,
        strategy,
        y: dual.y,
        big_y: dual.big_y,
        beta,
        smoothing: dual.trace,
        measure_dual_value,
        truncation: None,
        verification: Verification::default(),
    };
    report.verification = verify_duality(&report, tree, u, conj, claim, &opts.tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn trinomial_exponential_report_passes() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let opts = SolveOptions {
            cross_check: true,
            ..SolveOptions::default()
        };
        let r = solve(&t, &UtilitySpec::Exponential { eta: 1.0 }, &Claim::zero(3), 0.0, &opts).unwrap();
        assert!(r.verification.passed(), "{:?}", r.verification);
        assert!((r.measure_dual_value.unwrap() - r.dual_value).abs() < 1e-6);
        assert!(r.verification.martingale_residual.unwrap() <= 1e-8);
    }

    #[test]
    fn satiated_quadratic_has_zero_dual_point() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let b = Claim::new(vec![0.0, 0.0, 1.0]).unwrap();
        let r = solve(&t, &UtilitySpec::QuadraticShortfall, &b, 1.0, &SolveOptions::default()).unwrap();
        assert_eq!(r.y, 0.0);
        assert!(r.verification.satiated);
        assert!(r.verification.passed(), "{:?}", r.verification);
    }

    #[test]
    fn static_route_for_truncated_utilities() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let u = UtilitySpec::Exponential { eta: 1.0 }.truncate(4.0);
        let b = Claim::new(vec![0.0, 0.5, 1.0]).unwrap();
        let r = solve(&t, &u, &b, 0.5, &SolveOptions::default()).unwrap();
        assert_eq!(r.route, Route::BoundedDomain);
        assert_eq!(r.verification.lower_bound, Some(true));
        assert!(r.verification.passed(), "{:?}", r.verification);
    }
}
