//! The truncation ladder: `U_n` restricted to `(-n, ∞)`, solved in the
//! bounded-domain regime with capital `x + n/2` and liability `B + n/2`.

use alloc::format;
use alloc::vec::Vec;

use super::{check_inputs, solve_dual, solve_primal_dynamic, solve_primal_static, DualOptions, PrimalOptions, Tolerances};
use crate::conjugate::conjugate;
use crate::error::{Error, Result};
use crate::market::{Claim, MarketTree};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LadderRung {
    pub n: f64,
    /// `V_n(x)` from the bounded-domain primal.
    pub v_n: f64,
    /// `W_n(x)` from the dual with the truncated conjugate.
    pub w_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationLadder {
    pub rungs: Vec<LadderRung>,
    /// `V(x)` of the untruncated problem.
    pub v: f64,
    /// `W(x)` of the untruncated problem.
    pub w: f64,
    /// `W_n` nondecreasing in `n`, compared without tolerance.
    pub monotone: bool,
    /// Every `W_n` is at most `W(x)` up to the solve tolerance.
    pub bounded_by_w: bool,
}

impl TruncationLadder {
    pub fn last_gap_to_v(&self) -> Option<f64> {
        self.rungs.last().map(|r| (r.v_n - self.v).abs())
    }
}

/// Solves the truncated problems for each `n` in `n_list` (increasing, each
/// at least `2‖B‖∞`) next to the untruncated primal and dual.
pub fn truncation_ladder(
    tree: &MarketTree,
    u: &UtilitySpec,
    claim: &Claim,
    x: f64,
    n_list: &[f64],
    tol: &Tolerances,
) -> Result<TruncationLadder> {
    check_inputs(tree, claim, x)?;
    u.validate()?;
    if u.domain_left().is_finite() {
        return Err(Error::Precondition(
            "the truncation ladder starts from a utility finite on the whole line".into(),
        ));
    }
    let beta = claim.sup_norm();
    for w in n_list.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Precondition(format!("ladder levels must increase: {n_list:?}")));
        }
    }
    if let Some(&n) = n_list.iter().find(|&&n| !(n >= 2.0 * beta) || !n.is_finite()) {
        return Err(Error::Precondition(format!("ladder level {n} is below 2‖B‖∞ = {}", 2.0 * beta)));
    }
    let dual_opts = DualOptions::default();
    let v = solve_primal_dynamic(tree, u, claim, x, &PrimalOptions::default())?.value;
    let w = solve_dual(tree, &conjugate(u)?, claim, x, &dual_opts, tol)?.value;
    let mut rungs = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let un = u.truncate(n);
        let bn = claim.shifted(0.5 * n);
        let v_n = solve_primal_static(tree, &un, &bn, x + 0.5 * n, bn.sup_norm())?.value;
        // E[Y (B + n/2)] - (x + n/2) E[Y] = E[Y B] - x E[Y], so the dual
        // objective is unchanged by the shift
        let w_n = solve_dual(tree, &conjugate(&un)?, claim, x, &dual_opts, tol)?.value;
        rungs.push(LadderRung { n, v_n, w_n });
    }
    let monotone = rungs.windows(2).all(|p| p[0].w_n <= p[1].w_n);
    let bounded_by_w = rungs.iter().all(|r| r.w_n <= w + tol.solve * (1.0 + w.abs()));
    Ok(TruncationLadder {
        rungs,
        v,
        w,
        monotone,
        bounded_by_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn trinomial_exponential_ladder() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let u = UtilitySpec::Exponential { eta: 1.0 };
        let l = truncation_ladder(&t, &u, &Claim::zero(3), 0.0, &[2.0, 4.0, 8.0, 16.0, 32.0], &Tolerances::default()).unwrap();
        assert!(l.monotone, "{l:?}");
        assert!(l.bounded_by_w);
        assert!(l.last_gap_to_v().unwrap() <= 1e-3, "{l:?}");
    }

    #[test]
    fn levels_below_the_claim_bound_are_rejected() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![0.5])]).unwrap();
        let b = Claim::new(vec![3.0, 0.0]).unwrap();
        let e = truncation_ladder(&t, &UtilitySpec::Exponential { eta: 1.0 }, &b, 0.0, &[4.0], &Tolerances::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
    }
}
