//! Shortfall-risk minimization and utility-indifference prices built on
//! the solvers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::market::{martingale_polytope, Claim, MarketTree};
use crate::solvers::{solve, solve_primal_dynamic, solve_primal_static, PrimalOptions, SolveOptions, SolveReport};
use crate::utility::UtilitySpec;
#[allow(unused_imports)]
use num_traits::Float;

/// A convex nondecreasing loss `ℓ` on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum LossFunction {
    /// `ℓ(x) = x^p`.
    Power { p: f64 },
    /// `ℓ(0) = at_zero`, slope `pieces[k].1` on `[pieces[k].0, pieces[k+1].0)`;
    /// starts at 0, increasing, slopes nonnegative and nondecreasing.
    PiecewiseLinear { at_zero: f64, pieces: Vec<(f64, f64)> },
}

impl LossFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            LossFunction::Power { p } => {
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(Error::InadmissibleLoss(format!("power loss needs p ≥ 1, got {p}")));
                }
            }
            LossFunction::PiecewiseLinear { at_zero, pieces } => {
                let ok = at_zero.is_finite()
                    && !pieces.is_empty()
                    && pieces[0].0 == 0.0
                    && pieces.iter().all(|(x, s)| x.is_finite() && s.is_finite() && *s >= 0.0)
                    && pieces.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
                if !ok {
                    return Err(Error::InadmissibleLoss(format!("malformed piecewise-linear loss {pieces:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            LossFunction::Power { p } => x.max(0.0).powf(*p),
            LossFunction::PiecewiseLinear { at_zero, pieces } => {
                let x = x.max(0.0);
                let mut v = *at_zero;
                for (k, &(start, slope)) in pieces.iter().enumerate() {
                    let end = pieces.get(k + 1).map(|q| q.0).unwrap_or(f64::INFINITY);
                    if x <= start {
                        break;
                    }
                    v += slope * (x.min(end) - start);
                }
                v
            }
        }
    }

    /// `∂ℓ(x)` for `x ≥ 0` (the right derivative at 0).
    pub fn subgradient(&self, x: f64) -> Interval {
        match self {
            LossFunction::Power { p } => Interval::point(p * x.max(0.0).powf(p - 1.0)),
            LossFunction::PiecewiseLinear { pieces, .. } => {
                let k = pieces.iter().rposition(|q| q.0 <= x.max(0.0)).unwrap_or(0);
                if k > 0 && pieces[k].0 == x {
                    Interval::new(pieces[k - 1].1, pieces[k].1)
                } else {
                    Interval::point(pieces[k].1)
                }
            }
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    /// `ℓ` is affine on some `[a, ∞)`, which makes `-ℓ(x⁻)` fail the
    /// asymptotic-elasticity condition.
    pub fn linear_at_infinity(&self) -> bool {
        match self {
            LossFunction::Power { p } => *p == 1.0,
            LossFunction::PiecewiseLinear { .. } => true,
        }
    }

    /// `U(x) = -ℓ(x⁻)`.
    pub fn to_utility(&self) -> Result<UtilitySpec> {
        self.validate()?;
        if self.linear_at_infinity() {
            return Err(Error::InadmissibleLoss(String::from(
                "a loss that is linear near infinity gives a utility with infinite asymptotic elasticity",
            )));
        }
        let u = match self {
            LossFunction::Power { p } if *p == 2.0 => UtilitySpec::QuadraticShortfall,
            LossFunction::Power { p } => UtilitySpec::PowerShortfall { p: *p },
            LossFunction::PiecewiseLinear { .. } => unreachable!(),
        };
        let c = self.at_zero();
        Ok(if c != 0.0 { u.shift(0.0, -c) } else { u })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShortfallResult {
    /// `inf E ℓ([B - X]⁺)` over attainable `X`.
    pub risk: f64,
    /// The optimal hedge `X*`.
    pub wealth: Vec<f64>,
    pub report: SolveReport,
}

/// Minimal expected shortfall `E ℓ([B - X]⁺)` with initial capital `x`.
pub fn shortfall_risk(tree: &MarketTree, loss: &LossFunction, claim: &Claim, x: f64, opts: &SolveOptions) -> Result<ShortfallResult> {
    let u = loss.to_utility()?;
    let report = solve(tree, &u, claim, x, opts)?;
    Ok(ShortfallResult {
        risk: -report.primal_value,
        wealth: report.wealth.clone(),
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndifferencePrice {
    pub price: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// The no-arbitrage interval the search started from.
    pub no_arbitrage: (f64, f64),
    pub iterations: usize,
}

pub const INDIFFERENCE_MAX_ITER: usize = 200;

fn primal_value(tree: &MarketTree, u: &UtilitySpec, claim: &Claim, x: f64) -> Result<f64> {
    if u.domain_left().is_finite() {
        let beta = claim.sup_norm().max(-0.5 * u.domain_left());
        Ok(solve_primal_static(tree, u, claim, x, beta)?.value)
    } else {
        Ok(solve_primal_dynamic(tree, u, claim, x, &PrimalOptions::default())?.value)
    }
}

/// The price `p` with `V(x + p; B) = V(x; 0)`, found by bisection inside
/// the no-arbitrage interval `[inf_Q E_Q B, sup_Q E_Q B]`.
pub fn indifference_price(tree: &MarketTree, u: &UtilitySpec, claim: &Claim, x: f64, tol: f64) -> Result<IndifferencePrice> {
    claim.check_against(tree)?;
    let poly = martingale_polytope(tree)?;
    let (sup, _) = poly.superreplication(tree, claim.payoff());
    let neg: Vec<f64> = claim.payoff().iter().map(|b| -b).collect();
    let inf = -poly.superreplication(tree, &neg).0;
    let v0 = primal_value(tree, u, &Claim::zero(claim.len()), x)?;
    let f = |p: f64| -> Result<f64> { Ok(primal_value(tree, u, claim, x + p)? - v0) };
    let slack = 1e-9 * (1.0 + v0.abs());
    let (mut lo, mut hi) = (inf, sup);
    if hi - lo <= tol {
        let price = 0.5 * (lo + hi);
        return Ok(IndifferencePrice {
            price,
            bracket: (lo, hi),
            no_arbitrage: (inf, sup),
            iterations: 0,
        });
    }
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo > slack || f_hi < -slack {
        return Err(Error::Bracket {
            lo_gap: f_lo,
            hi_gap: f_hi,
        });
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < INDIFFERENCE_MAX_ITER {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(IndifferencePrice {
        price: 0.5 * (lo + hi),
        bracket: (lo, hi),
        no_arbitrage: (inf, sup),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trinomial() -> MarketTree {
        MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap()
    }

    #[test]
    fn loss_families() {
        assert_eq!(
            LossFunction::Power { p: 2.0 }.to_utility().unwrap(),
            UtilitySpec::QuadraticShortfall
        );
        assert!(matches!(
            LossFunction::Power { p: 1.0 }.to_utility(),
            Err(Error::InadmissibleLoss(_))
        ));
        let pl = LossFunction::PiecewiseLinear {
            at_zero: 0.5,
            pieces: vec![(0.0, 1.0), (2.0, 3.0)],
        };
        pl.validate().unwrap();
        assert_eq!(pl.value(3.0), 0.5 + 2.0 + 3.0);
        assert_eq!(pl.subgradient(2.0), Interval::new(1.0, 3.0));
        assert!(matches!(pl.to_utility(), Err(Error::InadmissibleLoss(_))));
    }

    #[test]
    fn quadratic_shortfall_on_the_trinomial() {
        let b = Claim::new(vec![0.0, 0.0, 1.0]).unwrap();
        let r = shortfall_risk(&trinomial(), &LossFunction::Power { p: 2.0 }, &b, 0.2, &SolveOptions::default()).unwrap();
        assert!((r.risk - 0.032 / 3.0).abs() < 1e-9);
        let full = shortfall_risk(
            &trinomial(),
            &LossFunction::Power { p: 2.0 },
            &b,
            1.0 / 3.0,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(full.risk.abs() < 1e-12);
    }

    #[test]
    fn binomial_call_price() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![0.5])]).unwrap();
        let b = Claim::new(vec![1.0, 0.0]).unwrap();
        for u in [UtilitySpec::Exponential { eta: 1.0 }, UtilitySpec::QuadraticShortfall] {
            let p = indifference_price(&t, &u, &b, 0.0, 1e-8).unwrap();
            assert!((p.price - 1.0 / 3.0).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn trinomial_price_is_strictly_inside() {
        let b = Claim::new(vec![0.0, 0.0, 1.0]).unwrap();
        let p = indifference_price(&trinomial(), &UtilitySpec::Exponential { eta: 1.0 }, &b, 0.0, 1e-8).unwrap();
        assert!(p.price > 1e-4 && p.price < 1.0 / 3.0 - 1e-4, "{p:?}");
    }

    #[test]
    fn cash_liability_is_priced_at_face_value() {
        let b = Claim::constant(3, 0.7);
        let p = indifference_price(&trinomial(), &UtilitySpec::Exponential { eta: 2.0 }, &b, 0.1, 1e-8).unwrap();
        assert!((p.price - 0.7).abs() < 1e-8);
    }
}
