//! Primal and dual solvers, approximation ladders and the verifiers that
//! check the optimality system on a solved instance.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::market::{Claim, MarketTree};

mod audit;
mod dual;
mod ladder;
mod measures;
mod primal;
mod qp;
mod report;
mod static_primal;
mod uniqueness;
mod verify;

pub use audit::{admissible_class_audit, dual_value_curve, AuditReport};
pub use dual::{solve_dual, DualOptions, DualSolution, SmoothingStep, DEFAULT_LEVELS};
pub use ladder::{truncation_ladder, LadderRung, TruncationLadder};
pub use measures::{dual_over_measures, inner_dual_value, MeasureDualSolution};
pub use primal::{solve_primal_dynamic, PrimalOptions, PrimalSolution};
pub use report::{solve, SolveOptions, SolveReport};
pub use static_primal::{solve_primal_static, StaticSolution};
pub use uniqueness::{uniqueness_probe, UniquenessReport};
pub use verify::{reconstruct_wealth, verify_duality, Verification};

/// Thresholds used by solvers and verifiers; every entry can be overridden
/// by name.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Tolerances {
    /// Relative duality gap.
    pub solve: f64,
    /// Atomwise distance of `B - X*` to `∂Ũ(Y*)`.
    pub inclusion: f64,
    /// Width of the neighbourhood of `Y*` over which `∂Ũ` is hulled.
    pub inclusion_radius: f64,
    pub budget: f64,
    /// Relative replication residual.
    pub replication: f64,
    pub martingale: f64,
    /// Smallest `Y*` counted as strictly positive.
    pub positivity: f64,
    pub uniqueness: f64,
    /// Stop extending the smoothing ladder once successive unsmoothed dual
    /// values agree to this relative accuracy.
    pub ladder: f64,
    pub indifference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: 1e-6,
            inclusion: 1e-5,
            inclusion_radius: 1e-6,
            budget: 1e-6,
            replication: 1e-8,
            martingale: 1e-8,
            positivity: 1e-8,
            uniqueness: 1e-6,
            ladder: 1e-10,
            indifference: 1e-8,
        }
    }
}

impl Tolerances {
    /// Sets the tolerance called `name`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Precondition(alloc::format!(
                "tolerance {name} must be positive, got {value}"
            )));
        }
        let slot = match name {
            "solve" => &mut self.solve,
            "inclusion" => &mut self.inclusion,
            "inclusion_radius" => &mut self.inclusion_radius,
            "budget" => &mut self.budget,
            "replication" => &mut self.replication,
            "martingale" => &mut self.martingale,
            "positivity" => &mut self.positivity,
            "uniqueness" => &mut self.uniqueness,
            "ladder" => &mut self.ladder,
            "indifference" => &mut self.indifference,
            _ => return Err(Error::Precondition(alloc::format!("unknown tolerance {name}"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn names() -> &'static [&'static str] {
        &[
            "solve",
            "inclusion",
            "inclusion_radius",
            "budget",
            "replication",
            "martingale",
            "positivity",
            "uniqueness",
            "ladder",
            "indifference",
        ]
    }
}

fn check_inputs(tree: &MarketTree, claim: &Claim, x: f64) -> Result<()> {
    claim.check_against(tree)?;
    if !x.is_finite() {
        return Err(Error::Precondition(String::from("initial capital must be finite")));
    }
    Ok(())
}

/// `max_ω |v_ω|`.
fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn weighted_dot(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    p.iter().zip(a).zip(b).map(|((p, a), b)| p * a * b).sum()
}
