//! The dual as an infimum over `y > 0` of an infimum over martingale
//! measures: `W(x) = inf_y { inf_Q E[Ũ(y dQ/dP) - y B dQ/dP] + x y }`.

use alloc::vec;
use alloc::vec::Vec;

use super::check_inputs;
use crate::barrier::{BarrierOptions, BarrierProblem, Objective};
use crate::conjugate::ConjugateFunction;
use crate::error::{Error, Result};
use crate::linalg::{null_space, Matrix};
use crate::lp::LinearProgram;
use crate::market::{martingale_polytope, Claim, MarketTree, MartingalePolytope};
use crate::scalar::{bracket_nonnegative, golden_section};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureDualSolution {
    pub value: f64,
    pub y: f64,
    /// Optimal martingale measure, as atom probabilities.
    pub measure: Vec<f64>,
    /// `Y = y dQ/dP`.
    pub big_y: Vec<f64>,
}

struct Inner<'a> {
    conj: &'a ConjugateFunction,
    p: &'a [f64],
    b: &'a [f64],
    y: f64,
}

impl Objective for Inner<'_> {
    fn dim(&self) -> usize {
        self.p.len()
    }

    fn value(&self, q: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..q.len() {
            let u = self.y * q[i] / self.p[i];
            f += self.p[i] * self.conj.value(u) - self.y * q[i] * self.b[i];
        }
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    }

    fn accumulate(&self, q: &[f64], g: &mut [f64], h: &mut Matrix) {
        for i in 0..q.len() {
            let u = self.y * q[i] / self.p[i];
            let d = self.conj.subdiff(u).map(|s| s.midpoint()).unwrap_or(0.0);
            g[i] += self.y * (d - self.b[i]);
            let c = self.conj.second_derivative(u).unwrap_or(0.0);
            *h.at_mut(i, i) += self.y * self.y * c / self.p[i];
        }
    }
}

fn inner_affine(conj: &ConjugateFunction, tree: &MarketTree, poly: &MartingalePolytope, b: &[f64], y: f64) -> Result<(f64, Vec<f64>)> {
    let pa = conj.piecewise_affine().expect("affine conjugate");
    let n = tree.num_atoms();
    let p = tree.atom_probs();
    let mut lp = LinearProgram::new(2 * n);
    for i in 0..n {
        lp.cost[i] = -y * b[i];
        lp.cost[n + i] = p[i];
        lp.free[n + i] = true;
    }
    for (a, rhs) in &poly.equalities {
        let mut row = a.clone();
        row.resize(2 * n, 0.0);
        lp.add_eq(row, *rhs);
    }
    for i in 0..n {
        for k in 0..pa.slopes.len() {
            // t_i ≥ values[k] + slopes[k] (u - breaks[k]),  u = y q_i / p_i
            let mut row = vec![0.0; 2 * n];
            row[n + i] = 1.0;
            row[i] = -pa.slopes[k] * y / p[i];
            lp.add_ge(row, pa.values[k] - pa.slopes[k] * pa.breaks[k]);
        }
        if pa.right_end.is_finite() {
            let mut row = vec![0.0; 2 * n];
            row[i] = y / p[i];
            lp.add_le(row, pa.right_end);
        }
    }
    let (sol, value) = lp
        .minimize()
        .optimal()
        .ok_or_else(|| Error::Infeasible("no martingale measure keeps y dQ/dP inside the conjugate domain".into()))?;
    Ok((value, sol[..n].to_vec()))
}

fn inner_smooth(conj: &ConjugateFunction, tree: &MarketTree, poly: &MartingalePolytope, b: &[f64], y: f64) -> Result<(f64, Vec<f64>)> {
    let n = tree.num_atoms();
    let obj = Inner {
        conj,
        p: tree.atom_probs(),
        b,
        y,
    };
    let rows: Vec<Vec<f64>> = poly.equalities.iter().map(|(a, _)| a.clone()).collect();
    let dirs = null_space(&rows, n, 1e-12);
    let mut inequalities = Vec::with_capacity(n);
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        inequalities.push((a, 0.0));
    }
    let problem = BarrierProblem {
        objective: &obj,
        inequalities,
        directions: Some(dirs),
    };
    let opts = BarrierOptions {
        gap_tol: 1e-12,
        max_newton: 400,
        ..BarrierOptions::default()
    };
    let sol = problem.solve(&poly.interior, &opts)?;
    Ok((sol.value, sol.point))
}

/// `inf_Q E[Ũ(y dQ/dP) - y B dQ/dP]` and the minimizing measure.
pub fn inner_dual_value(
    tree: &MarketTree,
    conj: &ConjugateFunction,
    poly: &MartingalePolytope,
    claim: &Claim,
    y: f64,
) -> Result<(f64, Vec<f64>)> {
    if y == 0.0 {
        return Ok((conj.value(0.0), poly.interior.clone()));
    }
    if conj.piecewise_affine().is_some() {
        inner_affine(conj, tree, poly, claim.payoff(), y)
    } else {
        inner_smooth(conj, tree, poly, claim.payoff(), y)
    }
}

/// Golden-section search over `y` around the inner minimization over the
/// martingale polytope.
pub fn dual_over_measures(tree: &MarketTree, conj: &ConjugateFunction, claim: &Claim, x: f64) -> Result<MeasureDualSolution> {
    check_inputs(tree, claim, x)?;
    let poly = martingale_polytope(tree)?;
    let mut failure: Option<Error> = None;
    let mut outer = |y: f64| -> f64 {
        match inner_dual_value(tree, conj, &poly, claim, y) {
            Ok((v, _)) => v + x * y,
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
                f64::INFINITY
            }
        }
    };
    let (lo, hi) = bracket_nonnegative(&mut outer, 1.0, 80);
    if hi > 1e20 {
        return Err(Error::DualUnbounded);
    }
    let (mut y, mut value) = golden_section(&mut outer, lo, hi, 1e-11, 400);
    let f0 = outer(0.0);
    if f0 <= value {
        y = 0.0;
        value = f0;
    }
    if let Some(e) = failure {
        if !value.is_finite() {
            return Err(e);
        }
    }
    let (_, measure) = inner_dual_value(tree, conj, &poly, claim, y)?;
    let big_y = measure.iter().zip(tree.atom_probs()).map(|(q, p)| y * q / p).collect();
    Ok(MeasureDualSolution { value, y, measure, big_y })
}
