//! The dual problem `W(x) = inf E[Ũ(W) - W B + x W]` over the cone generated
//! by the martingale measures, solved through a ladder of quadratic
//! inf-convolutions `Ũ_n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_inputs, qp, Tolerances};
use crate::conjugate::ConjugateFunction;
use crate::error::{Error, Result};
use crate::linalg::{dot, orthonormal_basis};
use crate::market::{martingale_polytope, Claim, MarketTree};
use crate::moreau::InfConvolution;
use crate::scalar::{bracket_nonnegative, golden_section};

/// Largest cone-constraint violation accepted for an iterate, relative to
/// its size.
const FEASIBILITY: f64 = 1e-13;

pub const DEFAULT_LEVELS: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualOptions {
    /// Smoothing levels always visited, increasing.
    pub levels: Vec<f64>,
    /// Largest level the ladder may be extended to.
    pub max_level: f64,
    pub max_newton: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            levels: DEFAULT_LEVELS.to_vec(),
            max_level: 1e10,
            max_newton: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothingStep {
    pub n: f64,
    /// `W_n(x)`, the optimal value with `Ũ_n`.
    pub smoothed: f64,
    /// The unsmoothed objective at the level's minimizer.
    pub unsmoothed: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualSolution {
    /// `W(x)`.
    pub value: f64,
    /// `y* = E[Y*]`.
    pub y: f64,
    /// `Y*` per atom.
    pub big_y: Vec<f64>,
    pub trace: Vec<SmoothingStep>,
}

pub(crate) struct DualObjective<'a> {
    pub p: &'a [f64],
    pub b: &'a [f64],
    pub x: f64,
}

impl DualObjective<'_> {
    pub fn smoothed(&self, ic: &InfConvolution, w: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let mut f = 0.0;
        match grad {
            Some((g, h)) => {
                for i in 0..w.len() {
                    let (v, d, s) = ic.eval(w[i]);
                    f += self.p[i] * (v - w[i] * self.b[i] + self.x * w[i]);
                    g[i] = self.p[i] * (d - self.b[i] + self.x);
                    h[i] = self.p[i] * s;
                }
            }
            None => {
                for i in 0..w.len() {
                    f += self.p[i] * (ic.value(w[i]) - w[i] * self.b[i] + self.x * w[i]);
                }
            }
        }
        f
    }

    pub fn exact(&self, conj: &ConjugateFunction, w: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..w.len() {
            f += self.p[i] * (conj.value(w[i]) - w[i] * self.b[i] + self.x * w[i]);
        }
        f
    }
}

/// Projected Newton in the diagonal generalized-Hessian metric; each step
/// solves a small diagonal QP over the cone.
fn minimize_level(
    obj: &DualObjective,
    ic: &InfConvolution,
    rows: &[Vec<f64>],
    w: &mut Vec<f64>,
    max_newton: usize,
) -> Result<(f64, usize)> {
    let n = w.len();
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut f = obj.smoothed(ic, w, Some((&mut g, &mut h)));
    let mut tau = 1e-6;
    let mut lam: Option<Vec<f64>> = None;
    let mut steps = 0;
    while steps < max_newton {
        steps += 1;
        let hm: Vec<f64> = (0..n).map(|i| h[i].max(obj.p[i] * tau)).collect();
        let m: Vec<f64> = (0..n).map(|i| w[i] - g[i] / hm[i]).collect();
        let (mut v, l) = qp::project(&hm, &m, rows, lam.as_deref());
        lam = Some(l);
        let scale = 1.0 + v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if qp::restore(rows, &mut v) > FEASIBILITY * scale {
            break;
        }
        let d: Vec<f64> = v.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
        let slope = dot(&g, &d);
        if !(slope < -1e-17 * (1.0 + f.abs())) {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let cand: Vec<f64> = w.iter().zip(&d).map(|(a, b)| (a + alpha * b).max(0.0)).collect();
            let fc = obj.smoothed(ic, &cand, None);
            if fc <= f + 1e-4 * alpha * slope {
                accepted = Some(cand);
                break;
            }
            alpha *= 0.5;
        }
        let Some(cand) = accepted else { break };
        if cand == *w {
            break;
        }
        *w = cand;
        if w.iter().any(|v| !(v.abs() < 1e15)) {
            return Err(Error::DualUnbounded);
        }
        tau = if alpha == 1.0 {
            (tau * 0.1).max(1e-12)
        } else {
            (tau * 10.0).min(1e6)
        };
        f = obj.smoothed(ic, w, Some((&mut g, &mut h)));
    }
    Ok((f, steps))
}

/// Cone rows `Σ_{ω∈ν} P(ω) ΔS(ω) W(ω) = 0`, orthonormalized.
pub(crate) fn cone_basis(tree: &MarketTree) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let poly = martingale_polytope(tree)?;
    let rows = poly.cone_rows(tree);
    let z: Vec<f64> = poly.interior.iter().zip(tree.atom_probs()).map(|(q, p)| q / p).collect();
    Ok((orthonormal_basis(&rows, 1e-12), z))
}

/// Scales `W` into the closed domain of `Ũ` when `r` is finite.
pub(crate) fn into_domain(conj: &ConjugateFunction, w: &[f64]) -> Vec<f64> {
    let r = conj.right_endpoint();
    let top = w.iter().fold(0.0f64, |m, v| m.max(*v));
    if r.is_finite() && top > r {
        let s = r / top;
        w.iter().map(|v| (v * s).min(r)).collect()
    } else {
        w.to_vec()
    }
}

/// Minimizes the dual objective over the cone by the smoothing ladder.
pub fn solve_dual(
    tree: &MarketTree,
    conj: &ConjugateFunction,
    claim: &Claim,
    x: f64,
    opts: &DualOptions,
    tol: &Tolerances,
) -> Result<DualSolution> {
    check_inputs(tree, claim, x)?;
    if opts.levels.is_empty() || opts.levels.windows(2).any(|w| !(w[0] < w[1])) || opts.levels[0] <= 0.0 {
        return Err(Error::Precondition(format!(
            "smoothing levels must be positive and increasing: {:?}",
            opts.levels
        )));
    }
    let (rows, z_int) = cone_basis(tree)?;
    let obj = DualObjective {
        p: tree.atom_probs(),
        b: claim.payoff(),
        x,
    };
    let beta = claim.sup_norm();

    // start along the ray through an interior martingale density
    let ic0 = InfConvolution::new(conj.clone(), opts.levels[0], beta)?;
    let ray = |y: f64| {
        let w: Vec<f64> = z_int.iter().map(|z| y * z).collect();
        obj.smoothed(&ic0, &w, None)
    };
    let (lo, hi) = bracket_nonnegative(ray, 1.0, 80);
    if hi > 1e20 {
        return Err(Error::DualUnbounded);
    }
    let (y0, _) = golden_section(ray, lo, hi, 1e-6, 200);
    let mut w: Vec<f64> = z_int.iter().map(|z| y0.max(1e-3) * z).collect();
    qp::restore(&rows, &mut w);

    let mut trace: Vec<SmoothingStep> = Vec::new();
    let mut n_idx = 0;
    let mut n = opts.levels[0];
    loop {
        let ic = InfConvolution::new(conj.clone(), n, beta)?;
        let (smoothed, steps) = minimize_level(&obj, &ic, &rows, &mut w, opts.max_newton)?;
        let unsmoothed = obj.exact(conj, &into_domain(conj, &w));
        trace.push(SmoothingStep {
            n,
            smoothed,
            unsmoothed,
            newton_steps: steps,
        });
        n_idx += 1;
        if n_idx < opts.levels.len() {
            n = opts.levels[n_idx];
            continue;
        }
        let k = trace.len();
        let settled = k >= 2 && {
            let (a, b) = (trace[k - 1].unsmoothed, trace[k - 2].unsmoothed);
            (a - b).abs() <= tol.ladder * (1.0 + a.abs())
        };
        if settled || n * 10.0 > opts.max_level {
            break;
        }
        n *= 10.0;
    }
    let mut big_y = into_domain(conj, &w);
    let mut value = obj.exact(conj, &big_y);
    // W = 0 lies in the cone; it wins when the agent is satiated
    let zero = vec![0.0; big_y.len()];
    let at_zero = obj.exact(conj, &zero);
    if at_zero <= value {
        big_y = zero;
        value = at_zero;
    }
    if !value.is_finite() {
        return Err(Error::NoConvergence(format!("dual objective is {value} at the smoothed minimizer")));
    }
    let y = dot(tree.atom_probs(), &big_y);
    Ok(DualSolution { value, y, big_y, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::conjugate;
    use crate::utility::UtilitySpec;

    fn trinomial() -> MarketTree {
        MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap()
    }

    #[test]
    fn trinomial_exponential_value() {
        let t = trinomial();
        let c = conjugate(&UtilitySpec::Exponential { eta: 1.0 }).unwrap();
        let s = solve_dual(&t, &c, &Claim::zero(3), 0.0, &DualOptions::default(), &Tolerances::default()).unwrap();
        let v = -(2f64.powf(1.0 / 3.0) + 1.0 + 2f64.powf(-2.0 / 3.0)) / 3.0;
        assert!((s.value - v).abs() < 1e-9, "{} vs {v}", s.value);
        for w in s.trace.windows(2) {
            assert!(w[0].smoothed <= w[1].smoothed);
        }
    }

    #[test]
    fn constant_market_quadratic_has_zero_dual() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![1.0]), (0.5, vec![1.0])]).unwrap();
        let c = conjugate(&UtilitySpec::QuadraticShortfall).unwrap();
        let s = solve_dual(&t, &c, &Claim::zero(2), 1.0, &DualOptions::default(), &Tolerances::default()).unwrap();
        assert!(s.value.abs() < 1e-12 && s.y.abs() < 1e-12, "{s:?}");
    }
}
