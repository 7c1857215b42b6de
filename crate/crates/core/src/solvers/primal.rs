//! The primal problem `V(x) = sup_θ E U(x + ∫θ dS - B)` over trading
//! strategies: supergradient ascent with averaging, then an exact polish
//! (Newton for smooth utilities, a linear program for piecewise-linear ones).

use alloc::vec;
use alloc::vec::Vec;

use super::check_inputs;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, solve_psd, Matrix};
use crate::lp::LinearProgram;
use crate::market::{gain_matrix, martingale_polytope, Claim, MarketTree, Strategy};
use crate::scalar::golden_section;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrimalOptions {
    /// Starting holdings, flattened over internal nodes.
    pub start: Option<Vec<f64>>,
    pub ascent_iterations: usize,
    pub max_newton: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        PrimalOptions {
            start: None,
            ascent_iterations: 200,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrimalSolution {
    /// `V(x)`.
    pub value: f64,
    /// Optimal terminal wealth `X*`.
    pub wealth: Vec<f64>,
    pub strategy: Strategy,
    /// Value reached by the averaged ascent before polishing.
    pub ascent_value: f64,
    pub polish_steps: usize,
}

struct Expected<'a> {
    u: &'a UtilitySpec,
    g: &'a Matrix,
    p: &'a [f64],
    b: &'a [f64],
    x: f64,
}

impl Expected<'_> {
    fn wealth(&self, theta: &[f64]) -> Vec<f64> {
        self.g.mul_vec(theta).into_iter().map(|v| self.x + v).collect()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let w = self.wealth(theta);
        (0..w.len()).map(|i| self.p[i] * self.u.value(w[i] - self.b[i])).sum()
    }

    fn supergradient(&self, theta: &[f64]) -> Vec<f64> {
        let w = self.wealth(theta);
        let s: Vec<f64> = (0..w.len())
            .map(|i| self.p[i] * self.u.superdiff(w[i] - self.b[i]).map(|d| d.midpoint()).unwrap_or(0.0))
            .collect();
        self.g.transpose_mul_vec(&s)
    }
}

fn ascend(e: &Expected, theta0: Vec<f64>, iterations: usize) -> Result<(Vec<f64>, f64)> {
    let k = theta0.len();
    let mut theta = theta0;
    let mut best = theta.clone();
    let mut best_val = e.value(&theta);
    let g0 = e.supergradient(&theta);
    let gn = norm2(&g0);
    if gn == 0.0 || k == 0 {
        return Ok((best, best_val));
    }
    // step scale from a line search along the first supergradient
    let dir: Vec<f64> = g0.iter().map(|v| v / gn).collect();
    let along = |a: f64| -> f64 {
        let t: Vec<f64> = theta.iter().zip(&dir).map(|(th, d)| th + a * d).collect();
        -e.value(&t)
    };
    let mut hi = 1.0;
    while along(hi) < along(0.5 * hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::PrimalDivergent);
        }
    }
    let (a0, _) = golden_section(along, 0.0, hi, 1e-6, 200);
    let b = 10.0;
    let a = a0.max(1e-8) * b;
    let mut avg = vec![0.0; k];
    let mut weight = 0.0;
    for it in 0..iterations {
        let g = e.supergradient(&theta);
        let n = norm2(&g);
        if n == 0.0 {
            break;
        }
        let step = a / (b + it as f64);
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t += step * gi / n;
        }
        weight += step;
        for (s, t) in avg.iter_mut().zip(&theta) {
            *s += step * t;
        }
        let v = e.value(&theta);
        if v > best_val {
            best_val = v;
            best = theta.clone();
        }
    }
    if weight > 0.0 {
        let mean: Vec<f64> = avg.iter().map(|s| s / weight).collect();
        let v = e.value(&mean);
        if v > best_val {
            best_val = v;
            best = mean;
        }
    }
    Ok((best, best_val))
}

fn polish_newton(e: &Expected, mut theta: Vec<f64>, max_newton: usize) -> Result<(Vec<f64>, usize)> {
    let k = theta.len();
    let n = e.p.len();
    let mut steps = 0;
    let mut f = e.value(&theta);
    while steps < max_newton {
        steps += 1;
        let w = e.wealth(&theta);
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        for i in 0..n {
            let z = w[i] - e.b[i];
            s[i] = e.p[i] * e.u.superdiff(z).map(|d| d.midpoint()).unwrap_or(0.0);
            c[i] = -e.p[i] * e.u.second_derivative(z).unwrap_or(0.0);
        }
        let grad = e.g.transpose_mul_vec(&s);
        let mut h = Matrix::zeros(k, k);
        for i in 0..n {
            if c[i] == 0.0 {
                continue;
            }
            let row = e.g.row(i);
            for a in 0..k {
                if row[a] == 0.0 {
                    continue;
                }
                for bb in 0..k {
                    *h.at_mut(a, bb) += c[i] * row[a] * row[bb];
                }
            }
        }
        let Some(step) = solve_psd(&h, &grad) else { break };
        let inc = dot(&grad, &step);
        if !(inc > 0.0) {
            break;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, d)| t + alpha * d).collect();
            let fc = e.value(&cand);
            if fc >= f + 1e-4 * alpha * inc {
                moved = cand != theta;
                theta = cand;
                f = fc;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            // near the optimum the value is flat to rounding; a full step
            // that shrinks the gradient is still progress
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, d)| t + d).collect();
            let gc = e.supergradient(&cand);
            if cand != theta && norm2(&gc) < norm2(&grad) && e.value(&cand) >= f - 1e-15 * (1.0 + f.abs()) {
                f = e.value(&cand);
                theta = cand;
            } else {
                break;
            }
        }
        if theta.iter().any(|t| !(t.abs() < 1e12)) {
            return Err(Error::PrimalDivergent);
        }
    }
    Ok((theta, steps))
}

fn polish_lp(e: &Expected, pieces: &[crate::utility::Affine]) -> Result<Vec<f64>> {
    let n = e.p.len();
    let k = e.g.cols;
    // variables θ (k, free) then t (n, free); maximize Σ p t
    let mut lp = LinearProgram::new(k + n);
    for j in 0..k + n {
        lp.free[j] = true;
    }
    for i in 0..n {
        lp.cost[k + i] = e.p[i];
    }
    for i in 0..n {
        let row_g = e.g.row(i);
        for a in pieces {
            // t_i ≤ c + s (x + Gθ - B)_i
            let mut row = vec![0.0; k + n];
            for j in 0..k {
                row[j] = -a.slope * row_g[j];
            }
            row[k + i] = 1.0;
            lp.add_le(row, a.intercept + a.slope * (e.x - e.b[i]));
        }
    }
    match lp.maximize() {
        crate::lp::LpOutcome::Optimal { x, .. } => Ok(x[..k].to_vec()),
        crate::lp::LpOutcome::Unbounded => Err(Error::PrimalDivergent),
        crate::lp::LpOutcome::Infeasible => Err(Error::Infeasible("primal epigraph program is infeasible".into())),
    }
}

/// Maximizes `θ ↦ E U(x + G θ - B)` over all strategies.
pub fn solve_primal_dynamic(tree: &MarketTree, u: &UtilitySpec, claim: &Claim, x: f64, opts: &PrimalOptions) -> Result<PrimalSolution> {
    check_inputs(tree, claim, x)?;
    u.validate()?;
    if u.domain_left().is_finite() {
        return Err(Error::Precondition(
            "strategy optimization needs a utility finite on the whole line".into(),
        ));
    }
    martingale_polytope(tree)?;
    let g = gain_matrix(tree);
    let e = Expected {
        u,
        g: &g,
        p: tree.atom_probs(),
        b: claim.payoff(),
        x,
    };
    let theta0 = match &opts.start {
        Some(s) if s.len() == g.cols => s.clone(),
        Some(s) => {
            return Err(Error::Precondition(alloc::format!(
                "start has {} entries, expected {}",
                s.len(),
                g.cols
            )))
        }
        None => vec![0.0; g.cols],
    };
    let (theta, ascent_value) = ascend(&e, theta0, opts.ascent_iterations)?;
    let (theta, polish_steps) = match u.affine_pieces() {
        Some(pieces) => (polish_lp(&e, &pieces)?, 1),
        None => polish_newton(&e, theta, opts.max_newton)?,
    };
    let wealth = e.wealth(&theta);
    let value = e.value(&theta);
    Ok(PrimalSolution {
        value,
        wealth,
        strategy: Strategy::from_flat(tree, &theta),
        ascent_value,
        polish_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trinomial_exponential_benchmark() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let s = solve_primal_dynamic(
            &t,
            &UtilitySpec::Exponential { eta: 1.0 },
            &Claim::zero(3),
            0.0,
            &PrimalOptions::default(),
        )
        .unwrap();
        let theta = 2.0 / 3.0 * 2f64.ln();
        assert!((s.strategy.holdings[0][0] - theta).abs() < 1e-10, "{:?}", s);
        let v = -(2f64.powf(1.0 / 3.0) + 1.0 + 2f64.powf(-2.0 / 3.0)) / 3.0;
        assert!((s.value - v).abs() < 1e-14);
        assert!(s.ascent_value <= s.value);
    }

    #[test]
    fn constant_market_keeps_cash() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![1.0]), (0.5, vec![1.0])]).unwrap();
        let s = solve_primal_dynamic(
            &t,
            &UtilitySpec::Exponential { eta: 1.0 },
            &Claim::zero(2),
            0.7,
            &PrimalOptions::default(),
        )
        .unwrap();
        assert!((s.value + (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_shortfall_hedge() {
        let t = MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap();
        let b = Claim::new(vec![0.0, 0.0, 1.0]).unwrap();
        let s = solve_primal_dynamic(&t, &UtilitySpec::QuadraticShortfall, &b, 0.2, &PrimalOptions::default()).unwrap();
        assert!((s.strategy.holdings[0][0] - 0.72).abs() < 1e-12, "{:?}", s);
        assert!((s.value + 0.032 / 3.0).abs() < 1e-14);
    }
}
