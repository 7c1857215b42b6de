//! Log-barrier interior-point method for smooth convex objectives under
//! linear inequalities, with optional affine parametrization for equality
//! constraints.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, solve_psd, Matrix};

/// A twice-differentiable convex objective. `value` returns `+∞` outside
/// the objective's own domain; `accumulate` adds the gradient and Hessian
/// at `v` into `g` and `h`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, v: &[f64]) -> f64;
    fn accumulate(&self, v: &[f64], g: &mut [f64], h: &mut Matrix);
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    pub t0: f64,
    pub mu: f64,
    /// Stop when the duality-gap bound `m / t` falls below this.
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            t0: 1.0,
            mu: 8.0,
            gap_tol: 1e-10,
            max_newton: 200,
        }
    }
}

pub struct BarrierProblem<'a> {
    pub objective: &'a dyn Objective,
    /// Rows `(a, b)` meaning `a · v <= b`.
    pub inequalities: Vec<(Vec<f64>, f64)>,
    /// Directions spanning the feasible affine set through the start point;
    /// `None` means the whole space.
    pub directions: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub point: Vec<f64>,
    pub value: f64,
    pub newton_steps: usize,
}

impl<'a> BarrierProblem<'a> {
    fn slacks(&self, v: &[f64]) -> Option<Vec<f64>> {
        let mut s = Vec::with_capacity(self.inequalities.len());
        for (a, b) in &self.inequalities {
            let r = b - dot(a, v);
            if !(r > 0.0) {
                return None;
            }
            s.push(r);
        }
        Some(s)
    }

    fn merit(&self, t: f64, v: &[f64]) -> f64 {
        let Some(s) = self.slacks(v) else { return f64::INFINITY };
        let f = self.objective.value(v);
        if !f.is_finite() {
            return f64::INFINITY;
        }
        t * f - s.iter().map(|x| x.ln()).sum::<f64>()
    }

    /// Minimizes the objective from a strictly feasible `start`.
    pub fn solve(&self, start: &[f64], opts: &BarrierOptions) -> Result<BarrierSolution> {
        let n = self.objective.dim();
        let dirs: Vec<Vec<f64>> = match &self.directions {
            Some(d) => d.clone(),
            None => (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
        };
        let k = dirs.len();
        let mut v = start.to_vec();
        if self.slacks(&v).is_none() || !self.objective.value(&v).is_finite() {
            return Err(Error::Infeasible(String::from("barrier start point is not strictly feasible")));
        }
        if k == 0 {
            let value = self.objective.value(&v);
            return Ok(BarrierSolution {
                point: v,
                value,
                newton_steps: 0,
            });
        }
        let m = self.inequalities.len().max(1) as f64;
        let mut t = opts.t0;
        let mut steps = 0usize;
        loop {
            // centering
            let mut inner = 0;
            loop {
                inner += 1;
                steps += 1;
                if inner > opts.max_newton {
                    return Err(Error::NoConvergence(String::from("barrier centering exceeded its Newton budget")));
                }
                let mut g = vec![0.0; n];
                let mut h = Matrix::zeros(n, n);
                self.objective.accumulate(&v, &mut g, &mut h);
                g.iter_mut().for_each(|x| *x *= t);
                h.data.iter_mut().for_each(|x| *x *= t);
                let s = self.slacks(&v).expect("iterate stays strictly feasible");
                for ((a, _), si) in self.inequalities.iter().zip(&s) {
                    axpy(1.0 / si, a, &mut g);
                    let w = 1.0 / (si * si);
                    for (i, &ai) in a.iter().enumerate() {
                        if ai == 0.0 {
                            continue;
                        }
                        let row = &mut h.data[i * n..(i + 1) * n];
                        axpy(w * ai, a, row);
                    }
                }
                // reduce to the direction space
                let hd: Vec<Vec<f64>> = dirs.iter().map(|d| h.mul_vec(d)).collect();
                let mut hr = Matrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        *hr.at_mut(i, j) = dot(&dirs[i], &hd[j]);
                    }
                }
                let gr: Vec<f64> = dirs.iter().map(|d| dot(d, &g)).collect();
                let neg: Vec<f64> = gr.iter().map(|x| -x).collect();
                let Some(step_r) = solve_psd(&hr, &neg) else {
                    return Err(Error::NoConvergence(String::from("singular barrier Newton system")));
                };
                let decrement = -dot(&gr, &step_r);
                let phi0 = self.merit(t, &v);
                if decrement <= 1e-13 * (1.0 + phi0.abs()) {
                    break;
                }
                let mut dv = vec![0.0; n];
                for (d, c) in dirs.iter().zip(&step_r) {
                    axpy(*c, d, &mut dv);
                }
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..80 {
                    let cand: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + alpha * b).collect();
                    let phi = self.merit(t, &cand);
                    if phi <= phi0 - 0.25 * alpha * decrement {
                        accepted = cand != v;
                        v = cand;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !accepted || decrement <= 1e-10 && alpha == 1.0 {
                    break;
                }
            }
            if m / t < opts.gap_tol {
                break;
            }
            t *= opts.mu;
        }
        let value = self.objective.value(&v);
        Ok(BarrierSolution {
            point: v,
            value,
            newton_steps: steps,
        })
    }
}
