//! The primal problem over `C(x) = {X : E_Q X ≤ x for every martingale
//! measure Q}` with the wealth kept inside the utility's domain.

use alloc::vec;
use alloc::vec::Vec;

use super::check_inputs;
use crate::barrier::{BarrierOptions, BarrierProblem, Objective};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, LpOutcome};
use crate::market::{gain_matrix, martingale_polytope, Claim, MarketTree};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StaticSolution {
    pub value: f64,
    pub wealth: Vec<f64>,
    pub beta: f64,
    /// `X* - B ≥ -2β` on every atom.
    pub lower_bound_ok: bool,
    /// Budget constraints used: one per martingale vertex, or the
    /// superhedging form when the vertex list was capped.
    pub vertex_constraints: Option<usize>,
}

struct Negated<'a> {
    u: &'a UtilitySpec,
    p: &'a [f64],
    b: &'a [f64],
    /// Number of leading coordinates that are wealths.
    atoms: usize,
    dim: usize,
}

impl Objective for Negated<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, v: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..self.atoms {
            f -= self.p[i] * self.u.value(v[i] - self.b[i]);
        }
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    }

    fn accumulate(&self, v: &[f64], g: &mut [f64], h: &mut Matrix) {
        for i in 0..self.atoms {
            let z = v[i] - self.b[i];
            g[i] -= self.p[i] * self.u.superdiff(z).map(|d| d.midpoint()).unwrap_or(0.0);
            *h.at_mut(i, i) -= self.p[i] * self.u.second_derivative(z).unwrap_or(0.0);
        }
    }
}

/// Maximizes `E U(X - B)` over `X ∈ C(x)` with `X - B` in `dom(U)`.
pub fn solve_primal_static(tree: &MarketTree, u: &UtilitySpec, claim: &Claim, x: f64, beta: f64) -> Result<StaticSolution> {
    check_inputs(tree, claim, x)?;
    u.validate()?;
    if !(x > 0.0) {
        return Err(Error::Precondition(alloc::format!("initial capital must be positive, got {x}")));
    }
    if claim.sup_norm() > beta {
        return Err(Error::Precondition(alloc::format!(
            "‖B‖∞ = {} exceeds β = {beta}",
            claim.sup_norm()
        )));
    }
    let poly = martingale_polytope(tree)?;
    let n = tree.num_atoms();
    let p = tree.atom_probs();
    let b = claim.payoff();
    let left = u.domain_left();
    let (superrep, _) = poly.superreplication(tree, b);
    let g = gain_matrix(tree);
    let k = g.cols;
    let capped = poly.vertices.is_none();
    let dim = if capped { n + k } else { n };

    // budget rows a · v ≤ rhs
    let mut budget: Vec<(Vec<f64>, f64)> = Vec::new();
    match &poly.vertices {
        Some(vs) => {
            for q in vs {
                budget.push((q.clone(), x));
            }
        }
        None => {
            for i in 0..n {
                let mut row = vec![0.0; dim];
                row[i] = 1.0;
                for j in 0..k {
                    row[n + j] = -g.at(i, j);
                }
                budget.push((row, x));
            }
        }
    }
    let vertex_constraints = poly.vertices.as_ref().map(|v| v.len());

    let wealth = if let Some(pieces) = u.affine_pieces() {
        // variables: v (dim, free), t (n, free); maximize Σ p t
        let mut lp = LinearProgram::new(dim + n);
        lp.free.iter_mut().for_each(|f| *f = true);
        lp.cost[dim..dim + n].copy_from_slice(p);
        for (a, rhs) in &budget {
            let mut row = a.clone();
            row.resize(dim + n, 0.0);
            lp.add_le(row, *rhs);
        }
        for i in 0..n {
            for a in &pieces {
                let mut row = vec![0.0; dim + n];
                row[i] = -a.slope;
                row[dim + i] = 1.0;
                lp.add_le(row, a.intercept - a.slope * b[i]);
            }
            if left.is_finite() {
                let mut row = vec![0.0; dim + n];
                row[i] = 1.0;
                lp.add_ge(row, b[i] + left);
            }
        }
        match lp.maximize() {
            LpOutcome::Optimal { x: sol, .. } => sol[..n].to_vec(),
            LpOutcome::Unbounded => return Err(Error::PrimalDivergent),
            LpOutcome::Infeasible => return Err(Error::Infeasible("no wealth in C(x) keeps X - B in the domain".into())),
        }
    } else {
        let mut start = vec![0.0; dim];
        let mut inequalities = budget;
        if left.is_finite() {
            let eps = 0.5 * (x - (superrep + left));
            if !(eps > 0.0) {
                return Err(Error::Infeasible(alloc::format!(
                    "x = {x} does not exceed the superreplication price of B shifted to the domain edge ({})",
                    superrep + left
                )));
            }
            for i in 0..n {
                start[i] = b[i] + left + eps;
                let mut row = vec![0.0; dim];
                row[i] = -1.0;
                inequalities.push((row, -(b[i] + left)));
            }
        } else {
            for s in start.iter_mut().take(n) {
                *s = x - 1.0;
            }
        }
        let obj = Negated { u, p, b, atoms: n, dim };
        let problem = BarrierProblem {
            objective: &obj,
            inequalities,
            directions: None,
        };
        let opts = BarrierOptions {
            gap_tol: 1e-12,
            max_newton: 400,
            ..BarrierOptions::default()
        };
        problem.solve(&start, &opts)?.point[..n].to_vec()
    };
    let value: f64 = (0..n).map(|i| p[i] * u.value(wealth[i] - b[i])).sum();
    let lower_bound_ok = (0..n).all(|i| wealth[i] - b[i] >= -2.0 * beta - 1e-9);
    Ok(StaticSolution {
        value,
        wealth,
        beta,
        lower_bound_ok,
        vertex_constraints,
    })
}
