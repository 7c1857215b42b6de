//! Replication of a claim under a given equivalent martingale measure.

use alloc::vec;
use alloc::vec::Vec;

use super::{MarketTree, Strategy};
use crate::linalg::{least_squares, Matrix};

/// Residuals up to `REPLICATION_TOL (1 + ‖X‖_∞)` count as replicable.
pub const REPLICATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Replication {
    pub strategy: Strategy,
    /// `E_Q[X]`, the capital the strategy starts from.
    pub cost: f64,
    /// `E_Q[X | ν]` at every node.
    pub node_values: Vec<f64>,
    /// Per child node, `θ·ΔS - (M_child - M_parent)` (zero at the root).
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub replicable: bool,
}

/// Backward recursion `M_ν = E_Q[X | ν]` with least-squares hedges
/// `θ_ν·ΔS_c ≈ M_c - M_ν` on each branch; `q` is the atom measure of `Q`.
pub fn replicate(tree: &MarketTree, q: &[f64], x: &[f64]) -> Replication {
    let nn = tree.nodes().len();
    let mass = tree.node_mass(q);
    let mut m = vec![0.0; nn];
    for (w, &a) in tree.atoms().iter().enumerate() {
        m[a] = x[w];
    }
    for v in (0..nn).rev() {
        let nd = tree.node(v);
        if nd.children.is_empty() {
            continue;
        }
        m[v] = if mass[v] > 0.0 {
            nd.children.iter().map(|&c| mass[c] * m[c]).sum::<f64>() / mass[v]
        } else {
            nd.children.iter().map(|&c| tree.node(c).prob * m[c]).sum()
        };
    }
    let d = tree.num_assets();
    let mut strategy = Strategy::zero(tree);
    let mut residuals = vec![0.0; nn];
    for v in tree.internal_nodes() {
        let ch = &tree.node(v).children;
        let mut a = Matrix::zeros(ch.len(), d);
        let mut b = vec![0.0; ch.len()];
        for (r, &c) in ch.iter().enumerate() {
            let inc = tree.increment(v, c);
            for i in 0..d {
                *a.at_mut(r, i) = inc[i];
            }
            b[r] = m[c] - m[v];
        }
        let th = least_squares(&a, &b);
        let fit = a.mul_vec(&th);
        for (r, &c) in ch.iter().enumerate() {
            residuals[c] = fit[r] - b[r];
        }
        strategy.holdings[v] = th;
    }
    let max_residual = residuals.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    let scale = 1.0 + x.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    Replication {
        strategy,
        cost: m[0],
        node_values: m,
        residuals,
        max_residual,
        replicable: max_residual <= REPLICATION_TOL * scale,
    }
}
