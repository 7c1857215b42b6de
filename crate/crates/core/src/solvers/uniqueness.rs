//! Uniqueness diagnostics: perturbed restarts of the primal and the extent
//! of the dual optimal face.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solve_dual, solve_primal_dynamic, solve_primal_static, DualOptions, PrimalOptions, Tolerances};
use crate::conjugate::conjugate;
use crate::error::Result;
use crate::linalg::orthonormal_basis;
use crate::lp::{LinearProgram, LpOutcome};
use crate::market::{martingale_polytope, Claim, MarketTree};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniquenessReport {
    pub strictly_concave: bool,
    pub restarts: usize,
    /// Largest atomwise distance between restarted `X*` and the first one.
    pub primal_spread: f64,
    pub primal_unique: bool,
    /// Atoms where `∂U(X* - B)` is a nondegenerate interval.
    pub kink_atoms: Vec<usize>,
    /// Dimension of the dual optimal face.
    pub dual_face_dimension: usize,
    /// Range of a random linear functional over the dual optimal face.
    pub dual_spread: f64,
    pub dual_unique: bool,
}

/// Re-solves the primal from `perturbations` random starts and probes the
/// dual optimal face `{W ∈ K : W ∈ ∂U(X* - B), E[X* W] = x E[W]}` with a
/// random linear functional.
pub fn uniqueness_probe(
    tree: &MarketTree,
    u: &UtilitySpec,
    claim: &Claim,
    x: f64,
    perturbations: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<UniquenessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounded = u.domain_left().is_finite();
    let (wealth, primal_spread, restarts) = if bounded {
        let beta = claim.sup_norm().max(-0.5 * u.domain_left());
        let s = solve_primal_static(tree, u, claim, x, beta)?;
        (s.wealth, 0.0, 0)
    } else {
        let base = solve_primal_dynamic(tree, u, claim, x, &PrimalOptions::default())?;
        let theta = base.strategy.to_flat(tree);
        let mut spread = 0.0f64;
        for _ in 0..perturbations {
            let start: Vec<f64> = theta.iter().map(|t| t + (1.0 + t.abs()) * rng.gen_range(-1.0..1.0)).collect();
            let opts = PrimalOptions {
                start: Some(start),
                ..PrimalOptions::default()
            };
            let s = solve_primal_dynamic(tree, u, claim, x, &opts)?;
            for (a, b) in s.wealth.iter().zip(&base.wealth) {
                spread = spread.max((a - b).abs());
            }
        }
        (base.wealth, spread, perturbations)
    };

    let dual = solve_dual(tree, &conjugate(u)?, claim, x, &DualOptions::default(), tol)?;
    let n = wealth.len();
    let b = claim.payoff();
    let p = tree.atom_probs();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut kink_atoms = Vec::new();
    for i in 0..n {
        let z = wealth[i] - b[i];
        let s = u.superdiff(z).unwrap_or(crate::interval::Interval::new(0.0, f64::INFINITY));
        if s.width() > 0.0 {
            kink_atoms.push(i);
        }
        let d = tol.inclusion_radius * (1.0 + dual.big_y[i]);
        lo[i] = (s.lo - d).max(0.0);
        // at a finite domain edge ∂U is unbounded above; cap it so the LP stays bounded
        hi[i] = if s.hi.is_finite() {
            s.hi + d
        } else {
            4.0 * dual.big_y[i].max(s.lo) + 1.0
        };
    }
    let poly = martingale_polytope(tree)?;
    let mut rows = poly.cone_rows(tree);
    rows.push((0..n).map(|i| p[i] * (wealth[i] - x)).collect());

    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let build = |sign: f64| {
        let mut lp = LinearProgram::new(n);
        lp.cost = c.iter().map(|v| sign * v).collect();
        for r in &rows {
            lp.add_eq(r.clone(), 0.0);
        }
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            lp.add_ge(e.clone(), lo[i]);
            lp.add_le(e, hi[i]);
        }
        lp
    };
    let dual_spread = match (build(1.0).minimize(), build(1.0).maximize()) {
        (LpOutcome::Optimal { value: a, .. }, LpOutcome::Optimal { value: b2, .. }) => b2 - a,
        _ => 0.0,
    };
    // free coordinates are the kink atoms; the face dimension is what the
    // linear constraints leave of them
    let restricted: Vec<Vec<f64>> = rows.iter().map(|r| kink_atoms.iter().map(|&i| r[i]).collect()).collect();
    let rank = orthonormal_basis(&restricted, 1e-9).len();
    let dual_face_dimension = kink_atoms.len().saturating_sub(rank);
    let scale = 1.0 + dual.big_y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(UniquenessReport {
        strictly_concave: u.is_strictly_concave(),
        restarts,
        primal_spread,
        primal_unique: primal_spread <= tol.uniqueness,
        kink_atoms,
        dual_face_dimension,
        dual_spread,
        dual_unique: dual_face_dimension == 0 || dual_spread <= tol.uniqueness * scale,
    })
}
