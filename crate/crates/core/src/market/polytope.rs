//! The polytope of martingale measures of a finite tree, as a product of
//! local polytopes `{p ≥ 0 : Σ p = 1, Σ p_c ΔS_c = 0}` at the nodes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::MarketTree;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, orthonormal_basis, Matrix};
use crate::lp::LinearProgram;

/// A vertex as `(atom, mass)` pairs over the atoms it charges.
type SparseVertex = Vec<(usize, f64)>;

pub const DEFAULT_VERTEX_CAP: usize = 10_000;

/// Conditional martingale probabilities at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolytope {
    pub node: usize,
    pub children: Vec<usize>,
    /// Vertices as conditional probabilities over `children`.
    pub vertices: Vec<Vec<f64>>,
    /// The point maximizing the smallest branch probability.
    pub interior: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MartingalePolytope {
    pub local: Vec<LocalPolytope>,
    local_index: BTreeMap<usize, usize>,
    /// Rows `(a, b)` with `a · q = b` over atom measures `q ≥ 0`.
    pub equalities: Vec<(Vec<f64>, f64)>,
    /// Vertices as atom measures; `None` when there are more than the cap.
    pub vertices: Option<Vec<Vec<f64>>>,
    /// A strictly positive martingale measure.
    pub interior: Vec<f64>,
}

/// Constraint system, vertices and an interior point of the martingale
/// measures, with the default vertex cap.
pub fn martingale_polytope(tree: &MarketTree) -> Result<MartingalePolytope> {
    MartingalePolytope::with_cap(tree, DEFAULT_VERTEX_CAP)
}

/// `sup_Q E_Q[X]`.
pub fn superreplication_price(tree: &MarketTree, x: &[f64]) -> Result<f64> {
    Ok(martingale_polytope(tree)?.superreplication(tree, x).0)
}

/// `inf_Q E_Q[X]`.
pub fn subreplication_price(tree: &MarketTree, x: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    Ok(-superreplication_price(tree, &neg)?)
}

fn local_system(tree: &MarketTree, node: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let children = tree.node(node).children.clone();
    let d = tree.num_assets();
    let mut rows = vec![vec![1.0; children.len()]];
    for i in 0..d {
        rows.push(
            children
                .iter()
                .map(|&c| tree.node(c).prices[i] - tree.node(node).prices[i])
                .collect(),
        );
    }
    (children, rows)
}

fn local_vertices(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let m = rows.len();
    let scale = rows.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << k) {
        let support: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        if support.len() > m {
            continue;
        }
        let cols: Vec<Vec<f64>> = support.iter().map(|&j| rows.iter().map(|r| r[j]).collect()).collect();
        if orthonormal_basis(&cols, 1e-10).len() < support.len() {
            continue;
        }
        let mut a = Matrix::zeros(m, support.len());
        for (jj, col) in cols.iter().enumerate() {
            for i in 0..m {
                *a.at_mut(i, jj) = col[i];
            }
        }
        let mut b = vec![0.0; m];
        b[0] = 1.0;
        let p = least_squares(&a, &b);
        let resid = a.mul_vec(&p).iter().zip(&b).fold(0.0f64, |r, (u, v)| r.max((u - v).abs()));
        if resid > 1e-11 * scale || p.iter().any(|&v| !(v > 1e-13)) {
            continue;
        }
        let mut full = vec![0.0; k];
        for (jj, &j) in support.iter().enumerate() {
            full[j] = p[jj];
        }
        out.push(full);
    }
    out
}

fn local_interior(rows: &[Vec<f64>], k: usize) -> Option<Vec<f64>> {
    // variables p_1..p_k, t; maximize t subject to p_c ≥ t
    let mut lp = LinearProgram::new(k + 1);
    lp.cost[k] = 1.0;
    for (i, r) in rows.iter().enumerate() {
        let mut row = r.clone();
        row.push(0.0);
        lp.add_eq(row, if i == 0 { 1.0 } else { 0.0 });
    }
    for c in 0..k {
        let mut row = vec![0.0; k + 1];
        row[c] = 1.0;
        row[k] = -1.0;
        lp.add_ge(row, 0.0);
    }
    let (x, t) = lp.maximize().optimal()?;
    if t > 1e-12 {
        Some(x[..k].to_vec())
    } else {
        None
    }
}

impl MartingalePolytope {
    pub fn with_cap(tree: &MarketTree, vertex_cap: usize) -> Result<Self> {
        let mut local = Vec::new();
        let mut local_index = BTreeMap::new();
        for v in tree.internal_nodes() {
            let (children, rows) = local_system(tree, v);
            let k = children.len();
            let interior = local_interior(&rows, k)
                .ok_or_else(|| Error::Arbitrage(format!("no strictly positive martingale probabilities at node {v}")))?;
            let vertices = local_vertices(&rows, k);
            if vertices.is_empty() {
                return Err(Error::Arbitrage(format!("no martingale probabilities at node {v}")));
            }
            local_index.insert(v, local.len());
            local.push(LocalPolytope {
                node: v,
                children,
                vertices,
                interior,
            });
        }
        let n = tree.num_atoms();
        let mut equalities = vec![(vec![1.0; n], 1.0)];
        for v in tree.internal_nodes() {
            let (a, b) = tree.atom_range(v);
            for i in 0..tree.num_assets() {
                let mut row = vec![0.0; n];
                for (w, slot) in row.iter_mut().enumerate().take(b).skip(a) {
                    *slot = tree.node(tree.child_towards(v, w)).prices[i] - tree.node(v).prices[i];
                }
                equalities.push((row, 0.0));
            }
        }
        let mut poly = MartingalePolytope {
            local,
            local_index,
            equalities,
            vertices: None,
            interior: Vec::new(),
        };
        poly.interior = poly.product_measure(tree, |lp| lp.interior.clone());
        poly.vertices = poly.enumerate(tree, 0, vertex_cap).map(|sparse| {
            sparse
                .into_iter()
                .map(|s| {
                    let mut q = vec![0.0; n];
                    for (w, p) in s {
                        q[w] = p;
                    }
                    q
                })
                .collect()
        });
        Ok(poly)
    }

    pub fn local_at(&self, node: usize) -> Option<&LocalPolytope> {
        self.local_index.get(&node).map(|&i| &self.local[i])
    }

    /// Every local polytope is a single point (complete market).
    pub fn is_singleton(&self) -> bool {
        self.local.iter().all(|l| l.vertices.len() == 1)
    }

    /// Atom measure obtained by picking one conditional law per node.
    pub fn product_measure<F: Fn(&LocalPolytope) -> Vec<f64>>(&self, tree: &MarketTree, pick: F) -> Vec<f64> {
        let mut node_q = vec![0.0; tree.nodes().len()];
        node_q[0] = 1.0;
        for lp in &self.local {
            let p = pick(lp);
            for (c, pc) in lp.children.iter().zip(p) {
                node_q[*c] = node_q[lp.node] * pc;
            }
        }
        tree.atoms().iter().map(|&a| node_q[a]).collect()
    }

    fn enumerate(&self, tree: &MarketTree, node: usize, cap: usize) -> Option<Vec<SparseVertex>> {
        let Some(lp) = self.local_at(node) else {
            let (a, _) = tree.atom_range(node);
            return Some(vec![vec![(a, 1.0)]]);
        };
        let mut sub: Vec<Option<Vec<SparseVertex>>> = vec![None; lp.children.len()];
        let mut out = Vec::new();
        for v in &lp.vertices {
            let mut acc: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
            for (j, &c) in lp.children.iter().enumerate() {
                if v[j] == 0.0 {
                    continue;
                }
                if sub[j].is_none() {
                    sub[j] = Some(self.enumerate(tree, c, cap)?);
                }
                let parts = sub[j].as_ref().unwrap();
                if acc.len().saturating_mul(parts.len()) > cap {
                    return None;
                }
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for p in parts {
                        let mut m = a.clone();
                        m.extend(p.iter().map(|(w, q)| (*w, q * v[j])));
                        next.push(m);
                    }
                }
                acc = next;
            }
            out.extend(acc);
            if out.len() > cap {
                return None;
            }
        }
        Some(out)
    }

    /// `sup_Q E_Q[X]` by backward induction over local vertices, with the
    /// maximizing measure.
    pub fn superreplication(&self, tree: &MarketTree, x: &[f64]) -> (f64, Vec<f64>) {
        let nn = tree.nodes().len();
        let mut val = vec![0.0; nn];
        let mut choice = vec![0usize; nn];
        for (w, &a) in tree.atoms().iter().enumerate() {
            val[a] = x[w];
        }
        for lp in self.local.iter().rev() {
            let mut best = f64::NEG_INFINITY;
            for (k, v) in lp.vertices.iter().enumerate() {
                let e: f64 = lp.children.iter().zip(v).map(|(c, p)| p * val[*c]).sum();
                if e > best {
                    best = e;
                    choice[lp.node] = k;
                }
            }
            val[lp.node] = best;
        }
        let q = self.product_measure(tree, |lp| lp.vertices[choice[lp.node]].clone());
        (val[0], q)
    }

    /// Largest violation of the constraint system at atom measure `q`.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let mut r = q.iter().fold(0.0f64, |m, v| m.max(-v));
        for (a, b) in &self.equalities {
            let s: f64 = a.iter().zip(q).map(|(u, v)| u * v).sum();
            r = r.max((s - b).abs());
        }
        r
    }

    /// Martingale rows in terms of a density-like variable `W` (`q = P W`),
    /// i.e. `Σ_{ω ∈ ν} P(ω) ΔS_i(ω) W(ω) = 0`.
    pub fn cone_rows(&self, tree: &MarketTree) -> Vec<Vec<f64>> {
        self.equalities[1..]
            .iter()
            .map(|(a, _)| a.iter().zip(tree.atom_probs()).map(|(u, p)| u * p).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trinomial() -> MarketTree {
        MarketTree::one_period(vec![1.0], &[(1.0 / 3.0, vec![0.5]), (1.0 / 3.0, vec![1.0]), (1.0 / 3.0, vec![2.0])]).unwrap()
    }

    #[test]
    fn binomial_has_a_unique_measure() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![0.5])]).unwrap();
        let p = martingale_polytope(&t).unwrap();
        let v = p.vertices.as_ref().unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(p.is_singleton());
    }

    #[test]
    fn trinomial_segment() {
        let t = trinomial();
        let p = martingale_polytope(&t).unwrap();
        let mut v = p.vertices.clone().unwrap();
        v.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], vec![0.0, 1.0, 0.0]);
        assert!((v[1][0] - 2.0 / 3.0).abs() < 1e-15 && v[1][1] == 0.0 && (v[1][2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(p.interior.iter().all(|&q| q > 0.0));
        assert!(p.residual(&p.interior) < 1e-14);
        let (price, q) = p.superreplication(&t, &[0.0, 0.0, 1.0]);
        assert!((price - 1.0 / 3.0).abs() < 1e-15);
        assert!((q[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(subreplication_price(&t, &[0.0, 0.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_prices_give_the_simplex() {
        let t = MarketTree::one_period(vec![1.0], &[(0.2, vec![1.0]), (0.3, vec![1.0]), (0.5, vec![1.0])]).unwrap();
        let p = martingale_polytope(&t).unwrap();
        assert_eq!(p.vertices.unwrap().len(), 3);
    }

    #[test]
    fn arbitrage_is_detected() {
        let t = MarketTree::one_period(vec![1.0], &[(0.5, vec![2.0]), (0.5, vec![1.5])]).unwrap();
        let e = martingale_polytope(&t).unwrap_err();
        use alloc::string::ToString;
        assert!(e.to_string().contains("M^e(S) = ∅"), "{e}");
    }

    #[test]
    fn two_period_vertices_are_products() {
        let t = MarketTree::lattice(1.0, &[2.0, 1.0, 0.5], &[0.25, 0.5, 0.25], 2).unwrap();
        let p = martingale_polytope(&t).unwrap();
        let v = p.vertices.as_ref().unwrap();
        // root vertex (0,1,0) reaches one child, (1/3,0,2/3) reaches two
        assert_eq!(v.len(), 2 + 2 * 2);
        for q in v {
            assert!(p.residual(q) < 1e-14);
        }
        assert!(MartingalePolytope::with_cap(&t, 5).unwrap().vertices.is_none());
    }
}
