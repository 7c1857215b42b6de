//! Finite event-tree markets: nodes carry asset prices, branches carry
//! strictly positive conditional probabilities, terminal nodes are the atoms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::dot;

mod polytope;
mod replicate;

pub use polytope::{
    martingale_polytope, subreplication_price, superreplication_price, LocalPolytope, MartingalePolytope, DEFAULT_VERTEX_CAP,
};
pub use replicate::{replicate, Replication, REPLICATION_TOL};

/// One node as written in a scenario: its parent (by index), the
/// conditional probability of the branch leading to it and its prices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeSpec {
    #[cfg_attr(feature = "serde", serde(default))]
    pub parent: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub prob: f64,
    pub prices: Vec<f64>,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub time: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Conditional probability of reaching this node from its parent.
    pub prob: f64,
    pub prices: Vec<f64>,
}

/// A validated event tree. Nodes are stored parents-first; atoms are the
/// terminal nodes in depth-first order, so every node owns a contiguous
/// range of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTree {
    nodes: Vec<Node>,
    assets: usize,
    atoms: Vec<usize>,
    atom_prob: Vec<f64>,
    atom_range: Vec<(usize, usize)>,
    node_prob: Vec<f64>,
    /// For each atom, the node path from the root.
    paths: Vec<Vec<usize>>,
}

impl MarketTree {
    /// Builds a tree from node specs; node 0 is the root and every parent
    /// must precede its children.
    pub fn new(specs: &[NodeSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        let assets = specs[0].prices.len();
        if assets == 0 {
            return Err(Error::InvalidTree("at least one asset is required".into()));
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if s.prices.len() != assets {
                return Err(Error::InvalidTree(format!(
                    "node {i} has {} prices, expected {assets}",
                    s.prices.len()
                )));
            }
            if s.prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::InvalidTree(format!("node {i} has a nonpositive or non-finite price")));
            }
            let time = match (i, s.parent) {
                (0, None) => 0,
                (0, Some(_)) => return Err(Error::InvalidTree("node 0 must be the root".into())),
                (_, None) => return Err(Error::InvalidTree(format!("node {i} has no parent"))),
                (_, Some(p)) if p >= i => return Err(Error::InvalidTree(format!("node {i} lists parent {p}, which does not precede it"))),
                (_, Some(p)) => nodes[p].time + 1,
            };
            if i > 0 && !(s.prob.is_finite() && s.prob > 0.0) {
                return Err(Error::InvalidTree(format!(
                    "node {i} has branch probability {}, must be positive",
                    s.prob
                )));
            }
            nodes.push(Node {
                time,
                parent: s.parent,
                children: Vec::new(),
                prob: if i == 0 { 1.0 } else { s.prob },
                prices: s.prices.clone(),
            });
            if let Some(p) = s.parent {
                nodes[p].children.push(i);
            }
        }
        for (i, nd) in nodes.iter().enumerate() {
            if nd.children.is_empty() {
                continue;
            }
            let total: f64 = nd.children.iter().map(|&c| nodes[c].prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTree(format!("branch probabilities at node {i} sum to {total}")));
            }
        }
        let mut node_prob = vec![1.0; nodes.len()];
        for i in 1..nodes.len() {
            node_prob[i] = node_prob[nodes[i].parent.unwrap()] * nodes[i].prob;
        }
        let mut atoms = Vec::new();
        let mut atom_range = vec![(0, 0); nodes.len()];
        let mut paths = Vec::new();
        // iterative depth-first traversal recording atom ranges
        let mut stack: Vec<(usize, bool)> = vec![(0, false)];
        let mut path: Vec<usize> = Vec::new();
        while let Some((v, done)) = stack.pop() {
            if done {
                atom_range[v].1 = atoms.len();
                path.pop();
                continue;
            }
            atom_range[v].0 = atoms.len();
            path.push(v);
            stack.push((v, true));
            if nodes[v].children.is_empty() {
                atoms.push(v);
                paths.push(path.clone());
            } else {
                for &c in nodes[v].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        let atom_prob = atoms.iter().map(|&a| node_prob[a]).collect();
        Ok(MarketTree {
            nodes,
            assets,
            atoms,
            atom_prob,
            atom_range,
            node_prob,
            paths,
        })
    }

    /// One period from `s0` to the listed `(probability, prices)` outcomes.
    pub fn one_period(s0: Vec<f64>, outcomes: &[(f64, Vec<f64>)]) -> Result<Self> {
        let mut specs = vec![NodeSpec {
            parent: None,
            prob: 1.0,
            prices: s0,
        }];
        for (p, s) in outcomes {
            specs.push(NodeSpec {
                parent: Some(0),
                prob: *p,
                prices: s.clone(),
            });
        }
        MarketTree::new(&specs)
    }

    /// Single-asset multiplicative lattice expanded into a full tree: each
    /// node branches into `s * factors[j]` with probability `probs[j]`.
    pub fn lattice(s0: f64, factors: &[f64], probs: &[f64], periods: usize) -> Result<Self> {
        if factors.len() != probs.len() {
            return Err(Error::InvalidTree("factor and probability lists differ in length".into()));
        }
        let mut specs = vec![NodeSpec {
            parent: None,
            prob: 1.0,
            prices: vec![s0],
        }];
        let mut frontier = vec![0usize];
        for _ in 0..periods {
            let mut next = Vec::new();
            for &v in &frontier {
                for (f, p) in factors.iter().zip(probs) {
                    specs.push(NodeSpec {
                        parent: Some(v),
                        prob: *p,
                        prices: vec![specs[v].prices[0] * f],
                    });
                    next.push(specs.len() - 1);
                }
            }
            frontier = next;
        }
        MarketTree::new(&specs)
    }

    /// Node specs reproducing this tree.
    pub fn to_specs(&self) -> Vec<NodeSpec> {
        self.nodes
            .iter()
            .map(|n| NodeSpec {
                parent: n.parent,
                prob: n.prob,
                prices: n.prices.clone(),
            })
            .collect()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn num_assets(&self) -> usize {
        self.assets
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Terminal node of each atom.
    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    /// `P(ω)` for each atom.
    pub fn atom_probs(&self) -> &[f64] {
        &self.atom_prob
    }

    /// `P(ν)` for each node.
    pub fn node_probs(&self) -> &[f64] {
        &self.node_prob
    }

    /// Half-open range of atoms below node `i`.
    pub fn atom_range(&self, i: usize) -> (usize, usize) {
        self.atom_range[i]
    }

    /// Nodes along the path of atom `w`, root first.
    pub fn path(&self, w: usize) -> &[usize] {
        &self.paths[w]
    }

    /// Non-terminal nodes in storage order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| !self.nodes[i].children.is_empty())
    }

    pub fn horizon(&self) -> usize {
        self.nodes.iter().map(|n| n.time).max().unwrap_or(0)
    }

    /// Price increment `S(child) - S(node)`.
    pub fn increment(&self, node: usize, child: usize) -> Vec<f64> {
        self.nodes[child]
            .prices
            .iter()
            .zip(&self.nodes[node].prices)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Child of `node` on the path of atom `w` (which must lie below it).
    pub fn child_towards(&self, node: usize, w: usize) -> usize {
        self.paths[w][self.nodes[node].time + 1]
    }

    /// `E_P[X]`.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        dot(&self.atom_prob, x)
    }

    /// Per-node sums `Σ_{ω below ν} m(ω)` of an atom measure.
    pub fn node_mass(&self, m: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|i| {
                let (a, b) = self.atom_range[i];
                m[a..b].iter().sum()
            })
            .collect()
    }
}

/// A bounded claim, one payoff per atom.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Claim {
    payoff: Vec<f64>,
}

impl Claim {
    pub fn new(payoff: Vec<f64>) -> Result<Self> {
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidClaim("claim payoffs must be finite".into()));
        }
        Ok(Claim { payoff })
    }

    pub fn zero(atoms: usize) -> Self {
        Claim { payoff: vec![0.0; atoms] }
    }

    pub fn constant(atoms: usize, c: f64) -> Self {
        Claim { payoff: vec![c; atoms] }
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    pub fn len(&self) -> usize {
        self.payoff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoff.is_empty()
    }

    /// `‖B‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.payoff.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn shifted(&self, c: f64) -> Claim {
        Claim {
            payoff: self.payoff.iter().map(|v| v + c).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Claim {
        Claim {
            payoff: self.payoff.iter().map(|v| v * c).collect(),
        }
    }

    pub fn check_against(&self, tree: &MarketTree) -> Result<()> {
        if self.payoff.len() != tree.num_atoms() {
            return Err(Error::InvalidClaim(format!(
                "claim has {} payoffs but the tree has {} atoms",
                self.payoff.len(),
                tree.num_atoms()
            )));
        }
        Ok(())
    }
}

/// Holdings chosen at each non-terminal node (empty at terminal nodes).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Strategy {
    pub holdings: Vec<Vec<f64>>,
}

impl Strategy {
    pub fn zero(tree: &MarketTree) -> Self {
        Strategy {
            holdings: tree
                .nodes()
                .iter()
                .map(|n| {
                    if n.children.is_empty() {
                        Vec::new()
                    } else {
                        vec![0.0; tree.num_assets()]
                    }
                })
                .collect(),
        }
    }

    /// Flattens the holdings of the internal nodes in storage order.
    pub fn to_flat(&self, tree: &MarketTree) -> Vec<f64> {
        tree.internal_nodes().flat_map(|i| self.holdings[i].iter().copied()).collect()
    }

    pub fn from_flat(tree: &MarketTree, flat: &[f64]) -> Self {
        let mut s = Strategy::zero(tree);
        let d = tree.num_assets();
        for (k, i) in tree.internal_nodes().enumerate() {
            s.holdings[i].copy_from_slice(&flat[k * d..(k + 1) * d]);
        }
        s
    }

    pub fn add(&self, other: &Strategy) -> Strategy {
        Strategy {
            holdings: self
                .holdings
                .iter()
                .zip(&other.holdings)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }
}

/// Wealth process `x + Σ θ·ΔS` at every node.
pub fn wealth_process(tree: &MarketTree, x: f64, theta: &Strategy) -> Vec<f64> {
    let mut w = vec![0.0; tree.nodes().len()];
    w[0] = x;
    for i in 1..tree.nodes().len() {
        let p = tree.node(i).parent.unwrap();
        let inc = tree.increment(p, i);
        w[i] = w[p] + dot(&theta.holdings[p], &inc);
    }
    w
}

/// Gains matrix: row `ω`, column `(k, i)` for the `k`-th internal node and
/// asset `i`, holding `ΔS_i` along the path of `ω` (zero off the path), so
/// that `X_T = x + G θ_flat`.
pub fn gain_matrix(tree: &MarketTree) -> crate::linalg::Matrix {
    let internal: Vec<usize> = tree.internal_nodes().collect();
    let d = tree.num_assets();
    let mut g = crate::linalg::Matrix::zeros(tree.num_atoms(), internal.len() * d);
    for (k, &v) in internal.iter().enumerate() {
        let (a, b) = tree.atom_range(v);
        for w in a..b {
            let inc = tree.increment(v, tree.child_towards(v, w));
            for i in 0..d {
                *g.at_mut(w, k * d + i) = inc[i];
            }
        }
    }
    g
}

/// Terminal wealth `X_T = x + Σ_t θ_t·(S_{t+1} - S_t)` on each atom.
pub fn terminal_wealth(tree: &MarketTree, x: f64, theta: &Strategy) -> Vec<f64> {
    let w = wealth_process(tree, x, theta);
    tree.atoms().iter().map(|&a| w[a]).collect()
}

/// A density `Z = dQ/dP` on the atoms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MartingaleDensity {
    pub z: Vec<f64>,
}

impl MartingaleDensity {
    /// From atom probabilities `Q(ω)`.
    pub fn from_measure(tree: &MarketTree, q: &[f64]) -> Self {
        MartingaleDensity {
            z: q.iter().zip(tree.atom_probs()).map(|(a, p)| a / p).collect(),
        }
    }

    pub fn measure(&self, tree: &MarketTree) -> Vec<f64> {
        self.z.iter().zip(tree.atom_probs()).map(|(a, p)| a * p).collect()
    }

    /// `Z > 0` on every atom, i.e. the measure is equivalent to `P`.
    pub fn is_equivalent(&self) -> bool {
        self.z.iter().all(|&v| v > 0.0)
    }

    /// Largest violation of `Z ≥ 0`, `E[Z] = 1` and the node-wise martingale
    /// identities `E[Z S_{t+1} 1_ν] = S_t(ν) E[Z 1_ν]`.
    pub fn residual(&self, tree: &MarketTree) -> f64 {
        let q = self.measure(tree);
        let mut res = (q.iter().sum::<f64>() - 1.0).abs();
        res = res.max(self.z.iter().fold(0.0f64, |m, v| m.max(-v)));
        for v in tree.internal_nodes() {
            let (a, b) = tree.atom_range(v);
            for i in 0..tree.num_assets() {
                let s: f64 = (a..b)
                    .map(|w| q[w] * (tree.node(tree.child_towards(v, w)).prices[i] - tree.node(v).prices[i]))
                    .sum();
                res = res.max(s.abs());
            }
        }
        res
    }
}
