//! Seeded random instances: small event trees free of arbitrage, bounded
//! claims and initial capitals.

use std::f64::consts::PI;

use nsdual_core::{Claim, MarketTree, NodeSpec, UtilitySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 20_240_601;
pub const CORPUS_SIZE: usize = 20;

#[derive(Debug, Clone)]
pub struct Instance {
    pub index: usize,
    pub periods: usize,
    pub branches: usize,
    pub assets: usize,
    pub tree: MarketTree,
    pub claim: Claim,
    pub x: f64,
}

/// The utilities every corpus instance is solved with.
pub fn corpus_utilities() -> Vec<UtilitySpec> {
    vec![
        UtilitySpec::Exponential { eta: 1.0 },
        UtilitySpec::QuadraticShortfall,
        UtilitySpec::PiecewiseLinear {
            kinks: vec![(-1.0, 2.0), (0.0, 1.0), (1.0, 0.5)],
        },
    ]
}

/// Gross returns of one node's children. With one asset there is at least
/// one up and one down move; with two, the return vectors surround the
/// origin (angular gaps below π), so every node admits an equivalent
/// martingale measure.
fn node_factors(rng: &mut ChaCha8Rng, branches: usize, assets: usize) -> Vec<Vec<f64>> {
    if assets == 1 {
        let mut f: Vec<f64> = (0..branches).map(|_| 1.0 + rng.gen_range(-0.4..0.6)).collect();
        f[0] = 1.0 + rng.gen_range(0.05..0.6);
        f[1] = 1.0 - rng.gen_range(0.05..0.4);
        f.iter().map(|v| vec![*v]).collect()
    } else {
        let offset = rng.gen_range(0.0..2.0 * PI);
        let step = 2.0 * PI / branches as f64;
        (0..branches)
            .map(|k| {
                let a = offset + step * k as f64 + rng.gen_range(-0.25..0.25) * step;
                let r = rng.gen_range(0.1..0.4);
                let mut v = vec![1.0 + r * a.cos(), 1.0 + r * a.sin()];
                v.resize(assets, 1.0);
                v
            })
            .collect()
    }
}

/// A non-recombining tree with `branches` children per node.
pub fn random_tree(rng: &mut ChaCha8Rng, periods: usize, branches: usize, assets: usize) -> MarketTree {
    let s0: Vec<f64> = (0..assets).map(|_| rng.gen_range(0.8..1.2)).collect();
    let mut specs = vec![NodeSpec {
        parent: None,
        prob: 1.0,
        prices: s0,
    }];
    let mut frontier = vec![0usize];
    for _ in 0..periods {
        let mut next = Vec::new();
        for &v in &frontier {
            let factors = node_factors(rng, branches, assets);
            let weights: Vec<f64> = (0..branches).map(|_| rng.gen_range(0.5..1.5)).collect();
            let total: f64 = weights.iter().sum();
            for (f, w) in factors.iter().zip(&weights) {
                let prices = specs[v].prices.iter().zip(f).map(|(s, g)| s * g).collect();
                specs.push(NodeSpec {
                    parent: Some(v),
                    prob: w / total,
                    prices,
                });
                next.push(specs.len() - 1);
            }
        }
        frontier = next;
    }
    MarketTree::new(&specs).expect("generated tree is well formed")
}

/// Instance `index` of the corpus drawn from `seed`: 1 or 2 periods,
/// 2 to 4 branches (at least 3 with two assets), 1 or 2 assets.
pub fn instance(seed: u64, index: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let periods = 1 + index % 2;
    let assets = 1 + (index / 2) % 2;
    let branches = if assets == 1 { rng.gen_range(2..=4) } else { rng.gen_range(3..=4) };
    let tree = random_tree(&mut rng, periods, branches, assets);
    let claim = Claim::new((0..tree.num_atoms()).map(|_| rng.gen_range(-0.5..1.0)).collect()).expect("finite payoff");
    let x = rng.gen_range(-0.5..0.5);
    Instance {
        index,
        periods,
        branches,
        assets,
        tree,
        claim,
        x,
    }
}

pub fn corpus(seed: u64, count: usize) -> Vec<Instance> {
    (0..count).map(|i| instance(seed, i)).collect()
}
