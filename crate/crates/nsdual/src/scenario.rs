//! Scenario files: a versioned JSON description of one market, one
//! utility or loss, a claim, initial capitals and the task to run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nsdual_core::{martingale_polytope, Claim, LossFunction, MarketTree, NodeSpec, Tolerances, UtilitySpec};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LADDER: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Duality,
    Shortfall,
    Indifference,
    Ladder,
    Audit,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Duality, Task::Shortfall, Task::Indifference, Task::Ladder, Task::Audit];

    pub fn name(self) -> &'static str {
        match self {
            Task::Duality => "duality",
            Task::Shortfall => "shortfall",
            Task::Indifference => "indifference",
            Task::Ladder => "ladder",
            Task::Audit => "audit",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

/// Either explicit nodes or a single-asset multiplicative lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketSpec {
    Nodes {
        nodes: Vec<NodeSpec>,
    },
    Lattice {
        s0: f64,
        factors: Vec<f64>,
        probs: Vec<f64>,
        periods: usize,
    },
}

impl MarketSpec {
    pub fn build(&self) -> nsdual_core::Result<MarketTree> {
        match self {
            MarketSpec::Nodes { nodes } => MarketTree::new(nodes),
            MarketSpec::Lattice {
                s0,
                factors,
                probs,
                periods,
            } => MarketTree::lattice(*s0, factors, probs, *periods),
        }
    }
}

/// A single initial capital or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Capital {
    One(f64),
    Many(Vec<f64>),
}

impl Capital {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Capital::One(x) => vec![*x],
            Capital::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub market: MarketSpec,
    #[serde(default)]
    pub utility: Option<UtilitySpec>,
    #[serde(default)]
    pub loss: Option<LossFunction>,
    /// Payoff per atom; zero when absent.
    #[serde(default)]
    pub claim: Option<Vec<f64>>,
    pub x: Capital,
    pub task: Task,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    /// Truncation levels for the ladder task.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
}

/// A scenario whose references resolve and whose market is free of
/// arbitrage.
#[derive(Debug, Clone)]
pub struct Validated {
    pub scenario: Scenario,
    pub tree: MarketTree,
    pub claim: Claim,
    pub xs: Vec<f64>,
    pub tol: Tolerances,
    pub ladder: Vec<f64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::parse(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    /// Display name: the explicit name or the file stem.
    pub fn label(&self, path: Option<&Path>) -> String {
        self.name
            .clone()
            .or_else(|| path.and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| String::from("scenario"))
    }

    pub fn validate(self) -> Result<Validated, RunError> {
        if self.schema != SCHEMA_VERSION {
            return Err(RunError::validation(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let tree = self.market.build().map_err(RunError::from_core_validation)?;
        martingale_polytope(&tree).map_err(RunError::from_core_validation)?;
        let claim = match &self.claim {
            Some(b) => Claim::new(b.clone()).map_err(RunError::from_core_validation)?,
            None => Claim::zero(tree.num_atoms()),
        };
        claim.check_against(&tree).map_err(RunError::from_core_validation)?;
        let xs = self.x.values();
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(RunError::validation(format!(
                "initial capitals must be a nonempty list of finite numbers, got {xs:?}"
            )));
        }
        let mut tol = Tolerances::default();
        for (name, value) in &self.tolerances {
            tol.set(name, *value).map_err(RunError::from_core_validation)?;
        }
        match self.task {
            Task::Shortfall => {
                let loss = self
                    .loss
                    .as_ref()
                    .ok_or_else(|| RunError::validation("shortfall task needs a loss function"))?;
                if self.utility.is_some() {
                    return Err(RunError::validation("shortfall task takes a loss function, not a utility"));
                }
                loss.to_utility().map_err(RunError::from_core_validation)?;
            }
            _ => {
                let u = self
                    .utility
                    .as_ref()
                    .ok_or_else(|| RunError::validation(format!("{} task needs a utility", self.task)))?;
                u.validate().map_err(RunError::from_core_validation)?;
            }
        }
        let ladder = self.ladder.clone().unwrap_or_else(|| DEFAULT_LADDER.to_vec());
        if self.task == Task::Ladder && (ladder.is_empty() || ladder.iter().any(|n| !(*n > 0.0 && n.is_finite()))) {
            return Err(RunError::validation(format!("ladder levels must be positive, got {ladder:?}")));
        }
        Ok(Validated {
            scenario: self,
            tree,
            claim,
            xs,
            tol,
            ladder,
        })
    }
}

/// Applies `name=value` overrides from the command line.
pub fn parse_tolerance(arg: &str) -> Result<(String, f64), String> {
    let (name, value) = arg.split_once('=').ok_or_else(|| format!("expected name=value, got {arg:?}"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("{name}: {e}"))?;
    if !Tolerances::names().contains(&name.trim()) {
        return Err(format!("unknown tolerance {name:?}; known: {}", Tolerances::names().join(", ")));
    }
    Ok((name.trim().to_string(), value))
}
