use alloc::string::String;

/// Everything that can go wrong inside the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed utility: {0}")]
    MalformedUtility(String),
    #[error("conjugate has an empty effective domain")]
    EmptyConjugateDomain,
    #[error("y = {y} lies outside the conjugate domain (right endpoint r = {r})")]
    Domain { y: f64, r: f64 },
    #[error("conjugate is not positive at y = {y}; shift required")]
    ShiftRequired { y: f64 },
    #[error("malformed conjugate: {0}")]
    MalformedConjugate(String),
    #[error("invalid market tree: {0}")]
    InvalidTree(String),
    #[error("arbitrage: M^e(S) = ∅ ({0})")]
    Arbitrage(String),
    #[error("invalid claim: {0}")]
    InvalidClaim(String),
    #[error("W(x) = -∞: dual objective is unbounded below")]
    DualUnbounded,
    #[error("V(x) = U(∞): primal iterates diverge while the objective keeps improving")]
    PrimalDivergent,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid bracket: value gap {lo_gap} at the lower end, {hi_gap} at the upper end")]
    Bracket { lo_gap: f64, hi_gap: f64 },
    #[error("inadmissible loss function: {0}")]
    InadmissibleLoss(String),
}

pub type Result<T> = core::result::Result<T, Error>;
