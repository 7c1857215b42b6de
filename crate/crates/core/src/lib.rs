//! Nonsmooth utility maximization on finite event-tree markets.
//!
//! The crate covers the convex-analytic toolkit (conjugates, asymptotic
//! elasticity, quadratic inf-convolution), finite multi-period markets with
//! their martingale polytopes, and dual/primal solvers that work without
//! any smoothness of the utility.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod applications;
pub mod barrier;
pub mod conjugate;
pub mod elasticity;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod lp;
pub mod market;
pub mod moreau;
pub mod scalar;
pub mod solvers;
pub mod utility;

pub use applications::{indifference_price, shortfall_risk, IndifferencePrice, LossFunction, ShortfallResult};
pub use conjugate::{conjugate, conjugate_numeric, subdiff_conjugate, ConjugateFunction, PiecewiseAffine};
pub use elasticity::{estimate_asymptotic_elasticity, validate_admissibility, AdmissibilityReport, ElasticityEstimate, Endpoint, Route};
pub use error::{Error, Result};
pub use interval::Interval;
pub use market::gain_matrix;
pub use market::{
    martingale_polytope, replicate, subreplication_price, superreplication_price, terminal_wealth, wealth_process, Claim, MarketTree,
    MartingaleDensity, MartingalePolytope, NodeSpec, Replication, Strategy,
};
pub use moreau::{elasticity_transfer_check, infconv_deriv, infconv_value, InfConvolution, TransferCertificate};
pub use solvers::{
    admissible_class_audit, dual_over_measures, dual_value_curve, inner_dual_value, reconstruct_wealth, solve, solve_dual,
    solve_primal_dynamic, solve_primal_static, truncation_ladder, uniqueness_probe, verify_duality, AuditReport, DualOptions, DualSolution,
    LadderRung, MeasureDualSolution, PrimalOptions, PrimalSolution, SmoothingStep, SolveOptions, SolveReport, StaticSolution, Tolerances,
    TruncationLadder, UniquenessReport, Verification,
};
pub use utility::{Affine, UtilitySpec};
