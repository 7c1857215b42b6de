//! Asymptotic elasticity of a conjugate at its domain endpoints and the
//! admissibility report for utilities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::conjugate::{conjugate, ConjugateFunction};
use crate::error::{Error, Result};
use crate::utility::UtilitySpec;

/// Ratios above this are treated as divergent.
pub const ELASTICITY_CAP: f64 = 1e6;
pub const DEFAULT_PROBES: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Endpoint {
    Zero,
    /// The right end `r` of the domain, `+∞` in the admissible case.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElasticityEstimate {
    pub endpoint: Endpoint,
    /// Ratio `sup_q |q| y / Ũ(y)` at the probe closest to the endpoint.
    pub estimate: f64,
    /// Supremum of the ratio over all probes.
    pub sup_ratio: f64,
    /// Smallest `C` with `Ũ(μ y) ≤ C Ũ(y)` for `μ ∈ {1/2, 2}` on the probes.
    pub scaling_constant: f64,
    /// Probes `(y, ratio)` ordered towards the endpoint.
    pub probes: Vec<(f64, f64)>,
    pub divergent: bool,
}

fn probe_points(conj: &ConjugateFunction, end: Endpoint, k_max: u32) -> Vec<f64> {
    let r = conj.right_endpoint();
    let mut ys = Vec::with_capacity(k_max as usize + 1);
    for k in 1..=k_max as i32 {
        let y = match end {
            Endpoint::Zero => 2.0f64.powi(-k).min(0.5 * r),
            Endpoint::Right if r.is_infinite() => 2.0f64.powi(k),
            Endpoint::Right => r * (1.0 - 2.0f64.powi(-k)),
        };
        ys.push(y);
    }
    if end == Endpoint::Right && conj.right_endpoint_in_domain() {
        ys.push(r);
    }
    ys
}

/// Estimates `AE_0(Ũ)` or `AE_r(Ũ)` on the geometric grid `y = 2^{∓k}`,
/// `k = 1..k_max` (for finite `r` the grid `r(1 - 2^{-k})` plus `r`).
pub fn estimate_asymptotic_elasticity(conj: &ConjugateFunction, end: Endpoint, k_max: u32) -> Result<ElasticityEstimate> {
    let ys = probe_points(conj, end, k_max);
    let mut probes = Vec::with_capacity(ys.len());
    let mut sup_ratio = 0.0f64;
    let mut scaling_constant = 1.0f64;
    for &y in &ys {
        let f = conj.value(y);
        if !(f > 0.0) {
            return Err(Error::ShiftRequired { y });
        }
        let sd = conj.subdiff(y)?;
        let q = sd.max_abs();
        let ratio = if q.is_finite() { q * y / f } else { f64::INFINITY };
        sup_ratio = sup_ratio.max(ratio);
        for mu in [0.5, 2.0] {
            let fm = conj.value(mu * y);
            if fm.is_finite() {
                if !(fm > 0.0) {
                    return Err(Error::ShiftRequired { y: mu * y });
                }
                scaling_constant = scaling_constant.max(fm / f);
            }
        }
        probes.push((y, ratio));
    }
    let estimate = probes.last().map(|p| p.1).unwrap_or(f64::NAN);
    let divergent = !(sup_ratio <= ELASTICITY_CAP);
    Ok(ElasticityEstimate {
        endpoint: end,
        estimate,
        sup_ratio,
        scaling_constant,
        probes,
        divergent,
    })
}

/// Which existence theorem a utility qualifies for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Route {
    /// Finite on all of ℝ, `r = ∞`, both elasticities finite.
    UnboundedDomain,
    /// Domain bounded below, elasticity at zero finite.
    BoundedDomain,
    NotAdmissible,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibilityReport {
    pub slope_inf_zero: bool,
    pub r: f64,
    /// `r ∉ ⋃ ∂U(x)`.
    pub r_not_attained: bool,
    /// Value shift applied so that the normalized utility has `U(0) = 1`.
    pub normalization_k2: f64,
    pub ae_zero: Option<ElasticityEstimate>,
    pub ae_right: Option<ElasticityEstimate>,
    pub route: Route,
    pub failures: Vec<String>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.route != Route::NotAdmissible
    }
}

/// `k2` such that `U(0) + k2 = 1`.
pub fn normalization_shift(u: &UtilitySpec) -> f64 {
    1.0 - u.value(0.0)
}

/// Checks `inf ⋃∂U = 0`, `r ∉ ⋃∂U` and finiteness of the asymptotic
/// elasticities of the normalized conjugate.
pub fn validate_admissibility(u: &UtilitySpec) -> AdmissibilityReport {
    let mut failures = Vec::new();
    let slope_inf_zero = u.slope_inf() == 0.0;
    if !slope_inf_zero {
        failures.push(String::from("inf of the superdifferentials is not zero"));
    }
    let r = u.slope_sup();
    let r_not_attained = !(r.is_finite() && u.slope_sup_attained());
    if !r_not_attained {
        failures.push(format!("r = {r} is attained as a slope of U"));
    }
    let mut k2 = normalization_shift(u);
    if !k2.is_finite() {
        failures.push(String::from("U(0) is not finite"));
        k2 = 0.0;
    }
    let normalized = u.shift(0.0, k2);
    let (ae_zero, ae_right) = match conjugate(&normalized) {
        Ok(c) => {
            let z = estimate_asymptotic_elasticity(&c, Endpoint::Zero, DEFAULT_PROBES);
            let rr = estimate_asymptotic_elasticity(&c, Endpoint::Right, DEFAULT_PROBES);
            if let Err(e) = &z {
                failures.push(format!("elasticity at zero: {e}"));
            }
            if let Err(e) = &rr {
                failures.push(format!("elasticity at r: {e}"));
            }
            (z.ok(), rr.ok())
        }
        Err(e) => {
            failures.push(format!("conjugate: {e}"));
            (None, None)
        }
    };
    let zero_ok = ae_zero.as_ref().map(|e| !e.divergent).unwrap_or(false);
    let right_ok = ae_right.as_ref().map(|e| !e.divergent).unwrap_or(false);
    if !zero_ok {
        failures.push(String::from("asymptotic elasticity at zero is not finite"));
    }
    let bounded = u.domain_left().is_finite();
    let route = if !slope_inf_zero || !zero_ok {
        Route::NotAdmissible
    } else if bounded {
        Route::BoundedDomain
    } else if r_not_attained && r.is_infinite() && right_ok {
        Route::UnboundedDomain
    } else {
        if !right_ok {
            failures.push(String::from("asymptotic elasticity at r is not finite"));
        }
        Route::NotAdmissible
    };
    AdmissibilityReport {
        slope_inf_zero,
        r,
        r_not_attained,
        normalization_k2: k2,
        ae_zero,
        ae_right,
        route,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quadratic_elasticity_is_two() {
        let c = conjugate(&UtilitySpec::QuadraticShortfall).unwrap();
        for end in [Endpoint::Zero, Endpoint::Right] {
            let e = estimate_asymptotic_elasticity(&c, end, 30).unwrap();
            assert!((e.estimate - 2.0).abs() < 1e-12);
            assert!(!e.divergent);
            assert!((e.scaling_constant - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unshifted_exponential_needs_a_shift() {
        let c = conjugate(&UtilitySpec::Exponential { eta: 1.0 }).unwrap();
        assert!(matches!(
            estimate_asymptotic_elasticity(&c, Endpoint::Right, 10),
            Err(Error::ShiftRequired { .. })
        ));
    }

    #[test]
    fn routes() {
        let r = validate_admissibility(&UtilitySpec::Exponential { eta: 1.0 });
        assert_eq!(r.route, Route::UnboundedDomain, "{r:?}");
        assert_eq!(r.normalization_k2, 2.0);
        let r = validate_admissibility(&UtilitySpec::QuadraticShortfall);
        assert_eq!(r.route, Route::UnboundedDomain);
        let r = validate_admissibility(&UtilitySpec::piecewise_linear(vec![(0.0, 1.0)]).unwrap());
        assert_eq!(r.route, Route::NotAdmissible);
        assert!(!r.r_not_attained);
        let r = validate_admissibility(&UtilitySpec::Exponential { eta: 1.0 }.truncate(3.0));
        assert_eq!(r.route, Route::BoundedDomain);
    }
}
