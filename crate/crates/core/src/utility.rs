//! Concave nondecreasing utility functions, their superdifferentials and
//! the shift / truncation transforms.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// A utility function `U`. Values are `-∞` left of the domain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum UtilitySpec {
    /// `U(x) = -exp(-eta x)`.
    Exponential { eta: f64 },
    /// `U(x) = -(x^-)^2`.
    QuadraticShortfall,
    /// `U(x) = -(x^-)^p`, `p > 1`.
    PowerShortfall { p: f64 },
    /// Kinks `(x_i, s_i)` with `x_i` increasing; `s_i` is the slope on the
    /// segment ending at `x_i`, the slope right of the last kink is zero and
    /// `U(x_last) = 0`.
    PiecewiseLinear { kinks: Vec<(f64, f64)> },
    /// `U(x - k1) + k2`.
    Shifted { base: Box<UtilitySpec>, k1: f64, k2: f64 },
    /// `U` restricted to `(-n, ∞)`.
    Truncated { base: Box<UtilitySpec>, n: f64 },
}

/// Affine piece `intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub intercept: f64,
    pub slope: f64,
}

impl Affine {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

impl UtilitySpec {
    pub fn exponential(eta: f64) -> Result<Self> {
        let u = UtilitySpec::Exponential { eta };
        u.validate()?;
        Ok(u)
    }

    pub fn power_shortfall(p: f64) -> Result<Self> {
        let u = UtilitySpec::PowerShortfall { p };
        u.validate()?;
        Ok(u)
    }

    pub fn piecewise_linear(kinks: Vec<(f64, f64)>) -> Result<Self> {
        let u = UtilitySpec::PiecewiseLinear { kinks };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UtilitySpec::Exponential { eta } => {
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(Error::MalformedUtility(format!("exponential rate must be positive, got {eta}")));
                }
            }
            UtilitySpec::QuadraticShortfall => {}
            UtilitySpec::PowerShortfall { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(Error::MalformedUtility(format!("power shortfall exponent must exceed 1, got {p}")));
                }
            }
            UtilitySpec::PiecewiseLinear { kinks } => {
                if kinks.is_empty() {
                    return Err(Error::MalformedUtility("piecewise-linear utility needs at least one kink".into()));
                }
                for w in kinks.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::MalformedUtility("kink abscissae must be strictly increasing".into()));
                    }
                    if !(w[0].1 > w[1].1) {
                        return Err(Error::MalformedUtility("slopes must be strictly decreasing".into()));
                    }
                }
                if kinks.iter().any(|(x, s)| !x.is_finite() || !s.is_finite() || *s <= 0.0) {
                    return Err(Error::MalformedUtility("kinks must be finite with positive slopes".into()));
                }
            }
            UtilitySpec::Shifted { base, k1, k2 } => {
                if !(k1.is_finite() && k2.is_finite()) {
                    return Err(Error::MalformedUtility("shift amounts must be finite".into()));
                }
                base.validate()?;
            }
            UtilitySpec::Truncated { base, n } => {
                if !(n.is_finite() && *n > 0.0) {
                    return Err(Error::MalformedUtility(format!("truncation level must be positive, got {n}")));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// `U^k(x) = U(x - k1) + k2`.
    pub fn shift(&self, k1: f64, k2: f64) -> UtilitySpec {
        if k1 == 0.0 && k2 == 0.0 {
            return self.clone();
        }
        UtilitySpec::Shifted {
            base: Box::new(self.clone()),
            k1,
            k2,
        }
    }

    /// `U_n`: equal to `U` on `(-n, ∞)` and `-∞` below. Vacuous when the
    /// domain already starts at or right of `-n`.
    pub fn truncate(&self, n: f64) -> UtilitySpec {
        if self.domain_left() >= -n {
            return self.clone();
        }
        UtilitySpec::Truncated {
            base: Box::new(self.clone()),
            n,
        }
    }

    /// Left endpoint of `cl dom(U)`.
    pub fn domain_left(&self) -> f64 {
        match self {
            UtilitySpec::Shifted { base, k1, .. } => base.domain_left() + k1,
            UtilitySpec::Truncated { base, n } => base.domain_left().max(-n),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { eta } => -(-eta * x).exp(),
            UtilitySpec::QuadraticShortfall => {
                let m = (-x).max(0.0);
                -m * m
            }
            UtilitySpec::PowerShortfall { p } => {
                let m = (-x).max(0.0);
                -m.powf(*p)
            }
            UtilitySpec::PiecewiseLinear { kinks } => pl_value(kinks, x),
            UtilitySpec::Shifted { base, k1, k2 } => base.value(x - k1) + k2,
            UtilitySpec::Truncated { base, n } => {
                if x < -n {
                    f64::NEG_INFINITY
                } else {
                    base.value(x)
                }
            }
        }
    }

    /// `∂U(x)` as `[min, max]`; `None` left of the domain. At a finite left
    /// domain endpoint the interval is unbounded above.
    pub fn superdiff(&self, x: f64) -> Option<Interval> {
        match self {
            UtilitySpec::Exponential { eta } => Some(Interval::point(eta * (-eta * x).exp())),
            UtilitySpec::QuadraticShortfall => Some(Interval::point(2.0 * (-x).max(0.0))),
            UtilitySpec::PowerShortfall { p } => Some(Interval::point(p * (-x).max(0.0).powf(p - 1.0))),
            UtilitySpec::PiecewiseLinear { kinks } => Some(pl_superdiff(kinks, x)),
            UtilitySpec::Shifted { base, k1, .. } => base.superdiff(x - k1),
            UtilitySpec::Truncated { base, n } => {
                if x < -n {
                    None
                } else if x == -n {
                    base.superdiff(x).map(|i| Interval::new(i.lo, f64::INFINITY))
                } else {
                    base.superdiff(x)
                }
            }
        }
    }

    /// `U''(x)` where it exists (for piecewise-`C^2` families the one-sided
    /// value is returned at the seam); `None` for piecewise-linear pieces.
    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        match self {
            UtilitySpec::Exponential { eta } => Some(-eta * eta * (-eta * x).exp()),
            UtilitySpec::QuadraticShortfall => Some(if x < 0.0 { -2.0 } else { 0.0 }),
            UtilitySpec::PowerShortfall { p } => Some(if x < 0.0 { -p * (p - 1.0) * (-x).powf(p - 2.0) } else { 0.0 }),
            UtilitySpec::PiecewiseLinear { .. } => None,
            UtilitySpec::Shifted { base, k1, .. } => base.second_derivative(x - k1),
            UtilitySpec::Truncated { base, n } => {
                if x <= -n {
                    None
                } else {
                    base.second_derivative(x)
                }
            }
        }
    }

    /// `U(∞)`.
    pub fn sup_value(&self) -> f64 {
        match self {
            UtilitySpec::Shifted { base, k2, .. } => base.sup_value() + k2,
            UtilitySpec::Truncated { base, .. } => base.sup_value(),
            _ => 0.0,
        }
    }

    /// Satiation level `L = inf { l : U(l) = U(∞) }`.
    pub fn satiation(&self) -> f64 {
        match self {
            UtilitySpec::Exponential { .. } => f64::INFINITY,
            UtilitySpec::QuadraticShortfall | UtilitySpec::PowerShortfall { .. } => 0.0,
            UtilitySpec::PiecewiseLinear { kinks } => kinks.last().map(|k| k.0).unwrap_or(0.0),
            UtilitySpec::Shifted { base, k1, .. } => base.satiation() + k1,
            UtilitySpec::Truncated { base, n } => base.satiation().max(-n),
        }
    }

    /// `r = sup ⋃ ∂U(x)`.
    pub fn slope_sup(&self) -> f64 {
        match self {
            UtilitySpec::PiecewiseLinear { kinks } => kinks[0].1,
            UtilitySpec::Shifted { base, .. } => base.slope_sup(),
            UtilitySpec::Truncated { .. } => f64::INFINITY,
            _ => f64::INFINITY,
        }
    }

    /// Whether `r` belongs to `⋃ ∂U(x)`.
    pub fn slope_sup_attained(&self) -> bool {
        match self {
            UtilitySpec::PiecewiseLinear { .. } => true,
            UtilitySpec::Shifted { base, .. } => base.slope_sup_attained(),
            _ => false,
        }
    }

    /// `inf ⋃ ∂U(x)`, which admissibility requires to be zero.
    pub fn slope_inf(&self) -> f64 {
        0.0
    }

    /// Continuously differentiable on the interior of its domain.
    pub fn is_smooth(&self) -> bool {
        match self {
            UtilitySpec::PiecewiseLinear { .. } => false,
            UtilitySpec::Shifted { base, .. } | UtilitySpec::Truncated { base, .. } => base.is_smooth(),
            _ => true,
        }
    }

    /// Strictly concave on its domain.
    pub fn is_strictly_concave(&self) -> bool {
        match self {
            UtilitySpec::Exponential { .. } => true,
            UtilitySpec::Shifted { base, .. } | UtilitySpec::Truncated { base, .. } => base.is_strictly_concave(),
            _ => false,
        }
    }

    /// Affine pieces whose minimum is `U` on its domain, for piecewise
    /// linear utilities.
    pub fn affine_pieces(&self) -> Option<Vec<Affine>> {
        match self {
            UtilitySpec::PiecewiseLinear { kinks } => {
                let vals = pl_kink_values(kinks);
                let mut pieces = Vec::with_capacity(kinks.len() + 1);
                for (i, &(x, s)) in kinks.iter().enumerate() {
                    pieces.push(Affine {
                        intercept: vals[i] - s * x,
                        slope: s,
                    });
                }
                pieces.push(Affine {
                    intercept: 0.0,
                    slope: 0.0,
                });
                Some(pieces)
            }
            UtilitySpec::Shifted { base, k1, k2 } => base.affine_pieces().map(|ps| {
                ps.into_iter()
                    .map(|a| Affine {
                        intercept: a.intercept - a.slope * k1 + k2,
                        slope: a.slope,
                    })
                    .collect()
            }),
            UtilitySpec::Truncated { base, .. } => base.affine_pieces(),
            _ => None,
        }
    }

    /// Kinks of a (possibly shifted or truncated) piecewise-linear utility,
    /// in the `PiecewiseLinear` convention, plus the value at the last kink.
    /// A truncation shows up as a leading kink with infinite left slope.
    pub(crate) fn kink_form(&self) -> Option<(Vec<(f64, f64)>, f64)> {
        match self {
            UtilitySpec::PiecewiseLinear { kinks } => Some((kinks.clone(), 0.0)),
            UtilitySpec::Shifted { base, k1, k2 } => base
                .kink_form()
                .map(|(ks, v)| (ks.into_iter().map(|(x, s)| (x + k1, s)).collect(), v + k2)),
            UtilitySpec::Truncated { base, n } => {
                let (ks, v) = base.kink_form()?;
                let last = ks.last().map(|k| k.0).unwrap_or(f64::NEG_INFINITY);
                if -n >= last {
                    return Some((alloc::vec![(-n, f64::INFINITY)], v));
                }
                let mut out = alloc::vec![(-n, f64::INFINITY)];
                out.extend(ks.into_iter().filter(|(x, _)| *x > -n));
                Some((out, v))
            }
            _ => None,
        }
    }
}

fn pl_kink_values(kinks: &[(f64, f64)]) -> Vec<f64> {
    let m = kinks.len();
    let mut vals = alloc::vec![0.0; m];
    for i in (0..m.saturating_sub(1)).rev() {
        let (x0, _) = kinks[i];
        let (x1, s1) = kinks[i + 1];
        vals[i] = vals[i + 1] - s1 * (x1 - x0);
    }
    vals
}

fn pl_value(kinks: &[(f64, f64)], x: f64) -> f64 {
    let vals = pl_kink_values(kinks);
    let m = kinks.len();
    if x >= kinks[m - 1].0 {
        return vals[m - 1];
    }
    // first kink at or right of x
    let i = kinks.iter().position(|k| k.0 >= x).unwrap_or(m - 1);
    vals[i] - kinks[i].1 * (kinks[i].0 - x)
}

fn pl_superdiff(kinks: &[(f64, f64)], x: f64) -> Interval {
    let m = kinks.len();
    let slope_right_of = |i: usize| if i + 1 < m { kinks[i + 1].1 } else { 0.0 };
    for (i, &(xi, si)) in kinks.iter().enumerate() {
        if x < xi {
            return Interval::point(si);
        }
        if x == xi {
            return Interval::new(slope_right_of(i), si);
        }
    }
    Interval::point(0.0)
}
