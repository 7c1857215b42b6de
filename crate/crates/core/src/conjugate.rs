//! Fenchel conjugates `Ũ(y) = sup_x (U(x) - x y)` of utility functions.
//!
//! Exponential, quadratic and power shortfall families have closed forms;
//! piecewise-linear utilities (and their shifts and truncations) get an
//! exact piecewise-affine conjugate. A numeric evaluator based on
//! supergradient bisection is available for every family and serves as the
//! independent cross-check of the closed forms.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::utility::UtilitySpec;

pub const TOL_CONJ_CLOSED: f64 = 1e-10;
pub const TOL_CONJ_NUMERIC: f64 = 1e-6;

/// A convex piecewise-affine function on `[0, right_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffine {
    /// Ascending breakpoints, `breaks[0] = 0`.
    pub breaks: Vec<f64>,
    /// Slope on `[breaks[i], breaks[i + 1])`.
    pub slopes: Vec<f64>,
    /// Value at each breakpoint.
    pub values: Vec<f64>,
    pub right_end: f64,
}

impl PiecewiseAffine {
    /// Conjugate of a piecewise-linear utility in kink form. A kink with an
    /// infinite left slope marks a truncated domain.
    fn from_kinks(kinks: &[(f64, f64)], value_at_last: f64) -> Self {
        let m = kinks.len();
        let mut breaks = alloc::vec![0.0];
        let mut slopes = Vec::with_capacity(m);
        for i in (0..m).rev() {
            slopes.push(-kinks[i].0);
            if i > 0 {
                breaks.push(kinks[i].1);
            }
        }
        let right_end = kinks[0].1;
        let mut values = alloc::vec![value_at_last];
        for i in 1..breaks.len() {
            let v = values[i - 1] + slopes[i - 1] * (breaks[i] - breaks[i - 1]);
            values.push(v);
        }
        PiecewiseAffine {
            breaks,
            slopes,
            values,
            right_end,
        }
    }

    fn segment(&self, y: f64) -> usize {
        self.breaks.iter().rposition(|&b| b <= y).unwrap_or_default()
    }

    pub fn value(&self, y: f64) -> f64 {
        if y < 0.0 || y > self.right_end {
            return f64::INFINITY;
        }
        let i = self.segment(y);
        self.values[i] + self.slopes[i] * (y - self.breaks[i])
    }

    pub fn subdiff(&self, y: f64) -> Interval {
        if y == 0.0 {
            return Interval::new(f64::NEG_INFINITY, self.slopes[0]);
        }
        if y == self.right_end {
            return Interval::new(*self.slopes.last().unwrap(), f64::INFINITY);
        }
        let i = self.segment(y);
        if i > 0 && self.breaks[i] == y {
            Interval::new(self.slopes[i - 1], self.slopes[i])
        } else {
            Interval::point(self.slopes[i])
        }
    }

    /// Index of the breakpoint equal to `y`, if any (the domain end counts).
    pub fn is_kink(&self, y: f64) -> bool {
        y == self.right_end || self.breaks.iter().skip(1).any(|&b| b == y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    ClosedForm,
    Numeric { tol: f64 },
}

/// The conjugate `Ũ` of a utility, with its domain `[0, r]` (or `[0, r)`)
/// and subdifferential.
#[derive(Debug, Clone)]
pub struct ConjugateFunction {
    utility: UtilitySpec,
    mode: Mode,
    affine: Option<PiecewiseAffine>,
    r: f64,
    r_attained: bool,
}

/// Conjugate with closed forms wherever the family admits one.
pub fn conjugate(u: &UtilitySpec) -> Result<ConjugateFunction> {
    u.validate()?;
    let affine = u.kink_form().map(|(ks, v)| PiecewiseAffine::from_kinks(&ks, v));
    let r = u.slope_sup();
    if !(r > 0.0) {
        return Err(Error::MalformedConjugate(format!("right domain endpoint r = {r} must be positive")));
    }
    Ok(ConjugateFunction {
        utility: u.clone(),
        mode: Mode::ClosedForm,
        affine,
        r,
        r_attained: u.slope_sup_attained(),
    })
}

/// Conjugate evaluated purely numerically from `U` and `∂U`.
pub fn conjugate_numeric(u: &UtilitySpec, tol: f64) -> Result<ConjugateFunction> {
    u.validate()?;
    let (r, r_attained) = detect_r(u, tol);
    if !(r > 0.0) {
        return Err(Error::MalformedConjugate(format!("right domain endpoint r = {r} must be positive")));
    }
    if r.is_nan() {
        return Err(Error::EmptyConjugateDomain);
    }
    Ok(ConjugateFunction {
        utility: u.clone(),
        mode: Mode::Numeric { tol },
        affine: None,
        r,
        r_attained,
    })
}

/// `∂Ũ(y)` as a closed interval.
pub fn subdiff_conjugate(conj: &ConjugateFunction, y: f64) -> Result<Interval> {
    conj.subdiff(y)
}

/// Extrapolates `min ∂U(x)` along `x = -2^k`.
fn detect_r(u: &UtilitySpec, tol: f64) -> (f64, bool) {
    if u.domain_left().is_finite() {
        return (f64::INFINITY, false);
    }
    let mut prev = f64::NAN;
    for k in 0..=60 {
        let x = -(2.0f64.powi(k));
        let Some(sd) = u.superdiff(x) else { return (f64::INFINITY, false) };
        let v = sd.lo;
        if !v.is_finite() {
            return (f64::INFINITY, false);
        }
        if prev.is_finite() && (v - prev).abs() < tol * (1.0 + v.abs()) {
            let attained = u.superdiff(x).map(|i| i.contains(v)).unwrap_or(false);
            return (v, attained);
        }
        prev = v;
    }
    (f64::INFINITY, false)
}

impl ConjugateFunction {
    pub fn utility(&self) -> &UtilitySpec {
        &self.utility
    }

    pub fn is_closed_form(&self) -> bool {
        self.mode == Mode::ClosedForm
    }

    /// Right endpoint `r` of the domain.
    pub fn right_endpoint(&self) -> f64 {
        self.r
    }

    /// Whether `r` itself belongs to the domain (finite `r` attained as a
    /// slope of `U`).
    pub fn right_endpoint_in_domain(&self) -> bool {
        self.r.is_finite() && self.r_attained
    }

    pub fn in_domain(&self, y: f64) -> bool {
        y >= 0.0 && (y < self.r || (y == self.r && self.right_endpoint_in_domain()))
    }

    pub fn piecewise_affine(&self) -> Option<&PiecewiseAffine> {
        match self.mode {
            Mode::ClosedForm => self.affine.as_ref(),
            Mode::Numeric { .. } => None,
        }
    }

    /// Tolerance the evaluator is accurate to.
    pub fn tolerance(&self) -> f64 {
        match self.mode {
            Mode::ClosedForm => TOL_CONJ_CLOSED,
            Mode::Numeric { tol } => tol,
        }
    }

    /// `Ũ(y)`, `+∞` outside the domain.
    pub fn value(&self, y: f64) -> f64 {
        if !self.in_domain(y) {
            return f64::INFINITY;
        }
        match self.mode {
            Mode::ClosedForm => match &self.affine {
                Some(pa) => pa.value(y),
                None => closed_value(&self.utility, y),
            },
            Mode::Numeric { tol } => numeric_value(&self.utility, y, tol),
        }
    }

    /// `[min ∂Ũ(y), max ∂Ũ(y)]`. At `y = 0` the lower end is `-∞`.
    pub fn subdiff(&self, y: f64) -> Result<Interval> {
        if !self.in_domain(y) || y.is_nan() {
            return Err(Error::Domain { y, r: self.r });
        }
        Ok(match self.mode {
            Mode::ClosedForm => match &self.affine {
                Some(pa) => pa.subdiff(y),
                None => closed_subdiff(&self.utility, y),
            },
            Mode::Numeric { tol } => numeric_subdiff(&self.utility, y, tol),
        })
    }

    /// `Ũ''(y)` where it exists: zero inside affine pieces, `None` at kinks
    /// and at `y = 0`.
    pub fn second_derivative(&self, y: f64) -> Option<f64> {
        if !(y > 0.0) || !self.in_domain(y) {
            return None;
        }
        match self.mode {
            Mode::ClosedForm => match &self.affine {
                Some(pa) => {
                    if pa.is_kink(y) {
                        None
                    } else {
                        Some(0.0)
                    }
                }
                None => closed_second(&self.utility, y),
            },
            Mode::Numeric { .. } => None,
        }
    }

    /// `Ũ(0) = U(∞)`.
    pub fn value_at_zero(&self) -> f64 {
        self.value(0.0)
    }
}

fn closed_value(u: &UtilitySpec, y: f64) -> f64 {
    if y < 0.0 {
        return f64::INFINITY;
    }
    match u {
        UtilitySpec::Exponential { eta } => {
            if y == 0.0 {
                0.0
            } else {
                let t = y / eta;
                t * (t.ln() - 1.0)
            }
        }
        UtilitySpec::QuadraticShortfall => 0.25 * y * y,
        UtilitySpec::PowerShortfall { p } => (p - 1.0) * (y / p).powf(p / (p - 1.0)),
        UtilitySpec::Shifted { base, k1, k2 } => closed_value(base, y) - k1 * y + k2,
        UtilitySpec::Truncated { base, n } => {
            let tau = base.superdiff(-n).map(|i| i.hi).unwrap_or(f64::INFINITY);
            if y <= tau {
                closed_value(base, y)
            } else {
                base.value(-n) + n * y
            }
        }
        UtilitySpec::PiecewiseLinear { .. } => unreachable!("piecewise-linear conjugates use the affine form"),
    }
}

fn closed_subdiff(u: &UtilitySpec, y: f64) -> Interval {
    match u {
        UtilitySpec::Exponential { eta } => {
            if y == 0.0 {
                Interval::new(f64::NEG_INFINITY, f64::NEG_INFINITY)
            } else {
                Interval::point((y / eta).ln() / eta)
            }
        }
        UtilitySpec::QuadraticShortfall => {
            if y == 0.0 {
                Interval::new(f64::NEG_INFINITY, 0.0)
            } else {
                Interval::point(0.5 * y)
            }
        }
        UtilitySpec::PowerShortfall { p } => {
            if y == 0.0 {
                Interval::new(f64::NEG_INFINITY, 0.0)
            } else {
                Interval::point((y / p).powf(1.0 / (p - 1.0)))
            }
        }
        UtilitySpec::Shifted { base, k1, .. } => closed_subdiff(base, y).shift(-k1),
        UtilitySpec::Truncated { base, n } => {
            let edge = base.superdiff(-n).unwrap_or(Interval::point(f64::INFINITY));
            if y > edge.hi {
                Interval::point(*n)
            } else {
                let b = closed_subdiff(base, y);
                let hi = if y >= edge.lo { *n } else { b.hi.min(*n) };
                Interval::new(b.lo.min(*n), hi)
            }
        }
        UtilitySpec::PiecewiseLinear { .. } => unreachable!("piecewise-linear conjugates use the affine form"),
    }
}

fn closed_second(u: &UtilitySpec, y: f64) -> Option<f64> {
    match u {
        UtilitySpec::Exponential { eta } => Some(1.0 / (eta * y)),
        UtilitySpec::QuadraticShortfall => Some(0.5),
        UtilitySpec::PowerShortfall { p } => {
            let e = 1.0 / (p - 1.0);
            Some(e / p * (y / p).powf(e - 1.0))
        }
        UtilitySpec::Shifted { base, .. } => closed_second(base, y),
        UtilitySpec::Truncated { base, n } => {
            let tau = base.superdiff(-n).map(|i| i.hi).unwrap_or(f64::INFINITY);
            if y < tau {
                closed_second(base, y)
            } else if y > tau {
                Some(0.0)
            } else {
                None
            }
        }
        UtilitySpec::PiecewiseLinear { .. } => None,
    }
}

/// `U(∞)` by evaluating along `x = 2^k` until the value settles.
fn numeric_sup(u: &UtilitySpec, tol: f64) -> f64 {
    let mut prev = u.value(1.0);
    for k in 1..=60 {
        let v = u.value(2.0f64.powi(k));
        if (v - prev).abs() <= tol * (1.0 + v.abs()) {
            return v;
        }
        prev = v;
    }
    prev
}

/// Bracket `[lo, hi]` around the maximizer set of `U(x) - x y`.
fn argmax_bracket(u: &UtilitySpec, y: f64) -> (f64, f64) {
    let left_end = u.domain_left();
    let mut hi = left_end.max(0.0) + 1.0;
    while u.superdiff(hi).map(|i| i.hi > y).unwrap_or(true) && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = if left_end.is_finite() { left_end } else { -1.0 };
    if !left_end.is_finite() {
        while u.superdiff(lo).map(|i| i.lo < y).unwrap_or(false) && lo > -1e300 {
            lo *= 2.0;
        }
    }
    (lo, hi)
}

fn numeric_value(u: &UtilitySpec, y: f64, tol: f64) -> f64 {
    if y == 0.0 {
        return numeric_sup(u, tol);
    }
    let (mut lo, mut hi) = argmax_bracket(u, y);
    for _ in 0..400 {
        if hi - lo <= tol * tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let sd = u.superdiff(mid).expect("midpoint lies in the domain");
        if sd.lo > y {
            lo = mid;
        } else if sd.hi < y {
            hi = mid;
        } else {
            return u.value(mid) - mid * y;
        }
    }
    (u.value(lo) - lo * y).max(u.value(hi) - hi * y)
}

fn numeric_subdiff(u: &UtilitySpec, y: f64, tol: f64) -> Interval {
    let (lo0, hi0) = argmax_bracket(u, y);
    let eps = tol * tol;
    // left end of the argmax set: last x with min ∂U(x) > y
    let (mut a, mut b) = (lo0, hi0);
    for _ in 0..400 {
        if b - a <= eps * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        if u.superdiff(mid).map(|i| i.lo > y).unwrap_or(true) {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x_min = if u.superdiff(a).map(|i| i.contains(y)).unwrap_or(false) {
        a
    } else {
        b
    };
    if y == 0.0 {
        return Interval::new(f64::NEG_INFINITY, -x_min);
    }
    let (mut a, mut b) = (x_min, hi0);
    for _ in 0..400 {
        if b - a <= eps * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        if u.superdiff(mid).map(|i| i.hi < y).unwrap_or(false) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Interval::new(-a, -x_min)
}
