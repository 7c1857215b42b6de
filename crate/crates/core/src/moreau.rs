//! Quadratic inf-convolution `Ũ_n(y) = βy + inf_{z ≥ 0} (Ũ(z) - βz + n/2 |y - z|²)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::conjugate::ConjugateFunction;
use crate::error::{Error, Result};

pub const TOL_PROX: f64 = 1e-10;

/// The smoothed conjugate at level `n` with offset `β`.
#[derive(Debug, Clone)]
pub struct InfConvolution {
    conj: ConjugateFunction,
    n: f64,
    beta: f64,
}

impl InfConvolution {
    pub fn new(conj: ConjugateFunction, n: f64, beta: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Precondition(alloc::format!("smoothing level must be positive, got {n}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Precondition(alloc::format!("offset must be nonnegative, got {beta}")));
        }
        if !conj.value(0.0).is_finite() && !conj.value(conj.right_endpoint().min(1.0) * 0.5).is_finite() {
            return Err(Error::MalformedConjugate("conjugate is +∞ on all of [0, ∞)".into()));
        }
        Ok(InfConvolution { conj, n, beta })
    }

    pub fn conjugate(&self) -> &ConjugateFunction {
        &self.conj
    }

    pub fn level(&self) -> f64 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same source and offset at another level.
    pub fn with_level(&self, n: f64) -> Result<Self> {
        InfConvolution::new(self.conj.clone(), n, self.beta)
    }

    /// Position of 0 relative to `∂Ũ(z) - β + n(z - y)`: `-1` if the whole
    /// set is negative, `1` if positive, `0` if it contains 0.
    fn side(&self, z: f64, y: f64) -> i8 {
        let sd = self.conj.subdiff(z).expect("prox search stays in the domain");
        let shift = -self.beta + self.n * (z - y);
        if sd.lo + shift > 0.0 {
            1
        } else if sd.hi + shift < 0.0 {
            -1
        } else {
            0
        }
    }

    /// The unique minimizer `z_n(y)` of `Ũ(z) - βz + n/2 |y - z|²` over `z ≥ 0`.
    pub fn prox_point(&self, y: f64) -> f64 {
        if let Some(pa) = self.conj.piecewise_affine() {
            return self.prox_affine(pa, y);
        }
        if self.side(0.0, y) >= 0 {
            return 0.0;
        }
        let r = self.conj.right_endpoint();
        if r.is_finite() && self.conj.right_endpoint_in_domain() && self.side(r, y) <= 0 {
            return r;
        }
        let mut lo = 0.0;
        let mut hi = y.max(0.0) + self.beta / self.n + 1.0;
        loop {
            if r.is_finite() && hi >= r {
                hi = r;
                break;
            }
            match self.side(hi, y) {
                1 => break,
                0 => return hi,
                _ => {
                    lo = hi;
                    hi *= 2.0;
                }
            }
        }
        // safeguarded Newton on the smooth part, bisection otherwise
        let mut z = 0.5 * (lo + hi);
        for _ in 0..300 {
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            let sd = self.conj.subdiff(z).expect("prox search stays in the domain");
            let shift = -self.beta + self.n * (z - y);
            if sd.lo + shift > 0.0 {
                hi = z;
            } else if sd.hi + shift < 0.0 {
                lo = z;
            } else {
                return z;
            }
            let mut next = 0.5 * (lo + hi);
            if sd.is_point() {
                if let Some(c) = self.conj.second_derivative(z) {
                    let g = sd.lo + shift;
                    let cand = z - g / (c + self.n);
                    if cand > lo && cand < hi {
                        if (cand - z).abs() <= 2.0 * f64::EPSILON * z.abs() {
                            return cand;
                        }
                        next = cand;
                    }
                }
            }
            z = next;
        }
        z
    }

    fn prox_affine(&self, pa: &crate::conjugate::PiecewiseAffine, y: f64) -> f64 {
        let n = self.n;
        let b = self.beta;
        let m = pa.slopes.len();
        for i in 0..m {
            let left = pa.breaks[i];
            let s = pa.slopes[i];
            // kink at `left`: left slope (or -∞ at 0) to s
            let lower = if i == 0 { f64::NEG_INFINITY } else { pa.slopes[i - 1] };
            let shift = -b + n * (left - y);
            if lower + shift <= 0.0 && s + shift >= 0.0 {
                return left;
            }
            let right = if i + 1 < m { pa.breaks[i + 1] } else { pa.right_end };
            let z = y + (b - s) / n;
            if z > left && z < right {
                return z;
            }
        }
        // right end of a bounded domain
        pa.right_end
    }

    /// `Ũ_n(y)`.
    pub fn value(&self, y: f64) -> f64 {
        let z = self.prox_point(y);
        let d = z - y;
        self.conj.value(z) - self.beta * d + 0.5 * self.n * d * d
    }

    /// `DŨ_n(y) = n(y - z_n(y)) + β`.
    pub fn deriv(&self, y: f64) -> f64 {
        let z = self.prox_point(y);
        let g = self.n * (y - z) + self.beta;
        if z > 0.0 {
            let sd = self.conj.subdiff(z).expect("prox point lies in the domain");
            g.clamp(sd.lo, sd.hi)
        } else {
            g
        }
    }

    /// Generalized second derivative of `Ũ_n` at `y`: `nc/(n + c)` where
    /// `Ũ''(z_n) = c` exists, `n` at kinks and on the clamp at zero.
    pub fn second_deriv(&self, y: f64) -> f64 {
        let z = self.prox_point(y);
        if z <= 0.0 {
            return self.n;
        }
        match self.conj.second_derivative(z) {
            Some(c) if c.is_finite() => self.n * c / (self.n + c),
            _ => self.n,
        }
    }

    /// `(value, derivative, second derivative)` from one prox evaluation.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let z = self.prox_point(y);
        let d = z - y;
        let value = self.conj.value(z) - self.beta * d + 0.5 * self.n * d * d;
        let mut g = -self.n * d + self.beta;
        let h;
        if z > 0.0 {
            let sd = self.conj.subdiff(z).expect("prox point lies in the domain");
            g = g.clamp(sd.lo, sd.hi);
            h = match self.conj.second_derivative(z) {
                Some(c) if c.is_finite() => self.n * c / (self.n + c),
                _ => self.n,
            };
        } else {
            h = self.n;
        }
        (value, g, h)
    }
}

/// `infconv_value` as a free function.
pub fn infconv_value(ic: &InfConvolution, y: f64) -> f64 {
    ic.value(y)
}

/// `infconv_deriv` as a free function.
pub fn infconv_deriv(ic: &InfConvolution, y: f64) -> f64 {
    ic.deriv(y)
}

/// Constants witnessing the uniform growth bounds of the smoothed family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferCertificate {
    pub gamma: f64,
    pub c: f64,
    pub levels: Vec<f64>,
    /// `Ũ(μy) - 2βμy ≤ μ^{-γ}(Ũ(y) - 2βy)` held on the grid.
    pub base_inequality: bool,
}

/// Searches `γ` and `C` such that, for `n ∈ {1, 10, 100}`, `μ ∈ {1/2, 3/4, 1}`
/// and `y = y0 2^{-k}`,
/// `Ũ_n(μy) - βμy ≤ μ^{-γ}[C + Ũ_n(y) - βy]` and
/// `-(DŨ_n(y) - β) y ≤ C(1 + Ũ_n(y) - βy)`.
pub fn elasticity_transfer_check(ic: &InfConvolution, y0: f64) -> Result<TransferCertificate> {
    if !(y0 > 0.0) {
        return Err(Error::Precondition("y0 must be positive".into()));
    }
    let levels = [1.0, 10.0, 100.0];
    let mus = [0.5, 0.75, 1.0];
    let ys: Vec<f64> = (0..=20).map(|k| y0 * 2.0f64.powi(-k)).collect();
    let b = ic.beta();
    let mut samples = Vec::new();
    for &n in &levels {
        let icn = ic.with_level(n)?;
        for &y in &ys {
            let (fy, dy, _) = icn.eval(y);
            let fmu: Vec<f64> = mus.iter().map(|&mu| icn.value(mu * y)).collect();
            samples.push((y, fy, dy, fmu));
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for gamma in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0] {
        let mut c = 0.0f64;
        let mut ok = true;
        for (y, fy, dy, fmu) in &samples {
            let base = fy - b * y;
            for (mu, f) in mus.iter().zip(fmu) {
                // μ^γ (Ũ_n(μy) - βμy) - (Ũ_n(y) - βy) ≤ C
                c = c.max(mu.powf(gamma) * (f - b * mu * y) - base);
            }
            let lhs = -(dy - b) * y;
            let den = 1.0 + base;
            if den > 0.0 {
                c = c.max(lhs / den);
            } else if lhs > 0.0 {
                ok = false;
            }
        }
        if ok && c.is_finite() && best.map(|(_, bc)| c < bc).unwrap_or(true) {
            best = Some((gamma, c));
        }
    }
    let Some((gamma, c)) = best else {
        return Err(Error::NoConvergence("no finite growth constants on the probe grid".into()));
    };
    let conj = ic.conjugate();
    let mut base_inequality = true;
    for &y in &ys {
        let f = conj.value(y) - 2.0 * b * y;
        for &mu in &mus {
            let fm = conj.value(mu * y) - 2.0 * b * mu * y;
            if fm > mu.powf(-gamma) * f + 1e-12 * (1.0 + f.abs()) {
                base_inequality = false;
            }
        }
    }
    Ok(TransferCertificate {
        gamma,
        c,
        levels: levels.to_vec(),
        base_inequality,
    })
}
