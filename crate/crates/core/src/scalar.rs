//! One-dimensional search helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns the best point seen and its value.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best, mut fbest) = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..max_iter {
        if (b - a).abs() <= tol * (1.0 + c.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if fc < fbest {
            best = c;
            fbest = fc;
        }
        if fd < fbest {
            best = d;
            fbest = fd;
        }
    }
    (best, fbest)
}

/// Finds `[lo, hi]` bracketing the minimizer of a convex function on
/// `[0, ∞)`, doubling from `start`.
pub fn bracket_nonnegative<F: FnMut(f64) -> f64>(mut f: F, start: f64, max_doublings: usize) -> (f64, f64) {
    let mut prev = 0.0;
    let f0 = f(0.0);
    let mut cur = start;
    let mut fcur = f(cur);
    if !(fcur < f0) {
        return (0.0, cur);
    }
    for _ in 0..max_doublings {
        let next = 2.0 * cur;
        let fnext = f(next);
        if !(fnext < fcur) {
            return (prev, next);
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    (prev, 2.0 * cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, fx) = golden_section(|x| (x - 1.3) * (x - 1.3) + 2.0, -5.0, 5.0, 1e-10, 500);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_then_golden() {
        let f = |y: f64| y * y / 4.0 - 3.0 * y;
        let (lo, hi) = bracket_nonnegative(f, 1.0, 60);
        assert!(lo <= 6.0 && 6.0 <= hi);
        let (y, _) = golden_section(f, lo, hi, 1e-12, 500);
        assert!((y - 6.0).abs() < 1e-6);
    }
}
