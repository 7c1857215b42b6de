//! Diagonal quadratic projection onto `{v ≥ 0 : R v = 0}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, solve_psd, Matrix};

/// Minimizes `½ Σ h_i (v_i - m_i)²` over `v ≥ 0` with `R v = 0`, where the
/// rows of `R` are orthonormal. Newton ascent on the concave dual in the
/// multipliers, with `v(λ) = max(0, m - Rᵀλ / h)`.
pub(crate) fn project(h: &[f64], m: &[f64], rows: &[Vec<f64>], warm: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let n = m.len();
    let k = rows.len();
    let primal = |lam: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let rt: f64 = (0..k).map(|j| rows[j][i] * lam[j]).sum();
                (m[i] - rt / h[i]).max(0.0)
            })
            .collect()
    };
    if k == 0 {
        return (primal(&[]), Vec::new());
    }
    let dual_value = |lam: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let d = v[i] - m[i];
            s += 0.5 * h[i] * d * d;
        }
        for j in 0..k {
            s += lam[j] * dot(&rows[j], v);
        }
        s
    };
    let scale = 1.0 + m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut lam = match warm {
        Some(w) if w.len() == k => w.to_vec(),
        _ => vec![0.0; k],
    };
    let mut v = primal(&lam);
    for _ in 0..200 {
        let r: Vec<f64> = rows.iter().map(|row| dot(row, &v)).collect();
        let rn = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if rn <= 1e-15 * scale {
            break;
        }
        let mut mat = Matrix::zeros(k, k);
        for i in 0..n {
            let free = m[i] - (0..k).map(|j| rows[j][i] * lam[j]).sum::<f64>() / h[i] > 0.0;
            if !free {
                continue;
            }
            let w = 1.0 / h[i];
            for a in 0..k {
                let ra = rows[a][i] * w;
                if ra == 0.0 {
                    continue;
                }
                for b in 0..k {
                    *mat.at_mut(a, b) += ra * rows[b][i];
                }
            }
        }
        let Some(step) = solve_psd(&mat, &r) else { break };
        let psi0 = dual_value(&lam, &v);
        let slope = dot(&r, &step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = lam.iter().zip(&step).map(|(l, s)| l + t * s).collect();
            let vc = primal(&cand);
            let psi = dual_value(&cand, &vc);
            if psi >= psi0 + 1e-4 * t * slope {
                moved = cand != lam;
                lam = cand;
                v = vc;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (v, lam)
}

/// Pulls `v` back onto `{R v = 0}` by minimum-norm corrections on its
/// positive coordinates, clipping at zero. Returns the final residual
/// `max |R v|`.
pub(crate) fn restore(rows: &[Vec<f64>], v: &mut [f64]) -> f64 {
    let k = rows.len();
    let residual = |v: &[f64]| -> Vec<f64> { rows.iter().map(|row| dot(row, v)).collect() };
    let mut r = residual(v);
    let mut rn = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for _ in 0..8 {
        if rn == 0.0 || k == 0 {
            break;
        }
        let free: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0.0).collect();
        let mut mat = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                *mat.at_mut(a, b) = free.iter().map(|&i| rows[a][i] * rows[b][i]).sum();
            }
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let Some(z) = solve_psd(&mat, &neg) else { break };
        let mut cand = v.to_vec();
        for &i in &free {
            let d: f64 = (0..k).map(|a| rows[a][i] * z[a]).sum();
            cand[i] = (cand[i] + d).max(0.0);
        }
        let rc = residual(&cand);
        let rcn = rc.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(rcn < rn) {
            break;
        }
        v.copy_from_slice(&cand);
        r = rc;
        rn = rcn;
    }
    rn
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_a_line_through_the_orthant() {
        // R = (1, -1)/√2: v1 = v2, v ≥ 0; target (3, 1) with unit weights → (2, 2)
        let s = 0.5f64.sqrt();
        let (v, _) = project(&[1.0, 1.0], &[3.0, 1.0], &[vec![s, -s]], None);
        assert!((v[0] - 2.0).abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14);
        // weighted: h = (1, 3) → v = (3 + 3·1)/4 = 1.5
        let (v, _) = project(&[1.0, 3.0], &[3.0, 1.0], &[vec![s, -s]], None);
        assert!((v[0] - 1.5).abs() < 1e-14 && (v[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn restore_removes_a_small_violation() {
        let s = 0.5f64.sqrt();
        let mut v = vec![2.0, 2.0 + 1e-6];
        let r = restore(&[vec![s, -s]], &mut v);
        assert!(r < 1e-15);
        assert!((v[0] - v[1]).abs() < 1e-15);
    }

    #[test]
    fn projection_with_a_negative_target() {
        // trinomial cone row (-0.5, 0, 1): v3 = v1 / 2, optimum v1 = 0.4
        let nr = (0.25f64 + 1.0).sqrt();
        let row = vec![-0.5 / nr, 0.0, 1.0 / nr];
        let (v, _) = project(&[1.0, 1.0, 1.0], &[1.0, 1.0, -1.0], core::slice::from_ref(&row), None);
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!(dot(&row, &v).abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.4).abs() < 1e-14 && (v[2] - 0.2).abs() < 1e-14);
        // both targets negative: the origin
        let (v, _) = project(&[1.0, 1.0, 1.0], &[-1.0, -2.0, -1.0], &[row], None);
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
    }
}
