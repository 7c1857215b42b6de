//! Small dense linear algebra. Problem sizes here are a few dozen
//! unknowns, so everything is row-major `Vec<f64>` with no blocking.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            debug_assert_eq!(r.len(), cols);
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Cholesky solve of a symmetric positive definite system. Returns `None`
/// when a pivot is not positive.
pub fn solve_cholesky(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    let mut l = a.data.clone();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Some(y)
}

/// Solves a symmetric positive semidefinite system, adding the smallest
/// ridge (relative to the diagonal scale) that makes the factorization
/// succeed.
pub fn solve_psd(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    if let Some(x) = solve_cholesky(a, b) {
        return Some(x);
    }
    let n = a.rows;
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a.at(i, i).abs())).max(1e-300);
    let mut ridge = 1e-14;
    while ridge <= 1e-2 {
        let mut r = a.clone();
        for i in 0..n {
            *r.at_mut(i, i) += ridge * scale;
        }
        if let Some(x) = solve_cholesky(&r, b) {
            return Some(x);
        }
        ridge *= 100.0;
    }
    None
}

/// LU solve with partial pivoting; `None` when the matrix is numerically
/// singular.
pub fn solve_lu(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let scale = norm_inf(&m).max(1e-300);
    for c in 0..n {
        let (p, pv) = (c..n)
            .map(|r| (r, m[r * n + c].abs()))
            .fold((c, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
        if pv <= 1e-13 * scale {
            return None;
        }
        if p != c {
            for k in 0..n {
                m.swap(c * n + k, p * n + k);
            }
            x.swap(c, p);
        }
        let piv = m[c * n + c];
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            if f != 0.0 {
                for k in c..n {
                    m[r * n + k] -= f * m[c * n + k];
                }
                x[r] -= f * x[c];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for k in r + 1..n {
            s -= m[r * n + k] * x[k];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// `None` when a pivot falls below `1e-13` times the largest entry.
    pub fn factor(a: &Matrix) -> Option<Lu> {
        let n = a.rows;
        let mut m = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = norm_inf(&m).max(1e-300);
        for c in 0..n {
            let (p, pv) = (c..n)
                .map(|r| (r, m[r * n + c].abs()))
                .fold((c, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
            if pv <= 1e-13 * scale {
                return None;
            }
            if p != c {
                for k in 0..n {
                    m.swap(c * n + k, p * n + k);
                }
                perm.swap(c, p);
            }
            let piv = m[c * n + c];
            for r in c + 1..n {
                let f = m[r * n + c] / piv;
                m[r * n + c] = f;
                if f != 0.0 {
                    for k in c + 1..n {
                        m[r * n + k] -= f * m[c * n + k];
                    }
                }
            }
        }
        Some(Lu { n, lu: m, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 0..n {
            let mut s = x[r];
            for k in 0..r {
                s -= self.lu[r * n + k] * x[k];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for k in r + 1..n {
                s -= self.lu[r * n + k] * x[k];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w
        let mut z = b.to_vec();
        for r in 0..n {
            let mut s = z[r];
            for k in 0..r {
                s -= self.lu[k * n + r] * z[k];
            }
            z[r] = s / self.lu[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = z[r];
            for k in r + 1..n {
                s -= self.lu[k * n + r] * z[k];
            }
            z[r] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Orthonormal basis of the span of `rows` (modified Gram-Schmidt, two
/// passes). Rows whose residual norm falls below `tol` times their original
/// norm are dropped as dependent.
pub fn orthonormal_basis(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let n0 = norm2(r);
        if n0 == 0.0 {
            continue;
        }
        let mut v = r.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv > tol * n0 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    basis
}

/// Orthonormal basis of `{v : row · v = 0 for every row}` in dimension `n`.
pub fn null_space(rows: &[Vec<f64>], n: usize, tol: f64) -> Vec<Vec<f64>> {
    let row_basis = orthonormal_basis(rows, tol);
    let mut all = row_basis.clone();
    let mut null = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for _ in 0..2 {
            for q in &all {
                let c = dot(q, &e);
                axpy(-c, q, &mut e);
            }
        }
        let ne = norm2(&e);
        if ne > 1e-8 {
            e.iter_mut().for_each(|x| *x /= ne);
            all.push(e.clone());
            null.push(e);
        }
        if all.len() == n {
            break;
        }
    }
    null
}

/// Least-squares solution of `a x ≈ b` via column-pivot-free modified
/// Gram-Schmidt QR. Numerically dependent columns get a zero coefficient.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.rows, a.cols);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    let mut kept = vec![false; n];
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|i| a.at(i, j)).collect();
        let n0 = norm2(&col);
        let mut v = col;
        for (k, qk) in q.iter().enumerate() {
            if qk.is_empty() {
                continue;
            }
            let c = dot(qk, &v);
            *r.at_mut(k, j) = c;
            axpy(-c, qk, &mut v);
        }
        let nv = norm2(&v);
        if n0 > 0.0 && nv > 1e-12 * n0 {
            v.iter_mut().for_each(|x| *x /= nv);
            *r.at_mut(j, j) = nv;
            kept[j] = true;
            q.push(v);
        } else {
            q.push(Vec::new());
        }
    }
    let qtb: Vec<f64> = q.iter().map(|qk| if qk.is_empty() { 0.0 } else { dot(qk, b) }).collect();
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        if !kept[j] {
            continue;
        }
        let mut s = qtb[j];
        for k in j + 1..n {
            s -= r.at(j, k) * x[k];
        }
        x[j] = s / r.at(j, j);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_and_lu_agree() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]], 3);
        let b = [1.0, -2.0, 0.5];
        let x1 = solve_cholesky(&a, &b).unwrap();
        let x2 = solve_lu(&a, &b).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-14);
        }
        let ax = a.mul_vec(&x1);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn lu_solves_both_orientations() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]], 3);
        let lu = Lu::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let ax = a.mul_vec(&x);
        let y = lu.solve_transpose(&b);
        let aty = a.transpose_mul_vec(&y);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-14);
            assert!((aty[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn null_space_is_orthogonal_to_rows() {
        let rows = [vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 2.0, 0.0], vec![2.0, 0.0, 3.0, 1.0]];
        // third row is the sum of the first two
        let ns = null_space(&rows, 4, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for r in &rows {
                assert!(dot(r, v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0]], 2);
        let x = least_squares(&a, &[1.0, 2.0, -1.0]);
        let ax = a.mul_vec(&x);
        assert!((ax[0] - 1.0).abs() < 1e-12 && (ax[1] - 2.0).abs() < 1e-12);
    }
}
