//! Dense two-phase simplex for the small, highly degenerate programs that
//! martingale polytopes produce (tens to a few hundred variables). Dantzig
//! pricing with a fallback to Bland's rule, a Harris-style ratio test and
//! periodic reinversion of the basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Lu, Matrix};

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Objective coefficients (minimized).
    pub cost: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
    /// Variables without the implicit `x >= 0` bound.
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<f64>, f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            cost: vec![0.0; num_vars],
            eq: Vec::new(),
            le: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars);
        self.eq.push((row, rhs));
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars);
        self.le.push((row, rhs));
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    pub fn minimize(&self) -> LpOutcome {
        solve(self)
    }

    pub fn maximize(&self) -> LpOutcome {
        let mut neg = self.clone();
        neg.cost.iter_mut().for_each(|c| *c = -*c);
        match solve(&neg) {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
            other => other,
        }
    }
}

/// Pivots between two reinversions of the basis.
const REFACTOR_EVERY: usize = 30;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;
const MAX_PIVOTS: usize = 20_000;

/// Revised-simplex state kept as a dense tableau `B⁻¹ A`, rebuilt from the
/// original data every few pivots to stop rounding from accumulating.
struct Simplex {
    m: usize,
    cols: usize,
    /// Original constraint matrix, row-major `m × cols`, and right-hand side.
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    /// Current `B⁻¹ A`, `B⁻¹ b` and reduced costs.
    t: Vec<f64>,
    rhs: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
}

enum Run {
    Optimal,
    Unbounded,
}

impl Simplex {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn reprice(&mut self) {
        for j in 0..self.cols {
            let mut v = self.cost[j];
            for i in 0..self.m {
                let cb = self.cost[self.basis[i]];
                if cb != 0.0 {
                    v -= cb * self.at(i, j);
                }
            }
            self.d[j] = v;
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Rebuilds the tableau from the original data for the current basis.
    fn refactor(&mut self) {
        let m = self.m;
        if m == 0 {
            self.reprice();
            return;
        }
        let mut bm = Matrix::zeros(m, m);
        for i in 0..m {
            for (k, &j) in self.basis.iter().enumerate() {
                *bm.at_mut(i, k) = self.a[i * self.cols + j];
            }
        }
        if let Some(lu) = Lu::factor(&bm) {
            let mut col = vec![0.0; m];
            for j in 0..self.cols {
                let mut nz = false;
                for i in 0..m {
                    col[i] = self.a[i * self.cols + j];
                    nz |= col[i] != 0.0;
                }
                let sol = if nz { lu.solve(&col) } else { vec![0.0; m] };
                for i in 0..m {
                    self.t[i * self.cols + j] = sol[i];
                }
            }
            for (k, &j) in self.basis.iter().enumerate() {
                for i in 0..m {
                    self.t[i * self.cols + j] = if i == k { 1.0 } else { 0.0 };
                }
            }
            self.rhs = lu.solve(&self.b);
        }
        self.reprice();
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.at(r, c);
        for j in 0..cols {
            self.t[r * cols + j] /= p;
        }
        self.rhs[r] /= p;
        self.t[r * cols + c] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f != 0.0 {
                for j in 0..cols {
                    let v = self.t[r * cols + j];
                    if v != 0.0 {
                        self.t[i * cols + j] -= f * v;
                    }
                }
                self.t[i * cols + c] = 0.0;
                self.rhs[i] -= f * self.rhs[r];
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for j in 0..cols {
                let v = self.t[r * cols + j];
                if v != 0.0 {
                    self.d[j] -= f * v;
                }
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self, allowed: &[bool], tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if !allowed[j] || self.d[j] >= -tol {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, v)| self.d[j] < v) {
                best = Some((j, self.d[j]));
            }
        }
        best.map(|b| b.0)
    }

    fn leaving(&self, c: usize, bland: bool) -> Option<(usize, f64)> {
        let colmax = (0..self.m).fold(0.0f64, |acc, i| acc.max(self.at(i, c).abs()));
        let tol = (1e-9 * colmax).max(1e-12);
        let mut theta = f64::INFINITY;
        for i in 0..self.m {
            let a = self.at(i, c);
            if a > tol {
                theta = theta.min(self.rhs[i].max(0.0) / a);
            }
        }
        if !theta.is_finite() {
            return None;
        }
        let mut pick: Option<usize> = None;
        for i in 0..self.m {
            let a = self.at(i, c);
            if a > tol && self.rhs[i].max(0.0) / a <= theta + 1e-12 * (1.0 + theta) {
                pick = match pick {
                    None => Some(i),
                    Some(k) if bland => Some(if self.basis[i] < self.basis[k] { i } else { k }),
                    Some(k) => Some(if a > self.at(k, c) { i } else { k }),
                };
            }
        }
        pick.map(|r| (r, theta))
    }

    fn run(&mut self, allowed: &[bool]) -> Run {
        let cmax = self.cost.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tol = 1e-10 * (1.0 + cmax);
        let mut since = 0;
        let mut degenerate = 0;
        for _ in 0..MAX_PIVOTS {
            if since >= REFACTOR_EVERY {
                self.refactor();
                since = 0;
            }
            let bland = degenerate > DEGENERATE_LIMIT;
            let Some(c) = self.entering(allowed, tol, bland) else {
                if since == 0 {
                    return Run::Optimal;
                }
                self.refactor();
                since = 0;
                continue;
            };
            let Some((r, theta)) = self.leaving(c, bland) else {
                if since == 0 {
                    return Run::Unbounded;
                }
                self.refactor();
                since = 0;
                continue;
            };
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c);
            since += 1;
        }
        self.refactor();
        Run::Optimal
    }
}

fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars;
    // column layout: [x+ (n)] [x- for free vars] [slacks for le] [artificials]
    let free_idx: Vec<usize> = (0..n).filter(|&j| lp.free[j]).collect();
    let n_split = n + free_idx.len();
    let n_slack = lp.le.len();
    let m = lp.eq.len() + lp.le.len();
    let n_struct = n_split + n_slack;
    let cols = n_struct + m;
    let mut a = vec![0.0; m * cols];
    let mut b = vec![0.0; m];
    let rows_iter = lp
        .eq
        .iter()
        .map(|(r, b)| (r, *b, None))
        .chain(lp.le.iter().enumerate().map(|(k, (r, b))| (r, *b, Some(k))));
    for (i, (row, bi, slack)) in rows_iter.enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[i * cols + j] = sign * row[j];
        }
        for (k, &j) in free_idx.iter().enumerate() {
            a[i * cols + n + k] = -sign * row[j];
        }
        if let Some(k) = slack {
            a[i * cols + n_split + k] = sign;
        }
        a[i * cols + n_struct + i] = 1.0;
        b[i] = sign * bi;
    }
    let mut phase1 = vec![0.0; cols];
    for c in phase1.iter_mut().skip(n_struct) {
        *c = 1.0;
    }
    let mut sx = Simplex {
        m,
        cols,
        t: a.clone(),
        rhs: b.clone(),
        a,
        b,
        cost: phase1,
        d: vec![0.0; cols],
        basis: (n_struct..cols).collect(),
    };
    sx.reprice();
    let all = vec![true; cols];
    sx.run(&all);
    let bscale = 1.0 + sx.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let infeasibility: f64 = (0..m).filter(|&i| sx.basis[i] >= n_struct).map(|i| sx.rhs[i].max(0.0)).sum();
    if infeasibility > 1e-9 * bscale {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis where the row allows it
    for i in 0..m {
        if sx.basis[i] >= n_struct {
            let rowmax = (0..n_struct).fold(0.0f64, |acc, j| acc.max(sx.at(i, j).abs()));
            if rowmax > 1e-9 {
                let j = (0..n_struct).find(|&j| sx.at(i, j).abs() >= 0.5 * rowmax).unwrap_or(0);
                sx.pivot(i, j);
            }
        }
    }
    // phase 2
    let mut allowed = vec![true; cols];
    for flag in allowed.iter_mut().skip(n_struct) {
        *flag = false;
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.cost);
    for (k, &j) in free_idx.iter().enumerate() {
        cost[n + k] = -lp.cost[j];
    }
    sx.cost = cost;
    sx.refactor();
    if let Run::Unbounded = sx.run(&allowed) {
        return LpOutcome::Unbounded;
    }
    let mut xs = vec![0.0; cols];
    for i in 0..m {
        xs[sx.basis[i]] = sx.rhs[i].max(0.0);
    }
    let mut x = xs[..n].to_vec();
    for (k, &j) in free_idx.iter().enumerate() {
        x[j] -= xs[n + k];
    }
    let value = x.iter().zip(&lp.cost).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2), value 2.8
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![1.0, 1.0];
        lp.add_le(vec![1.0, 2.0], 4.0);
        lp.add_le(vec![3.0, 1.0], 6.0);
        let (x, v) = lp.maximize().optimal().unwrap();
        assert!((v - 2.8).abs() < 1e-12);
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn free_vars_equalities_and_status() {
        // min |shape| : x free, x = -3 -> value -3 for cost 1
        let mut lp = LinearProgram::new(1);
        lp.free[0] = true;
        lp.cost[0] = 1.0;
        lp.add_eq(vec![1.0], -3.0);
        let (x, v) = lp.minimize().optimal().unwrap();
        assert!((x[0] + 3.0).abs() < 1e-12 && (v + 3.0).abs() < 1e-12);

        let mut inf = LinearProgram::new(1);
        inf.add_le(vec![1.0], -1.0);
        assert_eq!(inf.minimize(), LpOutcome::Infeasible);

        let mut unb = LinearProgram::new(1);
        unb.cost[0] = -1.0;
        assert_eq!(unb.minimize(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(3);
        lp.cost = vec![1.0, 2.0, 3.0];
        lp.add_eq(vec![1.0, 1.0, 1.0], 1.0);
        lp.add_eq(vec![2.0, 2.0, 2.0], 2.0);
        lp.add_eq(vec![0.0, 1.0, -1.0], 0.0);
        let (x, v) = lp.minimize().optimal().unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{x:?}");
    }
}
