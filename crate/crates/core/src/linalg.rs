//! Minimal dense linear algebra for the regression backends.

use crate::error::{Error, Result};

/// Polynomial design row `[1, t, t^2, ..., t^degree]`.
pub fn design_row(t: f64, degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    for _ in 0..=degree {
        row.push(p);
        p *= t;
    }
    row
}

/// Solve `A x = b` for symmetric positive-definite `A` (row-major, n x n)
/// via Cholesky. Returns `None` when `A` is singular or numerically
/// indefinite: each pivot must retain at least a 1e-12 fraction of its
/// original diagonal, which keeps the test scale invariant.
pub fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..j {
                s += l[i * n + k] * l[j * n + k];
            }
            if i == j {
                let diag = a[i * n + i] - s;
                if diag <= 1e-12 * a[i * n + i] || !diag.is_finite() {
                    return None;
                }
                l[i * n + j] = diag.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Accumulator for (weighted) least-squares normal equations.
#[derive(Debug, Clone)]
pub struct NormalEq {
    dim: usize,
    xtx: Vec<f64>,
    xty: Vec<f64>,
}

impl NormalEq {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            xtx: vec![0.0; dim * dim],
            xty: vec![0.0; dim],
        }
    }

    /// Add one observation with weight `w`.
    pub fn add(&mut self, x: &[f64], y: f64, w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, &xi) in x.iter().enumerate() {
            let wxi = w * xi;
            for (cell, &xj) in self.xtx[i * self.dim..(i + 1) * self.dim].iter_mut().zip(x) {
                *cell += wxi * xj;
            }
            self.xty[i] += wxi * y;
        }
    }

    /// Add `c * u u^T` to the left-hand side. Used by GLS accumulation where
    /// V^-1 carries a rank-one correction.
    pub fn add_outer(&mut self, u: &[f64], c: f64) {
        debug_assert_eq!(u.len(), self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.xtx[i * self.dim + j] += c * u[i] * u[j];
            }
        }
    }

    /// Add `d * u` to the right-hand side.
    pub fn add_rhs(&mut self, u: &[f64], d: f64) {
        debug_assert_eq!(u.len(), self.dim);
        for (acc, &ui) in self.xty.iter_mut().zip(u) {
            *acc += d * ui;
        }
    }

    /// Solve for the coefficient vector; errors when the system is singular.
    pub fn solve(&self) -> Result<Vec<f64>> {
        cholesky_solve(&self.xtx, &self.xty, self.dim)
            .ok_or_else(|| Error::InvalidSpec("design matrix is rank deficient".into()))
    }

    pub fn try_solve(&self) -> Option<Vec<f64>> {
        cholesky_solve(&self.xtx, &self.xty, self.dim)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log(sum(exp(xs))) evaluated stably.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [10, 9] -> x = [1.5, 2]
        let a = [4.0, 2.0, 2.0, 3.0];
        let b = [10.0, 9.0];
        let x = cholesky_solve(&a, &b, 2).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_solve(&a, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn normal_equations_recover_line() {
        // y = 3 + 2 t fitted exactly.
        let mut ne = NormalEq::new(2);
        for t in 0..5 {
            let t = t as f64;
            ne.add(&design_row(t, 1), 3.0 + 2.0 * t, 1.0);
        }
        let beta = ne.solve().unwrap();
        assert!((beta[0] - 3.0).abs() < 1e-10);
        assert!((beta[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn log_sum_exp_matches_naive_when_safe() {
        let xs: [f64; 3] = [0.1, -1.0, 2.5];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_survives_large_magnitudes() {
        let xs = [-1000.0, -1000.5];
        let got = log_sum_exp(&xs);
        assert!((got - (-1000.0 + (1.0 + (-0.5f64).exp()).ln())).abs() < 1e-9);
    }
}
