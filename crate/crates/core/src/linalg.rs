//! Small dense linear algebra: LU factorization with partial pivoting,
//! solves, inverses, and a 1-norm condition estimate.
//!
//! The matrices here are tiny (bordered support-vector systems, KKT
//! systems), so a plain LU is both adequate and dependency-free.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// LU factorization of a square matrix with partial pivoting.
pub struct Lu {
    /// Combined L (unit lower, below diagonal) and U (upper) factors.
    lu: Array2<f64>,
    /// Row permutation applied to the input.
    piv: Vec<usize>,
    n: usize,
}

impl Lu {
    /// Factor `a`. Fails when a pivot underflows to zero (exactly singular).
    pub fn factor(a: &Array2<f64>) -> Result<Lu> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[[col, col]].abs();
            for r in col + 1..n {
                let v = lu[[r, col]].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return Err(Error::Singular {
                    cond: f64::INFINITY,
                });
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap([col, c], [pivot_row, c]);
                }
                piv.swap(col, pivot_row);
            }
            let d = lu[[col, col]];
            for r in col + 1..n {
                let factor = lu[[r, col]] / d;
                lu[[r, col]] = factor;
                for c in col + 1..n {
                    lu[[r, c]] -= factor * lu[[col, c]];
                }
            }
        }
        Ok(Lu { lu, piv, n })
    }

    /// Solve `A x = b` for one right-hand side.
    pub fn solve(&self, b: &Array1<f64>) -> Result<Array1<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        let mut x = Array1::zeros(n);
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        // forward substitution (L has unit diagonal)
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[[i, j]];
                x[i] -= l * x[j];
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[[i, j]];
                x[i] -= u * x[j];
            }
            x[i] /= self.lu[[i, i]];
        }
        Ok(x)
    }

    /// Full inverse, column by column.
    pub fn inverse(&self) -> Result<Array2<f64>> {
        let n = self.n;
        let mut inv = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for c in 0..n {
            e.fill(0.0);
            e[c] = 1.0;
            let x = self.solve(&e)?;
            for r in 0..n {
                inv[[r, c]] = x[r];
            }
        }
        Ok(inv)
    }
}

/// Invert `a`, also returning the 1-norm condition estimate `‖A‖₁·‖A⁻¹‖₁`.
pub fn invert_with_cond(a: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let lu = Lu::factor(a)?;
    let inv = lu.inverse()?;
    let cond = norm_1(a) * norm_1(&inv);
    Ok((inv, cond))
}

/// Solve `A x = b` once, without keeping the factorization.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    Lu::factor(a)?.solve(b)
}

/// Maximum absolute column sum.
pub fn norm_1(a: &Array2<f64>) -> f64 {
    let mut best = 0.0f64;
    for c in 0..a.ncols() {
        let s: f64 = (0..a.nrows()).map(|r| a[[r, c]].abs()).sum();
        best = best.max(s);
    }
    best
}
