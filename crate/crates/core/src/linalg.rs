//! Dense symmetric positive-definite solves.
//!
//! The factorization works on the diagonally equilibrated matrix
//! `D^{-1/2} A D^{-1/2}` (unit diagonal), so the singularity threshold is
//! relative to each column's own scale rather than to the largest column.

use nalgebra::{DMatrix, DVector};

/// Pivots below this fraction of the (unit) equilibrated diagonal are singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
    scale: DVector<f64>,
}

impl Cholesky {
    /// Factor a symmetric matrix. Only the lower triangle is read.
    ///
    /// On failure returns the 0-based index of the first column whose pivot
    /// falls below [`PIVOT_TOLERANCE`].
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, usize> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
        let mut scale = DVector::zeros(n);
        for i in 0..n {
            let d = a[(i, i)];
            if !(d.is_finite() && d > 0.0) {
                return Err(i);
            }
            scale[i] = 1.0 / d.sqrt();
        }

        let mut lower = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)] * scale[j] * scale[j];
            for k in 0..j {
                pivot -= lower[(j, k)] * lower[(j, k)];
            }
            if pivot.is_nan() || pivot <= PIVOT_TOLERANCE {
                return Err(j);
            }
            let root = pivot.sqrt();
            lower[(j, j)] = root;
            for i in (j + 1)..n {
                let mut v = a[(i, j)] * scale[i] * scale[j];
                for k in 0..j {
                    v -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = v / root;
            }
        }
        Ok(Self { lower, scale })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        // forward: L z = D^{-1/2} b
        let mut z = DVector::zeros(n);
        for i in 0..n {
            let mut v = b[i] * self.scale[i];
            for k in 0..i {
                v -= self.lower[(i, k)] * z[k];
            }
            z[i] = v / self.lower[(i, i)];
        }
        // backward: L' w = z, then x = D^{-1/2} w
        let mut w = DVector::zeros(n);
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in (i + 1)..n {
                v -= self.lower[(k, i)] * w[k];
            }
            w[i] = v / self.lower[(i, i)];
        }
        w.component_mul_assign(&self.scale);
        w
    }

    /// Materialize `A^{-1}` by solving against the identity columns.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        symmetrize(&mut inv);
        inv
    }
}

/// Replace `m` by `(m + m') / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest absolute entry; 0 for an empty vector.
pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
