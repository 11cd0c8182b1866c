use crate::precision::Real;

use super::{DenseMatrix, LinalgError};

/// `PA = LU` with partial pivoting, `L` unit lower and `U` upper stored in place.
#[derive(Clone, Debug)]
pub struct LuFactor<T: Real> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> LuFactor<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch(format!("LU of a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = (n as f64) * T::unit_roundoff() * a.max_abs();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.to_f64() <= threshold || best == T::zero() {
                return Err(LinalgError::Singular { pivot: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "LU solve dimension");
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = y[i];
            for j in 0..i {
                s -= row[j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = y[i];
            for j in i + 1..n {
                s -= row[j] * y[j];
            }
            y[i] = s / row[i];
        }
        y
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn solve(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut x = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            x.set_column(j, &self.solve_vec(&b.column(j)));
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        self.solve(&DenseMatrix::identity(self.dim()))
    }
}

/// Solves `AX = B` by partial-pivoting LU.
pub fn lu_solve<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch(format!("A has {} rows, B has {}", a.rows(), b.rows())));
    }
    Ok(LuFactor::new(a)?.solve(b))
}
