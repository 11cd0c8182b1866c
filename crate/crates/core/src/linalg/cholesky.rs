use crate::precision::Real;

use super::{DenseMatrix, LinalgError, SparseMatrixCsr};

/// Dense Cholesky `A = GGᵀ`; only the lower triangle of `a` is read.
pub fn cholesky<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("Cholesky of a non-square matrix".into()));
    }
    let n = a.rows();
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= g[(j, k)] * g[(j, k)];
        }
        if !(d > T::zero()) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j });
        }
        let d = d.sqrt();
        g[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= g[(i, k)] * g[(j, k)];
            }
            g[(i, j)] = s / d;
        }
    }
    Ok(g)
}

/// Solves `GGᵀ x = b` for a dense lower factor.
pub fn cholesky_solve<T: Real>(g: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = g.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= g[(i, k)] * y[k];
        }
        y[i] = s / g[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= g[(k, i)] * y[k];
        }
        y[i] = s / g[(i, i)];
    }
    y
}

/// Lower Cholesky factor in envelope (skyline) storage. Row `i` holds
/// columns `first[i]..=i`.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
    nnz: usize,
}

/// Largest order accepted by the sparse factorizations.
pub const MAX_SPARSE_FACTOR_ORDER: usize = 4000;

impl EnvelopeCholesky {
    /// Complete factorization of a symmetric sparse matrix.
    pub fn new(a: &SparseMatrixCsr) -> Result<Self, LinalgError> {
        Self::factor(a, 0.0)
    }

    /// Incomplete factorization: an off-diagonal `L[i][j]` is dropped when
    /// `|L[i][j]| < drop_tol * ‖A[j.., j]‖₁`. The diagonal is always kept.
    pub fn incomplete(a: &SparseMatrixCsr, drop_tol: f64) -> Result<Self, LinalgError> {
        Self::factor(a, drop_tol)
    }

    fn factor(a: &SparseMatrixCsr, drop_tol: f64) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::DimensionMismatch("Cholesky of a non-square matrix".into()));
        }
        if n > MAX_SPARSE_FACTOR_ORDER {
            return Err(LinalgError::TooLarge { order: n, limit: MAX_SPARSE_FACTOR_ORDER });
        }
        let first = a.first_column_per_row();
        // Column 1-norms of the lower part, for the drop rule.
        let mut col_norm = vec![0.0; n];
        for i in 0..n {
            for (j, v) in a.row_entries(i) {
                if j <= i {
                    col_norm[j] += v.abs();
                }
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut nnz = 0;
        for i in 0..n {
            let fi = first[i];
            let mut row = vec![0.0; i - fi + 1];
            for (j, v) in a.row_entries(i) {
                if j <= i {
                    row[j - fi] = v;
                }
            }
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &rows[j];
                let mut s = row[j - fi];
                for k in lo..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                let mut l = s / rj[j - fj];
                if drop_tol > 0.0 && l.abs() < drop_tol * col_norm[j] {
                    l = 0.0;
                }
                if l != 0.0 {
                    nnz += 1;
                }
                row[j - fi] = l;
            }
            let mut d = row[i - fi];
            for k in fi..i {
                d -= row[k - fi] * row[k - fi];
            }
            if !(d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { pivot: i });
            }
            row[i - fi] = d.sqrt();
            nnz += 1;
            rows.push(row);
        }
        Ok(Self { first, rows, nnz })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Nonzeros of the factor, diagonal included.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Solves `LLᵀ x = b`.
    pub fn solve<T: Real>(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "Cholesky solve dimension");
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                let l = row[k - fi];
                if l != 0.0 {
                    s -= y[k].mul_f64(l);
                }
            }
            y[i] = s / T::from_f64(row[i - fi]);
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            let xi = y[i] / T::from_f64(row[i - fi]);
            y[i] = xi;
            for k in fi..i {
                let l = row[k - fi];
                if l != 0.0 {
                    y[k] -= xi.mul_f64(l);
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let n = self.dim();
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let fi = self.first[i];
            for (k, &v) in self.rows[i].iter().enumerate() {
                g[(i, fi + k)] = v;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        let g = cholesky(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(g, DenseMatrix::identity(3));
    }

    #[test]
    fn hand_checkable_factor() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]);
        let g = cholesky(&a).unwrap();
        assert_eq!(g, DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]));
        let x = cholesky_solve(&g, &[6.0, 7.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_reports_pivot() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(cholesky(&a).unwrap_err(), LinalgError::NotPositiveDefinite { pivot: 1 });
    }

    fn tridiag(n: usize) -> SparseMatrixCsr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrixCsr::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn envelope_matches_dense() {
        let a = tridiag(6);
        let e = EnvelopeCholesky::new(&a).unwrap();
        let g = cholesky(&a.to_dense()).unwrap();
        assert!(e.to_dense().sub(&g).frobenius_norm() < 1e-14);
        let b = vec![1.0; 6];
        let x = e.solve(&b);
        let r = a.matvec(&x);
        for v in r {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn incomplete_drops_fill() {
        // Arrow-like SPD pattern: a full first column creates fill that the
        // drop rule removes when small.
        let n = 5;
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, 10.0));
        }
        for i in 1..n {
            t.push((i, 0, 0.01));
            t.push((0, i, 0.01));
        }
        let a = SparseMatrixCsr::from_triplets(n, n, &t).unwrap();
        let full = EnvelopeCholesky::new(&a).unwrap();
        let inc = EnvelopeCholesky::incomplete(&a, 1e-2).unwrap();
        assert!(inc.nnz() < full.nnz());
        assert_eq!(inc.nnz(), n);
    }
}
