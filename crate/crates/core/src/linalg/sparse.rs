use crate::precision::Real;

use super::{DenseMatrix, LinalgError};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrixCsr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrixCsr {
    /// Assembles from (row, col, value) triples; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(LinalgError::DimensionMismatch(format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols_tmp = vec![0usize; triplets.len()];
        let mut vals_tmp = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols_tmp[fill[i]] = j;
            vals_tmp[fill[i]] = v;
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..rows {
            order.clear();
            order.extend(counts[i]..counts[i + 1]);
            order.sort_by_key(|&p| cols_tmp[p]);
            let mut last: Option<usize> = None;
            for &p in &order {
                let j = cols_tmp[p];
                if last == Some(j) {
                    *values.last_mut().unwrap() += vals_tmp[p];
                } else {
                    col_idx.push(j);
                    values.push(vals_tmp[p]);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut m = Self { rows, cols, row_ptr, col_idx, values, symmetric: false };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    pub fn from_dense(a: &DenseMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t).expect("indices in range")
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t).expect("indices in range")
    }

    fn check_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                if self.get(j, i) != self.values[p] {
                    return false;
                }
            }
        }
        true
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// True when the stored matrix equals its transpose exactly.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec<T: Real>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "sparse matvec dimension");
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for (j, v) in self.row_entries(i) {
                    s += x[j].mul_f64(v);
                }
                s
            })
            .collect()
    }

    pub fn matvec_transpose<T: Real>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                y[j] += x[i].mul_f64(v);
            }
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, &t).expect("indices in range")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Lower bandwidth profile: first nonzero column of each row.
    pub fn first_column_per_row(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|i| {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                self.col_idx[r].first().copied().unwrap_or(i).min(i)
            })
            .collect()
    }
}
