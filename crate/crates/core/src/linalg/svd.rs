use super::{DenseMatrix, LinalgError, SparseMatrixCsr};

/// Singular values by one-sided (Hestenes) Jacobi, descending.
pub fn singular_values(a: &DenseMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let m = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (rows, cols) = (m.rows(), m.cols());
    let mut c: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    // Rotation threshold as in LAPACK's one-sided Jacobi: sqrt(m)·eps.
    let eps = (rows as f64).sqrt() * f64::EPSILON;
    let max_sweeps = 60;
    for sweep in 0.. {
        if sweep == max_sweeps {
            return Err(LinalgError::NoConvergence { method: "Jacobi SVD", iterations: sweep });
        }
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let (ci, cj) = split_pair(&mut c, i, j);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..rows {
                    alpha += ci[k] * ci[k];
                    beta += cj[k] * cj[k];
                    gamma += ci[k] * cj[k];
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..rows {
                    let x = ci[k];
                    let y = cj[k];
                    ci[k] = cs * x - sn * y;
                    cj[k] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

fn split_pair(c: &mut [Vec<f64>], i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(i < j);
    let (a, b) = c.split_at_mut(j);
    (&mut a[i], &mut b[0])
}

/// Number of singular values strictly greater than `tau`.
pub fn numerical_rank(a: &DenseMatrix<f64>, tau: f64) -> Result<usize, LinalgError> {
    Ok(singular_values(a)?.iter().filter(|&&s| s > tau).count())
}

/// Spectral condition number σ_max/σ_min.
pub fn condition_number(a: &DenseMatrix<f64>) -> Result<f64, LinalgError> {
    let s = singular_values(a)?;
    let last = *s.last().unwrap_or(&0.0);
    Ok(s[0] / last)
}

/// Order up to which ‖A‖₂ is taken from a full Jacobi SVD.
pub const NORM2_SVD_LIMIT: usize = 1200;

/// ‖A‖₂ of a dense matrix.
pub fn norm2_dense(a: &DenseMatrix<f64>) -> Result<f64, LinalgError> {
    if a.rows().max(a.cols()) <= NORM2_SVD_LIMIT {
        return Ok(singular_values(a)?.first().copied().unwrap_or(0.0));
    }
    Ok(power_norm2(a.cols(), |x| a.matvec(x), |y| a.matvec_transpose(y)))
}

/// ‖A‖₂ of a sparse matrix.
pub fn norm2_sparse(a: &SparseMatrixCsr) -> Result<f64, LinalgError> {
    if a.rows().max(a.cols()) <= NORM2_SVD_LIMIT {
        return norm2_dense(&a.to_dense());
    }
    Ok(power_norm2(a.cols(), |x| a.matvec(x), |y| a.matvec_transpose(y)))
}

/// Power iteration on AᵀA: relative tolerance 1e-6, at most 500 steps.
pub fn power_norm2(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>, apply_t: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = 0.0;
    for _ in 0..500 {
        let y = apply(&x);
        let z = apply_t(&y);
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nz == 0.0 {
            return 0.0;
        }
        let s = nz.sqrt();
        x = z.into_iter().map(|v| v / nz).collect();
        if (s - sigma).abs() <= 1e-6 * s {
            return s;
        }
        sigma = s;
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen;

    #[test]
    fn diagonal_values() {
        let s = singular_values(&DenseMatrix::from_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(s, vec![3.0, 1.0]);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let mut a = DenseMatrix::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                a[(i, j)] = u[i] * v[j];
            }
        }
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 15.0).abs() < 1e-13);
        assert!(s[1] < 1e-13);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&DenseMatrix::identity(5), 0.1).unwrap(), 5);
        assert_eq!(numerical_rank(&DenseMatrix::zeros(4, 3), 0.1).unwrap(), 0);
        let s = 0.5f64.sqrt();
        let v = [s, s, 0.0];
        let w = [s, -s, 0.0];
        let cols = vec![v.to_vec(), (0..3).map(|i| v[i] + 1e-3 * w[i]).collect()];
        assert_eq!(numerical_rank(&DenseMatrix::from_columns(&cols), 0.1).unwrap(), 1);
    }

    #[test]
    fn agrees_with_gram_eigenvalues() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.0],
            vec![0.7, 0.0, -1.5],
            vec![2.0, 1.0, 1.0],
        ]);
        let s = singular_values(&a).unwrap();
        let mut e = sym_eigen(&a.transpose().matmul(&a)).unwrap();
        e.reverse();
        for (x, l) in s.iter().zip(&e) {
            assert!((x - l.sqrt()).abs() <= 1e-10 * s[0]);
        }
    }

    #[test]
    fn power_iteration_estimate() {
        let a = DenseMatrix::from_diagonal(&[1.0, 5.0, 2.0]);
        let p = power_norm2(3, |x| a.matvec(x), |y| a.matvec_transpose(y));
        assert!((p - 5.0).abs() < 1e-5);
    }
}
