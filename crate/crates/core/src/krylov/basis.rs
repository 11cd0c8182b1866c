use crate::linalg::{dot, norm2, DenseMatrix};
use crate::precision::Real;
use crate::problems::Operator;

use super::KrylovError;

/// Output of [`lanczos`]: `A V_k = V_{k+1} T̃_k`.
#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub basis: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Set when `β` vanished and the basis spans an invariant subspace.
    pub invariant: bool,
}

#[derive(Clone, Debug)]
pub struct ArnoldiResult {
    pub basis: Vec<Vec<f64>>,
    /// `H_{k+1,k}`, or `H_{k,k}` after a happy breakdown.
    pub h: DenseMatrix<f64>,
    pub breakdown: bool,
}

fn check_start(op: &Operator, v: &[f64]) -> Result<(), KrylovError> {
    if v.len() != op.dim() {
        return Err(KrylovError::DimensionMismatch(format!("start vector {} for order {}", v.len(), op.dim())));
    }
    let n = norm2(v);
    if (n - 1.0).abs() > 1e-8 {
        return Err(KrylovError::NotNormalized(n));
    }
    Ok(())
}

/// `k` steps of symmetric Lanczos in the arithmetic of `T`, optionally with
/// full reorthogonalization (twice, classical Gram–Schmidt).
pub fn lanczos<T: Real>(op: &Operator, v: &[f64], k: usize, reorth: bool) -> Result<LanczosResult, KrylovError> {
    check_start(op, v)?;
    let mut vs: Vec<Vec<T>> = vec![v.iter().map(|&x| T::from_f64(x)).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut invariant = false;
    for j in 0..k {
        let mut w = op.apply(&vs[j]);
        if j > 0 {
            let b = T::from_f64(beta[j - 1]);
            for (wi, &u) in w.iter_mut().zip(&vs[j - 1]) {
                *wi -= b * u;
            }
        }
        let a = dot(&vs[j], &w);
        for (wi, &u) in w.iter_mut().zip(&vs[j]) {
            *wi -= a * u;
        }
        alpha.push(a.to_f64());
        if reorth {
            for _ in 0..2 {
                for u in &vs {
                    let c = dot(u, &w);
                    for (wi, &ui) in w.iter_mut().zip(u) {
                        *wi -= c * ui;
                    }
                }
            }
        }
        let b = norm2(&w);
        let scale = a.abs().to_f64().max(beta.last().copied().unwrap_or(0.0));
        if b == T::zero() || b.to_f64() <= T::unit_roundoff() * scale {
            invariant = true;
            break;
        }
        beta.push(b.to_f64());
        vs.push(w.iter().map(|&x| x / b).collect());
    }
    let basis = vs.iter().map(|u| u.iter().map(|x| x.to_f64()).collect()).collect();
    Ok(LanczosResult { basis, alpha, beta, invariant })
}

/// `k` steps of Arnoldi with modified Gram–Schmidt.
pub fn arnoldi_mgs<T: Real>(op: &Operator, v: &[f64], k: usize) -> Result<ArnoldiResult, KrylovError> {
    check_start(op, v)?;
    let mut vs: Vec<Vec<T>> = vec![v.iter().map(|&x| T::from_f64(x)).collect()];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut breakdown = false;
    for j in 0..k {
        let mut w = op.apply(&vs[j]);
        let mut h = vec![0.0; j + 2];
        for (i, u) in vs.iter().enumerate() {
            let c = dot(u, &w);
            h[i] = c.to_f64();
            for (wi, &ui) in w.iter_mut().zip(u) {
                *wi -= c * ui;
            }
        }
        let b = norm2(&w);
        h[j + 1] = b.to_f64();
        let scale = norm2(&h);
        cols.push(h);
        if b == T::zero() || b.to_f64() <= T::unit_roundoff() * scale {
            breakdown = true;
            break;
        }
        vs.push(w.iter().map(|&x| x / b).collect());
    }
    let steps = cols.len();
    let rows = if breakdown { steps } else { steps + 1 };
    let mut h = DenseMatrix::zeros(rows, steps);
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate().take(rows) {
            h[(i, j)] = x;
        }
    }
    let basis = vs.iter().map(|u| u.iter().map(|x| x.to_f64()).collect()).collect();
    Ok(ArnoldiResult { basis, h, breakdown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{general_eigenvalues, sym_eigen, symtrid_eigenvalues, SparseMatrixCsr};
    use crate::precision::ExtendedReal;
    use crate::problems::{poisson2d, Rng};

    #[test]
    fn diagonal_start_at_eigenvector() {
        let op = Operator::Dense(DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0]));
        let l = lanczos::<f64>(&op, &[1.0, 0.0, 0.0], 3, false).unwrap();
        assert!(l.invariant);
        assert_eq!(l.alpha, vec![3.0]);
        let a = arnoldi_mgs::<f64>(&op, &[1.0, 0.0, 0.0], 3).unwrap();
        assert!(a.breakdown);
        assert_eq!(a.h[(0, 0)], 3.0);
    }

    #[test]
    fn full_grade_reproduces_spectrum() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]);
        let s = 1.0 / 3f64.sqrt();
        let l = lanczos::<ExtendedReal>(&Operator::Dense(m.clone()), &[s, s, s], 3, false).unwrap();
        let theta = symtrid_eigenvalues(&l.alpha, &l.beta[..2]).unwrap();
        let e = sym_eigen(&m).unwrap();
        for (a, b) in theta.iter().zip(&e) {
            assert!((a - b).abs() < 1e-10);
        }
        let g = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.0, 2.0],
            vec![0.5, 3.0, 1.0, 0.0],
            vec![0.0, -1.0, 2.0, 1.0],
            vec![1.0, 0.0, 0.3, 1.0],
        ]);
        let ar = arnoldi_mgs::<ExtendedReal>(&Operator::Dense(g.clone()), &[0.5, 0.5, 0.5, 0.5], 4).unwrap();
        let hk = ar.h.submatrix(0, 0, 4, 4);
        let eh = general_eigenvalues(&hk).unwrap();
        let ea = general_eigenvalues(&g).unwrap();
        for (a, b) in eh.iter().zip(&ea) {
            assert!(a.distance(*b) < 1e-10, "{eh:?} {ea:?}");
        }
    }

    #[test]
    fn arnoldi_relation_holds() {
        let mut rng = Rng::new(1);
        let a = rng.normal_matrix(20, 20);
        let op = Operator::Sparse(SparseMatrixCsr::from_dense(&a));
        let v = rng.unit_vector(20);
        let r = arnoldi_mgs::<f64>(&op, &v, 8).unwrap();
        let vk1 = DenseMatrix::from_columns(&r.basis);
        let vk = DenseMatrix::from_columns(&r.basis[..8]);
        let lhs = a.matmul(&vk);
        let rhs = vk1.matmul(&r.h);
        assert!(lhs.sub(&rhs).frobenius_norm() < 1e-13 * a.frobenius_norm());
    }

    #[test]
    fn poisson_orthogonality_degrades_without_reorth() {
        let op = Operator::Sparse(poisson2d(50).unwrap());
        let s = 1.0 / 50.0;
        let v = vec![s; 2500];
        let plain = lanczos::<f64>(&op, &v, 200, false).unwrap();
        let loss = |b: &[Vec<f64>]| {
            let m = DenseMatrix::from_columns(b);
            m.transpose().matmul(&m).sub(&DenseMatrix::identity(b.len())).frobenius_norm()
        };
        assert!(loss(&plain.basis) > 1e-8);
        let re = lanczos::<f64>(&op, &v, 60, true).unwrap();
        assert!(loss(&re.basis) < 100.0 * crate::precision::NATIVE_UNIT_ROUNDOFF * 61.0);
    }
}
