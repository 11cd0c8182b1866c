use std::sync::atomic::{AtomicUsize, Ordering};

use crate::linalg::{DenseMatrix, EnvelopeCholesky, LinalgError, LuFactor, SparseMatrixCsr};
use crate::precision::{ExtendedReal, PrecisionMode, Real};
use crate::problems::SaddlePoint;

use super::gmres::inner_solve;

/// LU factors of a dense block in both precisions.
#[derive(Clone, Debug)]
pub struct DenseLu {
    native: LuFactor<f64>,
    ext: LuFactor<ExtendedReal>,
}

impl DenseLu {
    pub fn new(a: &DenseMatrix<f64>) -> Result<Self, LinalgError> {
        Ok(Self { native: LuFactor::new(a)?, ext: LuFactor::new(&a.to_ext())? })
    }

    pub fn solve<T: Real>(&self, b: &[T]) -> Vec<T> {
        match T::MODE {
            PrecisionMode::Native => {
                let bf: Vec<f64> = b.iter().map(|v| v.to_f64()).collect();
                self.native.solve_vec(&bf).into_iter().map(T::from_f64).collect()
            }
            PrecisionMode::Extended => {
                let be: Vec<ExtendedReal> = b.iter().map(|v| v.to_ext()).collect();
                self.ext.solve_vec(&be).into_iter().map(T::from_ext).collect()
            }
        }
    }
}

/// `z = P⁻¹ r` for the supported preconditioners.
#[derive(Debug)]
pub enum Preconditioner {
    Identity,
    /// Diagonal `P` (the entries of `P`, not of its inverse).
    Diagonal(Vec<ExtendedReal>),
    /// Complete or incomplete Cholesky factor `LLᵀ ≈ P`.
    Cholesky(EnvelopeCholesky),
    /// Exact `diag(A, S)` for a saddle-point matrix.
    BlockDiagSchur {
        a: DenseLu,
        s: DenseLu,
        n: usize,
    },
    /// `diag(A, S)` applied by inner GMRES on each block, zero initial guess,
    /// stopped at relative residual `tol`.
    InnerGmres {
        a: DenseMatrix<f64>,
        s: DenseMatrix<f64>,
        tol: f64,
        maxit: usize,
        counter: AtomicUsize,
    },
}

impl Preconditioner {
    pub fn incomplete_cholesky(a: &SparseMatrixCsr, drop_tol: f64) -> Result<Self, LinalgError> {
        Ok(Self::Cholesky(EnvelopeCholesky::incomplete(a, drop_tol)?))
    }

    /// Exact solves with another sparse SPD matrix.
    pub fn sparse_cholesky_of(p: &SparseMatrixCsr) -> Result<Self, LinalgError> {
        Ok(Self::Cholesky(EnvelopeCholesky::new(p)?))
    }

    pub fn block_diag_schur(sp: &SaddlePoint) -> Result<Self, LinalgError> {
        Ok(Self::BlockDiagSchur { a: DenseLu::new(&sp.a)?, s: DenseLu::new(&sp.schur)?, n: sp.n() })
    }

    pub fn inner_gmres(sp: &SaddlePoint, tol: f64, maxit: usize) -> Self {
        Self::InnerGmres { a: sp.a.clone(), s: sp.schur.clone(), tol, maxit, counter: AtomicUsize::new(0) }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    /// Total inner iterations so far (inner-outer mode only).
    pub fn inner_count(&self) -> usize {
        match self {
            Self::InnerGmres { counter, .. } => counter.load(Ordering::Relaxed),
            _ => 0,
        }
    }

    pub fn apply<T: Real>(&self, r: &[T]) -> Vec<T> {
        match self {
            Self::Identity => r.to_vec(),
            Self::Diagonal(d) => r.iter().zip(d).map(|(&v, &p)| v / T::from_ext(p)).collect(),
            Self::Cholesky(c) => c.solve(r),
            Self::BlockDiagSchur { a, s, n } => {
                let mut z = a.solve(&r[..*n]);
                z.extend(s.solve(&r[*n..]));
                z
            }
            Self::InnerGmres { a, s, tol, maxit, counter } => {
                let n = a.rows();
                let (za, ka) = inner_solve(a, &r[..n], *tol, *maxit);
                let (zs, ks) = inner_solve(s, &r[n..], *tol, *maxit);
                counter.fetch_add(ka + ks, Ordering::Relaxed);
                let mut z = za;
                z.extend(zs);
                z
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::problems::{poisson2d, synthetic_saddle_point, Rng};

    #[test]
    fn spd_variants_are_self_adjoint() {
        let a = poisson2d(8).unwrap();
        let mut rng = Rng::new(2);
        let list = [
            Preconditioner::incomplete_cholesky(&a, 1e-2).unwrap(),
            Preconditioner::sparse_cholesky_of(&a).unwrap(),
            Preconditioner::Diagonal(a.diagonal().into_iter().map(ExtendedReal::from).collect()),
        ];
        for p in &list {
            let x = rng.normal_vec(64);
            let y = rng.normal_vec(64);
            let l = dot(&p.apply(&x), &y);
            let r = dot(&x, &p.apply(&y));
            assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0), "{l} {r}");
        }
    }

    #[test]
    fn block_solve_inverts_blocks() {
        let sp = synthetic_saddle_point(10, 4, &mut Rng::new(3)).unwrap();
        let p = Preconditioner::block_diag_schur(&sp).unwrap();
        let r: Vec<f64> = (0..14).map(|i| i as f64).collect();
        let z = p.apply(&r);
        let back = sp.a.matvec(&z[..10]);
        for i in 0..10 {
            assert!((back[i] - r[i]).abs() < 1e-11);
        }
        let inner = Preconditioner::inner_gmres(&sp, 1e-12, 50);
        let zi = inner.apply(&r);
        assert!(zi.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-8 * (1.0 + b.abs())));
        assert!(inner.inner_count() > 0);
    }
}
