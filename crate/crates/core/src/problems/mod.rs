//! Test-problem generators and the linear-system container shared by the
//! solvers.

mod families;
mod rng;
mod spectrum;
mod stencil;

use thiserror::Error;

use crate::linalg::{
    norm2_dense, norm2_sparse, DenseMatrix, EnvelopeCholesky, LinalgError, LuFactor, SparseMatrixCsr,
    MAX_SPARSE_FACTOR_ORDER,
};
use crate::precision::{ExtendedReal, PrecisionMode, Real};

pub use families::{
    block_normal_matrix, flipped_frank, grcar, normal_from_circular_law, random_orthogonal, saddle_point,
    synthetic_saddle_point, synthetic_svd, wishart, SaddlePoint,
};
pub use rng::Rng;
pub use spectrum::{clusterize, diag_family, Orientation, Spectrum};
pub use stencil::{diffusion2d, poisson2d, supg_boundary_profile, supg_matrix, supg_rhs, SupgStencil};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameters give a non-monotonic spectrum: value {value:e} at position {index} does not increase")]
    NonMonotonic { index: usize, value: f64 },
    #[error("spectrum is not ascending at position {index}")]
    NotAscending { index: usize },
    #[error("clusters overlap between eigenvalues {index} and {}", index + 1)]
    ClusterOverlap { index: usize },
    #[error("constraint block has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("reference solution reached relative residual {0:e} only")]
    ReferenceInaccurate(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The matrix of a linear system.
///
/// `DenseExtended` and `Diagonal` hold data that is exact only in extended
/// precision; native-precision solvers see it rounded entrywise.
#[derive(Clone, Debug)]
pub enum Operator {
    Dense(DenseMatrix<f64>),
    DenseExtended { ext: DenseMatrix<ExtendedReal>, native: DenseMatrix<f64> },
    Sparse(SparseMatrixCsr),
    Diagonal(Vec<ExtendedReal>),
}

impl Operator {
    pub fn dense_extended(ext: DenseMatrix<ExtendedReal>) -> Self {
        let native = ext.to_f64();
        Self::DenseExtended { ext, native }
    }

    pub fn diagonal(spec: &Spectrum) -> Self {
        Self::Diagonal(spec.values().to_vec())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.rows(),
            Self::DenseExtended { native, .. } => native.rows(),
            Self::Sparse(a) => a.rows(),
            Self::Diagonal(d) => d.len(),
        }
    }

    /// `y = A x` in the arithmetic of `T`.
    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Dense(a) => dense_f64_apply(a, x, false),
            Self::DenseExtended { ext, native } => match T::MODE {
                PrecisionMode::Native => dense_f64_apply(native, x, false),
                PrecisionMode::Extended => ext_apply(ext, x, false),
            },
            Self::Sparse(a) => a.matvec(x),
            Self::Diagonal(d) => d.iter().zip(x).map(|(&l, &v)| T::from_ext(l) * v).collect(),
        }
    }

    /// `y = Aᵀ x`.
    pub fn apply_transpose<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Dense(a) => dense_f64_apply(a, x, true),
            Self::DenseExtended { ext, native } => match T::MODE {
                PrecisionMode::Native => dense_f64_apply(native, x, true),
                PrecisionMode::Extended => ext_apply(ext, x, true),
            },
            Self::Sparse(a) => a.matvec_transpose(x),
            Self::Diagonal(_) => self.apply(x),
        }
    }

    /// Native dense copy (rounded where the data is extended).
    pub fn to_dense(&self) -> DenseMatrix<f64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::DenseExtended { native, .. } => native.clone(),
            Self::Sparse(a) => a.to_dense(),
            Self::Diagonal(d) => DenseMatrix::from_diagonal(&d.iter().map(|v| v.hi()).collect::<Vec<_>>()),
        }
    }

    /// `‖A‖₂` from the native data.
    pub fn norm2(&self) -> Result<f64, LinalgError> {
        match self {
            Self::Dense(a) => norm2_dense(a),
            Self::DenseExtended { native, .. } => norm2_dense(native),
            Self::Sparse(a) => norm2_sparse(a),
            Self::Diagonal(d) => Ok(d.iter().map(|v| v.hi().abs()).fold(0.0, f64::max)),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Dense(a) => a.is_symmetric(0.0),
            Self::DenseExtended { ext, .. } => ext.is_symmetric(0.0),
            Self::Sparse(a) => a.is_symmetric(),
            Self::Diagonal(_) => true,
        }
    }
}

fn dense_f64_apply<T: Real>(a: &DenseMatrix<f64>, x: &[T], transpose: bool) -> Vec<T> {
    let (r, c) = (a.rows(), a.cols());
    if transpose {
        let mut y = vec![T::zero(); c];
        for i in 0..r {
            let xi = x[i];
            for (yj, &aij) in y.iter_mut().zip(a.row(i)) {
                if aij != 0.0 {
                    *yj += xi.mul_f64(aij);
                }
            }
        }
        y
    } else {
        (0..r)
            .map(|i| {
                let mut s = T::zero();
                for (&aij, &xj) in a.row(i).iter().zip(x) {
                    if aij != 0.0 {
                        s += xj.mul_f64(aij);
                    }
                }
                s
            })
            .collect()
    }
}

fn ext_apply<T: Real>(a: &DenseMatrix<ExtendedReal>, x: &[T], transpose: bool) -> Vec<T> {
    let xe: Vec<ExtendedReal> = x.iter().map(|v| v.to_ext()).collect();
    let y = if transpose { a.matvec_transpose(&xe) } else { a.matvec(&xe) };
    y.into_iter().map(T::from_ext).collect()
}

/// `A x = b` with initial guess and, once computed, a reference solution.
/// Vectors are stored in extended precision; solvers round them on entry.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub operator: Operator,
    pub rhs: Vec<ExtendedReal>,
    pub x0: Vec<ExtendedReal>,
    pub x_ref: Option<Vec<ExtendedReal>>,
    pub label: String,
}

impl LinearSystem {
    pub fn new(operator: Operator, rhs: Vec<ExtendedReal>, label: impl Into<String>) -> Result<Self, ProblemError> {
        let n = operator.dim();
        if rhs.len() != n {
            return Err(ProblemError::InvalidParameter(format!("rhs of length {} for order {n}", rhs.len())));
        }
        Ok(Self { operator, rhs, x0: vec![ExtendedReal::ZERO; n], x_ref: None, label: label.into() })
    }

    pub fn from_f64(operator: Operator, rhs: &[f64], label: impl Into<String>) -> Result<Self, ProblemError> {
        Self::new(operator, rhs.iter().map(|&v| v.into()).collect(), label)
    }

    /// Diagonal system of a spectrum. The right-hand side is the weight
    /// vector when present, else the normalized vector of ones.
    pub fn from_spectrum(spec: &Spectrum, label: impl Into<String>) -> Result<Self, ProblemError> {
        let n = spec.len();
        let rhs: Vec<ExtendedReal> = match spec.weights() {
            Some(w) => w.iter().map(|&v| v.into()).collect(),
            None => {
                let s = ExtendedReal::ONE / ExtendedReal::from(n as f64).sqrt();
                vec![s; n]
            }
        };
        Self::new(Operator::diagonal(spec), rhs, label)?.with_reference()
    }

    pub fn with_x0(mut self, x0: Vec<ExtendedReal>) -> Result<Self, ProblemError> {
        if x0.len() != self.dim() {
            return Err(ProblemError::InvalidParameter("x0 dimension".into()));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn rhs_as<T: Real>(&self) -> Vec<T> {
        self.rhs.iter().map(|&v| T::from_ext(v)).collect()
    }

    pub fn rhs_norm(&self) -> ExtendedReal {
        crate::linalg::norm2(&self.rhs)
    }

    /// `b − A x` in extended precision.
    pub fn residual(&self, x: &[ExtendedReal]) -> Vec<ExtendedReal> {
        let ax = self.operator.apply(x);
        self.rhs.iter().zip(ax).map(|(&b, v)| b - v).collect()
    }

    pub fn residual_norm(&self, x: &[ExtendedReal]) -> ExtendedReal {
        crate::linalg::norm2(&self.residual(x))
    }

    /// `‖x_ref − x‖_A`, when a reference solution is present.
    pub fn a_norm_error(&self, x: &[ExtendedReal]) -> Option<ExtendedReal> {
        let xr = self.x_ref.as_ref()?;
        let e: Vec<ExtendedReal> = xr.iter().zip(x).map(|(&a, &b)| a - b).collect();
        let ae = self.operator.apply(&e);
        let q = crate::linalg::dot(&e, &ae);
        Some(if q > ExtendedReal::ZERO { q.sqrt() } else { ExtendedReal::ZERO })
    }

    pub fn euclid_error(&self, x: &[ExtendedReal]) -> Option<ExtendedReal> {
        let xr = self.x_ref.as_ref()?;
        let e: Vec<ExtendedReal> = xr.iter().zip(x).map(|(&a, &b)| a - b).collect();
        Some(crate::linalg::norm2(&e))
    }

    /// Computes `x_ref` to extended accuracy: a native factorization followed
    /// by iterative refinement with extended-precision residuals (direct
    /// extended solves for diagonal and extended dense data).
    pub fn with_reference(mut self) -> Result<Self, ProblemError> {
        let x = match &self.operator {
            Operator::Diagonal(d) => self.rhs.iter().zip(d).map(|(&b, &l)| b / l).collect(),
            Operator::DenseExtended { ext, .. } => {
                let f = LuFactor::new(ext)?;
                let mut x = f.solve_vec(&self.rhs);
                let r = self.residual(&x);
                let d = f.solve_vec(&r);
                x.iter_mut().zip(d).for_each(|(a, b)| *a += b);
                x
            }
            Operator::Dense(a) => {
                let f = LuFactor::new(a)?;
                self.refine(|r| f.solve_vec(r))
            }
            Operator::Sparse(a) => {
                let chol = if a.is_symmetric() { EnvelopeCholesky::new(a).ok() } else { None };
                match chol {
                    Some(c) => self.refine(|r| c.solve(r)),
                    None => {
                        let n = a.rows();
                        if n > MAX_SPARSE_FACTOR_ORDER {
                            return Err(LinalgError::TooLarge { order: n, limit: MAX_SPARSE_FACTOR_ORDER }.into());
                        }
                        let f = LuFactor::new(&a.to_dense())?;
                        self.refine(|r| f.solve_vec(r))
                    }
                }
            }
        };
        let rel = (self.residual_norm(&x) / self.rhs_norm()).hi();
        if !(rel <= 1e-10) && self.rhs_norm() > ExtendedReal::ZERO {
            return Err(ProblemError::ReferenceInaccurate(rel));
        }
        self.x_ref = Some(x);
        Ok(self)
    }

    fn refine(&self, solve: impl Fn(&[f64]) -> Vec<f64>) -> Vec<ExtendedReal> {
        let n = self.dim();
        let bnorm = self.rhs_norm().hi();
        let mut x = vec![ExtendedReal::ZERO; n];
        let mut r = self.rhs.clone();
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            let rf: Vec<f64> = r.iter().map(|v| v.hi()).collect();
            let d = solve(&rf);
            x.iter_mut().zip(&d).for_each(|(a, &b)| *a += ExtendedReal::from(b));
            r = self.residual(&x);
            let nr = crate::linalg::norm2(&r).hi();
            if nr <= 1e-31 * bnorm || nr > 0.5 * last {
                break;
            }
            last = nr;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_system_reference() {
        let s = Spectrum::from_f64(&[1.0, 2.0, 4.0]).unwrap();
        let sys = LinearSystem::from_spectrum(&s, "diag").unwrap();
        let x = sys.x_ref.as_ref().unwrap();
        let b = 1.0 / 3f64.sqrt();
        assert!((x[2].hi() - b / 4.0).abs() < 1e-16);
        assert!(sys.residual_norm(x).hi() < 1e-30);
    }

    #[test]
    fn refinement_reaches_extended_accuracy() {
        let a = poisson2d(10).unwrap();
        let b: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let sys = LinearSystem::from_f64(Operator::Sparse(a), &b, "poisson").unwrap().with_reference().unwrap();
        let rel = sys.residual_norm(sys.x_ref.as_ref().unwrap()) / sys.rhs_norm();
        assert!(rel.hi() < 1e-28, "{rel:?}");
    }

    #[test]
    fn operator_apply_modes_agree() {
        let d = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]);
        let ops = [
            Operator::Dense(d.clone()),
            Operator::Sparse(SparseMatrixCsr::from_dense(&d)),
            Operator::dense_extended(d.to_ext()),
        ];
        for op in &ops {
            assert_eq!(op.apply(&[1.0, 2.0]), vec![4.0, 6.5]);
            assert_eq!(op.apply_transpose(&[1.0, 2.0]), vec![3.0, 7.0]);
            let y: Vec<ExtendedReal> = op.apply(&[ExtendedReal::ONE, ExtendedReal::from(2.0)]);
            assert_eq!(y[1].hi(), 6.5);
        }
    }
}
