//! Dense and sparse linear algebra.

mod cholesky;
mod dense;
mod eigen;
mod lu;
mod sparse;
mod svd;

use thiserror::Error;

pub use cholesky::{cholesky, cholesky_solve, EnvelopeCholesky, MAX_SPARSE_FACTOR_ORDER};
pub use dense::{axpy, dot, from_ext_vec, norm2, scaled, sub_vec, to_ext_vec, to_f64_vec, DenseMatrix};
pub use eigen::{general_eigenvalues, sym_eigen, symtrid_eigenvalues, ComplexPoint};
pub use lu::{lu_solve, LuFactor};
pub use sparse::SparseMatrixCsr;
pub use svd::{
    condition_number, norm2_dense, norm2_sparse, numerical_rank, power_norm2, singular_values, NORM2_SVD_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence { method: &'static str, iterations: usize },
    #[error("tridiagonal matrix is reduced: off-diagonal entry {index} is zero; split the problem")]
    ReducedTridiagonal { index: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("order {order} exceeds the supported limit {limit}")]
    TooLarge { order: usize, limit: usize },
}
