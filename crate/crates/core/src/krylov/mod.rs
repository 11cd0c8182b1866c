//! Instrumented Krylov solvers: CG variants, Lanczos, MGS-Arnoldi and GMRES.
//!
//! Every solver is generic over the working precision. Diagnostics (true
//! residuals, error norms, backward errors) are recomputed from the iterate in
//! extended precision so they never share the solver's rounding errors.

mod basis;
mod cg;
mod estimate;
mod gmres;
mod precond;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::precision::{ExtendedReal, PrecisionMode};
use crate::problems::ProblemError;

pub use basis::{arnoldi_mgs, lanczos, ArnoldiResult, LanczosResult};
pub use cg::{cg, cg_in, CgOptions, CgVariant};
pub use estimate::{hs_error_estimate, HsEstimate};
pub use gmres::{gmres, gmres_in, GmresOptions};
pub use precond::{DenseLu, Preconditioner};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("operator is not symmetric positive definite: p^T A p <= 0 at iteration {iteration}")]
    NotSpd { iteration: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("starting vector must have unit norm (got {0:e})")]
    NotNormalized(f64),
    #[error("singular triangular factor in the least-squares update at step {0}")]
    SingularLeastSquares(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ToleranceMet,
    MaxIterations,
    /// Invariant subspace found (zero residual or happy breakdown).
    Breakdown,
}

/// Per-iteration record of a solver run. Vectors indexed by iteration hold
/// `iterations + 1` entries (index 0 is the initial guess) unless noted.
#[derive(Clone, Debug, Default)]
pub struct IterationTrace {
    pub method: String,
    pub precision: Option<PrecisionMode>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    /// Residual norm produced by the recursion; the preconditioned norm when
    /// a preconditioner is active.
    pub recursive_resnorm: Vec<f64>,
    /// `‖b − A x_k‖₂` recomputed in extended precision.
    pub true_resnorm: Vec<f64>,
    /// `‖x − x_k‖_A`; empty without a reference solution.
    pub a_norm_error: Vec<f64>,
    pub euclid_error: Vec<f64>,
    pub backward_error: Vec<f64>,
    /// `‖I − VᵀV‖_F` for the `k + 1` basis vectors available after step `k`.
    pub loss_of_orthogonality: Vec<f64>,
    /// CG step lengths `α_0, α_1, …` (one per iteration).
    pub alpha: Vec<f64>,
    /// CG direction updates; `beta[k]` is `β_{k+1}`.
    pub beta: Vec<f64>,
    /// Diagonal and off-diagonal of the Lanczos tridiagonal `T_k`.
    pub lanczos_alpha: Vec<f64>,
    pub lanczos_beta: Vec<f64>,
    /// `H_{k+1,k}` when retained.
    pub hessenberg: Option<DenseMatrix<f64>>,
    /// Normalized basis vectors (CG: residual directions; GMRES: Arnoldi).
    pub basis: Option<Vec<Vec<f64>>>,
    /// Inner GMRES iterations spent in each outer step.
    pub inner_iterations: Vec<usize>,
    pub x: Vec<ExtendedReal>,
}

impl IterationTrace {
    /// Series divided by its first entry.
    pub fn relative(v: &[f64]) -> Vec<f64> {
        match v.first() {
            Some(&v0) if v0 != 0.0 => v.iter().map(|x| x / v0).collect(),
            _ => v.to_vec(),
        }
    }

    pub fn relative_a_norm_error(&self) -> Vec<f64> {
        Self::relative(&self.a_norm_error)
    }

    pub fn relative_true_resnorm(&self) -> Vec<f64> {
        Self::relative(&self.true_resnorm)
    }

    pub fn relative_recursive_resnorm(&self) -> Vec<f64> {
        Self::relative(&self.recursive_resnorm)
    }

    /// First index at which `series` is at or below `level`.
    pub fn first_below(series: &[f64], level: f64) -> Option<usize> {
        series.iter().position(|&v| v <= level)
    }
}

/// Accumulates `‖I − VᵀV‖_F²` as vectors are appended.
#[derive(Clone, Debug, Default)]
pub(crate) struct OrthogonalityMeter {
    sum: f64,
}

impl OrthogonalityMeter {
    /// `dots[i] = v_iᵀ v_new` for earlier vectors, `self_dot = v_newᵀ v_new`.
    pub(crate) fn push(&mut self, dots: &[f64], self_dot: f64) -> f64 {
        let off: f64 = dots.iter().map(|d| d * d).sum();
        self.sum += 2.0 * off + (1.0 - self_dot) * (1.0 - self_dot);
        self.sum.sqrt()
    }
}
