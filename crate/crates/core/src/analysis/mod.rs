//! Convergence bounds, spectral diagnostics and finite-precision trajectory
//! analysis.

mod bounds;
mod diagnostics;
mod spectra;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::problems::ProblemError;

pub use bounds::{
    bound_report, disk_bound, gmres_spectral_bound, kappa_bound, minmax_bound, worstcase_formula,
    worstcase_formula_ext, BoundReport, MinmaxSolution, SpectralBound,
};
pub use diagnostics::{backward_error, loss_of_orthogonality, rescale_x0, trajectory_map, TrajectoryMap};
pub use spectra::{csd, harmonic_ritz, ritz_values, CsdFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("spectrum must be positive")]
    NotPositive,
    #[error("points must be distinct")]
    DuplicatePoints,
    #[error("Remez exchange stagnated after {exchanges} exchanges: best value {value:e}, certificate gap {gap:e}")]
    RemezStagnation { value: f64, gap: f64, exchanges: usize },
    #[error("origin inside disk: radius {radius} >= |center| = {center}")]
    OriginInDisk { radius: f64, center: f64 },
    #[error("zero eigenvalue (or empty spectrum)")]
    ZeroEigenvalue,
    #[error("trace does not hold {0}")]
    MissingData(&'static str),
    #[error("vector {index} is not normalized (norm {norm})")]
    NotNormalized { index: usize, norm: f64 },
    #[error("H_k is singular")]
    SingularHessenberg,
    #[error("A x0 = 0; rescaling is undefined")]
    ZeroDirection,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}
