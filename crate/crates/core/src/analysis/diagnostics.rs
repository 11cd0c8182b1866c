use serde::Serialize;

use crate::krylov::IterationTrace;
use crate::linalg::{dot, norm2, sym_eigen, DenseMatrix};
use crate::precision::ExtendedReal;
use crate::problems::Operator;

use super::AnalysisError;

/// `‖I − VᵀV‖_F` for unit-norm columns.
pub fn loss_of_orthogonality(v: &[Vec<f64>]) -> Result<f64, AnalysisError> {
    for (index, col) in v.iter().enumerate() {
        let norm = norm2(col);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(AnalysisError::NotNormalized { index, norm });
        }
    }
    let mut sum = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            let g = dot(&v[i], &v[j]);
            let d = if i == j { 1.0 - g } else { g };
            sum += d * d;
        }
    }
    Ok(sum.sqrt())
}

/// Normwise backward error `‖b − Ax‖/(‖b‖ + ‖A‖‖x‖)` with the residual in
/// extended precision.
pub fn backward_error(op: &Operator, b: &[ExtendedReal], x: &[ExtendedReal]) -> Result<f64, AnalysisError> {
    if b.len() != op.dim() || x.len() != op.dim() {
        return Err(AnalysisError::DimensionMismatch(format!("order {}, |b| {}, |x| {}", op.dim(), b.len(), x.len())));
    }
    let ax = op.apply(x);
    let r: Vec<ExtendedReal> = b.iter().zip(ax).map(|(&bi, v)| bi - v).collect();
    let den = norm2(b).hi() + op.norm2()? * norm2(x).hi();
    Ok(if den == 0.0 { 0.0 } else { norm2(&r).hi() / den })
}

/// Delay map between a finite-precision and an exact CG run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryMap {
    pub tau: f64,
    /// `ℓ(k)` for `k = 0, 1, …`; `None` where the numerical rank skips `k`.
    pub ell: Vec<Option<usize>>,
    /// `‖x − x̄_{ℓ(k)}‖_A / ‖x − x_k‖_A`.
    pub ratio1: Vec<Option<f64>>,
    /// `|1 − ratio1_k|`.
    pub ratio2: Vec<Option<f64>>,
}

/// `ℓ(k) = max{i : rank_τ([v_1, …, v_i]) = k}` over the retained normalized
/// residual directions of `native`, matched against the `k`-th exact step.
///
/// Ranks come from the eigenvalues of the `N × N` Gram matrix `Σ v_j v_jᵀ`,
/// updated one vector at a time, so the cost is one symmetric eigensolve of
/// order `N` per iteration.
pub fn trajectory_map(
    native: &IterationTrace,
    exact: &IterationTrace,
    tau: f64,
) -> Result<TrajectoryMap, AnalysisError> {
    let basis = native.basis.as_ref().ok_or(AnalysisError::MissingData("basis vectors"))?;
    if native.a_norm_error.is_empty() || exact.a_norm_error.is_empty() {
        return Err(AnalysisError::MissingData("A-norm errors"));
    }
    let n = basis.first().map_or(0, Vec::len);
    let mut gram = DenseMatrix::zeros(n, n);
    // ranks[i − 1] = rank of the first i vectors.
    let mut ranks = Vec::with_capacity(basis.len());
    for v in basis {
        for r in 0..n {
            for c in 0..n {
                gram[(r, c)] += v[r] * v[c];
            }
        }
        let ev = sym_eigen(&gram)?;
        ranks.push(ev.iter().filter(|&&s| s > tau * tau).count());
    }
    let kmax = exact.a_norm_error.len() - 1;
    let mut ell = vec![Some(0)];
    for k in 1..=kmax {
        ell.push(ranks.iter().rposition(|&r| r == k).map(|p| p + 1));
    }
    let ratio1: Vec<Option<f64>> = ell
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let l = (*l)?;
            let num = native.a_norm_error.get(l)?;
            let den = exact.a_norm_error[k];
            (den > 0.0).then(|| num / den)
        })
        .collect();
    let ratio2 = ratio1.iter().map(|r| r.map(|v| (1.0 - v).abs())).collect();
    Ok(TrajectoryMap { tau, ell, ratio1, ratio2 })
}

/// `ζ_min = bᵀAx₀/‖Ax₀‖²`, the minimizer of `‖b − ζAx₀‖`, and `ζ_min x₀`.
pub fn rescale_x0(
    op: &Operator,
    b: &[ExtendedReal],
    x0: &[ExtendedReal],
) -> Result<(f64, Vec<ExtendedReal>), AnalysisError> {
    if b.len() != op.dim() || x0.len() != op.dim() {
        return Err(AnalysisError::DimensionMismatch("b, x0".into()));
    }
    let ax = op.apply(x0);
    let den = dot(&ax, &ax);
    if den == ExtendedReal::ZERO {
        return Err(AnalysisError::ZeroDirection);
    }
    let zeta = dot(b, &ax) / den;
    Ok((zeta.hi(), x0.iter().map(|&v| v * zeta).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{cg, CgOptions, Preconditioner};
    use crate::problems::{LinearSystem, Spectrum};

    #[test]
    fn orthonormal_columns() {
        let v = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]];
        assert!(loss_of_orthogonality(&v).unwrap() <= 1e-14);
        assert!(loss_of_orthogonality(&[vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn backward_error_of_solution() {
        let spec = Spectrum::from_f64(&[1.0, 4.0, 9.0]).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "d").unwrap();
        let x = sys.x_ref.clone().unwrap();
        assert!(backward_error(&sys.operator, &sys.rhs, &x).unwrap() <= 1e-16);
        let zero = vec![ExtendedReal::ZERO; 3];
        assert!((backward_error(&sys.operator, &sys.rhs, &zero).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_examples() {
        let spec = Spectrum::from_f64(&[1.0, 2.0]).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "d").unwrap();
        let (z, _) = rescale_x0(&sys.operator, &sys.rhs, sys.x_ref.as_ref().unwrap()).unwrap();
        assert!((z - 1.0).abs() < 1e-15);
        let b: Vec<ExtendedReal> = vec![1.0.into(), 0.0.into()];
        let x0: Vec<ExtendedReal> = vec![0.0.into(), 1.0.into()];
        assert_eq!(rescale_x0(&sys.operator, &b, &x0).unwrap().0, 0.0);
        assert!(rescale_x0(&sys.operator, &b, &[ExtendedReal::ZERO; 2]).is_err());
    }

    #[test]
    fn no_delay_in_exact_arithmetic() {
        let spec = Spectrum::from_f64(&[1.0, 2.0, 3.0, 5.0, 8.0, 13.0]).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "d").unwrap();
        let opts = CgOptions { tol: 1e-25, retain_basis: true, ..Default::default() };
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &opts).unwrap();
        let map = trajectory_map(&t, &t, 0.1).unwrap();
        for k in 0..t.iterations {
            assert_eq!(map.ell[k], Some(k));
            assert_eq!(map.ratio1[k], Some(1.0));
        }
    }
}
