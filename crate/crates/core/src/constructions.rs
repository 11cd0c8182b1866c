//! Inverse problems: systems on which CG or GMRES follow a prescribed
//! convergence curve.
//!
//! All construction arithmetic is carried out in extended precision. The
//! resulting operators are [`Operator::DenseExtended`], so native solvers see
//! the rounded matrix while diagnostics keep the constructed one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky, ComplexPoint, DenseMatrix, LinalgError, LuFactor};
use crate::precision::ExtendedReal;
use crate::problems::{LinearSystem, Operator, ProblemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("invalid convergence curve: {0}")]
    InvalidCurve(String),
    #[error("inconsistent prescription: the constructed matrix is not positive definite (pivot {0})")]
    InconsistentPrescription(usize),
    #[error("invalid eigenvalues: {0}")]
    InvalidEigenvalues(String),
    #[error("basis matrix is not orthogonal: ||V^T V - I||_F = {0:e}")]
    NotOrthogonal(f64),
    #[error("the Krylov basis [b, v_1, ..., v_(N-1)] is numerically singular")]
    SingularBasis,
    #[error("characteristic polynomial coefficients overflow; use a smaller N or rescale the spectrum")]
    CoefficientOverflow,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Target norm sequences for an inverse construction.
///
/// For GMRES, `residual_norms` is `f_0 ≥ … ≥ f_{N−1} > f_N = 0` (length
/// `N + 1`). For CG, `residual_norms` and `error_norms_a` both have length `N`
/// and hold `‖r_k‖₂`, `‖e_k‖_A` for `k = 0, …, N − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrescribedCurve {
    pub residual_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_norms_a: Option<Vec<f64>>,
}

impl PrescribedCurve {
    pub fn gmres(residual_norms: Vec<f64>) -> Result<Self, ConstructionError> {
        let c = Self { residual_norms, error_norms_a: None };
        c.validate_gmres()?;
        Ok(c)
    }

    pub fn cg(residual_norms: Vec<f64>, error_norms_a: Vec<f64>) -> Result<Self, ConstructionError> {
        let c = Self { residual_norms, error_norms_a: Some(error_norms_a) };
        c.validate_cg()?;
        Ok(c)
    }

    /// Order of the system the curve prescribes.
    pub fn order(&self) -> usize {
        match self.error_norms_a {
            Some(_) => self.residual_norms.len(),
            None => self.residual_norms.len().saturating_sub(1),
        }
    }

    pub fn validate_gmres(&self) -> Result<(), ConstructionError> {
        let f = &self.residual_norms;
        if f.len() < 2 {
            return Err(ConstructionError::InvalidCurve("need at least f_0 and f_N".into()));
        }
        let n = f.len() - 1;
        if f[n] != 0.0 {
            return Err(ConstructionError::InvalidCurve("final value f_N must be exactly 0".into()));
        }
        for (k, w) in f.windows(2).enumerate() {
            if !(w[1] <= w[0]) {
                return Err(ConstructionError::InvalidCurve(format!("increase at step {}", k + 1)));
            }
        }
        if !(f[n - 1] > 0.0) || !f[0].is_finite() {
            return Err(ConstructionError::InvalidCurve("f_(N-1) must be positive and f_0 finite".into()));
        }
        Ok(())
    }

    pub fn validate_cg(&self) -> Result<(), ConstructionError> {
        let r = &self.residual_norms;
        let e = self
            .error_norms_a
            .as_ref()
            .ok_or_else(|| ConstructionError::InvalidCurve("CG prescription needs A-norm errors".into()))?;
        if r.is_empty() || r.len() != e.len() {
            return Err(ConstructionError::InvalidCurve(format!(
                "{} residual norms and {} error norms",
                r.len(),
                e.len()
            )));
        }
        if let Some(k) = r.iter().chain(e).position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ConstructionError::InvalidCurve(format!("entry {k} is not a positive finite number")));
        }
        if let Some(k) = e.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(ConstructionError::InvalidCurve(format!("error norms not strictly decreasing at {}", k + 1)));
        }
        Ok(())
    }
}

/// Prescribed CG residual and error norms: `A⁻¹ = L + L̂ᵀ` with `L_{ij} = σ_i ν_j` for `j ≤ i`,
/// `ν_j = 1/‖r_j‖`, `σ_i = ‖e_i‖²_A/(‖r_i‖‖r_0‖)` and `b = ‖r_0‖ e_1`.
///
/// The sequences are normalized by `‖r_0‖` internally, so `‖r_0‖ ≠ 1` is
/// handled by scaling `b`.
pub fn cg_prescribed(curve: &PrescribedCurve) -> Result<LinearSystem, ConstructionError> {
    curve.validate_cg()?;
    let r0 = curve.residual_norms[0];
    let e = curve.error_norms_a.as_ref().expect("validated");
    let n = curve.order();
    let x = |v: f64| ExtendedReal::from(v) / ExtendedReal::from(r0);
    let nu: Vec<ExtendedReal> = curve.residual_norms.iter().map(|&v| ExtendedReal::ONE / x(v)).collect();
    let sigma: Vec<ExtendedReal> = (0..n)
        .map(|i| {
            let ei = x(e[i]);
            ei * ei / x(curve.residual_norms[i])
        })
        .collect();
    // A⁻¹ is semiseparable, so A is tridiagonal. Building it entrywise
    // instead of by inversion keeps the structural zeros exact; CG then
    // follows the prescription in working precision.
    let s = |i: usize, j: usize| if i >= j { sigma[i] * nu[j] } else { sigma[j] * nu[i] };
    let off: Vec<ExtendedReal> = (0..n.saturating_sub(1))
        .map(|i| -(ExtendedReal::ONE / (sigma[i] * nu[i + 1] - sigma[i + 1] * nu[i])))
        .collect();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut rest = ExtendedReal::ONE;
        if i > 0 {
            rest -= off[i - 1] * s(i - 1, i);
            a[(i, i - 1)] = off[i - 1];
        }
        if i + 1 < n {
            rest -= off[i] * s(i + 1, i);
            a[(i, i + 1)] = off[i];
        }
        a[(i, i)] = rest / s(i, i);
    }
    if !a.is_finite() {
        return Err(ConstructionError::InconsistentPrescription(0));
    }
    if let Err(LinalgError::NotPositiveDefinite { pivot }) = cholesky(&a) {
        return Err(ConstructionError::InconsistentPrescription(pivot));
    }
    let mut rhs = vec![ExtendedReal::ZERO; n];
    rhs[0] = ExtendedReal::from(r0);
    let x_ref: Vec<ExtendedReal> = (0..n).map(|i| s(i, 0) * rhs[0]).collect();
    let mut sys = LinearSystem::new(Operator::dense_extended(a), rhs, "cg-prescribed")?;
    sys.x_ref = Some(x_ref);
    Ok(sys)
}

/// Greenbaum–Pták–Strakoš construction: `A = B A^B B⁻¹` with `A^B` the
/// companion matrix of the prescribed spectrum, `B = [b, v_1, …, v_{N−1}]`
/// and `b = V g`, `g_j = (f_{j−1}² − f_j²)^{1/2}`. `None` selects `V = I`.
pub fn gmres_prescribed(
    curve: &PrescribedCurve,
    eigenvalues: &[ComplexPoint],
    v: Option<&DenseMatrix<f64>>,
) -> Result<LinearSystem, ConstructionError> {
    curve.validate_gmres()?;
    let n = curve.order();
    if eigenvalues.len() != n {
        return Err(ConstructionError::InvalidEigenvalues(format!("{} eigenvalues for order {n}", eigenvalues.len())));
    }
    let coeffs = monic_from_roots(eigenvalues)?;
    let companion = companion_matrix(&coeffs);

    let f = &curve.residual_norms;
    let g: Vec<ExtendedReal> = (1..=n)
        .map(|j| {
            let (a, b) = (ExtendedReal::from(f[j - 1]), ExtendedReal::from(f[j]));
            let d = a * a - b * b;
            if d > ExtendedReal::ZERO {
                d.sqrt()
            } else {
                ExtendedReal::ZERO
            }
        })
        .collect();
    let vmat = match v {
        Some(v) => {
            if v.rows() != n || v.cols() != n {
                return Err(ConstructionError::InvalidEigenvalues(format!("V must be {n}x{n}")));
            }
            let defect = v.transpose().matmul(v).sub(&DenseMatrix::identity(n)).frobenius_norm();
            if !(defect <= 1e-12) {
                return Err(ConstructionError::NotOrthogonal(defect));
            }
            v.to_ext()
        }
        None => DenseMatrix::identity(n),
    };
    let b = vmat.matvec(&g);
    let mut basis = DenseMatrix::zeros(n, n);
    basis.set_column(0, &b);
    for j in 1..n {
        basis.set_column(j, &vmat.column(j - 1));
    }
    let lu = LuFactor::new(&basis).map_err(|_| ConstructionError::SingularBasis)?;
    // A = M B⁻¹ with M = B A^B, so the rows of A solve Bᵀ aᵢ = mᵢ.
    let m = basis.matmul(&companion);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = lu.solve_transpose_vec(m.row(i));
        a.row_mut(i).copy_from_slice(&row);
    }
    if !a.is_finite() {
        return Err(ConstructionError::CoefficientOverflow);
    }
    // A⁻¹b = B (A^B)⁻¹ e_1; (A^B)⁻¹ e_1 = (−α_1/α_0, …, −α_{N−1}/α_0, 1/α_0).
    let alpha0 = -coeffs[0];
    let mut y: Vec<ExtendedReal> = (1..n).map(|k| coeffs[k] / alpha0).collect();
    y.push(ExtendedReal::ONE / alpha0);
    let x_ref = basis.matvec(&y);
    let mut sys = LinearSystem::new(Operator::dense_extended(a), b, "gmres-prescribed")?;
    sys.x_ref = Some(x_ref);
    Ok(sys)
}

/// Coefficients `c_0, …, c_N` (with `c_N = 1`) of `Π (z − λ_j)`, expanded in
/// extended precision. Complex eigenvalues must come in exact conjugate pairs.
pub fn monic_from_roots(eigenvalues: &[ComplexPoint]) -> Result<Vec<ExtendedReal>, ConstructionError> {
    let mut used = vec![false; eigenvalues.len()];
    let mut poly = vec![ExtendedReal::ONE];
    for (i, &l) in eigenvalues.iter().enumerate() {
        if used[i] {
            continue;
        }
        if !l.is_finite() || (l.re == 0.0 && l.im == 0.0) {
            return Err(ConstructionError::InvalidEigenvalues(format!("eigenvalue {i} must be finite and nonzero")));
        }
        used[i] = true;
        if l.im == 0.0 {
            poly = mul_poly(&poly, &[-ExtendedReal::from(l.re), ExtendedReal::ONE]);
            continue;
        }
        let partner = (0..eigenvalues.len()).find(|&j| !used[j] && eigenvalues[j] == l.conj());
        let Some(j) = partner else {
            return Err(ConstructionError::InvalidEigenvalues(format!("eigenvalue {i} has no conjugate partner")));
        };
        used[j] = true;
        let (re, im) = (ExtendedReal::from(l.re), ExtendedReal::from(l.im));
        let quad = [re * re + im * im, -(re + re), ExtendedReal::ONE];
        poly = mul_poly(&poly, &quad);
    }
    if poly.iter().any(|c| !c.is_finite() || c.abs().hi() > 1e300) {
        return Err(ConstructionError::CoefficientOverflow);
    }
    Ok(poly)
}

fn mul_poly(p: &[ExtendedReal], q: &[ExtendedReal]) -> Vec<ExtendedReal> {
    let mut out = vec![ExtendedReal::ZERO; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Companion matrix with ones on the subdiagonal and `α_j = −c_j` in the
/// last column, so that its characteristic polynomial is `Σ c_j z^j`.
pub fn companion_matrix(coeffs: &[ExtendedReal]) -> DenseMatrix<ExtendedReal> {
    let n = coeffs.len() - 1;
    let mut c = DenseMatrix::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = ExtendedReal::ONE;
    }
    for (i, &v) in coeffs[..n].iter().enumerate() {
        c[(i, n - 1)] = -v;
    }
    c
}

/// Characteristic polynomial `det(zI − H)` of an upper Hessenberg matrix by
/// Hyman's recurrence over the leading principal submatrices. Returns
/// `c_0, …, c_N` with `c_N = 1`.
pub fn hessenberg_charpoly(h: &DenseMatrix<ExtendedReal>) -> Vec<ExtendedReal> {
    let n = h.rows();
    // p[k] = det(zI − H_{1:k,1:k}); p[0] = 1.
    let mut p: Vec<Vec<ExtendedReal>> = vec![vec![ExtendedReal::ONE]];
    for k in 0..n {
        let mut next = mul_poly(&p[k], &[-h[(k, k)], ExtendedReal::ONE]);
        let mut prod = ExtendedReal::ONE;
        for i in (0..k).rev() {
            prod *= h[(i + 1, i)];
            let scale = h[(i, k)] * prod;
            for (c, &q) in next.iter_mut().zip(&p[i]) {
                *c -= scale * q;
            }
        }
        p.push(next);
    }
    p.pop().expect("nonempty")
}

/// Largest coefficient-wise relative error; zero references are compared
/// against the largest reference coefficient.
pub fn coefficient_error(computed: &[ExtendedReal], reference: &[ExtendedReal]) -> f64 {
    let scale = reference.iter().map(|c| c.abs().hi()).fold(0.0, f64::max);
    computed
        .iter()
        .zip(reference)
        .map(|(&a, &b)| {
            let d = (a - b).abs().hi();
            if b.hi() != 0.0 {
                d / b.abs().hi()
            } else {
                d / scale
            }
        })
        .fold(if computed.len() == reference.len() { 0.0 } else { f64::INFINITY }, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{cg, gmres, CgOptions, GmresOptions, Preconditioner};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn cg_two_by_two() {
        let curve = PrescribedCurve::cg(vec![1.0, 0.5], vec![1.0, 0.3]).unwrap();
        let sys = cg_prescribed(&curve).unwrap();
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { tol: 1e-25, ..Default::default() })
            .unwrap();
        assert!(rel(t.true_resnorm[1], 0.5) < 1e-10);
        assert!(rel(t.a_norm_error[0], 1.0) < 1e-10);
        assert!(rel(t.a_norm_error[1], 0.3) < 1e-10);
    }

    #[test]
    fn cg_scaled_initial_residual() {
        let curve = PrescribedCurve::cg(vec![3.0, 6.0, 3.0], vec![2.0, 1.0, 0.1]).unwrap();
        let sys = cg_prescribed(&curve).unwrap();
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { tol: 1e-25, ..Default::default() })
            .unwrap();
        for k in 0..3 {
            assert!(rel(t.true_resnorm[k], curve.residual_norms[k]) < 1e-10, "{k}");
            assert!(rel(t.a_norm_error[k], curve.error_norms_a.as_ref().unwrap()[k]) < 1e-10, "{k}");
        }
    }

    #[test]
    fn cg_rejects_increasing_errors() {
        assert!(PrescribedCurve::cg(vec![1.0, 1.0], vec![1.0, 1.5]).is_err());
    }

    #[test]
    fn gmres_two_by_two() {
        let curve = PrescribedCurve::gmres(vec![1.0, 0.6, 0.0]).unwrap();
        let eigs = [ComplexPoint::real(1.0), ComplexPoint::real(2.0)];
        let sys = gmres_prescribed(&curve, &eigs, None).unwrap();
        let t =
            gmres::<ExtendedReal>(&sys, &Preconditioner::Identity, &GmresOptions { tol: 1e-28, ..Default::default() })
                .unwrap();
        assert!(rel(t.true_resnorm[1], 0.6) < 1e-10);
        assert!(t.true_resnorm[2] < 1e-25);
    }

    #[test]
    fn gmres_complex_pair_and_rotation() {
        let curve = PrescribedCurve::gmres(vec![1.0, 0.9, 0.5, 0.1, 0.0]).unwrap();
        let eigs = [
            ComplexPoint::new(1.0, 2.0),
            ComplexPoint::real(-3.0),
            ComplexPoint::new(1.0, -2.0),
            ComplexPoint::real(0.5),
        ];
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let v = DenseMatrix::from_rows(&[
            vec![c, -c, 0.0, 0.0],
            vec![c, c, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let sys = gmres_prescribed(&curve, &eigs, Some(&v)).unwrap();
        let t =
            gmres::<ExtendedReal>(&sys, &Preconditioner::Identity, &GmresOptions { tol: 1e-28, ..Default::default() })
                .unwrap();
        for k in 0..4 {
            assert!(rel(t.true_resnorm[k], curve.residual_norms[k]) < 1e-10, "{k}: {}", t.true_resnorm[k]);
        }
        let coeffs = monic_from_roots(&eigs).unwrap();
        assert_eq!(coeffs[0].hi(), -7.5);
    }

    #[test]
    fn coefficients_of_known_polynomials() {
        let c = monic_from_roots(&[ComplexPoint::real(1.0), ComplexPoint::real(2.0), ComplexPoint::real(3.0)]).unwrap();
        let want = [-6.0, 11.0, -6.0, 1.0];
        for (a, b) in c.iter().zip(want) {
            assert_eq!(a.hi(), b);
        }
        let q = monic_from_roots(&[ComplexPoint::new(0.0, 1.0), ComplexPoint::new(0.0, -1.0)]).unwrap();
        assert_eq!(q.iter().map(|v| v.hi()).collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
        assert!(monic_from_roots(&[ComplexPoint::new(0.0, 1.0), ComplexPoint::real(1.0)]).is_err());
        assert!(monic_from_roots(&[ComplexPoint::real(0.0)]).is_err());
    }

    #[test]
    fn hyman_recovers_companion_coefficients() {
        let eigs: Vec<ComplexPoint> = (1..=21).map(|j| ComplexPoint::real(j as f64)).collect();
        let c = monic_from_roots(&eigs).unwrap();
        let p = hessenberg_charpoly(&companion_matrix(&c));
        assert!(coefficient_error(&p, &c) <= 1e-20);
        let dense = DenseMatrix::from_rows(&[vec![2.0, 1.0, 4.0], vec![3.0, 1.0, -1.0], vec![0.0, 0.5, 2.0]]).to_ext();
        // det(zI − H) = z³ − 5z² + 5.5z − 5, expanded by hand.
        let p = hessenberg_charpoly(&dense);
        let want = [-5.0, 5.5, -5.0, 1.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a.hi() - b).abs() < 1e-14, "{p:?}");
        }
    }
}
