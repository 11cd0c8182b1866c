use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dot, norm2};
use crate::precision::{ExtendedReal, PrecisionMode, Real};
use crate::problems::LinearSystem;

use super::{IterationTrace, KrylovError, OrthogonalityMeter, Preconditioner, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgVariant {
    /// Hestenes–Stiefel coupled two-term recurrences.
    TwoTerm,
    /// Rutishauser's three-term recurrences for `x` and `r`.
    ThreeTerm,
    /// Two-term recurrences with full reorthogonalization of each new
    /// residual against all previous ones (classical Gram–Schmidt, twice).
    Reorthogonalized,
}

#[derive(Clone, Debug)]
pub struct CgOptions {
    pub variant: CgVariant,
    /// Stop when the recursive residual norm drops to `tol·‖r_0‖`.
    pub tol: f64,
    pub maxit: usize,
    /// Also stop once the relative A-norm error reaches this level (needs a
    /// reference solution).
    pub error_tol: Option<f64>,
    pub retain_basis: bool,
    pub track_orthogonality: bool,
    /// Recompute true residual and error norms at every step.
    pub diagnostics: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            variant: CgVariant::TwoTerm,
            tol: 1e-12,
            maxit: 1000,
            error_tol: None,
            retain_basis: false,
            track_orthogonality: false,
            diagnostics: true,
        }
    }
}

/// CG with the working precision chosen at run time.
pub fn cg_in(
    mode: PrecisionMode,
    system: &LinearSystem,
    precond: &Preconditioner,
    opts: &CgOptions,
) -> Result<IterationTrace, KrylovError> {
    match mode {
        PrecisionMode::Native => cg::<f64>(system, precond, opts),
        PrecisionMode::Extended => cg::<ExtendedReal>(system, precond, opts),
    }
}

struct Recorder<'a> {
    system: &'a LinearSystem,
    opts: &'a CgOptions,
    trace: IterationTrace,
    e0: Option<f64>,
    meter: OrthogonalityMeter,
}

impl<'a> Recorder<'a> {
    fn new(system: &'a LinearSystem, opts: &'a CgOptions, method: &str, mode: PrecisionMode) -> Self {
        let trace = IterationTrace { method: method.into(), precision: Some(mode), ..Default::default() };
        Self { system, opts, trace, e0: None, meter: OrthogonalityMeter::default() }
    }

    /// Records iterate `x`; returns true if the error tolerance is met.
    fn iterate<T: Real>(&mut self, x: &[T], recursive: f64) -> bool {
        self.trace.recursive_resnorm.push(recursive);
        if !self.opts.diagnostics {
            return false;
        }
        let xe: Vec<ExtendedReal> = x.iter().map(|v| v.to_ext()).collect();
        self.trace.true_resnorm.push(self.system.residual_norm(&xe).hi());
        if let Some(e) = self.system.a_norm_error(&xe) {
            let e = e.hi();
            self.trace.a_norm_error.push(e);
            self.trace.euclid_error.push(self.system.euclid_error(&xe).map_or(0.0, |v| v.hi()));
            let e0 = *self.e0.get_or_insert(e);
            if let Some(tol) = self.opts.error_tol {
                return e <= tol * e0;
            }
        }
        false
    }

    /// Appends a normalized basis vector; `basis` holds the earlier ones.
    fn basis_vector<T: Real>(&mut self, basis: &[Vec<T>], v: &[T]) {
        if self.opts.track_orthogonality {
            let dots: Vec<f64> = basis.iter().map(|u| dot(u, v).to_f64()).collect();
            let loss = self.meter.push(&dots, dot(v, v).to_f64());
            self.trace.loss_of_orthogonality.push(loss);
        }
        if self.opts.retain_basis {
            self.trace.basis.get_or_insert_with(Vec::new).push(v.iter().map(|x| x.to_f64()).collect());
        }
    }

    fn finish<T: Real>(mut self, x: &[T], k: usize, why: Termination) -> IterationTrace {
        self.trace.iterations = k;
        self.trace.termination = Some(why);
        self.trace.x = x.iter().map(|v| v.to_ext()).collect();
        self.trace
    }
}

fn normalized<T: Real>(v: &[T]) -> Vec<T> {
    let n = norm2(v);
    v.iter().map(|&x| x / n).collect()
}

/// Conjugate gradients in the arithmetic of `T`.
///
/// With a preconditioner the recursive norm is `(r_kᵀ P⁻¹ r_k)^{1/2}`.
/// The convergence test sits after the residual update and before the
/// computation of `β`.
pub fn cg<T: Real>(
    system: &LinearSystem,
    precond: &Preconditioner,
    opts: &CgOptions,
) -> Result<IterationTrace, KrylovError> {
    match opts.variant {
        CgVariant::ThreeTerm => {
            if !precond.is_identity() {
                return Err(KrylovError::InvalidOption("three-term CG is implemented unpreconditioned".into()));
            }
            three_term::<T>(system, opts)
        }
        _ => {
            if opts.variant == CgVariant::Reorthogonalized && !precond.is_identity() {
                return Err(KrylovError::InvalidOption("reorthogonalization needs the Euclidean inner product".into()));
            }
            two_term::<T>(system, precond, opts)
        }
    }
}

fn two_term<T: Real>(
    system: &LinearSystem,
    precond: &Preconditioner,
    opts: &CgOptions,
) -> Result<IterationTrace, KrylovError> {
    let reorth = opts.variant == CgVariant::Reorthogonalized;
    let name = if reorth { "cg-reorth" } else { "cg" };
    let mut rec = Recorder::new(system, opts, name, T::MODE);
    let op = &system.operator;
    let b: Vec<T> = system.rhs_as();
    let mut x: Vec<T> = system.x0.iter().map(|&v| T::from_ext(v)).collect();
    let ax = op.apply(&x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect();
    let mut z = precond.apply(&r);
    let mut rz = dot(&r, &z);
    let rz0 = rz.to_f64();
    let res0 = rz0.sqrt();
    let keep = reorth || opts.retain_basis || opts.track_orthogonality;
    let mut basis: Vec<Vec<T>> = Vec::new();
    if rec.iterate(&x, res0) || rz == T::zero() {
        return Ok(rec.finish(&x, 0, Termination::Breakdown));
    }
    if keep {
        let v = normalized(&r);
        rec.basis_vector(&basis, &v);
        basis.push(v);
    }
    let mut p = z.clone();
    let mut prev_alpha = 0.0;
    for k in 0..opts.maxit {
        let ap = op.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(KrylovError::NotSpd { iteration: k });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if reorth {
            for _ in 0..2 {
                for u in &basis {
                    let c = dot(u, &r);
                    axpy(-c, u, &mut r);
                }
            }
        }
        z = precond.apply(&r);
        let rz_new = dot(&r, &z);
        let a = alpha.to_f64();
        rec.trace.alpha.push(a);
        let err_met = rec.iterate(&x, rz_new.to_f64().max(0.0).sqrt());
        if keep && rz_new != T::zero() {
            let v = normalized(&r);
            rec.basis_vector(&basis, &v);
            basis.push(v);
        }
        // Lanczos entries of T_k follow from the CG coefficients.
        if k == 0 {
            rec.trace.lanczos_alpha.push(1.0 / a);
        } else {
            let bk = rec.trace.beta[k - 1];
            rec.trace.lanczos_alpha.push(1.0 / a + bk / prev_alpha);
            rec.trace.lanczos_beta.push(bk.sqrt() / prev_alpha);
        }
        prev_alpha = a;
        if rz_new == T::zero() {
            return Ok(rec.finish(&x, k + 1, Termination::Breakdown));
        }
        if rz_new.to_f64().sqrt() <= opts.tol * res0 || err_met {
            return Ok(rec.finish(&x, k + 1, Termination::ToleranceMet));
        }
        let beta = rz_new / rz;
        rec.trace.beta.push(beta.to_f64());
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rz = rz_new;
    }
    Ok(rec.finish(&x, opts.maxit, Termination::MaxIterations))
}

/// Three-term recurrences (Rutishauser):
///
/// `x_{k+1} = ρ_k(x_k + γ_k r_k) + (1 − ρ_k)x_{k−1}`,
/// `r_{k+1} = ρ_k(r_k − γ_k A r_k) + (1 − ρ_k)r_{k−1}`,
///
/// with `γ_k = r_kᵀr_k / r_kᵀAr_k`, `ρ_0 = 1` and
/// `ρ_k = (1 − (γ_k/γ_{k−1})(r_kᵀr_k / r_{k−1}ᵀr_{k−1}) / ρ_{k−1})⁻¹`.
/// In exact arithmetic the iterates coincide with two-term CG; the
/// recursion follows from eliminating `p_k` between the coupled updates.
fn three_term<T: Real>(system: &LinearSystem, opts: &CgOptions) -> Result<IterationTrace, KrylovError> {
    let mut rec = Recorder::new(system, opts, "cg-3term", T::MODE);
    let op = &system.operator;
    let b: Vec<T> = system.rhs_as();
    let mut x: Vec<T> = system.x0.iter().map(|&v| T::from_ext(v)).collect();
    let ax = op.apply(&x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect();
    let mut x_prev = x.clone();
    let mut r_prev = r.clone();
    let mut rr = dot(&r, &r);
    let res0 = rr.to_f64().sqrt();
    if rec.iterate(&x, res0) || rr == T::zero() {
        return Ok(rec.finish(&x, 0, Termination::Breakdown));
    }
    let (mut rr_prev, mut gamma_prev, mut rho_prev) = (T::one(), T::one(), T::one());
    let one = T::one();
    for k in 0..opts.maxit {
        let ar = op.apply(&r);
        let rar = dot(&r, &ar);
        if !(rar > T::zero()) {
            return Err(KrylovError::NotSpd { iteration: k });
        }
        let gamma = rr / rar;
        let rho = if k == 0 { one } else { one / (one - (gamma / gamma_prev) * (rr / rr_prev) / rho_prev) };
        let x_new: Vec<T> = (0..x.len()).map(|i| rho * (x[i] + gamma * r[i]) + (one - rho) * x_prev[i]).collect();
        let r_new: Vec<T> = (0..r.len()).map(|i| rho * (r[i] - gamma * ar[i]) + (one - rho) * r_prev[i]).collect();
        x_prev = std::mem::replace(&mut x, x_new);
        r_prev = std::mem::replace(&mut r, r_new);
        let rr_new = dot(&r, &r);
        rec.trace.alpha.push(gamma.to_f64());
        let err_met = rec.iterate(&x, rr_new.to_f64().sqrt());
        if rr_new == T::zero() {
            return Ok(rec.finish(&x, k + 1, Termination::Breakdown));
        }
        if rr_new.to_f64().sqrt() <= opts.tol * res0 || err_met {
            return Ok(rec.finish(&x, k + 1, Termination::ToleranceMet));
        }
        rr_prev = rr;
        rr = rr_new;
        gamma_prev = gamma;
        rho_prev = rho;
    }
    Ok(rec.finish(&x, opts.maxit, Termination::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{symtrid_eigenvalues, DenseMatrix};
    use crate::problems::{Operator, Spectrum};

    fn diag_system(v: &[f64]) -> LinearSystem {
        LinearSystem::from_spectrum(&Spectrum::from_f64(v).unwrap(), "d").unwrap()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let sys = LinearSystem::from_f64(Operator::Dense(DenseMatrix::identity(3)), &[1.0, 2.0, 3.0], "I")
            .unwrap()
            .with_reference()
            .unwrap();
        let t = cg::<f64>(&sys, &Preconditioner::Identity, &CgOptions::default()).unwrap();
        assert_eq!(t.iterations, 1);
        assert_eq!(t.x[2].hi(), 3.0);
    }

    #[test]
    fn finite_termination_at_grade() {
        let sys = diag_system(&[1.0, 2.0, 3.0, 4.0]);
        let opts = CgOptions { tol: 1e-28, ..Default::default() };
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &opts).unwrap();
        assert_eq!(t.iterations, 4);
        assert!(t.a_norm_error[4] < 1e-28);
    }

    #[test]
    fn ritz_values_from_coefficients() {
        let sys = diag_system(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let opts = CgOptions { tol: 1e-28, ..Default::default() };
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &opts).unwrap();
        let theta = symtrid_eigenvalues(&t.lanczos_alpha, &t.lanczos_beta).unwrap();
        for (i, th) in theta.iter().enumerate() {
            assert!((th - (i + 1) as f64).abs() < 1e-12, "{theta:?}");
        }
        // One step: the Rayleigh quotient of b.
        assert!((t.lanczos_alpha[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn variants_agree_in_extended_precision() {
        let sys = diag_system(&[0.5, 1.0, 2.0, 7.0, 9.0, 30.0]);
        let base = CgOptions { tol: 1e-25, ..Default::default() };
        let two = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &base).unwrap();
        for v in [CgVariant::ThreeTerm, CgVariant::Reorthogonalized] {
            let t =
                cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { variant: v, ..base.clone() }).unwrap();
            for k in 0..5 {
                let rel = (t.a_norm_error[k] - two.a_norm_error[k]).abs() / two.a_norm_error[k];
                assert!(rel < 1e-12, "{v:?} step {k}: {rel}");
            }
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let sys = LinearSystem::from_f64(Operator::Dense(a), &[1.0, 1.0], "indef").unwrap();
        let e = cg::<f64>(&sys, &Preconditioner::Identity, &CgOptions::default()).unwrap_err();
        assert_eq!(e, KrylovError::NotSpd { iteration: 0 });
    }

    #[test]
    fn reorthogonalized_basis_stays_orthogonal() {
        let sys = LinearSystem::from_spectrum(
            &crate::problems::diag_family(40, 1e-2, 1e2, 0.7, crate::problems::Orientation::Left).unwrap(),
            "fam",
        )
        .unwrap();
        let opts = CgOptions {
            variant: CgVariant::Reorthogonalized,
            tol: 1e-10,
            track_orthogonality: true,
            ..Default::default()
        };
        let t = cg::<f64>(&sys, &Preconditioner::Identity, &opts).unwrap();
        let k = t.loss_of_orthogonality.len() as f64;
        assert!(t.loss_of_orthogonality.iter().all(|&l| l <= 100.0 * crate::precision::NATIVE_UNIT_ROUNDOFF * k));
    }
}
