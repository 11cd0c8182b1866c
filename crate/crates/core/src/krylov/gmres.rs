use crate::linalg::{dot, norm2, DenseMatrix};
use crate::precision::{ExtendedReal, PrecisionMode, Real};
use crate::problems::LinearSystem;

use super::{IterationTrace, KrylovError, OrthogonalityMeter, Preconditioner, Termination};

#[derive(Clone, Debug)]
pub struct GmresOptions {
    /// Stop when the recursive residual norm drops to `tol·‖r_0‖`.
    pub tol: f64,
    /// Capped at the system order.
    pub maxit: usize,
    /// Form `x_k` every step and record the true residual and error norms.
    pub track_true_residual: bool,
    pub track_backward_error: bool,
    pub track_orthogonality: bool,
    pub retain_basis: bool,
    pub retain_hessenberg: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            maxit: usize::MAX,
            track_true_residual: true,
            track_backward_error: false,
            track_orthogonality: false,
            retain_basis: false,
            retain_hessenberg: false,
        }
    }
}

pub fn gmres_in(
    mode: PrecisionMode,
    system: &LinearSystem,
    precond: &Preconditioner,
    opts: &GmresOptions,
) -> Result<IterationTrace, KrylovError> {
    match mode {
        PrecisionMode::Native => gmres::<f64>(system, precond, opts),
        PrecisionMode::Extended => gmres::<ExtendedReal>(system, precond, opts),
    }
}

/// Rotation `(c, s)` with `[c s; −s c]·[a; b] = [r; 0]`.
fn givens<T: Real>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        return (T::one(), T::zero());
    }
    let r = (a * a + b * b).sqrt();
    (a / r, b / r)
}

/// Incremental QR factorization of the Arnoldi Hessenberg matrix.
struct GivensLs<T> {
    cs: Vec<(T, T)>,
    r: Vec<Vec<T>>,
    g: Vec<T>,
}

impl<T: Real> GivensLs<T> {
    fn new(beta: T) -> Self {
        Self { cs: Vec::new(), r: Vec::new(), g: vec![beta] }
    }

    /// Adds column `h` (length `k + 2`) and returns the updated residual norm.
    fn push(&mut self, mut h: Vec<T>) -> T {
        let k = h.len() - 2;
        for (i, &(c, s)) in self.cs.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = c * b - s * a;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        h[k] = c * h[k] + s * h[k + 1];
        h.truncate(k + 1);
        self.cs.push((c, s));
        let gk = self.g[k];
        self.g[k] = c * gk;
        self.g.push(-(s * gk));
        self.r.push(h);
        self.g[k + 1].abs()
    }

    /// `t_k` solving the triangular least-squares system.
    fn solve(&self) -> Option<Vec<T>> {
        let k = self.r.len();
        let mut y = self.g[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = y[i];
            for j in i + 1..k {
                s -= self.r[j][i] * y[j];
            }
            let d = self.r[i][i];
            if d == T::zero() {
                return None;
            }
            y[i] = s / d;
        }
        Some(y)
    }
}

fn combine<T: Real>(x0: &[T], basis: &[Vec<T>], y: &[T]) -> Vec<T> {
    let mut x = x0.to_vec();
    for (v, &c) in basis.iter().zip(y) {
        for (xi, &vi) in x.iter_mut().zip(v) {
            *xi += c * vi;
        }
    }
    x
}

/// Full (non-restarted) GMRES with MGS Arnoldi and Givens least squares,
/// left-preconditioned by `precond`.
///
/// The recursive norm is `‖P⁻¹(b − A x_k)‖` when preconditioned; the true
/// residual recorded alongside is always the unpreconditioned `‖b − A x_k‖`.
pub fn gmres<T: Real>(
    system: &LinearSystem,
    precond: &Preconditioner,
    opts: &GmresOptions,
) -> Result<IterationTrace, KrylovError> {
    let n = system.dim();
    let maxit = opts.maxit.min(n);
    let op = &system.operator;
    let mut trace = IterationTrace { method: "gmres".into(), precision: Some(T::MODE), ..Default::default() };
    let b: Vec<T> = system.rhs_as();
    let x0: Vec<T> = system.x0.iter().map(|&v| T::from_ext(v)).collect();
    let ax0 = op.apply(&x0);
    let r: Vec<T> = b.iter().zip(&ax0).map(|(&bi, &v)| bi - v).collect();
    let r0 = precond.apply(&r);
    let beta = norm2(&r0);
    let a_norm = if opts.track_backward_error { op.norm2()? } else { 0.0 };
    let bnorm = system.rhs_norm().hi();

    let record = |trace: &mut IterationTrace, x: &[T]| {
        let xe: Vec<ExtendedReal> = x.iter().map(|v| v.to_ext()).collect();
        let res = system.residual_norm(&xe).hi();
        trace.true_resnorm.push(res);
        if opts.track_backward_error {
            trace.backward_error.push(res / (bnorm + a_norm * norm2(&xe).hi()));
        }
        if let Some(e) = system.euclid_error(&xe) {
            trace.euclid_error.push(e.hi());
        }
    };

    trace.recursive_resnorm.push(beta.to_f64());
    if opts.track_true_residual {
        record(&mut trace, &x0);
    }
    if beta == T::zero() {
        trace.termination = Some(Termination::Breakdown);
        trace.x = system.x0.clone();
        return Ok(trace);
    }
    let mut basis: Vec<Vec<T>> = vec![r0.iter().map(|&v| v / beta).collect()];
    let mut meter = OrthogonalityMeter::default();
    if opts.track_orthogonality {
        let v = &basis[0];
        trace.loss_of_orthogonality.push(meter.push(&[], dot(v, v).to_f64()));
    }
    let mut ls = GivensLs::new(beta);
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut inner_before = precond.inner_count();
    let mut why = Termination::MaxIterations;
    let mut steps = 0;
    for k in 0..maxit {
        let av = op.apply(&basis[k]);
        let mut w = precond.apply(&av);
        let after = precond.inner_count();
        if !precond.is_identity() && after > inner_before {
            trace.inner_iterations.push(after - inner_before);
        }
        inner_before = after;
        let mut h = vec![T::zero(); k + 2];
        for (i, v) in basis.iter().enumerate() {
            let hik = dot(v, &w);
            h[i] = hik;
            for (wj, &vj) in w.iter_mut().zip(v) {
                *wj -= hik * vj;
            }
        }
        let hnext = norm2(&w);
        h[k + 1] = hnext;
        let col_norm = norm2(&h);
        if opts.retain_hessenberg {
            hcols.push(h.iter().map(|v| v.to_f64()).collect());
        }
        let res = ls.push(h);
        trace.recursive_resnorm.push(res.to_f64());
        steps = k + 1;
        let breakdown = hnext == T::zero() || hnext.to_f64() <= T::unit_roundoff() * col_norm.to_f64();
        if !breakdown {
            let v: Vec<T> = w.iter().map(|&x| x / hnext).collect();
            if opts.track_orthogonality {
                let dots: Vec<f64> = basis.iter().map(|u| dot(u, &v).to_f64()).collect();
                trace.loss_of_orthogonality.push(meter.push(&dots, dot(&v, &v).to_f64()));
            }
            basis.push(v);
        }
        if opts.track_true_residual {
            let y = ls.solve().ok_or(KrylovError::SingularLeastSquares(k + 1))?;
            let x = combine(&x0, &basis, &y);
            record(&mut trace, &x);
        }
        if res.to_f64() <= opts.tol * beta.to_f64() {
            why = Termination::ToleranceMet;
            break;
        }
        if breakdown {
            why = Termination::Breakdown;
            break;
        }
    }
    let y = ls.solve().ok_or(KrylovError::SingularLeastSquares(steps))?;
    let x = combine(&x0, &basis, &y);
    trace.x = x.iter().map(|v| v.to_ext()).collect();
    trace.iterations = steps;
    trace.termination = Some(why);
    if opts.retain_hessenberg {
        let mut hm = DenseMatrix::zeros(steps + 1, steps);
        for (j, col) in hcols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                hm[(i, j)] = v;
            }
        }
        trace.hessenberg = Some(hm);
    }
    if opts.retain_basis {
        trace.basis = Some(basis.iter().map(|v| v.iter().map(|x| x.to_f64()).collect()).collect());
    }
    Ok(trace)
}

/// Unpreconditioned GMRES on a dense block with zero initial guess, stopped
/// at relative residual `tol`. Returns the iterate and the step count.
pub(crate) fn inner_solve<T: Real>(a: &DenseMatrix<f64>, rhs: &[T], tol: f64, maxit: usize) -> (Vec<T>, usize) {
    let n = a.rows();
    let beta = norm2(rhs);
    if beta == T::zero() {
        return (vec![T::zero(); n], 0);
    }
    let apply = |x: &[T]| -> Vec<T> {
        (0..n)
            .map(|i| {
                let mut s = T::zero();
                for (&aij, &xj) in a.row(i).iter().zip(x) {
                    s += xj.mul_f64(aij);
                }
                s
            })
            .collect()
    };
    let mut basis: Vec<Vec<T>> = vec![rhs.iter().map(|&v| v / beta).collect()];
    let mut ls = GivensLs::new(beta);
    let mut steps = 0;
    for k in 0..maxit.min(n) {
        let mut w = apply(&basis[k]);
        let mut h = vec![T::zero(); k + 2];
        for (i, v) in basis.iter().enumerate() {
            let hik = dot(v, &w);
            h[i] = hik;
            for (wj, &vj) in w.iter_mut().zip(v) {
                *wj -= hik * vj;
            }
        }
        let hnext = norm2(&w);
        h[k + 1] = hnext;
        let res = ls.push(h);
        steps = k + 1;
        if res.to_f64() <= tol * beta.to_f64() || hnext == T::zero() {
            break;
        }
        basis.push(w.iter().map(|&x| x / hnext).collect());
    }
    let y = ls.solve().unwrap_or_else(|| vec![T::zero(); steps]);
    let zero = vec![T::zero(); n];
    (combine(&zero, &basis, &y), steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu_solve;
    use crate::problems::{synthetic_saddle_point, Operator, Rng};

    fn system(a: DenseMatrix<f64>, b: &[f64]) -> LinearSystem {
        LinearSystem::from_f64(Operator::Dense(a), b, "t").unwrap().with_reference().unwrap()
    }

    #[test]
    fn identity_in_one_step() {
        let t = gmres::<f64>(
            &system(DenseMatrix::identity(4), &[1.0, 2.0, 3.0, 4.0]),
            &Preconditioner::Identity,
            &GmresOptions::default(),
        )
        .unwrap();
        assert_eq!(t.iterations, 1);
        assert!(t.true_resnorm[1] < 1e-15);
    }

    #[test]
    fn least_squares_oracle() {
        let mut rng = Rng::new(9);
        let n = 12;
        let a = DenseMatrix::identity(n).scale(2.0).add(&rng.normal_matrix(n, n).scale(0.4));
        let b = rng.unit_vector(n);
        let sys = system(a.clone(), &b);
        let t =
            gmres::<ExtendedReal>(&sys, &Preconditioner::Identity, &GmresOptions { tol: 1e-25, ..Default::default() })
                .unwrap();
        // Direct minimization over the explicit Krylov basis [b, Ab, ..].
        let ae = a.to_ext();
        let be: Vec<ExtendedReal> = b.iter().map(|&v| v.into()).collect();
        for k in 1..8 {
            let mut kry = vec![be.clone()];
            for j in 1..k {
                let next = ae.matvec(&kry[j - 1]);
                kry.push(next);
            }
            let w: Vec<Vec<ExtendedReal>> = kry.iter().map(|v| ae.matvec(v)).collect();
            let wm = DenseMatrix::from_columns(&w);
            let normal = wm.transpose().matmul(&wm);
            let rhs = DenseMatrix::from_columns(&[wm.matvec_transpose(&be)]);
            let c = lu_solve(&normal, &rhs).unwrap().column(0);
            let fit = wm.matvec(&c);
            let res: Vec<ExtendedReal> = be.iter().zip(&fit).map(|(&x, &y)| x - y).collect();
            let direct = norm2(&res).hi();
            let rel = (t.recursive_resnorm[k] - direct).abs() / direct;
            assert!(rel < 1e-10, "k={k}: {} vs {direct}", t.recursive_resnorm[k]);
        }
    }

    #[test]
    fn exact_schur_preconditioner_three_steps() {
        let sp = synthetic_saddle_point(40, 16, &mut Rng::new(4)).unwrap();
        let b = Rng::new(5).unit_vector(56);
        let sys = system(sp.matrix.clone(), &b);
        let p = Preconditioner::block_diag_schur(&sp).unwrap();
        let t = gmres::<f64>(&sys, &p, &GmresOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(t.iterations <= 3, "{}", t.iterations);
    }

    #[test]
    fn residual_norms_nonincreasing() {
        let mut rng = Rng::new(21);
        let a = rng.normal_matrix(15, 15);
        let sys = system(a, &rng.unit_vector(15));
        let t = gmres::<f64>(
            &sys,
            &Preconditioner::Identity,
            &GmresOptions { track_orthogonality: true, track_backward_error: true, ..Default::default() },
        )
        .unwrap();
        assert!(t.recursive_resnorm.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
        assert_eq!(t.loss_of_orthogonality.len(), t.iterations + 1);
        assert!(t.backward_error.last().unwrap() < &1e-14);
    }
}
