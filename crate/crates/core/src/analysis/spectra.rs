use crate::krylov::IterationTrace;
use crate::linalg::{general_eigenvalues, symtrid_eigenvalues, ComplexPoint, LuFactor};
use crate::problems::Spectrum;

use super::AnalysisError;

/// Eigenvalues of the Lanczos matrix `T_k` recorded in a CG trace.
pub fn ritz_values(trace: &IterationTrace, k: usize) -> Result<Spectrum, AnalysisError> {
    if k == 0 || trace.lanczos_alpha.len() < k || trace.lanczos_beta.len() + 1 < k {
        return Err(AnalysisError::MissingData("T_k"));
    }
    let theta = symtrid_eigenvalues(&trace.lanczos_alpha[..k], &trace.lanczos_beta[..k - 1])?;
    Ok(Spectrum::from_f64(&theta)?)
}

/// Eigenvalues of `H_k + h²_{k+1,k} f e_kᵀ` with `H_kᵀ f = e_k`, i.e. the
/// roots of the GMRES residual polynomial.
pub fn harmonic_ritz(trace: &IterationTrace, k: usize) -> Result<Vec<ComplexPoint>, AnalysisError> {
    let h = trace.hessenberg.as_ref().ok_or(AnalysisError::MissingData("H_{k+1,k}"))?;
    if k == 0 || h.cols() < k || h.rows() < k {
        return Err(AnalysisError::MissingData("H_{k+1,k}"));
    }
    let mut hk = h.submatrix(0, 0, k, k);
    let sub = if h.rows() > k { h[(k, k - 1)] } else { 0.0 };
    if sub != 0.0 {
        let lu = LuFactor::new(&hk).map_err(|_| AnalysisError::SingularHessenberg)?;
        let mut ek = vec![0.0; k];
        ek[k - 1] = 1.0;
        let f = lu.solve_transpose_vec(&ek);
        for (i, fi) in f.iter().enumerate() {
            hk[(i, k - 1)] += sub * sub * fi;
        }
    }
    Ok(general_eigenvalues(&hk)?)
}

/// Cumulative spectral distribution: a right-continuous step function with
/// jumps of equal height at the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CsdFunction {
    pub nodes: Vec<f64>,
    pub step: f64,
}

pub fn csd(points: &[f64]) -> CsdFunction {
    let mut nodes = points.to_vec();
    nodes.sort_by(f64::total_cmp);
    let step = if nodes.is_empty() { 0.0 } else { 1.0 / nodes.len() as f64 };
    CsdFunction { nodes, step }
}

impl CsdFunction {
    pub fn eval(&self, x: f64) -> f64 {
        (self.nodes.partition_point(|&t| t <= x) as f64 * self.step).min(1.0)
    }

    fn eval_left(&self, x: f64) -> f64 {
        (self.nodes.partition_point(|&t| t < x) as f64 * self.step).min(1.0)
    }

    /// `sup_x |F(x) − G(x)|`, attained at a node or as a left limit there.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.nodes
            .iter()
            .chain(&other.nodes)
            .map(|&t| {
                let right = (self.eval(t) - other.eval(t)).abs();
                let left = (self.eval_left(t) - other.eval_left(t)).abs();
                right.max(left)
            })
            .fold(0.0, f64::max)
    }

    /// Corner points `(x, F(x))` of the staircase for plotting.
    pub fn staircase(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.nodes.len());
        for &t in &self.nodes {
            out.push((t, self.eval_left(t)));
            out.push((t, self.eval(t)));
        }
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{cg, gmres, CgOptions, GmresOptions, Preconditioner};
    use crate::linalg::{DenseMatrix, SparseMatrixCsr};
    use crate::precision::ExtendedReal;
    use crate::problems::{LinearSystem, Operator, Rng};

    #[test]
    fn csd_basics() {
        let f = csd(&[2.0]);
        assert_eq!(f.eval(1.9), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        let g = csd(&[3.0; 4]);
        assert_eq!(g.eval(2.9), 0.0);
        assert_eq!(g.eval(3.0), 1.0);
        assert_eq!(f.sup_distance(&g), 1.0);
        assert_eq!(csd(&[1.0, 2.0]).staircase(), vec![(1.0, 0.0), (1.0, 0.5), (2.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn ritz_extremes() {
        let spec = Spectrum::from_f64(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "d").unwrap();
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { tol: 1e-25, ..Default::default() })
            .unwrap();
        let r1 = ritz_values(&t, 1).unwrap().values_f64();
        assert!((r1[0] - 3.0).abs() < 1e-14);
        let r5 = ritz_values(&t, 5).unwrap().values_f64();
        for (a, b) in r5.iter().zip(1..=5) {
            assert!((a - b as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_roots_reproduce_residuals() {
        let mut rng = Rng::new(4);
        let n = 15;
        let mut a = rng.normal_matrix(n, n).scale(0.3);
        for i in 0..n {
            a[(i, i)] += 2.0;
        }
        let b = rng.unit_vector(n);
        let sys = LinearSystem::from_f64(Operator::Sparse(SparseMatrixCsr::from_dense(&a)), &b, "g").unwrap();
        let t = gmres::<ExtendedReal>(
            &sys,
            &Preconditioner::Identity,
            &GmresOptions { tol: 1e-28, retain_hessenberg: true, ..Default::default() },
        )
        .unwrap();
        let ae = a.to_ext();
        for k in 1..=5 {
            let theta = harmonic_ritz(&t, k).unwrap();
            let r = apply_residual_polynomial(&ae, &theta, &sys.rhs);
            let norm = crate::linalg::norm2(&r).hi();
            assert!((norm - t.true_resnorm[k]).abs() < 1e-6 * t.true_resnorm[k], "{k}: {norm}");
        }
    }

    /// `Π (I − A/θ) r` in extended precision, pairing complex conjugates
    /// into real quadratic factors.
    fn apply_residual_polynomial(
        a: &DenseMatrix<ExtendedReal>,
        theta: &[ComplexPoint],
        r: &[ExtendedReal],
    ) -> Vec<ExtendedReal> {
        let mut v = r.to_vec();
        let mut i = 0;
        while i < theta.len() {
            let z = theta[i];
            if z.im == 0.0 {
                let av = a.matvec(&v);
                let s = ExtendedReal::ONE / ExtendedReal::from(z.re);
                v = v.iter().zip(&av).map(|(&x, &y)| x - y * s).collect();
                i += 1;
            } else {
                // (1 − z/θ)(1 − z/θ̄) = 1 − 2Re(θ)/|θ|² z + z²/|θ|².
                let m2 = ExtendedReal::from(z.re) * ExtendedReal::from(z.re)
                    + ExtendedReal::from(z.im) * ExtendedReal::from(z.im);
                let c1 = ExtendedReal::from(z.re).mul_f64(2.0) / m2;
                let c2 = ExtendedReal::ONE / m2;
                let av = a.matvec(&v);
                let aav = a.matvec(&av);
                v = (0..v.len()).map(|j| v[j] - c1 * av[j] + c2 * aav[j]).collect();
                i += 2;
            }
        }
        v
    }
}
