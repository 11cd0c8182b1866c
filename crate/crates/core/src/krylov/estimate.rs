use super::{IterationTrace, KrylovError};

/// Hestenes–Stiefel lower bounds for `‖x − x_k‖_A`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsEstimate {
    pub values: Vec<f64>,
    /// First `k` whose window ran past the end of the trace.
    pub truncated_from: Option<usize>,
}

/// `est_k = (Σ_{j=k}^{k+d−1} α_j‖r_j‖²)^{1/2}`, from the identity
/// `‖e_k‖²_A − ‖e_{k+d}‖²_A = Σ_{j=k}^{k+d−1} α_j‖r_j‖²`.
///
/// Windows that run past the last recorded step are summed to the end and
/// flagged.
pub fn hs_error_estimate(trace: &IterationTrace, delay: usize) -> Result<HsEstimate, KrylovError> {
    if delay == 0 {
        return Err(KrylovError::InvalidOption("delay must be at least 1".into()));
    }
    let terms: Vec<f64> = trace.alpha.iter().zip(&trace.recursive_resnorm).map(|(&a, &r)| a * r * r).collect();
    let m = terms.len();
    let mut values = Vec::with_capacity(m);
    let mut truncated_from = None;
    for k in 0..m {
        let end = k + delay;
        if end > m && truncated_from.is_none() {
            truncated_from = Some(k);
        }
        values.push(terms[k..end.min(m)].iter().sum::<f64>().sqrt());
    }
    Ok(HsEstimate { values, truncated_from })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{cg, CgOptions, Preconditioner};
    use crate::linalg::DenseMatrix;
    use crate::precision::ExtendedReal;
    use crate::problems::{diag_family, LinearSystem, Operator, Orientation};

    #[test]
    fn full_window_is_exact() {
        let spec = diag_family(12, 0.5, 40.0, 0.8, Orientation::Left).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "s").unwrap();
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { tol: 1e-28, ..Default::default() })
            .unwrap();
        let est = hs_error_estimate(&t, 100).unwrap();
        let floor = *t.a_norm_error.last().unwrap();
        for k in (0..t.iterations).filter(|&k| t.a_norm_error[k] > 1e8 * floor) {
            let rel = (est.values[k] - t.a_norm_error[k]).abs() / t.a_norm_error[k];
            assert!(rel < 1e-10, "{k}: {rel}");
        }
        assert_eq!(est.truncated_from, Some(0));
    }

    #[test]
    fn delay_gives_lower_bound() {
        let spec = diag_family(30, 0.1, 1e3, 0.6, Orientation::Left).unwrap();
        let sys = LinearSystem::from_spectrum(&spec, "s").unwrap();
        let t = cg::<ExtendedReal>(&sys, &Preconditioner::Identity, &CgOptions { tol: 1e-20, ..Default::default() })
            .unwrap();
        let est = hs_error_estimate(&t, 4).unwrap();
        for (k, v) in est.values.iter().enumerate() {
            assert!(*v <= t.a_norm_error[k] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn identity_single_term() {
        let sys = LinearSystem::from_f64(Operator::Dense(DenseMatrix::identity(3)), &[1.0, 2.0, 2.0], "I")
            .unwrap()
            .with_reference()
            .unwrap();
        let t = cg::<f64>(&sys, &Preconditioner::Identity, &CgOptions::default()).unwrap();
        let est = hs_error_estimate(&t, 1).unwrap();
        assert!((est.values[0] - t.a_norm_error[0]).abs() < 1e-15);
        assert!((est.values[0] - 3.0).abs() < 1e-15);
    }
}
