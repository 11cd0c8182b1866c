use serde::{Deserialize, Serialize};

use crate::precision::ExtendedReal;

use super::ProblemError;

/// Side of the interval toward which the interior eigenvalues accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Left,
    Right,
}

impl std::str::FromStr for Orientation {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            other => Err(ProblemError::InvalidParameter(format!("orientation `{other}`"))),
        }
    }
}

/// Ascending positive eigenvalues of a diagonal test matrix, optionally with
/// the eigencomponents `η_i` of the initial residual.
///
/// Values are kept in extended precision: cluster spacings of `1e-13` on
/// eigenvalues near `1e3` are below native resolution of the differences.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<ExtendedReal>,
    weights: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn new(values: Vec<ExtendedReal>) -> Result<Self, ProblemError> {
        if values.is_empty() {
            return Err(ProblemError::InvalidParameter("empty spectrum".into()));
        }
        for (i, w) in values.windows(2).enumerate() {
            if !(w[0] <= w[1]) {
                return Err(ProblemError::NotAscending { index: i + 1 });
            }
        }
        Ok(Self { values, weights: None })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self, ProblemError> {
        Self::new(values.iter().map(|&v| ExtendedReal::from(v)).collect())
    }

    /// Attaches residual weights; they need not be normalized.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, ProblemError> {
        if weights.len() != self.values.len() {
            return Err(ProblemError::InvalidParameter(format!(
                "{} weights for {} eigenvalues",
                weights.len(),
                self.values.len()
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[ExtendedReal] {
        &self.values
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.hi()).collect()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn min(&self) -> ExtendedReal {
        self.values[0]
    }

    pub fn max(&self) -> ExtendedReal {
        self.values[self.values.len() - 1]
    }

    pub fn is_positive(&self) -> bool {
        self.values[0] > ExtendedReal::ZERO
    }

    /// `λ_N / λ_1`.
    pub fn condition_number(&self) -> f64 {
        (self.max() / self.min()).hi()
    }

    /// Distinct values, for the polynomial bounds.
    pub fn distinct(&self) -> Vec<ExtendedReal> {
        let mut out: Vec<ExtendedReal> = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// The diagonal family `λ_i = λ_1 + ((i−1)/(N−1))(λ_N−λ_1)ρ^{N−i}`.
///
/// `Right` mirrors the interior points about the interval so that they
/// accumulate near `λ_N`: `λ_i = λ_N − ((i−1)/(N−1))(λ_N−λ_1)ρ^{N−i}`. Both
/// endpoints are kept exactly in either orientation.
pub fn diag_family(
    n: usize,
    lambda1: f64,
    lambda_n: f64,
    rho: f64,
    orientation: Orientation,
) -> Result<Spectrum, ProblemError> {
    if n < 3 {
        return Err(ProblemError::InvalidParameter(format!("N = {n}, need N >= 3")));
    }
    if !(lambda1 > 0.0 && lambda1 < lambda_n && lambda_n.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!(
            "need 0 < lambda1 < lambdaN, got {lambda1} and {lambda_n}"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!("rho = {rho}")));
    }
    let l1 = ExtendedReal::from(lambda1);
    let ln = ExtendedReal::from(lambda_n);
    let width = ln - l1;
    let r = ExtendedReal::from(rho);
    let denom = ExtendedReal::from((n - 1) as f64);
    let offset = |i: usize| ExtendedReal::from((i - 1) as f64) / denom * width * r.powi((n - i) as i32);
    let interior: Vec<ExtendedReal> = (2..n)
        .map(|i| match orientation {
            Orientation::Left => l1 + offset(i),
            Orientation::Right => ln - offset(i),
        })
        .collect();
    let mut seq = Vec::with_capacity(n);
    seq.push(l1);
    match orientation {
        Orientation::Left => seq.extend(interior.iter().copied()),
        Orientation::Right => seq.extend(interior.iter().rev().copied()),
    }
    seq.push(ln);
    for (i, w) in seq.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(ProblemError::NonMonotonic { index: i + 1, value: w[1].hi() });
        }
    }
    Spectrum::new(seq)
}

/// Replaces every eigenvalue by `m` copies spaced `spacing` apart. Weights
/// are split evenly so each cluster keeps its total weight.
pub fn clusterize(spec: &Spectrum, m: usize, spacing: f64) -> Result<Spectrum, ProblemError> {
    if m == 0 || !(spacing >= 0.0) {
        return Err(ProblemError::InvalidParameter(format!("m = {m}, spacing = {spacing}")));
    }
    let sp = ExtendedReal::from(spacing);
    let width = sp.mul_f64(m as f64);
    for (i, w) in spec.values.windows(2).enumerate() {
        if m > 1 && !(w[1] - w[0] > width) {
            return Err(ProblemError::ClusterOverlap { index: i });
        }
    }
    let mut values = Vec::with_capacity(spec.len() * m);
    for &v in &spec.values {
        for t in 0..m {
            values.push(v + sp.mul_f64(t as f64));
        }
    }
    let mut out = Spectrum::new(values)?;
    if let Some(w) = &spec.weights {
        let s = 1.0 / (m as f64).sqrt();
        out.weights = Some(w.iter().flat_map(|&x| std::iter::repeat_n(x * s, m)).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: ExtendedReal, b: f64) -> bool {
        (a - ExtendedReal::from(b)).abs().hi() <= 1e-15 * b.abs()
    }

    #[test]
    fn equal_spacing_for_unit_rho() {
        let s = diag_family(3, 1.0, 3.0, 1.0, Orientation::Left).unwrap();
        assert_eq!(s.values_f64(), vec![1.0, 2.0, 3.0]);
        let r = diag_family(3, 1.0, 3.0, 1.0, Orientation::Right).unwrap();
        assert_eq!(r.values_f64(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn four_point_example() {
        let s = diag_family(4, 1.0, 10.0, 0.5, Orientation::Left).unwrap();
        assert!(close(s.values()[1], 1.75));
        assert!(close(s.values()[2], 4.0));
    }

    #[test]
    fn orientations_accumulate_on_opposite_sides() {
        let l = diag_family(30, 0.1, 1e3, 0.6, Orientation::Left).unwrap();
        let r = diag_family(30, 0.1, 1e3, 0.6, Orientation::Right).unwrap();
        let mid = 500.0;
        let below = |s: &Spectrum| s.values_f64().iter().filter(|&&v| v < mid).count();
        assert!(below(&l) > 25);
        assert!(below(&r) < 5);
        assert_eq!(l.min().hi(), 0.1);
        assert_eq!(r.max().hi(), 1e3);
    }

    #[test]
    fn large_rho_is_rejected() {
        let e = diag_family(10, 1.0, 2.0, 3.0, Orientation::Left).unwrap_err();
        assert!(matches!(e, ProblemError::NonMonotonic { .. }));
    }

    #[test]
    fn clusters() {
        let s = Spectrum::from_f64(&[1.0, 2.0]).unwrap();
        assert_eq!(clusterize(&s, 1, 0.5).unwrap(), s);
        let c = clusterize(&s, 2, 0.1).unwrap();
        assert_eq!(c.len(), 4);
        assert!(close(c.values()[1], 1.1) && close(c.values()[3], 2.1));
        assert!(matches!(clusterize(&s, 20, 0.1), Err(ProblemError::ClusterOverlap { index: 0 })));
    }

    #[test]
    fn tight_clusters_resolved() {
        let base = diag_family(10, 0.1, 1e3, 0.6, Orientation::Right).unwrap();
        let c = clusterize(&base, 10, 1e-12).unwrap();
        assert_eq!(c.len(), 100);
        let d = c.values()[99] - c.values()[98];
        assert!((d.hi() - 1e-12).abs() < 1e-24);
    }
}
