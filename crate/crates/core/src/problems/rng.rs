use rand::{Rng as _, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::linalg::DenseMatrix;

/// Seeded generator of uniform and standard normal deviates.
///
/// Uniforms come from SplitMix64 (53-bit mantissa fill, `[0, 1)`). Normals
/// use the Box–Muller transform on consecutive uniforms `u1, u2`, with
/// `1 − u1` inside the logarithm so it never sees zero; the second deviate of
/// each pair is cached and returned by the next call.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: SplitMix64,
    seed: u64,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { inner: SplitMix64::seed_from_u64(seed), seed, spare: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, e.g. one per repetition.
    pub fn fork(&mut self) -> Self {
        Self::new(self.inner.random::<u64>())
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = std::f64::consts::TAU * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Normal deviates filled row by row.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_row_major(rows, cols, self.normal_vec(rows * cols)).expect("length matches by construction")
    }

    /// Random direction: a normal vector scaled to unit length.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        let mut v = self.normal_vec(n);
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..10 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
        assert_ne!(Rng::new(8).uniform(), Rng::new(7).uniform());
    }

    #[test]
    fn normal_moments() {
        let mut r = Rng::new(1);
        let v = r.normal_vec(200_000);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn unit_vector_norm() {
        let v = Rng::new(3).unit_vector(50);
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }
}
