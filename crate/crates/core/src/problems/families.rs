use crate::linalg::{general_eigenvalues, numerical_rank, singular_values, ComplexPoint, DenseMatrix, LuFactor};

use super::{ProblemError, Rng};

/// `RᵀR` for an `m × n` matrix `R` of standard normal deviates.
pub fn wishart(m: usize, n: usize, rng: &mut Rng) -> Result<DenseMatrix<f64>, ProblemError> {
    if n == 0 || m < n {
        return Err(ProblemError::InvalidParameter(format!("Wishart needs m >= n >= 1, got {m}, {n}")));
    }
    let r = rng.normal_matrix(m, n);
    let mut a = r.transpose().matmul(&r);
    // Symmetrize exactly; the product is symmetric up to summation order only.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// Grcar matrix: `−1` on the subdiagonal, `1` on the diagonal and the first
/// three superdiagonals.
pub fn grcar(n: usize) -> Result<DenseMatrix<f64>, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidParameter(format!("Grcar order {n}")));
    }
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            a[(i, i - 1)] = -1.0;
        }
        for j in i..(i + 4).min(n) {
            a[(i, j)] = 1.0;
        }
    }
    Ok(a)
}

/// Frank matrix flipped about the anti-diagonal: upper Hessenberg with
/// `F[i][j] = N + 1 − max(i, j)` (1-based) for `j ≥ i − 1`.
pub fn flipped_frank(n: usize) -> Result<DenseMatrix<f64>, ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidParameter(format!("Frank order {n}")));
    }
    let mut a = DenseMatrix::zeros(n, n);
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            a[(i - 1, j - 1)] = (n + 1 - i.max(j)) as f64;
        }
    }
    Ok(a)
}

/// Real normal matrix with the given spectrum: `1 × 1` blocks for real
/// eigenvalues and `[[a, b], [−b, a]]` for each pair `a ± bi`. The list must
/// be closed under conjugation.
pub fn block_normal_matrix(eigs: &[ComplexPoint]) -> Result<DenseMatrix<f64>, ProblemError> {
    let n = eigs.len();
    let reals: Vec<f64> = eigs.iter().filter(|z| z.im == 0.0).map(|z| z.re).collect();
    let upper: Vec<ComplexPoint> = eigs.iter().copied().filter(|z| z.im > 0.0).collect();
    let lower = eigs.iter().filter(|z| z.im < 0.0).count();
    if lower != upper.len() || upper.iter().any(|z| !eigs.contains(&z.conj())) {
        return Err(ProblemError::InvalidParameter("eigenvalues are not closed under conjugation".into()));
    }
    let mut m = DenseMatrix::zeros(n, n);
    let mut k = 0;
    for &r in &reals {
        m[(k, k)] = r;
        k += 1;
    }
    for z in upper {
        m[(k, k)] = z.re;
        m[(k, k + 1)] = z.im;
        m[(k + 1, k)] = -z.im;
        m[(k + 1, k + 1)] = z.re;
        k += 2;
    }
    Ok(m)
}

/// `shift·I + scale·D` where `D` is a real normal matrix carrying the
/// eigenvalues of `G/√N`, `G` an `N × N` standard normal sample. Returns the
/// matrix and its eigenvalues.
pub fn normal_from_circular_law(
    n: usize,
    shift: f64,
    scale: f64,
    rng: &mut Rng,
) -> Result<(DenseMatrix<f64>, Vec<ComplexPoint>), ProblemError> {
    if n < 2 {
        return Err(ProblemError::InvalidParameter(format!("order {n}, need >= 2")));
    }
    let g = rng.normal_matrix(n, n).scale(1.0 / (n as f64).sqrt());
    let eigs = general_eigenvalues(&g)?;
    let shifted: Vec<ComplexPoint> =
        eigs.iter().map(|z| ComplexPoint::new(shift + scale * z.re, scale * z.im)).collect();
    Ok((block_normal_matrix(&shifted)?, shifted))
}

/// Saddle-point matrix `[[A, Bᵀ], [B, 0]]` with the blocks of the ideal
/// block-diagonal preconditioner `diag(A, S)`, `S = BA⁻¹Bᵀ`.
#[derive(Clone, Debug)]
pub struct SaddlePoint {
    pub a: DenseMatrix<f64>,
    pub b: DenseMatrix<f64>,
    pub schur: DenseMatrix<f64>,
    pub matrix: DenseMatrix<f64>,
}

impl SaddlePoint {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.rows()
    }
}

pub fn saddle_point(a: DenseMatrix<f64>, b: DenseMatrix<f64>) -> Result<SaddlePoint, ProblemError> {
    let (n, m) = (a.rows(), b.rows());
    if !a.is_square() || b.cols() != n || m >= n || m == 0 {
        return Err(ProblemError::InvalidParameter(format!(
            "saddle point with A {}x{} and B {}x{}",
            a.rows(),
            a.cols(),
            m,
            b.cols()
        )));
    }
    let smax = singular_values(&b)?.first().copied().unwrap_or(0.0);
    let tau = (n as f64) * f64::EPSILON * smax;
    let rank = numerical_rank(&b, tau)?;
    if rank < m {
        return Err(ProblemError::RankDeficient { rank, rows: m });
    }
    let x = LuFactor::new(&a)?.solve(&b.transpose());
    let schur = b.matmul(&x);
    let mut matrix = DenseMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            matrix[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..m {
        for j in 0..n {
            matrix[(n + i, j)] = b[(i, j)];
            matrix[(j, n + i)] = b[(i, j)];
        }
    }
    Ok(SaddlePoint { a, b, schur, matrix })
}

/// Desk-scale saddle point: `A = I + 0.1·G₁` (nonsymmetric, well
/// conditioned) and `B = G₂`, with `G₁`, `G₂` standard normal samples.
pub fn synthetic_saddle_point(n: usize, m: usize, rng: &mut Rng) -> Result<SaddlePoint, ProblemError> {
    let a = DenseMatrix::identity(n).add(&rng.normal_matrix(n, n).scale(0.1));
    let b = rng.normal_matrix(m, n);
    saddle_point(a, b)
}

/// Haar-like random orthogonal matrix: modified Gram–Schmidt, applied twice,
/// on the columns of a standard normal sample.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> Result<DenseMatrix<f64>, ProblemError> {
    if n == 0 {
        return Err(ProblemError::InvalidParameter("order 0".into()));
    }
    let g = rng.normal_matrix(n, n);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for _ in 0..2 {
            for u in &q {
                let c: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(s > 0.0) {
            return Err(ProblemError::InvalidParameter("degenerate normal sample".into()));
        }
        v.iter_mut().for_each(|x| *x /= s);
        q.push(v);
    }
    Ok(DenseMatrix::from_columns(&q))
}

/// `U Σ Wᵀ` with random orthogonal `U`, `W` and singular values spaced
/// geometrically from `norm` down to `norm/kappa`.
pub fn synthetic_svd(n: usize, norm: f64, kappa: f64, rng: &mut Rng) -> Result<DenseMatrix<f64>, ProblemError> {
    if n < 2 || !(norm > 0.0) || !(kappa >= 1.0) {
        return Err(ProblemError::InvalidParameter(format!("n = {n}, norm = {norm}, kappa = {kappa}")));
    }
    let u = random_orthogonal(n, rng)?;
    let w = random_orthogonal(n, rng)?;
    let sigma: Vec<f64> = (0..n).map(|i| norm * kappa.powf(-(i as f64) / (n - 1) as f64)).collect();
    Ok(u.matmul(&DenseMatrix::from_diagonal(&sigma)).matmul(&w.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, condition_number};

    #[test]
    fn wishart_is_spd() {
        let mut rng = Rng::new(5);
        let a = wishart(20, 6, &mut rng).unwrap();
        assert!(a.is_symmetric(0.0));
        assert!(cholesky(&a).is_ok());
        let one = wishart(9, 1, &mut rng).unwrap();
        assert!(one[(0, 0)] > 0.0);
    }

    #[test]
    fn synthetic_svd_condition() {
        let mut rng = Rng::new(3);
        let q = random_orthogonal(12, &mut rng).unwrap();
        assert!(q.transpose().matmul(&q).sub(&DenseMatrix::identity(12)).frobenius_norm() < 1e-14);
        let a = synthetic_svd(30, 5.0, 1e6, &mut rng).unwrap();
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-12);
        assert!((s[0] / s[29] / 1e6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grcar_rows() {
        let g = grcar(5).unwrap();
        assert_eq!(g.row(0), &[1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(g.row(4), &[0.0, 0.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn grcar_condition() {
        let k = condition_number(&grcar(500).unwrap()).unwrap();
        assert!((k - 3.63).abs() < 0.1, "{k}");
    }

    #[test]
    fn frank_three() {
        let f = flipped_frank(3).unwrap();
        let want = DenseMatrix::from_rows(&[vec![3.0, 2.0, 1.0], vec![2.0, 2.0, 1.0], vec![0.0, 1.0, 1.0]]);
        assert_eq!(f, want);
    }

    #[test]
    fn normal_blocks() {
        let m = block_normal_matrix(&[ComplexPoint::new(1.0, -2.0), ComplexPoint::new(1.0, 2.0)]).unwrap();
        let e = general_eigenvalues(&m).unwrap();
        assert!(e[0].distance(ComplexPoint::new(1.0, -2.0)) < 1e-14);
        assert!(e[1].distance(ComplexPoint::new(1.0, 2.0)) < 1e-14);
        let d = block_normal_matrix(&[ComplexPoint::real(0.5), ComplexPoint::real(-0.3)]).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[0.5, -0.3]));
        assert!(block_normal_matrix(&[ComplexPoint::new(0.0, 1.0)]).is_err());
    }

    #[test]
    fn circular_law_disk_and_normality() {
        let mut rng = Rng::new(11);
        let (m, eigs) = normal_from_circular_law(60, 2.0, 0.5, &mut rng).unwrap();
        // Up to finite-N fluctuation the spectrum fills the unit disk.
        assert!(eigs.iter().all(|z| z.distance(ComplexPoint::real(2.0)) < 0.5 * 1.25));
        let mtm = m.transpose().matmul(&m);
        let mmt = m.matmul(&m.transpose());
        let f = m.frobenius_norm();
        assert!(mtm.sub(&mmt).frobenius_norm() <= 1e-12 * f * f);
    }

    #[test]
    fn tiny_saddle_point() {
        let sp = saddle_point(DenseMatrix::identity(2), DenseMatrix::from_rows(&[vec![1.0, 0.0]])).unwrap();
        assert_eq!(sp.schur, DenseMatrix::from_rows(&[vec![1.0]]));
        assert_eq!(sp.matrix.rows(), 3);
        let bad =
            saddle_point(DenseMatrix::identity(3), DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]));
        assert!(matches!(bad, Err(ProblemError::RankDeficient { rank: 1, rows: 2 })));
    }
}
