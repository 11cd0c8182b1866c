//! Eigenvalue solvers.
//!
//! Symmetric matrices are reduced to tridiagonal form by Householder
//! reflections and then diagonalized by implicit QL with Wilkinson-type
//! shifts. General real matrices are balanced, reduced to Hessenberg form by
//! Householder reflections and then iterated with the Francis implicit
//! double-shift QR step. Only eigenvalues are computed.

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LinalgError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

impl std::ops::Mul for ComplexPoint {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl std::ops::Div for ComplexPoint {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self { re: (self.re * o.re + self.im * o.im) / d, im: (self.im * o.re - self.re * o.im) / d }
    }
}

fn sort_complex(v: &mut [ComplexPoint]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigen(a: &DenseMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    let (d, e) = householder_tridiagonal(a);
    let mut d = d;
    let mut e = e;
    e.push(0.0);
    tql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Reduces a symmetric matrix to tridiagonal `(diagonal, subdiagonal)`.
fn householder_tridiagonal(a: &DenseMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| m[(i, k)] * m[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = m[(k + 1, k)];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = m[(i, k)];
        }
        v[k + 1] -= alpha;
        let vn: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for i in k + 1..n {
            v[i] /= vn;
        }
        for i in k + 1..n {
            let row = m.row(i);
            p[i] = (k + 1..n).map(|j| row[j] * v[j]).sum();
        }
        let kk: f64 = (k + 1..n).map(|i| v[i] * p[i]).sum();
        for i in k + 1..n {
            p[i] -= kk * v[i];
        }
        for i in k + 1..n {
            let (vi, qi) = (v[i], p[i]);
            let row = m.row_mut(i);
            for j in k + 1..n {
                row[j] -= 2.0 * (vi * p[j] + qi * v[j]);
            }
        }
        m[(k + 1, k)] = alpha;
        m[(k, k + 1)] = alpha;
        for i in k + 2..n {
            m[(i, k)] = 0.0;
            m[(k, i)] = 0.0;
        }
    }
    let d = (0..n).map(|i| m[(i, i)]).collect();
    let e = (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)]).collect();
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix. `e[i]` couples `i` and
/// `i + 1`; `e` has length `n` with the final entry ignored.
fn tql(d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    let n = d.len();
    let max_iter = 30 * n.max(1);
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > max_iter {
                return Err(LinalgError::NoConvergence { method: "tridiagonal QL", iterations: total });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `alpha`
/// and off-diagonal `beta`, ascending. Every `beta` must be nonzero.
pub fn symtrid_eigenvalues(alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = alpha.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if beta.len() + 1 != n {
        return Err(LinalgError::DimensionMismatch(format!("{} diagonal and {} off-diagonal entries", n, beta.len())));
    }
    if let Some(i) = beta.iter().position(|&b| b == 0.0) {
        return Err(LinalgError::ReducedTridiagonal { index: i });
    }
    let mut d = alpha.to_vec();
    let mut e = beta.to_vec();
    e.push(0.0);
    tql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues of a general real matrix, sorted by `(re, im)`.
pub fn general_eigenvalues(a: &DenseMatrix<f64>) -> Result<Vec<ComplexPoint>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    // 1-based working copy keeps the QR sweep close to its textbook form.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut h, n);
    hessenberg(&mut h, n);
    let mut out = hqr(&mut h, n)?;
    sort_complex(&mut out);
    Ok(out)
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut last = false;
    while !last {
        last = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    last = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    let mut v = vec![0.0; n + 1];
    for k in 1..n.saturating_sub(1) {
        let norm: f64 = (k + 1..=n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        for i in k + 1..=n {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vn: f64 = (k + 1..=n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for i in k + 1..=n {
            v[i] /= vn;
        }
        // Left: A = (I - 2vvᵀ) A on rows k+1..n.
        for j in 1..=n {
            let s: f64 = (k + 1..=n).map(|i| v[i] * a[i][j]).sum();
            for i in k + 1..=n {
                a[i][j] -= 2.0 * v[i] * s;
            }
        }
        // Right: A = A (I - 2vvᵀ) on columns k+1..n.
        for row in a.iter_mut().take(n + 1).skip(1) {
            let s: f64 = (k + 1..=n).map(|j| row[j] * v[j]).sum();
            for j in k + 1..=n {
                row[j] -= 2.0 * s * v[j];
            }
        }
        a[k + 1][k] = alpha;
        for i in k + 2..=n {
            a[i][k] = 0.0;
        }
    }
}

/// Francis double-shift QR on a 1-based upper Hessenberg matrix.
#[allow(clippy::many_single_char_names)]
fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<ComplexPoint>, LinalgError> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let max_total = 40 * n;
    let mut total = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == 60 || total >= max_total {
                return Err(LinalgError::NoConvergence { method: "Hessenberg QR", iterations: total });
            }
            if its % 10 == 0 && its > 0 {
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;
            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = a[m][m];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k != nn - 1 {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| ComplexPoint::new(wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum() {
        let a = DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(sym_eigen(&a).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = sym_eigen(&a).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_5x5_grid() {
        let g = 5;
        let n = g * g;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..g {
            for j in 0..g {
                let p = i * g + j;
                a[(p, p)] = 4.0;
                if i > 0 {
                    a[(p, p - g)] = -1.0;
                }
                if i + 1 < g {
                    a[(p, p + g)] = -1.0;
                }
                if j > 0 {
                    a[(p, p - 1)] = -1.0;
                }
                if j + 1 < g {
                    a[(p, p + 1)] = -1.0;
                }
            }
        }
        let ev = sym_eigen(&a).unwrap();
        let h = std::f64::consts::PI / 6.0;
        let mut exact: Vec<f64> = (1..=5)
            .flat_map(|i| (1..=5).map(move |j| 4.0 - 2.0 * (i as f64 * h).cos() - 2.0 * (j as f64 * h).cos()))
            .collect();
        exact.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn tridiagonal_cases() {
        assert_eq!(symtrid_eigenvalues(&[2.5], &[]).unwrap(), vec![2.5]);
        let e = symtrid_eigenvalues(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
        let e = symtrid_eigenvalues(&[2.0, 2.0, 2.0], &[1.0, 1.0]).unwrap();
        let s = 2f64.sqrt();
        for (x, y) in e.iter().zip(&[2.0 - s, 2.0, 2.0 + s]) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(
            symtrid_eigenvalues(&[1.0, 2.0, 3.0], &[1.0, 0.0]).unwrap_err(),
            LinalgError::ReducedTridiagonal { index: 1 }
        );
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = DenseMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let e = general_eigenvalues(&a).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e[0].re.abs() < 1e-15 && (e[0].im + 1.0).abs() < 1e-15);
        assert_eq!(e[0], e[1].conj());
    }

    #[test]
    fn triangular_returns_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 5.0, 7.0], vec![0.0, -1.0, 2.0], vec![0.0, 0.0, 2.0]]);
        let e = general_eigenvalues(&a).unwrap();
        let re: Vec<f64> = e.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn companion_roots() {
        // (z-1)(z-2)(z-3) = z^3 - 6z^2 + 11z - 6
        let a = DenseMatrix::from_rows(&[vec![0.0, 0.0, 6.0], vec![1.0, 0.0, -11.0], vec![0.0, 1.0, 6.0]]);
        let e = general_eigenvalues(&a).unwrap();
        for (z, r) in e.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((z.re - r).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_general_agree() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5, 0.0],
            vec![1.0, 3.0, 0.2, 0.1],
            vec![0.5, 0.2, 2.0, 0.3],
            vec![0.0, 0.1, 0.3, 1.0],
        ]);
        let s = sym_eigen(&a).unwrap();
        let g = general_eigenvalues(&a).unwrap();
        for (x, z) in s.iter().zip(&g) {
            assert!((x - z.re).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }
}
