//! Finite-difference matrices on the unit square, natural (row by row,
//! bottom to top) ordering of the `n × n` interior nodes.

use crate::linalg::SparseMatrixCsr;

use super::ProblemError;

#[inline]
fn idx(n: usize, col: usize, row: usize) -> usize {
    row * n + col
}

/// Five-point Laplacian: `4` on the diagonal, `−1` for each grid neighbour.
pub fn poisson2d(grid_n: usize) -> Result<SparseMatrixCsr, ProblemError> {
    diffusion2d(grid_n, &vec![1.0; grid_n * grid_n])
}

/// Five-point finite-volume discretization of `−∇·(k∇u)` with homogeneous
/// Dirichlet data. `field[row * n + col]` is the coefficient of the cell
/// around that node; interior edges use the harmonic mean of the two cells,
/// boundary edges the cell's own value.
pub fn diffusion2d(grid_n: usize, field: &[f64]) -> Result<SparseMatrixCsr, ProblemError> {
    let n = grid_n;
    if n < 2 {
        return Err(ProblemError::InvalidParameter(format!("grid size {n}, need >= 2")));
    }
    if field.len() != n * n {
        return Err(ProblemError::InvalidParameter(format!("{} coefficients for a {n}x{n} grid", field.len())));
    }
    if let Some(p) = field.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(ProblemError::InvalidParameter(format!("coefficient {p} is not positive")));
    }
    let edge = |a: f64, b: f64| 2.0 * a * b / (a + b);
    let mut t = Vec::with_capacity(5 * n * n);
    for row in 0..n {
        for col in 0..n {
            let p = idx(n, col, row);
            let kp = field[p];
            let mut diag = 0.0;
            let nbrs = [
                (col > 0).then(|| idx(n, col - 1, row)),
                (col + 1 < n).then(|| idx(n, col + 1, row)),
                (row > 0).then(|| idx(n, col, row - 1)),
                (row + 1 < n).then(|| idx(n, col, row + 1)),
            ];
            for q in nbrs {
                match q {
                    Some(q) => {
                        let c = edge(kp, field[q]);
                        diag += c;
                        t.push((p, q, -c));
                    }
                    None => diag += kp,
                }
            }
            t.push((p, p, diag));
        }
    }
    Ok(SparseMatrixCsr::from_triplets(n * n, n * n, &t)?)
}

/// Nine-point stencil of the SUPG discretization with bilinear elements on
/// a uniform grid of `−ν∆u + u_y` (wind pointing to the top edge). The
/// stabilized form is `ν(∇u, ∇v) + (u_y, v) + δh (u_y, v_y)`; the residual's
/// Laplacian drops out elementwise for bilinear trial functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupgStencil {
    /// `coef[dy + 1][dx + 1]` couples node `(col, row)` to `(col + dx, row + dy)`.
    pub coef: [[f64; 3]; 3],
}

impl SupgStencil {
    pub fn new(h: f64, delta: f64, nu: f64) -> Self {
        // 1D mass, stiffness and convection stencils indexed by offset + 1.
        let m = [h / 6.0, 2.0 * h / 3.0, h / 6.0];
        let d = [-1.0 / h, 2.0 / h, -1.0 / h];
        let c = [-0.5, 0.0, 0.5];
        let mut coef = [[0.0; 3]; 3];
        for (y, row) in coef.iter_mut().enumerate() {
            for (x, v) in row.iter_mut().enumerate() {
                *v = nu * (d[x] * m[y] + m[x] * d[y]) + m[x] * c[y] + delta * h * m[x] * d[y];
            }
        }
        Self { coef }
    }

    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        self.coef[(dy + 1) as usize][(dx + 1) as usize]
    }
}

/// Matrix of the SUPG convection-diffusion problem on `n × n` interior
/// nodes of the unit square (`n = grid_h_inv`, mesh width `1/(n+1)`).
pub fn supg_matrix(grid_h_inv: usize, delta: f64, nu: f64) -> Result<SparseMatrixCsr, ProblemError> {
    let n = grid_h_inv;
    if n < 8 {
        return Err(ProblemError::InvalidParameter(format!("1/h = {n}, need >= 8")));
    }
    if !(nu > 0.0) || !(delta >= 0.0) {
        return Err(ProblemError::InvalidParameter(format!("nu = {nu}, delta = {delta}")));
    }
    let s = SupgStencil::new(1.0 / (n + 1) as f64, delta, nu);
    let mut t = Vec::with_capacity(9 * n * n);
    for row in 0..n {
        for col in 0..n {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (c, r) = (col as isize + dx, row as isize + dy);
                    if (0..n as isize).contains(&c) && (0..n as isize).contains(&r) {
                        t.push((idx(n, col, row), idx(n, c as usize, r as usize), s.at(dx, dy)));
                    }
                }
            }
        }
    }
    Ok(SparseMatrixCsr::from_triplets(n * n, n * n, &t)?)
}

/// Right-hand side from Dirichlet data on the right edge; `g[row]` is the
/// boundary value at height `row + 1` (in mesh widths). The corners and the
/// other edges carry zero data.
pub fn supg_rhs(grid_h_inv: usize, delta: f64, nu: f64, g: &[f64]) -> Result<Vec<f64>, ProblemError> {
    let n = grid_h_inv;
    if g.len() != n {
        return Err(ProblemError::InvalidParameter(format!("{} boundary values, need {n}", g.len())));
    }
    let s = SupgStencil::new(1.0 / (n + 1) as f64, delta, nu);
    let mut b = vec![0.0; n * n];
    for (gr, &v) in g.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for dy in -1isize..=1 {
            let row = gr as isize - dy;
            if (0..n as isize).contains(&row) {
                b[idx(n, n - 1, row as usize)] -= s.at(1, dy) * v;
            }
        }
    }
    Ok(b)
}

/// Boundary data of family member `j` (1-based): `g = 1` on the `j`
/// right-edge nodes nearest the outflow (top) edge, zero elsewhere. The
/// data has to be carried `j − 1` grid lines downstream before GMRES can
/// annihilate it at the outflow boundary.
pub fn supg_boundary_profile(grid_h_inv: usize, j: usize) -> Result<Vec<f64>, ProblemError> {
    let n = grid_h_inv;
    if j == 0 || j > n {
        return Err(ProblemError::InvalidParameter(format!("boundary index {j}, need 1..={n}")));
    }
    let mut g = vec![0.0; n];
    for v in &mut g[n - j..] {
        *v = 1.0;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen;

    #[test]
    fn poisson_small() {
        let a = poisson2d(2).unwrap();
        assert_eq!(a.rows(), 4);
        for i in 0..4 {
            let s: f64 = a.row_entries(i).map(|(_, v)| v).sum();
            assert_eq!(s, 2.0);
            assert_eq!(a.get(i, i), 4.0);
        }
        assert!(a.is_symmetric());
    }

    #[test]
    fn poisson_spectrum() {
        let e = sym_eigen(&poisson2d(5).unwrap().to_dense()).unwrap();
        let mut exact = vec![];
        for i in 1..=5 {
            for j in 1..=5 {
                let t = std::f64::consts::PI / 6.0;
                exact.push(4.0 - 2.0 * (i as f64 * t).cos() - 2.0 * (j as f64 * t).cos());
            }
        }
        exact.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_scales() {
        let c = 3.5;
        let a = diffusion2d(4, &[c; 16]).unwrap();
        let p = poisson2d(4).unwrap().scale(c);
        assert!(a.to_dense().sub(&p.to_dense()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn contrast_raises_condition() {
        let n = 31;
        let mut field = vec![1.0; n * n];
        for row in 0..n {
            for col in n / 2..n {
                field[row * n + col] = 1e3;
            }
        }
        let k = |m: &SparseMatrixCsr| {
            let e = sym_eigen(&m.to_dense()).unwrap();
            e[e.len() - 1] / e[0]
        };
        let ratio = k(&diffusion2d(n, &field).unwrap()) / k(&poisson2d(n).unwrap());
        assert!(ratio >= 1e2, "{ratio}");
    }

    #[test]
    fn supg_diffusion_dominated_is_nearly_symmetric() {
        let a = supg_matrix(25, 0.3, 50.0).unwrap();
        let d = a.to_dense();
        let asym = d.sub(&d.transpose()).frobenius_norm() / d.frobenius_norm();
        assert!(asym <= 0.1, "{asym}");
    }

    #[test]
    fn supg_zero_data_zero_rhs() {
        let b = supg_rhs(25, 0.3, 0.01, &[0.0; 25]).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        let g = supg_boundary_profile(25, 1).unwrap();
        let b = supg_rhs(25, 0.3, 0.01, &g).unwrap();
        // The top right node sees its own boundary neighbour and the one below.
        assert_eq!(b.iter().filter(|&&v| v != 0.0).count(), 2);
        let s = SupgStencil::new(1.0 / 26.0, 0.3, 0.01);
        assert_eq!(b[24 * 25 + 24], -s.at(1, 0));
        assert_eq!(b[23 * 25 + 24], -s.at(1, 1));
    }

    #[test]
    fn supg_stencil_pure_diffusion_is_bilinear_laplacian() {
        // Bilinear stiffness: 8/3 at the centre, −1/3 at all eight neighbours.
        let (s, c) = (SupgStencil::new(0.1, 0.0, 3.0), SupgStencil::new(0.1, 0.0, 0.0));
        for dy in -1..=1 {
            for dx in -1..=1 {
                let want = if dx == 0 && dy == 0 { 8.0 } else { -1.0 };
                assert!((s.at(dx, dy) - c.at(dx, dy) - want).abs() < 1e-13, "{dx} {dy}");
            }
        }
    }

    #[test]
    fn supg_convection_is_skew() {
        let s = SupgStencil::new(0.1, 0.0, 0.0);
        for dy in -1..=1 {
            for dx in -1..=1 {
                assert!((s.at(dx, dy) + s.at(-dx, -dy)).abs() < 1e-15);
            }
        }
        assert!((s.at(0, 1) - 0.1 / 3.0).abs() < 1e-15);
    }
}
