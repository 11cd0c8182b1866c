//! Plain-text numeric inputs: spectra, convergence curves, eigenvalue lists
//! and right-hand sides.
//!
//! One record per line, fields separated by whitespace or commas. Blank
//! lines and lines starting with `#` or `%` are ignored.

use std::path::Path;

use krylovlab::constructions::PrescribedCurve;
use krylovlab::io::{read_matrix_market, MatrixData};
use krylovlab::linalg::ComplexPoint;

use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input { path: path.into(), line: 0, message: e.to_string() })
}

/// Rows of numbers with their 1-based line numbers.
pub fn parse_rows(text: &str, path: &Path) -> Result<Vec<(usize, Vec<f64>)>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let vals = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Input { path: path.into(), line: i + 1, message: format!("{e}: `{t}`") })?;
        rows.push((i + 1, vals));
    }
    Ok(rows)
}

fn input_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Input { path: path.into(), line, message: message.into() }
}

/// Every number in the file, in reading order.
pub fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read(path)?;
    let v: Vec<f64> = parse_rows(&text, path)?.into_iter().flat_map(|(_, r)| r).collect();
    if v.is_empty() {
        return Err(input_err(path, 0, "no numbers found"));
    }
    Ok(v)
}

/// A prescribed curve: JSON (`residual_norms`, optional `error_norms_a`) when
/// the file ends in `.json`, else columns. CG takes two columns
/// (`‖r_k‖`, `‖e_k‖_A`); GMRES one column `f_0, f_1, …`, with the final
/// zero appended when absent.
pub fn read_curve(path: &Path, cg: bool) -> Result<PrescribedCurve, CliError> {
    let text = read(path)?;
    let curve = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<PrescribedCurve>(&text).map_err(|e| input_err(path, e.line(), e.to_string()))?
    } else if cg {
        let mut res = Vec::new();
        let mut err = Vec::new();
        for (line, r) in parse_rows(&text, path)? {
            let [a, b] = r[..] else {
                return Err(input_err(path, line, "expected two columns: residual, A-norm error"));
            };
            res.push(a);
            err.push(b);
        }
        PrescribedCurve { residual_norms: res, error_norms_a: Some(err) }
    } else {
        let mut f = Vec::new();
        for (line, r) in parse_rows(&text, path)? {
            let [a] = r[..] else { return Err(input_err(path, line, "expected one residual norm per line")) };
            f.push(a);
        }
        PrescribedCurve { residual_norms: f, error_norms_a: None }
    };
    let mut curve = curve;
    if !cg && curve.residual_norms.last().is_some_and(|&v| v != 0.0) {
        curve.residual_norms.push(0.0);
    }
    Ok(curve)
}

/// Eigenvalues as `re` or `re im` per line.
pub fn read_eigenvalues(path: &Path) -> Result<Vec<ComplexPoint>, CliError> {
    let text = read(path)?;
    parse_rows(&text, path)?
        .into_iter()
        .map(|(line, r)| match r[..] {
            [re] => Ok(ComplexPoint::real(re)),
            [re, im] => Ok(ComplexPoint::new(re, im)),
            _ => Err(input_err(path, line, "expected `re` or `re im`")),
        })
        .collect()
}

/// A right-hand side from a Matrix Market array file (`.mtx`) or a list of
/// numbers.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    if path.extension().is_some_and(|e| e == "mtx") {
        let (_, data) = read_matrix_market(path)?;
        let a = match data {
            MatrixData::Dense(a) => a,
            MatrixData::Sparse(s) => s.to_dense(),
        };
        if a.cols() != 1 {
            return Err(input_err(path, 0, format!("expected a single column, found {}", a.cols())));
        }
        return Ok(a.column(0));
    }
    read_values(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_skip_comments_and_accept_commas() {
        let p = Path::new("x");
        let rows = parse_rows("# c\n1, 2\n\n% m\n3 4e-1\n", p).unwrap();
        assert_eq!(rows, vec![(2, vec![1.0, 2.0]), (5, vec![3.0, 0.4])]);
    }

    #[test]
    fn bad_number_reports_line() {
        let e = parse_rows("1\nx\n", Path::new("f.txt")).unwrap_err();
        assert!(e.to_string().contains("f.txt:2"), "{e}");
    }
}
