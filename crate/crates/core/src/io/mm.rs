use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::linalg::{DenseMatrix, SparseMatrixCsr};

use super::{create, IoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmField {
    Real,
    Integer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixMarketHeader {
    pub format: MmFormat,
    pub field: MmField,
    pub symmetry: MmSymmetry,
    pub rows: usize,
    pub cols: usize,
    /// Stored entries (coordinate) or stored values (array).
    pub entries: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixData {
    Dense(DenseMatrix<f64>),
    Sparse(SparseMatrixCsr),
}

impl MatrixData {
    pub fn rows(&self) -> usize {
        match self {
            Self::Dense(a) => a.rows(),
            Self::Sparse(a) => a.rows(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Sparse(a) => a.to_dense(),
        }
    }

    pub fn into_sparse(self) -> SparseMatrixCsr {
        match self {
            Self::Dense(a) => SparseMatrixCsr::from_dense(&a),
            Self::Sparse(a) => a,
        }
    }
}

pub fn read_matrix_market(path: &Path) -> Result<(MatrixMarketHeader, MatrixData), IoError> {
    let f = std::fs::File::open(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    parse_matrix_market(BufReader::new(f))
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

fn parse_banner(line: &str) -> Result<(MmFormat, MmField, MmSymmetry), IoError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%MatrixMarket" {
        return Err(parse_err(1, "banner must be '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(1, format!("unknown object '{}'", tokens[1])));
    }
    let format = match tokens[2] {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        t => return Err(parse_err(1, format!("unknown format '{t}'"))),
    };
    let field = match tokens[3] {
        "real" | "double" => MmField::Real,
        "integer" => MmField::Integer,
        "complex" | "pattern" => return Err(IoError::Unsupported(tokens[3].into())),
        t => return Err(parse_err(1, format!("unknown field '{t}'"))),
    };
    let symmetry = match tokens[4] {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        "hermitian" => return Err(IoError::Unsupported(tokens[4].into())),
        t => return Err(parse_err(1, format!("unknown symmetry '{t}'"))),
    };
    Ok((format, field, symmetry))
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, IoError> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

/// Parses a real or integer Matrix Market stream. Coordinate data becomes a
/// CSR matrix with duplicates summed and symmetric storage expanded; array
/// data (column-major) becomes a dense matrix.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<(MatrixMarketHeader, MatrixData), IoError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (format, field, symmetry) = parse_banner(&banner?)?;
    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.starts_with('%') => None,
        other => Some((n, other)),
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let size = size?;
    let mut tok = size.split_whitespace();
    let rows: usize = number(tok.next(), size_line, "row count")?;
    let cols: usize = number(tok.next(), size_line, "column count")?;
    let entries = match format {
        MmFormat::Coordinate => number(tok.next(), size_line, "entry count")?,
        MmFormat::Array => match symmetry {
            MmSymmetry::General => rows * cols,
            MmSymmetry::Symmetric => rows * (rows + 1) / 2,
            MmSymmetry::SkewSymmetric => rows * rows.saturating_sub(1) / 2,
        },
    };
    if tok.next().is_some() {
        return Err(parse_err(size_line, "trailing tokens on size line"));
    }
    if symmetry != MmSymmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }
    let header = MatrixMarketHeader { format, field, symmetry, rows, cols, entries };
    let mut last_line = size_line;
    let mut read_values = |count: usize, per_line: usize| -> Result<Vec<(usize, Vec<String>)>, IoError> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = data.next().ok_or_else(|| parse_err(last_line + 1, "unexpected end of data"))?;
            let l = l?;
            let toks: Vec<String> = l.split_whitespace().map(String::from).collect();
            if toks.len() != per_line {
                return Err(parse_err(n, format!("expected {per_line} tokens, found {}", toks.len())));
            }
            last_line = n;
            out.push((n, toks));
        }
        if let Some((n, _)) = data.next() {
            return Err(parse_err(n, "more entries than declared"));
        }
        Ok(out)
    };
    let matrix = match format {
        MmFormat::Coordinate => {
            let raw = read_values(entries, 3)?;
            let mut trips = Vec::with_capacity(2 * entries);
            for (n, t) in raw {
                let i: usize = number(Some(&t[0]), n, "row index")?;
                let j: usize = number(Some(&t[1]), n, "column index")?;
                let v: f64 = number(Some(&t[2]), n, "value")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(n, format!("index ({i}, {j}) out of range")));
                }
                let (i, j) = (i - 1, j - 1);
                if symmetry != MmSymmetry::General && j > i {
                    return Err(parse_err(n, "symmetric storage must hold the lower triangle"));
                }
                trips.push((i, j, v));
                if i != j {
                    match symmetry {
                        MmSymmetry::General => {}
                        MmSymmetry::Symmetric => trips.push((j, i, v)),
                        MmSymmetry::SkewSymmetric => trips.push((j, i, -v)),
                    }
                } else if symmetry == MmSymmetry::SkewSymmetric {
                    return Err(parse_err(n, "skew-symmetric storage has no diagonal"));
                }
            }
            MatrixData::Sparse(
                SparseMatrixCsr::from_triplets(rows, cols, &trips).map_err(|e| parse_err(0, e.to_string()))?,
            )
        }
        MmFormat::Array => {
            let raw = read_values(entries, 1)?;
            let mut a = DenseMatrix::zeros(rows, cols);
            let mut it = raw.into_iter();
            for j in 0..cols {
                let start = match symmetry {
                    MmSymmetry::General => 0,
                    MmSymmetry::Symmetric => j,
                    MmSymmetry::SkewSymmetric => j + 1,
                };
                for i in start..rows {
                    let (n, t) = it.next().expect("count checked");
                    let v: f64 = number(Some(&t[0]), n, "value")?;
                    a[(i, j)] = v;
                    match symmetry {
                        MmSymmetry::General => {}
                        MmSymmetry::Symmetric => a[(j, i)] = v,
                        MmSymmetry::SkewSymmetric => a[(j, i)] = -v,
                    }
                }
            }
            MatrixData::Dense(a)
        }
    };
    Ok((header, matrix))
}

/// Dense matrix in general array format, column-major, shortest
/// round-trip decimals.
pub fn write_matrix_market_array(a: &DenseMatrix<f64>, path: &Path, comment: &str) -> Result<(), IoError> {
    let mut w = create(path)?;
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    for line in comment.lines() {
        writeln!(w, "% {line}")?;
    }
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:e}", a[(i, j)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_coordinate(a: &SparseMatrixCsr, path: &Path, comment: &str) -> Result<(), IoError> {
    let mut w = create(path)?;
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    for line in comment.lines() {
        writeln!(w, "% {line}")?;
    }
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for i in 0..a.rows() {
        for (j, v) in a.row_entries(i) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<(MatrixMarketHeader, MatrixData), IoError> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn identity_coordinate() {
        let (h, m) = parse("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1.0\n2 2 1\n").unwrap();
        assert_eq!(h.entries, 2);
        assert_eq!(m.to_dense(), DenseMatrix::identity(2));
    }

    #[test]
    fn symmetric_expansion_and_duplicates() {
        let (_, m) =
            parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 4\n1 1 4\n2 1 2\n2 2 2\n2 2 3\n").unwrap();
        assert_eq!(m.to_dense(), DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]));
        let (_, m) = parse("%%MatrixMarket matrix array real symmetric\n2 2\n4\n2\n5\n").unwrap();
        assert_eq!(m.to_dense(), DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]));
        let (_, m) = parse("%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(m.to_dense(), DenseMatrix::from_rows(&[vec![0.0, -3.0], vec![3.0, 0.0]]));
    }

    #[test]
    fn array_is_column_major() {
        let (_, m) = parse("%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n").unwrap();
        assert_eq!(m.to_dense(), DenseMatrix::from_rows(&[vec![1.0, 3.0, 5.0], vec![2.0, 4.0, 6.0]]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 4, .. }), "{e}");
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 3, .. }), "{e}");
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(IoError::Unsupported(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n"),
            Err(IoError::Unsupported(_))
        ));
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n").is_err());
    }
}
