//! Matrix Market exchange files, CSV series output and minimal SVG plots.

mod csv;
mod mm;
mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiments::ExperimentResult;

pub use csv::{format_number, write_csv, write_csv_group};
pub use mm::{
    parse_matrix_market, read_matrix_market, write_matrix_market_array, write_matrix_market_coordinate, MatrixData,
    MatrixMarketHeader, MmField, MmFormat, MmSymmetry,
};
pub use svg::{render_group, write_svg};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported Matrix Market field or symmetry: {0}")]
    Unsupported(String),
    #[error("invalid result: {0}")]
    InvalidResult(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, IoError> {
    let f = std::fs::File::create(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    Ok(std::io::BufWriter::new(f))
}

/// File stem for a series group.
pub(crate) fn group_stem(group: &str) -> String {
    group.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `<dir>/<group>.csv` per group, optional SVGs and `metadata.json`.
pub fn write_result(result: &ExperimentResult, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.to_path_buf(), source })?;
    let mut out = write_csv(result, dir)?;
    if svg {
        out.extend(write_svg(result, dir)?);
    }
    let meta = dir.join("metadata.json");
    let mut w = create(&meta)?;
    serde_json::to_writer_pretty(&mut w, &result.metadata)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    out.push(meta);
    Ok(out)
}
