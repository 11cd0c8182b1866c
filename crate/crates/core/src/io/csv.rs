use std::io::Write;
use std::path::{Path, PathBuf};

use crate::experiments::{ExperimentResult, Series};

use super::{create, group_stem, IoError};

/// Shortest decimal that round-trips, positional for moderate magnitudes and
/// scientific otherwise.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn quote(name: &str) -> String {
    if name.contains([',', '"', '\n']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

/// `series,x,y` with one row per point.
pub fn write_csv_group(series: &[&Series], mut w: impl Write) -> Result<(), IoError> {
    w.write_all(b"series,x,y\n")?;
    for s in series {
        let name = quote(&s.name);
        for (x, y) in s.x.iter().zip(&s.y) {
            writeln!(w, "{name},{},{}", format_number(*x), format_number(*y))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    result.validate().map_err(IoError::InvalidResult)?;
    let mut out = Vec::new();
    for (group, series) in result.groups() {
        let path = dir.join(format!("{}.csv", group_stem(group)));
        write_csv_group(&series, create(&path)?)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SeriesKind;

    #[test]
    fn three_points_four_lines() {
        let s = Series::new("g", "a,b", SeriesKind::Line, vec![0.0, 1.0, 2.0], vec![1.0, 0.1, 1e-20]);
        let mut buf = Vec::new();
        write_csv_group(&[&s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "series,x,y\n\"a,b\",0,1\n\"a,b\",1,0.1\n\"a,b\",2,1e-20\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 6.02e23, -2.5e-300, 12345.678, 1e-5, 9.99e15] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            let mantissa: String = s.chars().take_while(|c| *c != 'e').filter(|c| c.is_ascii_digit()).collect();
            assert!(mantissa.trim_matches('0').len() <= 17, "{s}");
        }
        assert_eq!(format_number(0.0), "0");
    }
}
