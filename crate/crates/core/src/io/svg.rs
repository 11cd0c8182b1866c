use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::experiments::{ExperimentResult, Scale, Series, SeriesKind};

use super::{create, group_stem, IoError};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: Scale) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| usable(*v, scale)) {
            let t = if scale == Scale::Log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        if scale == Scale::Log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        Self { scale, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.scale == Scale::Log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let span = (self.hi - self.lo) as i64;
                let stride = (span / 8 + 1).max(1);
                (self.lo as i64..=self.hi as i64)
                    .filter(|e| (e - self.lo as i64) % stride == 0)
                    .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                    .collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
                let mut t = (self.lo / step).ceil() * step;
                let mut out = Vec::new();
                while t <= self.hi + 1e-9 * step {
                    let v = if t.abs() < 1e-12 * step { 0.0 } else { t };
                    out.push((v, format!("{}", (v * 1e6).round() / 1e6)));
                    t += step;
                }
                out
            }
        }
    }
}

fn usable(v: f64, scale: Scale) -> bool {
    v.is_finite() && (scale == Scale::Linear || v > 0.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One SVG document for the series of a group. Points that cannot be drawn
/// (non-finite, or non-positive on a log axis) break the polyline.
pub fn render_group(group: &str, series: &[&Series]) -> String {
    let first = series.first().expect("nonempty group");
    let xs = Axis::fit(series.iter().flat_map(|s| s.x.iter().copied()), first.x_scale);
    let ys = Axis::fit(series.iter().flat_map(|s| s.y.iter().copied()), first.y_scale);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xs.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ys.frac(v)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(group)
    );
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for (v, label) in xs.ticks() {
        let x = px(v);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0);
    }
    for (v, label) in ys.ticks() {
        let y = py(v);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(&first.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&first.y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points = ser
            .x
            .iter()
            .zip(&ser.y)
            .map(|(&x, &y)| (usable(x, xs.scale) && usable(y, ys.scale)).then(|| (px(x), py(y))));
        match ser.kind {
            SeriesKind::Scatter => {
                for (x, y) in points.flatten() {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
                }
            }
            SeriesKind::Line | SeriesKind::Step => {
                let mut run: Vec<(f64, f64)> = Vec::new();
                for p in points.chain(std::iter::once(None)) {
                    match p {
                        Some(p) => run.push(p),
                        None => {
                            if !run.is_empty() {
                                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                                let _ = writeln!(
                                    s,
                                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                                    pts.join(" ")
                                );
                            }
                            run.clear();
                        }
                    }
                }
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    result.validate().map_err(IoError::InvalidResult)?;
    let mut out = Vec::new();
    for (group, series) in result.groups() {
        let path = dir.join(format!("{}.svg", group_stem(group)));
        let mut w = create(&path)?;
        w.write_all(render_group(group, &series).as_bytes())?;
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_plot_with_gaps() {
        let a = Series::convergence("fig", "a<b", &[1.0, 1e-3, 0.0, 1e-8], "residual");
        let b = Series::new("fig", "pts", SeriesKind::Scatter, vec![1.0, 2.0], vec![1e-2, 1e-4]);
        let svg = render_group("fig", &[&a, &b]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(">1e-8<"));
    }
}
