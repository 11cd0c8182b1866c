use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Line,
    /// Point markers (eigenvalues, Ritz values).
    Scatter,
    /// Staircase; the points are already the corners.
    Step,
}

/// One named curve. Series sharing a `group` are drawn in one figure and
/// written to one CSV file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub group: String,
    pub name: String,
    pub kind: SeriesKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

impl Series {
    /// Line series against the iteration index `0, 1, …` on a log y axis.
    pub fn convergence(group: &str, name: &str, y: &[f64], y_label: &str) -> Self {
        Self {
            group: group.into(),
            name: name.into(),
            kind: SeriesKind::Line,
            x: (0..y.len()).map(|k| k as f64).collect(),
            y: y.to_vec(),
            x_label: "iteration k".into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
        }
    }

    pub fn new(group: &str, name: &str, kind: SeriesKind, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            group: group.into(),
            name: name.into(),
            kind,
            x,
            y,
            x_label: "x".into(),
            y_label: "y".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        }
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn scales(mut self, x: Scale, y: Scale) -> Self {
        self.x_scale = x;
        self.y_scale = y;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub figures: String,
    pub seed: u64,
    /// Fully resolved parameters, overrides applied.
    pub params: BTreeMap<String, String>,
    pub precision_modes: Vec<String>,
    /// Non-empty when a documented substitute replaced a missing data file.
    pub substitutes: Vec<String>,
    /// Scalar findings (ratios, counts, thresholds) used by the checks.
    pub summary: BTreeMap<String, f64>,
    /// Wall-clock time; kept out of serialized output for determinism.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub series: Vec<Series>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    /// Groups in order of first appearance.
    pub fn groups(&self) -> Vec<(&str, Vec<&Series>)> {
        let mut out: Vec<(&str, Vec<&Series>)> = Vec::new();
        for s in &self.series {
            match out.iter_mut().find(|(g, _)| *g == s.group) {
                Some((_, v)) => v.push(s),
                None => out.push((&s.group, vec![s])),
            }
        }
        out
    }

    pub fn find(&self, group: &str, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.group == group && s.name == name)
    }

    pub fn summary(&self, key: &str) -> Option<f64> {
        self.metadata.summary.get(key).copied()
    }

    /// Every series nonempty with matching coordinate lengths.
    pub fn validate(&self) -> Result<(), String> {
        if self.series.is_empty() {
            return Err("result has no series".into());
        }
        for s in &self.series {
            if s.x.is_empty() || s.x.len() != s.y.len() {
                return Err(format!("series {}/{} has {} x and {} y values", s.group, s.name, s.x.len(), s.y.len()));
            }
        }
        Ok(())
    }
}
