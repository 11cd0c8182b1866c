//! The experiment catalog: seventeen named, reproducible runs whose series
//! redraw the figures of the CG and GMRES examples.
//!
//! Each entry declares its parameters with defaults; [`run_experiment`]
//! applies overrides, records the resolved values and the seed, and returns
//! the series plus scalar findings used by the acceptance checks.

mod catalog;
mod cg_entries;
mod gmres_entries;
mod params;
mod result;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::constructions::ConstructionError;
use crate::io::IoError;
use crate::krylov::{cg, gmres, CgOptions, CgVariant, GmresOptions, IterationTrace, KrylovError, Preconditioner};
use crate::linalg::LinalgError;
use crate::precision::{ExtendedReal, PrecisionMode};
use crate::problems::{LinearSystem, ProblemError, Rng};

pub use catalog::{catalog_entry, list_experiments, CatalogEntry};
pub use params::ParamSet;
pub use result::{ExperimentResult, Metadata, Scale, Series, SeriesKind};

/// Environment variable naming the Matrix Market data directory.
pub const DATA_ENV: &str = "KRYLOVLAB_DATA";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment `{0}` (run `list` for the catalog)")]
    UnknownExperiment(String),
    #[error("experiment `{experiment}` has no parameter `{key}`; known: {known}")]
    UnknownParameter { experiment: String, key: String, known: String },
    #[error("parameter `{key}` = `{value}`: {reason}")]
    InvalidParameter { key: String, value: String, reason: String },
    #[error("missing data file {path} (obtain `{name}` from the Matrix Market collection)")]
    MissingData { path: PathBuf, name: String },
    #[error("cross-check failed for {label}: relative A-norm error differs by {rel:e} at iteration {k}")]
    CrossCheck { label: String, k: usize, rel: f64 },
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// What to run: a catalog name, parameter overrides and a seed.
#[derive(Clone, Debug, Default)]
pub struct ExperimentSpec {
    pub name: String,
    pub overrides: BTreeMap<String, String>,
    pub seed: u64,
    /// Directory with Matrix Market files; falls back to `KRYLOVLAB_DATA`.
    pub data_dir: Option<PathBuf>,
    /// Rerun exact-arithmetic CG arms in native precision with full
    /// reorthogonalization and require agreement.
    pub cross_check: bool,
}

impl ExperimentSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), seed: 1, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn set(mut self, key: &str, value: &str) -> Self {
        self.overrides.insert(key.into(), value.into());
        self
    }
}

/// Agreement required by the cross-check, on errors down to `CROSS_CHECK_FLOOR`.
pub const CROSS_CHECK_RTOL: f64 = 1e-4;
pub const CROSS_CHECK_FLOOR: f64 = 1e-10;

/// Mutable state of one experiment run.
pub(crate) struct Run {
    pub p: ParamSet,
    pub rng: Rng,
    data_dir: Option<PathBuf>,
    cross_check: bool,
    series: Vec<Series>,
    summary: BTreeMap<String, f64>,
    modes: BTreeSet<&'static str>,
    substitutes: Vec<String>,
}

/// Where a Matrix-Market-backed entry gets its matrix.
pub(crate) enum Source {
    File(PathBuf),
    Synthetic,
}

impl Run {
    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    pub fn stat(&mut self, key: impl Into<String>, v: f64) {
        self.summary.insert(key.into(), v);
    }

    pub fn mode(&mut self, m: PrecisionMode) {
        self.modes.insert(m.name());
    }

    pub fn substitute(&mut self, note: impl Into<String>) {
        self.substitutes.push(note.into());
    }

    /// Resolves `file` under the data directory according to `data.source`
    /// (`auto`: file if present else synthetic; `file`: file required;
    /// `synthetic`: never read).
    pub fn source(&self, file: &str) -> Result<Source, ExperimentError> {
        let mode = self.p.text("data.source")?.to_string();
        let dir = self.data_dir.clone().or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from));
        let path = dir.unwrap_or_else(|| PathBuf::from("data")).join(file);
        match mode.as_str() {
            "synthetic" => Ok(Source::Synthetic),
            "auto" if path.is_file() => Ok(Source::File(path)),
            "auto" => Ok(Source::Synthetic),
            "file" if path.is_file() => Ok(Source::File(path)),
            "file" => Err(ExperimentError::MissingData { path, name: file.trim_end_matches(".mtx").into() }),
            _ => Err(ExperimentError::InvalidParameter {
                key: "data.source".into(),
                value: mode,
                reason: "expected auto, file or synthetic".into(),
            }),
        }
    }

    pub fn cg(
        &mut self,
        mode: PrecisionMode,
        sys: &LinearSystem,
        pc: &Preconditioner,
        opts: &CgOptions,
    ) -> Result<IterationTrace, ExperimentError> {
        self.mode(mode);
        let t = match mode {
            PrecisionMode::Native => cg::<f64>(sys, pc, opts)?,
            PrecisionMode::Extended => cg::<ExtendedReal>(sys, pc, &exact_variant(opts, pc))?,
        };
        if mode == PrecisionMode::Extended && self.cross_check && pc.is_identity() {
            self.check_against_reorth(sys, opts, &t)?;
        }
        Ok(t)
    }

    fn check_against_reorth(
        &mut self,
        sys: &LinearSystem,
        opts: &CgOptions,
        exact: &IterationTrace,
    ) -> Result<(), ExperimentError> {
        let o = CgOptions { variant: CgVariant::Reorthogonalized, ..opts.clone() };
        let native = cg::<f64>(sys, &Preconditioner::Identity, &o)?;
        let (e, n) = (exact.relative_a_norm_error(), native.relative_a_norm_error());
        let mut worst: f64 = 0.0;
        for (k, (&a, &b)) in e.iter().zip(&n).enumerate() {
            if a < CROSS_CHECK_FLOOR {
                break;
            }
            let rel = (a - b).abs() / a;
            worst = worst.max(rel);
            if !(rel <= CROSS_CHECK_RTOL) {
                return Err(ExperimentError::CrossCheck { label: sys.label.clone(), k, rel });
            }
        }
        let key = format!("cross_check.{}", sys.label);
        self.stat(key, worst);
        Ok(())
    }

    pub fn gmres(
        &mut self,
        mode: PrecisionMode,
        sys: &LinearSystem,
        pc: &Preconditioner,
        opts: &GmresOptions,
    ) -> Result<IterationTrace, ExperimentError> {
        self.mode(mode);
        Ok(match mode {
            PrecisionMode::Native => gmres::<f64>(sys, pc, opts)?,
            PrecisionMode::Extended => gmres::<ExtendedReal>(sys, pc, opts)?,
        })
    }
}

/// Pair precision alone still delays CG on spectra with large outlying
/// eigenvalues, so exact two-term arms also reorthogonalize every residual.
fn exact_variant(opts: &CgOptions, pc: &Preconditioner) -> CgOptions {
    let mut o = opts.clone();
    if o.variant == CgVariant::TwoTerm && pc.is_identity() {
        o.variant = CgVariant::Reorthogonalized;
    }
    o
}

/// First iteration with `series[k] ≤ level`, NaN when never reached (stored
/// as `null` in the metadata).
pub(crate) fn crossing(series: &[f64], level: f64) -> f64 {
    IterationTrace::first_below(series, level).map_or(f64::NAN, |k| k as f64)
}

/// Fractional crossing of `level`, interpolating `log10(series)` linearly
/// between the bracketing iterations. Separates curves that cross the
/// level within the same step.
pub(crate) fn crossing_interp(series: &[f64], level: f64) -> f64 {
    let Some(k) = IterationTrace::first_below(series, level) else { return f64::NAN };
    if k == 0 {
        return 0.0;
    }
    let (a, b, l) = (series[k - 1].log10(), series[k].max(f64::MIN_POSITIVE).log10(), level.log10());
    (k - 1) as f64 + (a - l) / (a - b)
}

/// Runs a catalog entry. Output is a pure function of the spec (and of the
/// data files, for Matrix-Market-backed entries).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    let entry = catalog_entry(&spec.name).ok_or_else(|| ExperimentError::UnknownExperiment(spec.name.clone()))?;
    let mut p = ParamSet::new(entry.name, entry.defaults);
    p.apply(&spec.overrides)?;
    let mut run = Run {
        p,
        rng: Rng::new(spec.seed),
        data_dir: spec.data_dir.clone(),
        cross_check: spec.cross_check,
        series: Vec::new(),
        summary: BTreeMap::new(),
        modes: BTreeSet::new(),
        substitutes: Vec::new(),
    };
    let start = Instant::now();
    (entry.run)(&mut run)?;
    let metadata = Metadata {
        experiment: entry.name.into(),
        figures: entry.figures.into(),
        seed: spec.seed,
        params: run.p.resolved().clone(),
        precision_modes: run.modes.iter().map(|s| s.to_string()).collect(),
        substitutes: run.substitutes,
        summary: run.summary,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let result = ExperimentResult { series: run.series, metadata };
    result.validate().map_err(|m| ExperimentError::Io(IoError::InvalidResult(m)))?;
    Ok(result)
}
