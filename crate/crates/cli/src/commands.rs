use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::Value;

use krylovlab::analysis::bound_report;
use krylovlab::constructions::{cg_prescribed, gmres_prescribed};
use krylovlab::experiments::{catalog_entry, list_experiments, run_experiment, ExperimentResult, ExperimentSpec};
use krylovlab::io::{
    format_number, read_matrix_market, write_matrix_market_array, write_result, MatrixData, MmField, MmFormat,
    MmSymmetry,
};
use krylovlab::krylov::{
    cg_in, gmres_in, CgOptions, CgVariant, GmresOptions, IterationTrace, Preconditioner, Termination,
};
use krylovlab::linalg::{condition_number, ComplexPoint, DenseMatrix, SparseMatrixCsr};
use krylovlab::precision::PrecisionMode;
use krylovlab::problems::{LinearSystem, Operator, Spectrum};

use crate::{
    input, BoundsArgs, CliError, ConstructArgs, Method, MmInfoArgs, Precision, PrecondKind, RunArgs, SolveArgs,
};

type Out<'a> = &'a mut dyn Write;

pub fn list(out: Out, params: bool) -> Result<(), CliError> {
    for e in list_experiments() {
        writeln!(out, "{:<18} {}", e.name, e.description)?;
        if params {
            for (k, v) in e.defaults {
                writeln!(out, "    {k} = {v}")?;
            }
        }
    }
    Ok(())
}

struct Job {
    spec: ExperimentSpec,
    dir: PathBuf,
}

fn jobs_from_args(a: &RunArgs) -> Result<Vec<Job>, CliError> {
    let base = |name: &str, seed: u64| ExperimentSpec {
        name: name.into(),
        seed,
        data_dir: a.data.clone(),
        cross_check: a.cross_check,
        ..Default::default()
    };
    if let Some(name) = &a.name {
        let mut spec = base(name, a.seed);
        spec.overrides = a.overrides.iter().cloned().collect();
        return Ok(vec![Job { spec, dir: a.out.clone() }]);
    }
    if a.all {
        // Each override goes to the entries that declare it.
        for (k, _) in &a.overrides {
            if !list_experiments().iter().any(|e| e.defaults.iter().any(|(d, _)| d == k)) {
                return Err(CliError::Failed(format!("no catalog entry has a parameter `{k}`")));
            }
        }
        return Ok(list_experiments()
            .iter()
            .map(|e| {
                let mut spec = base(e.name, a.seed);
                spec.overrides =
                    a.overrides.iter().filter(|(k, _)| e.defaults.iter().any(|(d, _)| d == k)).cloned().collect();
                Job { spec, dir: a.out.join(e.name) }
            })
            .collect());
    }
    let path = a.config.as_ref().expect("clap requires one of --name, --all, --config");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    let bad = |line: usize, m: String| CliError::Input { path: path.clone(), line, message: m };
    let doc: Value = serde_json::from_str(&text).map_err(|e| bad(e.line(), e.to_string()))?;
    let seed = match doc.get("seed") {
        None => a.seed,
        Some(v) => v.as_u64().ok_or_else(|| bad(0, "`seed` must be a nonnegative integer".into()))?,
    };
    let runs = doc.get("runs").and_then(Value::as_array).ok_or_else(|| bad(0, "expected a `runs` array".into()))?;
    let mut jobs: Vec<Job> = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let name =
            r.get("name").and_then(Value::as_str).ok_or_else(|| bad(0, format!("runs[{i}] needs a string `name`")))?;
        let seed = match r.get("seed") {
            None => seed,
            Some(v) => v.as_u64().ok_or_else(|| bad(0, format!("runs[{i}].seed must be a nonnegative integer")))?,
        };
        let mut spec = base(name, seed);
        if let Some(set) = r.get("set") {
            let obj = set.as_object().ok_or_else(|| bad(0, format!("runs[{i}].set must be an object")))?;
            for (k, v) in obj {
                let s = match v {
                    Value::String(s) => s.clone(),
                    Value::Number(_) | Value::Bool(_) => v.to_string(),
                    _ => return Err(bad(0, format!("runs[{i}].set.{k} must be a string, number or boolean"))),
                };
                spec.overrides.insert(k.clone(), s);
            }
        }
        spec.overrides.extend(a.overrides.iter().cloned());
        if jobs.iter().any(|j| j.spec.name == name) {
            return Err(bad(0, format!("`{name}` appears twice in `runs`")));
        }
        jobs.push(Job { spec, dir: a.out.join(name) });
    }
    if jobs.is_empty() {
        return Err(bad(0, "`runs` is empty".into()));
    }
    Ok(jobs)
}

fn execute(job: &Job, svg: bool) -> Result<(ExperimentResult, Vec<PathBuf>), CliError> {
    let res = run_experiment(&job.spec)?;
    let files = write_result(&res, &job.dir, svg)?;
    Ok((res, files))
}

type JobOutcome = Result<(ExperimentResult, Vec<PathBuf>), CliError>;

pub fn run(out: Out, a: &RunArgs) -> Result<(), CliError> {
    let jobs = jobs_from_args(a)?;
    for j in &jobs {
        if catalog_entry(&j.spec.name).is_none() {
            return Err(krylovlab::experiments::ExperimentError::UnknownExperiment(j.spec.name.clone()).into());
        }
    }
    let slots: Vec<Mutex<Option<JobOutcome>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = usize::from(a.jobs).min(jobs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = execute(job, a.svg);
                *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
            });
        }
    });

    let single = a.name.is_some();
    let mut failed = Vec::new();
    for (job, slot) in jobs.iter().zip(slots) {
        let r = slot.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every job ran");
        match r {
            Ok((res, files)) => {
                eprintln!("{}: {:.2} s", job.spec.name, res.metadata.runtime_seconds);
                for note in &res.metadata.substitutes {
                    eprintln!("{}: substitute: {note}", job.spec.name);
                }
                for f in files {
                    writeln!(out, "{}", f.display())?;
                }
            }
            Err(e) if single => return Err(e),
            Err(e) => {
                eprintln!("error: {}: {e}", job.spec.name);
                failed.push(job.spec.name.clone());
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} of {} runs failed: {}", failed.len(), jobs.len(), failed.join(", "))))
    }
}

fn termination_name(t: Option<Termination>) -> &'static str {
    match t {
        Some(Termination::ToleranceMet) => "tolerance_met",
        Some(Termination::MaxIterations) => "maxit",
        Some(Termination::Breakdown) => "breakdown",
        None => "none",
    }
}

fn last(v: &[f64]) -> String {
    v.last().map_or_else(|| "-".into(), |&x| format_number(x))
}

pub fn solve(out: Out, a: &SolveArgs) -> Result<(), CliError> {
    let (_, data) = read_matrix_market(&a.matrix)?;
    let n = data.rows();
    let cols = match &data {
        MatrixData::Dense(d) => d.cols(),
        MatrixData::Sparse(s) => s.cols(),
    };
    if n != cols {
        return Err(CliError::Failed(format!("matrix is {n}x{cols}; a square matrix is required")));
    }
    let sparse: SparseMatrixCsr = match &data {
        MatrixData::Dense(d) => SparseMatrixCsr::from_dense(d),
        MatrixData::Sparse(s) => s.clone(),
    };
    let nnz = sparse.nnz();
    let pc = match a.precond {
        PrecondKind::None => Preconditioner::Identity,
        PrecondKind::Jacobi => {
            let d = sparse.diagonal();
            if let Some(i) = d.iter().position(|&v| v == 0.0) {
                return Err(CliError::Failed(format!("zero diagonal entry in row {}; Jacobi is undefined", i + 1)));
            }
            Preconditioner::Diagonal(d.into_iter().map(Into::into).collect())
        }
        PrecondKind::Ichol => Preconditioner::incomplete_cholesky(&sparse, a.drop_tol)?,
    };
    let op = match data {
        MatrixData::Dense(d) => Operator::Dense(d),
        MatrixData::Sparse(s) => Operator::Sparse(s),
    };
    let b = match &a.rhs {
        Some(p) => input::read_vector(p)?,
        None => vec![1.0 / (n as f64).sqrt(); n],
    };
    if b.len() != n {
        return Err(CliError::Failed(format!("right-hand side has {} entries for order {n}", b.len())));
    }
    let sys = LinearSystem::from_f64(op, &b, "solve")?;
    let mode = match a.precision {
        Precision::Native => PrecisionMode::Native,
        Precision::Extended => PrecisionMode::Extended,
    };
    let trace = match a.method {
        Method::Cg => {
            if !sys.operator.is_symmetric() {
                return Err(CliError::Failed("CG needs a symmetric matrix; use --method gmres".into()));
            }
            let opts = CgOptions { tol: a.tol, maxit: a.maxit.unwrap_or(10 * n), ..Default::default() };
            cg_in(mode, &sys, &pc, &opts)?
        }
        Method::Gmres => {
            let opts = GmresOptions { tol: a.tol, maxit: a.maxit.unwrap_or(n), ..Default::default() };
            gmres_in(mode, &sys, &pc, &opts)?
        }
    };
    let method = match a.method {
        Method::Cg => "cg",
        Method::Gmres => "gmres",
    };
    let (rec, tru) = (trace.relative_recursive_resnorm(), IterationTrace::relative(&trace.true_resnorm));
    writeln!(out, "matrix {}", a.matrix.display())?;
    writeln!(out, "order {n}")?;
    writeln!(out, "nonzeros {nnz}")?;
    writeln!(out, "method {method}")?;
    writeln!(out, "precision {}", mode.name())?;
    writeln!(out, "preconditioner {}", format!("{:?}", a.precond).to_lowercase())?;
    writeln!(out, "iterations {}", trace.iterations)?;
    writeln!(out, "termination {}", termination_name(trace.termination))?;
    writeln!(out, "relative_residual_recursive {}", last(&rec))?;
    writeln!(out, "relative_residual_true {}", last(&tru))?;
    if a.trace {
        writeln!(out, "k,recursive,true")?;
        for (k, &r) in rec.iter().enumerate() {
            let t = tru.get(k).map_or_else(String::new, |&v| format_number(v));
            writeln!(out, "{k},{},{t}", format_number(r))?;
        }
    }
    Ok(())
}

pub fn bounds(out: Out, a: &BoundsArgs) -> Result<(), CliError> {
    let mut values = input::read_values(&a.spectrum)?;
    values.sort_by(f64::total_cmp);
    let spec = Spectrum::from_f64(&values)?;
    let report = bound_report(&spec, a.k)?;
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out)?;
        return Ok(());
    }
    let active: Vec<String> = report.active_eigenvalues.iter().map(|&v| format_number(v)).collect();
    writeln!(out, "k {}", report.k)?;
    writeln!(out, "kappa_bound {}", format_number(report.kappa_bound))?;
    writeln!(out, "minmax_bound {}", format_number(report.minmax_bound))?;
    writeln!(out, "worstcase_formula {}", format_number(report.worstcase_formula_value))?;
    writeln!(out, "active_eigenvalues {}", active.join(" "))?;
    Ok(())
}

fn column(v: &[f64]) -> DenseMatrix<f64> {
    DenseMatrix::from_columns(&[v.to_vec()])
}

/// Largest `|computed_k − prescribed_k| / prescribed_k` over `k < n`.
fn deviation(computed: &[f64], prescribed: &[f64], n: usize) -> f64 {
    (0..n.min(computed.len()).min(prescribed.len()))
        .map(|k| (computed[k] - prescribed[k]).abs() / prescribed[k])
        .fold(0.0, f64::max)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn construct(out: Out, a: &ConstructArgs) -> Result<(), CliError> {
    let curve = input::read_curve(&a.curve, a.kind == Method::Cg)?;
    let n = curve.order();
    let sys = match a.kind {
        Method::Cg => cg_prescribed(&curve)?,
        Method::Gmres => {
            let eigs = match &a.eigs {
                Some(p) => input::read_eigenvalues(p)?,
                None => (1..=n).map(|i| ComplexPoint::real(i as f64)).collect(),
            };
            gmres_prescribed(&curve, &eigs, None)?
        }
    };
    let matrix = match &sys.operator {
        Operator::DenseExtended { native, .. } => native.clone(),
        other => other.to_dense(),
    };
    let rhs: Vec<f64> = sys.rhs.iter().map(|v| v.hi()).collect();
    let kind = match a.kind {
        Method::Cg => "CG",
        Method::Gmres => "GMRES",
    };
    let comment = format!("system with prescribed {kind} convergence, order {n}");
    let files = [(suffixed(&a.out, "_matrix.mtx"), matrix), (suffixed(&a.out, "_rhs.mtx"), column(&rhs))];
    for (p, m) in &files {
        write_matrix_market_array(m, p, &comment)?;
        writeln!(out, "{}", p.display())?;
    }
    if let Some(x) = &sys.x_ref {
        let p = suffixed(&a.out, "_solution.mtx");
        let x: Vec<f64> = x.iter().map(|v| v.hi()).collect();
        write_matrix_market_array(&column(&x), &p, &comment)?;
        writeln!(out, "{}", p.display())?;
    }

    // Replay in extended precision against the prescription.
    match a.kind {
        Method::Cg => {
            let opts = CgOptions { variant: CgVariant::Reorthogonalized, tol: 0.0, maxit: n, ..Default::default() };
            let t = cg_in(PrecisionMode::Extended, &sys, &Preconditioner::Identity, &opts)?;
            let err = curve.error_norms_a.as_deref().unwrap_or(&[]);
            writeln!(
                out,
                "max_relative_deviation_residual {}",
                format_number(deviation(&t.true_resnorm, &curve.residual_norms, n))
            )?;
            writeln!(out, "max_relative_deviation_error {}", format_number(deviation(&t.a_norm_error, err, n)))?;
        }
        Method::Gmres => {
            let opts = GmresOptions { tol: 0.0, maxit: n, ..Default::default() };
            let t = gmres_in(PrecisionMode::Extended, &sys, &Preconditioner::Identity, &opts)?;
            let dev = deviation(&t.recursive_resnorm, &curve.residual_norms, n);
            writeln!(out, "max_relative_deviation_residual {}", format_number(dev))?;
        }
    }
    Ok(())
}

pub fn mm_info(out: Out, a: &MmInfoArgs) -> Result<(), CliError> {
    let (h, data) = read_matrix_market(&a.file)?;
    let format = match h.format {
        MmFormat::Coordinate => "coordinate",
        MmFormat::Array => "array",
    };
    let field = match h.field {
        MmField::Real => "real",
        MmField::Integer => "integer",
    };
    let symmetry = match h.symmetry {
        MmSymmetry::General => "general",
        MmSymmetry::Symmetric => "symmetric",
        MmSymmetry::SkewSymmetric => "skew-symmetric",
    };
    writeln!(out, "file {}", a.file.display())?;
    writeln!(out, "format {format}")?;
    writeln!(out, "field {field}")?;
    writeln!(out, "symmetry {symmetry}")?;
    writeln!(out, "size {} x {}", h.rows, h.cols)?;
    writeln!(out, "stored_entries {}", h.entries)?;
    let nnz = match &data {
        MatrixData::Dense(d) => d.as_slice().iter().filter(|&&v| v != 0.0).count(),
        MatrixData::Sparse(s) => s.nnz(),
    };
    writeln!(out, "nonzeros {nnz}")?;
    let order = h.rows.max(h.cols);
    if order > a.max_order {
        writeln!(out, "condition_number not computed (order {order} exceeds --max-order {})", a.max_order)?;
    } else {
        let kappa = condition_number(&data.to_dense())?;
        writeln!(out, "condition_number {}", format_number(kappa))?;
    }
    Ok(())
}
