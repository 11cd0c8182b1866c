use std::path::Path;

use crate::analysis::{harmonic_ritz, rescale_x0};
use crate::constructions::{
    coefficient_error, companion_matrix, gmres_prescribed, hessenberg_charpoly, monic_from_roots, PrescribedCurve,
};
use crate::io::{read_matrix_market, MatrixData};
use crate::krylov::{GmresOptions, IterationTrace, Preconditioner};
use crate::linalg::{condition_number, general_eigenvalues, ComplexPoint};
use crate::precision::{ExtendedReal, PrecisionMode};
use crate::problems::{
    flipped_frank, grcar as grcar_matrix, normal_from_circular_law, saddle_point, supg_boundary_profile, supg_matrix,
    supg_rhs, synthetic_saddle_point, synthetic_svd, LinearSystem, Operator,
};

use super::{crossing, ExperimentError, Run, Series, SeriesKind, Source};

const RES: &str = "relative residual norm";
const NATIVE: PrecisionMode = PrecisionMode::Native;
const EXACT: PrecisionMode = PrecisionMode::Extended;

fn ones(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

fn complex_scatter(group: &str, name: &str, z: &[ComplexPoint]) -> Series {
    let (x, y) = z.iter().map(|p| (p.re, p.im)).unzip();
    Series::new(group, name, SeriesKind::Scatter, x, y).labels("real part", "imaginary part")
}

fn load(path: &Path) -> Result<MatrixData, ExperimentError> {
    Ok(read_matrix_market(path)?.1)
}

/// Last `k` with `rel[k] ≥ level`.
fn stagnation_length(rel: &[f64], level: f64) -> usize {
    rel.iter().rposition(|&v| v >= level).unwrap_or(0)
}

fn max_decade_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.log10() - y.log10()).abs())
        .fold(0.0, f64::max)
}

pub(super) fn anycurve(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let n = p.usize("n")?;
    let (step, factor, floor) = (p.usize("scenario2.step")?, p.f64("scenario2.factor")?, p.f64("scenario2.floor")?);
    if step == 0 {
        return Err(ExperimentError::InvalidParameter {
            key: "scenario2.step".into(),
            value: "0".into(),
            reason: "must be positive".into(),
        });
    }
    let mut f1 = vec![1.0; n];
    f1.push(0.0);
    let mut f2: Vec<f64> = (0..n).map(|k| factor.powi((k / step) as i32).max(floor)).collect();
    f2.push(0.0);
    let scenarios = [
        ("scenario1", f1, vec![ComplexPoint::new(1.0, 0.0); n]),
        ("scenario2", f2, (1..=n).map(|j| ComplexPoint::new(j as f64, 0.0)).collect::<Vec<_>>()),
    ];
    for (name, f, eigs) in scenarios {
        let curve = PrescribedCurve::gmres(f.clone())?;
        let mut sys = gmres_prescribed(&curve, &eigs, None)?;
        sys.label = name.into();
        let coeffs = monic_from_roots(&eigs)?;
        let check = hessenberg_charpoly(&companion_matrix(&coeffs));
        run.stat(format!("{name}.coefficient_rtol"), coefficient_error(&check, &coeffs));
        let opts = GmresOptions { tol: 0.0, maxit: n, ..Default::default() };
        let exact = run.gmres(EXACT, &sys, &Preconditioner::Identity, &opts)?;
        let native = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        let dev = f[..n].iter().zip(&exact.true_resnorm).map(|(w, g)| (g - w).abs() / w).fold(0.0, f64::max);
        run.stat(format!("{name}.residual_rtol"), dev);
        run.push(Series::convergence(name, "prescribed", &f[..n], RES));
        run.push(Series::convergence(name, "GMRES, exact", &exact.true_resnorm, RES));
        run.push(Series::convergence(name, "GMRES, double", &native.true_resnorm, RES));
    }
    Ok(())
}

pub(super) fn normal(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (n, reps) = (p.usize("n")?, p.usize("repetitions")?);
    let tol = p.f64("gmres.tol")?;
    let (stag, frac) = (p.f64("report.stagnation_level")?, p.f64("report.stagnation_fraction")?);
    let (kr, level) = (p.usize("report.k")?, p.f64("report.level")?);
    let classes = [("scaled", 0.0, 1.0), ("shift1", 1.0, 1.0), ("shift2", 2.0, 0.5)];
    let opts = GmresOptions { tol, maxit: n, track_true_residual: false, ..Default::default() };
    let mut curves: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes.len()];
    for rep in 0..reps {
        let base = run.rng.fork();
        let b = run.rng.unit_vector(n);
        for (c, &(name, shift, scale)) in classes.iter().enumerate() {
            let mut rng = base.clone();
            let (a, eigs) = normal_from_circular_law(n, shift, scale, &mut rng)?;
            if rep == 0 {
                run.push(complex_scatter("eigenvalues", name, &eigs));
            }
            let sys = LinearSystem::from_f64(Operator::Dense(a), &b, name)?;
            let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
            curves[c].push(t.relative_recursive_resnorm());
        }
    }
    let stagnating = curves[0]
        .iter()
        .filter(|r| {
            let k = crossing(r, stag * (1.0 - f64::EPSILON));
            k.is_nan() || k >= frac * n as f64
        })
        .count();
    let converged =
        curves[2].iter().filter(|r| r.iter().take(kr + 1).copied().fold(f64::INFINITY, f64::min) <= level).count();
    run.stat("scaled.stagnating_runs", stagnating as f64);
    run.stat("shift2.converged_runs", converged as f64);
    for (c, &(name, ..)) in classes.iter().enumerate() {
        let mut its: Vec<f64> = curves[c].iter().map(|r| crossing(r, level)).collect();
        its.sort_by(f64::total_cmp);
        if let Some(&m) = its.get(its.len() / 2) {
            run.stat(format!("{name}.median_iterations"), m);
        }
        for (rep, r) in curves[c].iter().enumerate() {
            run.push(Series::convergence(name, &format!("run {}", rep + 1), r, RES));
        }
    }
    Ok(())
}

pub(super) fn backward(run: &mut Run) -> Result<(), ExperimentError> {
    let maxit = run.p.usize("gmres.maxit")?;
    let mut mats: Vec<(String, Operator)> = Vec::new();
    for file in ["fs1836.mtx", "sherman2.mtx"] {
        if let Source::File(path) = run.source(file)? {
            mats.push((file.trim_end_matches(".mtx").into(), Operator::Sparse(load(&path)?.into_sparse())));
        }
    }
    if mats.is_empty() {
        let (n, kappa) = (run.p.usize("synthetic.n")?, run.p.f64("synthetic.kappa")?);
        let a = synthetic_svd(n, 1.0, kappa, &mut run.rng)?;
        run.substitute(format!(
            "fs1836 and sherman2 not found: synthetic U*S*W^T matrix of order {n} with condition number {kappa:e}"
        ));
        mats.push(("synthetic".into(), Operator::Dense(a)));
    }
    for (name, op) in mats {
        let n = op.dim();
        let x = ones(n);
        let xe: Vec<ExtendedReal> = x.iter().map(|&v| v.into()).collect();
        let b = op.apply(&xe);
        let mut sys = LinearSystem::new(op, b, name.as_str())?;
        sys.x_ref = Some(xe);
        let opts = GmresOptions {
            tol: 0.0,
            maxit: if maxit == 0 { n } else { maxit },
            track_backward_error: true,
            track_orthogonality: true,
            ..Default::default()
        };
        let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        let (loss, be) = (&t.loss_of_orthogonality, &t.backward_error);
        let m = loss.len().min(be.len());
        let product: Vec<f64> = (0..m).map(|k| loss[k] * be[k]).collect();
        let tail = &product[1.min(m)..];
        run.stat(format!("{name}.order"), n as f64);
        run.stat(format!("{name}.product_min"), tail.iter().copied().fold(f64::INFINITY, f64::min));
        run.stat(format!("{name}.product_max"), tail.iter().copied().fold(0.0, f64::max));
        run.stat(format!("{name}.backward_min"), be.iter().copied().fold(f64::INFINITY, f64::min));
        let k_loss = loss.iter().position(|&v| v >= 0.1);
        run.stat(format!("{name}.loss_reaches_0.1"), k_loss.map_or(f64::NAN, |k| k as f64));
        run.stat(format!("{name}.backward_at_loss"), k_loss.and_then(|k| be.get(k).copied()).unwrap_or(f64::NAN));
        run.push(Series::convergence(&name, "loss of orthogonality", &loss[..m], "value"));
        run.push(Series::convergence(&name, "backward error", &be[..m], "value"));
        run.push(Series::convergence(&name, "product", &product, "value"));
    }
    Ok(())
}

fn increases(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[1] > w[0]).count()
}

pub(super) fn saddle(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let tols = p.f64_list("inner.tols")?;
    let inner_maxit = p.usize("inner.maxit")?;
    let (maxit, tol) = (p.usize("gmres.maxit")?, p.f64("gmres.tol")?);
    let sp = match (run.source("saddle_A.mtx")?, run.source("saddle_B.mtx")?) {
        (Source::File(a), Source::File(b)) => saddle_point(load(&a)?.to_dense(), load(&b)?.to_dense())?,
        _ => {
            let (n, m) = (run.p.usize("synthetic.n")?, run.p.usize("synthetic.m")?);
            run.substitute(format!(
                "synthetic saddle point with A = I + 0.1 G ({n}x{n}) and Gaussian B ({m}x{n}) replaces the Navier-Stokes matrices"
            ));
            synthetic_saddle_point(n, m, &mut run.rng)?
        }
    };
    let dim = sp.matrix.rows();
    let sys = LinearSystem::from_f64(Operator::Dense(sp.matrix.clone()), &ones(dim), "saddle")?;
    let opts = GmresOptions { tol, maxit, ..Default::default() };

    let plain = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
    let pc = Preconditioner::block_diag_schur(&sp)?;
    let exact = run.gmres(NATIVE, &sys, &pc, &opts)?;
    let pre = exact.relative_recursive_resnorm();
    run.stat("exact.steps_to_1e-12", crossing(&pre, 1e-12));
    run.stat("unpreconditioned.final", plain.relative_true_resnorm().last().copied().unwrap_or(1.0));
    let mut pre_series = vec![
        Series::convergence("preconditioned", "unpreconditioned", &plain.relative_true_resnorm(), RES),
        Series::convergence("preconditioned", "exact preconditioner", &pre, RES),
    ];
    let mut true_series = vec![
        Series::convergence("true", "unpreconditioned", &plain.relative_true_resnorm(), RES),
        Series::convergence("true", "exact preconditioner", &exact.relative_true_resnorm(), RES),
    ];
    for &t in &tols {
        let pc = Preconditioner::inner_gmres(&sp, t, inner_maxit);
        let tr = run.gmres(NATIVE, &sys, &pc, &opts)?;
        let truth = tr.relative_true_resnorm();
        let key = format!("inner.{t:e}");
        run.stat(format!("{key}.final_true"), truth.last().copied().unwrap_or(f64::NAN));
        run.stat(format!("{key}.min_true"), truth.iter().copied().fold(f64::INFINITY, f64::min));
        run.stat(format!("{key}.increases"), increases(&truth) as f64);
        run.stat(format!("{key}.inner_iterations"), pc.inner_count() as f64);
        pre_series.push(Series::convergence(
            "preconditioned",
            &format!("inner tol {t:e}"),
            &tr.relative_recursive_resnorm(),
            RES,
        ));
        true_series.push(Series::convergence("true", &format!("inner tol {t:e}"), &truth, RES));
    }
    pre_series.into_iter().chain(true_series).for_each(|s| run.push(s));
    Ok(())
}

fn min_distance(points: &[ComplexPoint], targets: &[ComplexPoint]) -> f64 {
    points.iter().flat_map(|z| targets.iter().map(move |w| z.distance(*w))).fold(f64::INFINITY, f64::min)
}

pub(super) fn grcar(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let n = p.usize("n")?;
    let (maxit, tol) = (p.usize("gmres.maxit")?, p.f64("gmres.tol")?);
    let ks = p.usize_list("ritz.k")?;
    let a = grcar_matrix(n)?;
    let eig = general_eigenvalues(&a)?;
    run.stat("kappa", condition_number(&a)?);
    let sys = LinearSystem::from_f64(Operator::Dense(a), &ones(n), "grcar")?;
    let opts = GmresOptions { tol, maxit, retain_hessenberg: true, ..Default::default() };
    let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
    let rel = t.relative_true_resnorm();
    run.stat("residual_after_1", rel.get(1).copied().unwrap_or(f64::NAN));
    run.stat("iterations", t.iterations as f64);
    for &k in &ks {
        if k == 0 || k > t.iterations {
            continue;
        }
        let hr = harmonic_ritz(&t, k)?;
        run.stat(format!("min_distance.k{k}"), min_distance(&hr, &eig));
        let group = format!("ritz-k{k}");
        run.push(complex_scatter(&group, "eigenvalues", &eig));
        run.push(complex_scatter(&group, "harmonic Ritz values", &hr));
    }
    run.push(Series::convergence("residuals", "GMRES", &rel, RES));
    Ok(())
}

pub(super) fn initres(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let fn_ = p.usize("frank.n")?;
    let (h_inv, delta, nu, count) =
        (p.usize("supg.h_inv")?, p.f64("supg.delta")?, p.f64("supg.nu")?, p.usize("supg.rhs")?);
    let (maxit, tol) = (p.usize("gmres.maxit")?, p.f64("gmres.tol")?);
    let stag = p.f64("report.stagnation_level")?;

    let f = flipped_frank(fn_)?;
    let b2 = run.rng.unit_vector(fn_);
    let opts = GmresOptions { tol, maxit: fn_, ..Default::default() };
    for (name, b) in [("b1 (ones)", ones(fn_)), ("b2 (random)", b2)] {
        let sys = LinearSystem::from_f64(Operator::Dense(f.clone()), &b, name)?;
        let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        let rel = t.relative_true_resnorm();
        let key = if name.starts_with("b1") { "frank.b1" } else { "frank.b2" };
        run.stat(format!("{key}.iterations_to_1e-8"), crossing(&rel, 1e-8));
        run.push(Series::convergence("frank", name, &rel, RES));
    }

    run.substitute(format!(
        "bilinear SUPG on {h_inv}x{h_inv} interior nodes; right-hand side j has g = 1 on the j right-edge nodes nearest the outflow"
    ));
    let a = supg_matrix(h_inv, delta, nu)?;
    let opts = GmresOptions { tol, maxit, track_true_residual: false, ..Default::default() };
    let (mut lengths, mut solved) = (Vec::new(), Vec::new());
    for j in 1..=count {
        let g = supg_boundary_profile(h_inv, j)?;
        let b = supg_rhs(h_inv, delta, nu, &g)?;
        let sys = LinearSystem::from_f64(Operator::Sparse(a.clone()), &b, format!("supg{j}"))?;
        let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        let rel = t.relative_recursive_resnorm();
        let len = stagnation_length(&rel, stag);
        let k = crossing(&rel, 1e-8);
        run.stat(format!("supg.stagnation.j{j:02}"), len as f64);
        run.stat(format!("supg.iterations_to_1e-8.j{j:02}"), k);
        lengths.push(len);
        solved.push(k);
        run.push(Series::convergence("supg", &format!("j = {j}"), &rel, RES));
    }
    let monotone = lengths.windows(2).all(|w| w[0] <= w[1]);
    run.stat("supg.stagnation_nondecreasing", if monotone { 1.0 } else { 0.0 });
    let monotone = solved.windows(2).all(|w| w[0] <= w[1]);
    run.stat("supg.iterations_nondecreasing", if monotone { 1.0 } else { 0.0 });
    Ok(())
}

fn rel_error(t: &IterationTrace) -> Vec<f64> {
    IterationTrace::relative(&t.euclid_error)
}

pub(super) fn x0(run: &mut Run) -> Result<(), ExperimentError> {
    let (maxit, tol) = (run.p.usize("gmres.maxit")?, run.p.f64("gmres.tol")?);
    let op = match run.source("steam1.mtx")? {
        Source::File(path) => Operator::Sparse(load(&path)?.into_sparse()),
        Source::Synthetic => {
            let p = &run.p;
            let (n, norm, kappa) = (p.usize("synthetic.n")?, p.f64("synthetic.norm")?, p.f64("synthetic.kappa")?);
            let a = synthetic_svd(n, norm, kappa, &mut run.rng)?;
            run.substitute(format!(
                "steam1 not found: synthetic U*S*W^T matrix of order {n}, norm {norm:e}, condition number {kappa:e}"
            ));
            Operator::Dense(a)
        }
    };
    let n = op.dim();
    let base = LinearSystem::from_f64(op, &ones(n), "x0")?.with_reference()?;
    let xr: Vec<ExtendedReal> = run.rng.unit_vector(n).into_iter().map(ExtendedReal::from).collect();
    let (zeta, xs) = rescale_x0(&base.operator, &base.rhs, &xr)?;
    run.stat("zeta_min", zeta);
    let opts = GmresOptions { tol, maxit, ..Default::default() };
    let mut runs = Vec::new();
    for (name, x0) in [("zero", None), ("random", Some(xr)), ("rescaled", Some(xs))] {
        let sys = match x0 {
            None => base.clone(),
            Some(x) => base.clone().with_x0(x)?,
        };
        let t = run.gmres(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        run.stat(format!("r0_norm.{name}"), t.true_resnorm[0]);
        run.stat(format!("iterations.{name}"), t.iterations as f64);
        run.push(Series::convergence("residuals", name, &t.relative_true_resnorm(), RES));
        runs.push(rel_error(&t));
    }
    run.stat("rescaled.max_error_decade_gap", max_decade_gap(&runs[2], &runs[0]));
    for (name, e) in ["zero", "random", "rescaled"].iter().zip(&runs) {
        run.push(Series::convergence("errors", name, e, "relative error norm"));
    }
    Ok(())
}
