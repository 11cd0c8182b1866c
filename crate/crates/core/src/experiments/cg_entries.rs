use crate::analysis::{csd, kappa_bound, minmax_bound, ritz_values, trajectory_map};
use crate::constructions::{cg_prescribed, PrescribedCurve};
use crate::krylov::{hs_error_estimate, CgOptions, CgVariant, Preconditioner};
use crate::linalg::{sym_eigen, SparseMatrixCsr};
use crate::precision::{ExtendedReal, PrecisionMode};
use crate::problems::{
    clusterize, diag_family, diffusion2d, poisson2d, wishart, LinearSystem, Operator, Orientation, Spectrum,
};

use super::{crossing, crossing_interp, ExperimentError, Run, Scale, Series, SeriesKind};

const ERR: &str = "relative A-norm error";
const NATIVE: PrecisionMode = PrecisionMode::Native;
const EXACT: PrecisionMode = PrecisionMode::Extended;

/// Options for an "exact" run: stop on the A-norm error floor (or at
/// finite termination), never on the residual.
fn floor_opts(floor: f64, maxit: usize) -> CgOptions {
    CgOptions { tol: 0.0, maxit, error_tol: Some(floor), ..Default::default() }
}

/// The right-accumulated, left-accumulated and equally spaced spectra.
fn three_families(run: &Run) -> Result<Vec<(&'static str, Spectrum)>, ExperimentError> {
    let p = &run.p;
    let (n, l1, ln) = (p.usize("n")?, p.f64("lambda1")?, p.f64("lambdan")?);
    Ok(vec![
        ("right", diag_family(n, l1, ln, p.f64("rho.right")?, Orientation::Right)?),
        ("left", diag_family(n, l1, ln, p.f64("rho.left")?, Orientation::Left)?),
        ("equal", diag_family(n, l1, ln, p.f64("rho.equal")?, Orientation::Left)?),
    ])
}

fn csd_series(group: &str, name: &str, points: &[f64]) -> Series {
    let (x, y) = csd(points).staircase().into_iter().unzip();
    Series::new(group, name, SeriesKind::Step, x, y)
        .labels("lambda", "cumulative spectral density")
        .scales(Scale::Log, Scale::Linear)
}

pub(super) fn eigdist(run: &mut Run) -> Result<(), ExperimentError> {
    let opts = floor_opts(run.p.f64("cg.error_floor")?, run.p.usize("cg.maxit")?);
    let level = run.p.f64("report.level")?;
    let fams = three_families(run)?;
    for (name, spec) in &fams {
        let sys = LinearSystem::from_spectrum(spec, *name)?;
        let t = run.cg(EXACT, &sys, &Preconditioner::Identity, &opts)?;
        let e = t.relative_a_norm_error();
        run.stat(format!("iterations.{name}"), crossing(&e, level));
        run.stat(format!("iterations_total.{name}"), t.iterations as f64);
        run.push(Series::convergence("errors", name, &e, ERR));
    }
    for (name, spec) in &fams {
        run.push(csd_series("csd", name, &spec.values_f64()));
    }
    Ok(())
}

pub(super) fn worstcase(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (n, l1) = (p.usize("n")?, p.f64("lambda1")?);
    let floor = p.f64("cg.error_floor")?;
    let (level, kr) = (p.f64("report.level")?, p.usize("report.k")?);
    let mut cases = Vec::new();
    for c in 1..=4 {
        let spec = diag_family(
            n,
            l1,
            p.f64(&format!("case{c}.lambdan"))?,
            p.f64(&format!("case{c}.rho"))?,
            Orientation::Left,
        )?;
        cases.push(spec);
    }
    let inner = p.f64("case4.inner_weight")?;
    let outer = ((1.0 - (n - 2) as f64 * inner * inner) / 2.0).sqrt();
    let mut w = vec![inner; n];
    w[0] = outer;
    w[n - 1] = outer;
    cases[3] = cases[3].clone().with_weights(w)?;

    for (i, spec) in cases.iter().enumerate() {
        let c = i + 1;
        let group = format!("case{c}");
        let sys = LinearSystem::from_spectrum(spec, group.as_str())?;
        let t = run.cg(EXACT, &sys, &Preconditioner::Identity, &floor_opts(floor, 4 * n))?;
        let e = t.relative_a_norm_error();
        let kappa = spec.condition_number();
        let kmax = e.len().min(n + 1);
        let mut mm = Vec::with_capacity(kmax);
        for k in 0..kmax {
            let v = minmax_bound(spec, k)?.value;
            mm.push(v);
            if v == 0.0 {
                break;
            }
        }
        let kb: Vec<f64> = (0..kmax).map(|k| kappa_bound(kappa, k)).collect();
        let mut kappa_ratio: f64 = 0.0;
        let mut minmax_ratio: f64 = 0.0;
        for k in 0..kmax {
            if e[k] >= level {
                kappa_ratio = kappa_ratio.max(kb[k] / e[k]);
            }
            if k < mm.len() && mm[k] > 0.0 {
                minmax_ratio = minmax_ratio.max(e[k] / mm[k]);
            }
        }
        run.stat(format!("{group}.kappa"), kappa);
        run.stat(format!("{group}.max_kappa_bound_over_error"), kappa_ratio);
        run.stat(format!("{group}.max_error_over_minmax"), minmax_ratio);
        run.stat(format!("{group}.error_at_k"), e.get(kr).copied().unwrap_or(0.0));
        run.stat(format!("{group}.minmax_at_k"), mm.get(kr).copied().unwrap_or(0.0));
        run.push(Series::convergence(&group, "CG", &e, ERR));
        run.push(Series::convergence(&group, "min-max bound", &mm, ERR));
        run.push(Series::convergence(&group, "kappa bound", &kb, ERR));
    }
    Ok(())
}

pub(super) fn models(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (samples, m, n) = (p.usize("wishart.samples")?, p.usize("wishart.m")?, p.usize("wishart.n")?);
    let wfloor = p.f64("wishart.error_floor")?;
    let (grid, pmaxit, pfloor) = (p.usize("poisson.grid")?, p.usize("poisson.maxit")?, p.f64("poisson.error_floor")?);
    let level = p.f64("report.level")?;

    let (mut ex, mut ey) = (Vec::new(), Vec::new());
    let mut kappas = Vec::with_capacity(samples);
    let mut curves = Vec::with_capacity(samples);
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    for s in 0..samples {
        let mut rng = run.rng.fork();
        let a = wishart(m, n, &mut rng)?;
        let eig = sym_eigen(&a)?;
        kappas.push(eig[n - 1] / eig[0]);
        ex.extend_from_slice(&eig);
        ey.extend(std::iter::repeat_n((s + 1) as f64, n));
        let sys = LinearSystem::from_f64(Operator::Dense(a), &ones, format!("wishart{s}"))?.with_reference()?;
        let t = run.cg(NATIVE, &sys, &Preconditioner::Identity, &floor_opts(wfloor, 4 * n))?;
        curves.push(t.relative_a_norm_error());
    }
    let mean = kappas.iter().sum::<f64>() / samples.max(1) as f64;
    run.stat("wishart.mean_kappa", mean);
    run.stat("wishart.min_kappa", kappas.iter().copied().fold(f64::INFINITY, f64::min));
    run.stat("wishart.max_kappa", kappas.iter().copied().fold(0.0, f64::max));
    run.push(Series::new("wishart-spectra", "eigenvalues", SeriesKind::Scatter, ex, ey).labels("lambda", "sample"));
    let kmax = curves.iter().map(Vec::len).max().unwrap_or(1);
    for (s, c) in curves.iter().enumerate() {
        run.push(Series::convergence("wishart-cg", &format!("sample {}", s + 1), c, ERR));
    }
    let kb: Vec<f64> = (0..kmax).map(|k| kappa_bound(mean, k)).collect();
    run.push(Series::convergence("wishart-cg", "kappa bound (mean kappa)", &kb, ERR));

    let a = poisson2d(grid)?;
    let nn = a.rows();
    let b = vec![1.0 / (nn as f64).sqrt(); nn];
    let sys = LinearSystem::from_f64(Operator::Sparse(a), &b, "poisson")?.with_reference()?;
    let mut opts = floor_opts(pfloor, pmaxit);
    opts.track_orthogonality = true;
    let plain = run.cg(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
    opts.variant = CgVariant::Reorthogonalized;
    let reorth = run.cg(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
    let (ep, er) = (plain.relative_a_norm_error(), reorth.relative_a_norm_error());
    let mut gap: f64 = 0.0;
    for (a, b) in ep.iter().zip(&er) {
        if *b < level {
            break;
        }
        gap = gap.max((a.log10() - b.log10()).abs());
    }
    run.stat("poisson.max_decade_gap", gap);
    run.stat("poisson.iterations.standard", crossing(&ep, level));
    run.stat("poisson.iterations.reorthogonalized", crossing(&er, level));
    run.stat("poisson.final_loss.standard", plain.loss_of_orthogonality.last().copied().unwrap_or(0.0));
    run.stat("poisson.final_loss.reorthogonalized", reorth.loss_of_orthogonality.last().copied().unwrap_or(0.0));
    run.push(Series::convergence("poisson", "A-norm error, standard", &ep, "value"));
    run.push(Series::convergence("poisson", "A-norm error, reorthogonalized", &er, "value"));
    run.push(Series::convergence("poisson", "loss of orthogonality, standard", &plain.loss_of_orthogonality, "value"));
    run.push(Series::convergence(
        "poisson",
        "loss of orthogonality, reorthogonalized",
        &reorth.loss_of_orthogonality,
        "value",
    ));
    Ok(())
}

pub(super) fn precond(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let n = p.usize("n")?;
    let spec = diag_family(n, p.f64("lambda1")?, p.f64("lambdan")?, p.f64("rho")?, Orientation::Left)?;
    let mu = diag_family(n, p.f64("mu1")?, p.f64("mun")?, 1.0, Orientation::Left)?;
    let opts = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let (level, coarse) = (p.f64("report.level")?, p.f64("report.coarse")?);

    // P = diag(λ_i/μ_i), so P⁻¹A = diag(μ) and P⁻¹b has entries μ_i b_i/λ_i.
    let b = ExtendedReal::ONE / ExtendedReal::from(n as f64).sqrt();
    let pb: Vec<ExtendedReal> = spec.values().iter().zip(mu.values()).map(|(&l, &m)| m * b / l).collect();
    let orig = LinearSystem::from_spectrum(&spec, "unpreconditioned")?;
    let pre = LinearSystem::new(Operator::diagonal(&mu), pb, "preconditioned")?.with_reference()?;
    let mut found = Vec::new();
    for sys in [&orig, &pre] {
        let t = run.cg(EXACT, sys, &Preconditioner::Identity, &opts)?;
        let e = t.relative_a_norm_error();
        let (k, kc) = (crossing(&e, level), crossing(&e, coarse));
        run.stat(format!("iterations.{}", sys.label), k);
        run.stat(format!("coarse_iterations.{}", sys.label), kc);
        run.stat(format!("coarse_crossing.{}", sys.label), crossing_interp(&e, coarse));
        run.push(Series::convergence("errors", &sys.label, &e, ERR));
        found.push((k, kc));
    }
    run.stat("kappa.unpreconditioned", spec.condition_number());
    run.stat("kappa.preconditioned", mu.condition_number());
    run.stat("iteration_ratio", found[1].0 / found[0].0);
    Ok(())
}

pub(super) fn clusters(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (m, spacing) = (p.usize("cluster.size")?, p.f64("cluster.spacing")?);
    let opts = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let kr = p.usize("report.k")?;
    let csd_k = p.usize_list("csd.k")?;
    let fams = three_families(run)?;
    let mut csds = Vec::new();
    for (name, base) in &fams {
        let spec = clusterize(base, m, spacing)?;
        let sys = LinearSystem::from_spectrum(&spec, *name)?;
        let t = run.cg(EXACT, &sys, &Preconditioner::Identity, &opts)?;
        let e = t.relative_a_norm_error();
        run.stat(format!("error_at_k.{name}"), e.get(kr).copied().unwrap_or(0.0));
        run.push(Series::convergence("errors", name, &e, ERR));
        csds.push(csd_series("csd", &format!("{name}: eigenvalues"), &spec.values_f64()));
        for &k in &csd_k {
            if k >= 1 && k <= t.lanczos_alpha.len() {
                let theta = ritz_values(&t, k)?.values_f64();
                csds.push(csd_series("csd", &format!("{name}: Ritz values k={k}"), &theta));
            }
        }
    }
    csds.into_iter().for_each(|s| run.push(s));
    Ok(())
}

pub(super) fn fp_sensitivity(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (m, spacing) = (p.usize("cluster.size")?, p.f64("cluster.spacing")?);
    let opts = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let (level, match_level) = (p.f64("report.level")?, p.f64("report.match_level")?);
    let csd_k = p.usize_list("csd.k")?;
    let fams = three_families(run)?;
    let mut csds = Vec::new();
    for (name, base) in &fams {
        let sys = LinearSystem::from_spectrum(base, *name)?;
        let native = run.cg(NATIVE, &sys, &Preconditioner::Identity, &opts)?;
        let exact = run.cg(EXACT, &sys, &Preconditioner::Identity, &opts)?;
        let cl = clusterize(base, m, spacing)?;
        let csys = LinearSystem::from_spectrum(&cl, format!("{name}-clustered"))?;
        let clustered = run.cg(EXACT, &csys, &Preconditioner::Identity, &opts)?;
        let (en, ee, ec) =
            (native.relative_a_norm_error(), exact.relative_a_norm_error(), clustered.relative_a_norm_error());
        let (kn, ke) = (crossing(&en, level), crossing(&ee, level));
        run.stat(format!("iterations.native.{name}"), kn);
        run.stat(format!("iterations.exact.{name}"), ke);
        run.stat(format!("delay.{name}"), kn - ke);
        let (mn, mc) = (crossing(&en, match_level), crossing(&ec, match_level));
        run.stat(format!("match.native.{name}"), mn);
        run.stat(format!("match.clustered.{name}"), mc);
        run.stat(format!("match_gap.{name}"), (mn - mc).abs());
        run.push(Series::convergence("native", name, &en, ERR));
        run.push(Series::convergence("clustered-exact", name, &ec, ERR));
        csds.push(csd_series("csd", &format!("{name}: eigenvalues"), &base.values_f64()));
        for &k in &csd_k {
            if k >= 1 && k <= native.lanczos_alpha.len() {
                let theta = ritz_values(&native, k)?.values_f64();
                csds.push(csd_series("csd", &format!("{name}: native Ritz values k={k}"), &theta));
            }
        }
    }
    csds.into_iter().for_each(|s| run.push(s));
    Ok(())
}

pub(super) fn two_vs_three(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let spec = diag_family(p.usize("n")?, p.f64("lambda1")?, p.f64("lambdan")?, p.f64("rho")?, Orientation::Left)?;
    let base = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let sys = LinearSystem::from_spectrum(&spec, "2v3")?;
    let mut finals = Vec::new();
    for (variant, vname) in [(CgVariant::TwoTerm, "two-term"), (CgVariant::ThreeTerm, "three-term")] {
        let opts = CgOptions { variant, ..base.clone() };
        for (mode, mname) in [(EXACT, "exact"), (NATIVE, "double")] {
            let t = run.cg(mode, &sys, &Preconditioner::Identity, &opts)?;
            let e = t.relative_a_norm_error();
            let best = e.iter().copied().fold(f64::INFINITY, f64::min);
            run.stat(format!("final.{mname}.{vname}"), best);
            if mode == NATIVE {
                finals.push(best);
            }
            run.push(Series::convergence("errors", &format!("{vname}, {mname}"), &e, ERR));
        }
    }
    run.stat("final_ratio", finals[1] / finals[0]);
    Ok(())
}

/// Largest relative deviation of `got[k]` from `want[k]`.
fn max_rel_dev(got: &[f64], want: &[f64]) -> f64 {
    want.iter().zip(got).map(|(w, g)| (g - w).abs() / w.abs()).fold(0.0, f64::max)
}

pub(super) fn prescribed(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let n = p.usize("n")?;
    let (lo, hi, ef) =
        (p.f64("system1.residual_low")?, p.f64("system1.residual_high")?, p.f64("system1.error_factor")?);
    let (rf2, ef2) = (p.f64("system2.residual_factor")?, p.f64("system2.error_factor")?);
    let delay = p.usize("estimate.delay")?;
    let curves = [
        (
            "system1",
            (0..n).map(|k| if k % 2 == 0 { lo } else { hi }).collect::<Vec<_>>(),
            (0..n).map(|k| ef.powi(k as i32)).collect::<Vec<_>>(),
        ),
        ("system2", (0..n).map(|k| rf2.powi(k as i32)).collect(), (0..n).map(|k| ef2.powi(k as i32)).collect()),
    ];
    for (name, r, e) in curves {
        let curve = PrescribedCurve::cg(r.clone(), e.clone())?;
        let mut sys = cg_prescribed(&curve)?;
        sys.label = name.into();
        let opts = CgOptions { tol: 0.0, maxit: n, ..Default::default() };
        let t = run.cg(EXACT, &sys, &Preconditioner::Identity, &opts)?;
        let got_r: Vec<f64> = t.true_resnorm.iter().take(n).copied().collect();
        let got_e: Vec<f64> = t.a_norm_error.iter().take(n).copied().collect();
        run.stat(format!("{name}.residual_rtol"), max_rel_dev(&got_r, &r));
        run.stat(format!("{name}.error_rtol"), max_rel_dev(&got_e, &e));
        run.stat(format!("{name}.steps"), t.iterations as f64);
        let est = hs_error_estimate(&t, delay)?;
        let ok_len = est.truncated_from.unwrap_or(est.values.len()).min(n);
        run.push(Series::convergence(name, "prescribed residual norm", &r, "norm"));
        run.push(Series::convergence(name, "prescribed A-norm error", &e, "norm"));
        run.push(Series::convergence(name, "CG residual norm", &got_r, "norm"));
        run.push(Series::convergence(name, "CG A-norm error", &got_e, "norm"));
        if ok_len > 0 {
            run.push(Series::convergence(name, &format!("error estimate d={delay}"), &est.values[..ok_len], "norm"));
        }
    }
    Ok(())
}

/// Piecewise-constant coefficient: `contrast` on the central square
/// `[1/4, 3/4]²`, one elsewhere.
fn inclusion_field(n: usize, contrast: f64) -> Vec<f64> {
    let inside = |i: usize| {
        let t = (i as f64 + 0.5) / n as f64;
        (0.25..0.75).contains(&t)
    };
    (0..n * n).map(|p| if inside(p / n) && inside(p % n) { contrast } else { 1.0 }).collect()
}

pub(super) fn random_rhs(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let (grid, contrast, samples) = (p.usize("grid")?, p.f64("field.contrast")?, p.usize("samples")?);
    let drop_tol = p.f64("ichol.drop_tol")?;
    let opts = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let level = p.f64("report.level")?;
    run.substitute(format!(
        "variable-coefficient 5-point diffusion on a {grid}x{grid} grid (coefficient {contrast} on the central square) \
         replaces the finite element system"
    ));
    let a: SparseMatrixCsr = diffusion2d(grid, &inclusion_field(grid, contrast))?;
    let n = a.rows();
    let pcs = [
        ("laplace", Preconditioner::sparse_cholesky_of(&poisson2d(grid)?)?),
        ("ichol", Preconditioner::incomplete_cholesky(&a, drop_tol)?),
    ];
    let particular = vec![1.0 / (n as f64).sqrt(); n];
    let rhs: Vec<Vec<f64>> = (0..samples).map(|_| run.rng.unit_vector(n)).collect();
    for (pname, pc) in &pcs {
        let mut its = Vec::new();
        for (s, b) in rhs.iter().enumerate() {
            let sys = LinearSystem::from_f64(Operator::Sparse(a.clone()), b, format!("random{s}"))?.with_reference()?;
            let e = run.cg(NATIVE, &sys, pc, &opts)?.relative_a_norm_error();
            its.push(crossing(&e, level));
            run.push(Series::convergence(pname, &format!("random {}", s + 1), &e, ERR));
        }
        let sys = LinearSystem::from_f64(Operator::Sparse(a.clone()), &particular, "particular")?.with_reference()?;
        let e = run.cg(NATIVE, &sys, pc, &opts)?.relative_a_norm_error();
        run.stat(format!("{pname}.iterations.particular"), crossing(&e, level));
        run.stat(format!("{pname}.iterations.random_min"), its.iter().copied().fold(f64::INFINITY, f64::min));
        run.stat(format!("{pname}.iterations.random_max"), its.iter().copied().fold(0.0, f64::max));
        run.push(Series::convergence(pname, "particular", &e, ERR));
    }
    Ok(())
}

pub(super) fn trajectory(run: &mut Run) -> Result<(), ExperimentError> {
    let p = &run.p;
    let spec = diag_family(p.usize("n")?, p.f64("lambda1")?, p.f64("lambdan")?, p.f64("rho")?, Orientation::Left)?;
    let tau = p.f64("tau")?;
    let opts = floor_opts(p.f64("cg.error_floor")?, p.usize("cg.maxit")?);
    let sys = LinearSystem::from_spectrum(&spec, "trajectory")?;
    let native = run.cg(NATIVE, &sys, &Preconditioner::Identity, &CgOptions { retain_basis: true, ..opts.clone() })?;
    let exact = run.cg(EXACT, &sys, &Preconditioner::Identity, &opts)?;
    let map = trajectory_map(&native, &exact, tau)?;
    let en = native.relative_a_norm_error();
    let ee = exact.relative_a_norm_error();
    let (mut kx, mut shifted, mut r1, mut r2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, l) in map.ell.iter().enumerate() {
        if let (Some(l), Some(a), Some(b)) = (l, map.ratio1[k], map.ratio2[k]) {
            kx.push(k as f64);
            shifted.push(en[*l]);
            r1.push(a);
            r2.push(b);
        }
    }
    run.stat("ratio1.min", r1.iter().copied().fold(f64::INFINITY, f64::min));
    run.stat("ratio1.max", r1.iter().copied().fold(0.0, f64::max));
    run.stat("ratio2.max", r2.iter().copied().fold(0.0, f64::max));
    run.stat("defined_steps", kx.len() as f64);
    run.stat("native_iterations", native.iterations as f64);
    run.push(Series::convergence("trajectory", "exact CG", &ee, ERR));
    let pts = |name: &str, y: Vec<f64>, kind| {
        Series::new("trajectory", name, kind, kx.clone(), y)
            .labels("iteration k", ERR)
            .scales(Scale::Linear, Scale::Log)
    };
    run.push(pts("shifted double precision CG", shifted, SeriesKind::Scatter));
    run.push(pts("ratio1", r1, SeriesKind::Line));
    run.push(pts("ratio2", r2, SeriesKind::Line));
    Ok(())
}
