use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn krylovlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krylovlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("KRYLOVLAB_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn laplacian_1d(path: &Path, n: usize) {
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    s += &format!("{n} {n} {}\n", 2 * n - 1);
    for i in 1..=n {
        s += &format!("{i} {i} 2\n");
    }
    for i in 1..n {
        s += &format!("{} {i} -1\n", i + 1);
    }
    fs::write(path, s).unwrap();
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn list_prints_the_catalog() {
    let t = tempfile::tempdir().unwrap();
    let o = krylovlab(&["list"], t.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().next().unwrap().starts_with("cg-eigdist "));
    assert!(text.lines().last().unwrap().starts_with("gmres-x0 "));
}

#[test]
fn bounds_on_two_points() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("s.txt"), "3\n1\n").unwrap();
    let o = krylovlab(&["bounds", "--spectrum", "s.txt", "--k", "1"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("minmax_bound 0.5\n"), "{text}");
    assert!(text.contains("worstcase_formula 0.5\n"), "{text}");
    assert!(text.contains("active_eigenvalues 1 3\n"), "{text}");

    let j = krylovlab(&["bounds", "--spectrum", "s.txt", "--k", "1", "--json"], t.path());
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["minmax_bound"], 0.5);
}

#[test]
fn run_writes_one_csv_per_group_deterministically() {
    let t = tempfile::tempdir().unwrap();
    let a = krylovlab(&["run", "--name", "cg-clusters", "--seed", "1", "--out", "a"], t.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(csv_files(&t.path().join("a")), vec!["csd.csv", "errors.csv"]);
    let b = krylovlab(&["run", "--name", "cg-clusters", "--seed", "1", "--out", "a2"], t.path());
    for f in ["csd.csv", "errors.csv", "metadata.json"] {
        let x = fs::read(t.path().join("a").join(f)).unwrap();
        let y = fs::read(t.path().join("a2").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    assert_eq!(stdout(&a).replace("a/", "a2/"), stdout(&b));
    let csv = fs::read_to_string(t.path().join("a/errors.csv")).unwrap();
    assert!(csv.starts_with("series,x,y\n"));
}

#[test]
fn svg_flag_adds_plots() {
    let t = tempfile::tempdir().unwrap();
    let o = krylovlab(&["run", "--name", "cg-eigdist", "--out", "o", "--svg"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svgs = fs::read_dir(t.path().join("o"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, csv_files(&t.path().join("o")).len());
}

#[test]
fn overrides_are_applied_and_checked() {
    let t = tempfile::tempdir().unwrap();
    let o = krylovlab(&["run", "--name", "cg-eigdist", "--set", "n=3", "--set", "lambdan=3", "--out", "o"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(t.path().join("o/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["params"]["n"], "3");

    let bad = krylovlab(&["run", "--name", "cg-eigdist", "--set", "rho.lfet=0.5"], t.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("rho.left"), "{}", stderr(&bad));
    assert!(bad.stdout.is_empty());

    let kind = krylovlab(&["run", "--name", "cg-eigdist", "--set", "n=many"], t.path());
    assert_eq!(kind.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    let t = tempfile::tempdir().unwrap();
    for args in [
        &["run"][..],
        &["run", "--name", "cg-eigdist", "--frobnicate"],
        &["run", "--name", "cg-eigdist", "--set", "novalue"],
        &["run", "--name", "cg-eigdist", "--all"],
        &["solve", "--matrix", "x.mtx", "--method", "bicg"],
        &["nonsense"],
    ] {
        let o = krylovlab(args, t.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("Usage") || stderr(&o).contains("--help"), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    // Unknown flags print the usage line itself.
    let o = krylovlab(&["run", "--name", "cg-eigdist", "--frobnicate"], t.path());
    assert!(stderr(&o).contains("Usage: krylovlab run"), "{}", stderr(&o));
}

#[test]
fn expected_errors_exit_with_one() {
    let t = tempfile::tempdir().unwrap();
    let unknown = krylovlab(&["run", "--name", "cg-nothing"], t.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).contains("cg-nothing"));

    let missing =
        krylovlab(&["run", "--name", "gmres-backward", "--set", "data.source=file", "--data", "nowhere"], t.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("fs1836"), "{}", stderr(&missing));

    let nofile = krylovlab(&["mm-info", "absent.mtx"], t.path());
    assert_eq!(nofile.status.code(), Some(1));
}

#[test]
fn config_batch_runs_each_entry_in_its_directory() {
    let t = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 3, "runs": [
        {"name": "cg-eigdist", "set": {"n": 3, "lambdan": 3}},
        {"name": "cg-2v3", "set": {"n": 12}}
    ]}"#;
    fs::write(t.path().join("batch.json"), cfg).unwrap();
    let o = krylovlab(&["run", "--config", "batch.json", "--out", "b", "--jobs", "2"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("b/cg-2v3/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["params"]["n"], "12");
    assert!(t.path().join("b/cg-eigdist/errors.csv").is_file());
    // Output order follows the batch file, not completion order.
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.starts_with("b/cg-eigdist/"), "{first}");

    fs::write(t.path().join("bad.json"), r#"{"runs": [{"name": "cg-eigdist", "set": {"n": [1]}}]}"#).unwrap();
    let bad = krylovlab(&["run", "--config", "bad.json"], t.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn solve_and_mm_info_on_a_laplacian() {
    let t = tempfile::tempdir().unwrap();
    laplacian_1d(&t.path().join("lap.mtx"), 20);
    let info = krylovlab(&["mm-info", "lap.mtx"], t.path());
    assert!(info.status.success());
    let text = stdout(&info);
    assert!(text.contains("symmetry symmetric\n"));
    assert!(text.contains("size 20 x 20\n"));
    assert!(text.contains("nonzeros 58\n"));
    // κ of the 1D Laplacian: cot²(π/(2(n+1))).
    let kappa: f64 = text.lines().find_map(|l| l.strip_prefix("condition_number ")).unwrap().parse().unwrap();
    let expect = (std::f64::consts::PI / 42.0).tan().powi(-2);
    assert!((kappa / expect - 1.0).abs() < 1e-10, "{kappa} vs {expect}");

    for method in ["cg", "gmres"] {
        let o = krylovlab(&["solve", "--matrix", "lap.mtx", "--method", method, "--tol", "1e-10"], t.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("termination tolerance_met\n"), "{text}");
        // ones/sqrt(N) has ten distinct eigencomponents for this symmetric problem.
        assert!(text.contains("iterations 10\n"), "{text}");
    }
    let pc = krylovlab(
        &["solve", "--matrix", "lap.mtx", "--method", "cg", "--precond", "ichol", "--drop-tol", "0"],
        t.path(),
    );
    assert!(stdout(&pc).contains("iterations 1\n"), "{}", stdout(&pc));
}

#[test]
fn cg_rejects_nonsymmetric_matrices() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("u.mtx"), "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n1 2 1\n2 2 1\n")
        .unwrap();
    let o = krylovlab(&["solve", "--matrix", "u.mtx", "--method", "cg"], t.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("symmetric"));
    let g = krylovlab(&["solve", "--matrix", "u.mtx", "--method", "gmres"], t.path());
    assert!(g.status.success(), "{}", stderr(&g));
}

#[test]
fn constructed_systems_follow_their_curves() {
    let t = tempfile::tempdir().unwrap();
    let cg: String = (0..8).map(|k| format!("{} {}\n", 1.0 + (k % 2) as f64, 0.5f64.powi(k))).collect();
    fs::write(t.path().join("cg.txt"), cg).unwrap();
    let o = krylovlab(&["construct", "--kind", "cg", "--curve", "cg.txt", "--out", "c"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for line in stdout(&o).lines().filter(|l| l.starts_with("max_relative_deviation")) {
        let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(v <= 1e-6, "{line}");
    }
    let info = stdout(&krylovlab(&["mm-info", "c_matrix.mtx"], t.path()));
    assert!(info.contains("size 8 x 8\n"), "{info}");

    fs::write(t.path().join("g.txt"), "1\n0.5\n0.5\n0.1\n").unwrap();
    fs::write(t.path().join("e.txt"), "1 1\n1 -1\n3\n4\n").unwrap();
    let g = krylovlab(&["construct", "--kind", "gmres", "--curve", "g.txt", "--eigs", "e.txt", "--out", "g"], t.path());
    assert!(g.status.success(), "{}", stderr(&g));
    let solve = krylovlab(
        &["solve", "--matrix", "g_matrix.mtx", "--rhs", "g_rhs.mtx", "--method", "gmres", "--tol", "1e-13", "--trace"],
        t.path(),
    );
    let text = stdout(&solve);
    let row = |k: usize| -> f64 {
        let l = text.lines().find(|l| l.starts_with(&format!("{k},"))).unwrap();
        l.split(',').nth(1).unwrap().parse().unwrap()
    };
    for (k, f) in [(1, 0.5), (2, 0.5), (3, 0.1)] {
        assert!((row(k) - f).abs() <= 1e-6 * f, "step {k}: {}", row(k));
    }

    fs::write(t.path().join("up.txt"), "1\n2\n").unwrap();
    let bad = krylovlab(&["construct", "--kind", "gmres", "--curve", "up.txt"], t.path());
    assert_eq!(bad.status.code(), Some(1));
}
