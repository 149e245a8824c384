use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helpercap"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn channel(name: &str) -> PathBuf {
    root().join("channels").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn validate_golden() {
    let o = run(&["validate", p(&channel("mod2_uniform.toml"))]);
    assert_eq!(o.status.code(), Some(0));
    let want = fs::read_to_string(golden("validate_mod2_uniform.txt")).unwrap();
    assert_eq!(stdout(&o), want);
}

#[test]
fn validate_rejects_bad_files() {
    let o = run(&["validate", p(&golden("bad_sum.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sum to 1.2"), "{}", stderr(&o));

    let o = run(&["validate", p(&golden("missing_w.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing field `w`"), "{}", stderr(&o));

    let o = run(&["validate", "/nonexistent.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let mod2 = channel("mod2.toml");
    for args in [
        vec!["capacity", p(&mod2), "--rh", "-0.1"],
        vec!["capacity", p(&mod2)],
        vec!["capacity", p(&mod2), "--rh", "0.3", "--method", "simplex"],
        vec!["sweep", p(&mod2), "--rh-min", "0", "--rh-max", "1", "--steps", "1"],
        vec!["sweep", p(&mod2), "--rh-min", "1", "--rh-max", "0", "--steps", "3"],
        vec![
            "simulate", p(&mod2), "--policy-from-capacity", "0.1", "--n", "10", "--rate-r", "0.1",
            "--rate-rh", "0.1", "--trials", "0",
        ],
        vec!["simulate", p(&mod2), "--n", "10", "--rate-r", "0.1", "--rate-rh", "0.1", "--trials", "3"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn useless_capacity_checks_oracle() {
    let o = run(&["capacity", p(&channel("useless.toml")), "--rh", "0.4", "--check-oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "c"), 0.4);
    assert!(out.contains("oracle_check = pass"));
}

#[test]
fn oracle_breach_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let tol = dir.path().join("tol.toml");
    // A two-level lattice holds only deterministic kernels, far from optimal.
    let o = run(&[
        "capacity",
        p(&channel("mod2.toml")),
        "--rh",
        "0.3",
        "--method",
        "brute_force",
        "--grid-levels",
        "2",
        "--check-oracle",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("oracle_check = fail"));

    fs::write(&tol, "nonsense = 1\n").unwrap();
    let o = run(&["capacity", p(&channel("mod2.toml")), "--rh", "0.3", "--tolerance-overrides", p(&tol)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn all_methods_agree_on_mod2() {
    let o = run(&["capacity", p(&channel("mod2.toml")), "--rh", "0.3", "--method", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let cs: Vec<f64> = out
        .lines()
        .filter_map(|l| l.strip_prefix("c = "))
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(cs.len(), 3);
    let exact = 1.0 - 0.499915958164528 + 0.3;
    assert!((cs[0] - exact).abs() <= 1e-6);
    assert!((cs[1] - exact).abs() <= 2e-2);
    assert!(cs[2] <= cs[0] + 1e-6 && cs[2] >= cs[0] - 0.05);
}

#[test]
fn sweep_csv_and_companion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        p(&channel("mod2.toml")),
        "--rh-min",
        "0",
        "--rh-max",
        "1",
        "--steps",
        "11",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rh,c,r0,method,slack,support_rs,support_ws"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    let gap = rows[0].1 - rows[0].0;
    for &(rh, c) in &rows {
        assert!((c - rh - gap).abs() < 1e-6, "c - rh drifts at {rh}");
    }
    assert!(fs::read_to_string(dir.path().join("sweep.csv.support.csv"))
        .unwrap()
        .starts_with("rh,r,g,weight\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["seed"], 0);
    assert!(manifest["wall_time"].as_f64().unwrap() >= 0.0);
}

fn simulate(rate_r: &str, seed: &str, out: &Path) -> Output {
    run(&[
        "simulate",
        p(&channel("mod2.toml")),
        "--policy-from-capacity",
        "0.1",
        "--n",
        "200",
        "--rate-r",
        rate_r,
        "--rate-rh",
        "0.1",
        "--epsilon",
        "0.46",
        "--epsilon-decoder",
        "0.48",
        "--trials",
        "500",
        "--mode",
        "ensemble",
        "--seed",
        seed,
        "--out",
        p(out),
    ])
}

fn error_rate(csv: &str, row: usize) -> f64 {
    let line = csv.lines().nth(row + 1).unwrap();
    line.split(',').nth(8).unwrap().parse().unwrap()
}

#[test]
fn simulate_below_and_above_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let o = simulate("0.3", "42", &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = simulate("0.9", "42", &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with(
        "n,rate_r,rate_rh,r0,epsilon,trials,helper_failures,decode_errors,error_rate,ci_lo,ci_hi,seed\n"
    ));
    assert_eq!(csv.lines().count(), 3, "rows are appended under one header");
    assert!(error_rate(&csv, 0) < 0.05, "{csv}");
    assert!(error_rate(&csv, 1) > 0.5, "{csv}");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    simulate("0.3", "7", &a);
    simulate("0.3", "7", &b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn simulate_policy_file_and_trial_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trials.csv");
    let o = run(&[
        "simulate",
        p(&channel("mod2.toml")),
        "--policy",
        p(&golden("uniform_policy.toml")),
        "--n",
        "30",
        "--rate-r",
        "0.2",
        "--rate-rh",
        "0.1",
        "--epsilon",
        "0.45",
        "--epsilon-decoder",
        "0.45",
        "--trials",
        "20",
        "--trial-log",
        p(&log),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("trial,outcome,t1\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn simulate_table_guard_exits_1() {
    let o = run(&[
        "simulate",
        p(&channel("mod2.toml")),
        "--policy",
        p(&golden("uniform_policy.toml")),
        "--n",
        "200",
        "--rate-r",
        "0.3",
        "--rate-rh",
        "0.1",
        "--trials",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("simulation too large"));
}

#[test]
fn oracle_lists_bounds() {
    let o = run(&["oracle", p(&channel("mod2.toml")), "--rh", "0.7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let exact = 1.0 - 0.499915958164528 + 0.7;
    assert!((field(&out, "mod_additive") - exact).abs() < 1e-8);
    assert!(field(&out, "large_help_lb") >= field(&out, "large_help_weaker") - 1e-9);
}
