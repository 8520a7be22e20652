use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn gelsolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gelsolve")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

const ARMS: &str = "arms:0.5,0.25,0,0.25";

#[test]
fn trajectory_monodisperse_smoluchowski() {
    let o = gelsolve(&["trajectory", "--model", "smoluchowski", "--initial", "monodisperse"]);
    assert!(o.status.success());
    let (header, rows) = csv(&o);
    assert_eq!(header, ["t", "M", "A", "ell", "alpha", "beta", "second_moment"]);
    assert_eq!(rows.len(), 81);
    for r in &rows {
        let t: f64 = r[0].parse().unwrap();
        let m: f64 = r[1].parse().unwrap();
        let want = if t <= 1.0 { 1.0 } else { 1.0 / t };
        assert!((m - want).abs() < 1e-10, "t = {t}: {m}");
        assert_eq!(r[2], "nan");
        if t >= 1.0 {
            assert_eq!(r[6], "inf");
        }
    }
}

#[test]
fn limits_flory_arms_json() {
    let o = gelsolve(&["limits", "--model", "flory-arms", "--initial", ARMS]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["T_gel"].as_f64().unwrap(), 2.0);
    assert!((v["p_nu_or_c"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert!((v["M_inf"].as_f64().unwrap() - 16.0 / 27.0).abs() < 1e-10);
    assert_eq!(v["beta_inf"].as_f64().unwrap(), 1.0);
}

#[test]
fn limits_rejects_classic_models() {
    let o = gelsolve(&["limits", "--model", "flory", "--initial", "monodisperse"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        &["trajectory", "--model", "smoluchowski", "--initial", "monodisperse", "--grid", "0"][..],
        &["moments", "--model", "flory", "--initial", "power-law:1.5"],
        &["moments", "--model", "smoluchowski-arms", "--initial", "monodisperse"],
        &["moments", "--initial", "monodisperse"],
        &["moments", "--model", "nope", "--initial", "monodisperse"],
        &["validate", "--model", "flory", "--initial", "monodisperse", "--flavor", "nope"],
        &["moments", "--model", "flory", "--initial", "discrete:1=-1"],
    ] {
        let o = gelsolve(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_gelsolve"))
        .args(["moments", "--model", "flory", "--initial", "monodisperse"])
        .env("GELSOLVE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_gelsolve"))
            .args(["trajectory", "--model", "smoluchowski", "--initial", "discrete:1=0.5,2=0.25", "--t-end", "5"])
            .env("GELSOLVE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn validate_exit_codes() {
    let pass = gelsolve(&[
        "validate",
        "--model",
        "smoluchowski",
        "--initial",
        "monodisperse",
        "--t-end",
        "0.9",
        "--grid",
        "10",
        "--mmax",
        "60",
        "--dt",
        "0.01",
    ]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    let (header, rows) = csv(&pass);
    assert_eq!(header, ["t", "analytic", "oracle", "abs_error", "rel_error"]);
    assert_eq!(rows.len(), 10);

    let fail = gelsolve(&[
        "validate",
        "--model",
        "flory",
        "--initial",
        "monodisperse",
        "--t-end",
        "2",
        "--grid",
        "5",
        "--mmax",
        "40",
        "--dt",
        "0.01",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("FAIL"));
}

#[test]
fn validate_arms_counts() {
    let o = gelsolve(&[
        "validate",
        "--model",
        "flory-arms",
        "--initial",
        ARMS,
        "--t-end",
        "0.5",
        "--grid",
        "3",
        "--mmax",
        "32",
        "--amax",
        "32",
        "--dt",
        "0.01",
        "--tol",
        "1e-5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn concentrations_match_tree_formula() {
    let o = gelsolve(&[
        "concentrations",
        "--model",
        "smoluchowski",
        "--initial",
        "monodisperse",
        "--at",
        "0.5",
        "--order",
        "8",
    ]);
    assert!(o.status.success());
    let (header, rows) = csv(&o);
    assert_eq!(header, ["m", "c"]);
    assert_eq!(rows.len(), 8);
    let t: f64 = 0.5;
    let c2: f64 = rows[1][1].parse().unwrap();
    assert!((c2 - t * (-2.0 * t).exp() / 2.0).abs() < 1e-14);
}

#[test]
fn arms_concentrations_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let o = gelsolve(&[
        "concentrations",
        "--model",
        "flory-arms",
        "--initial",
        ARMS,
        "--at",
        "4",
        "--amax",
        "2",
        "--mmax",
        "2",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (header, rows) = csv(&o);
    assert_eq!(header, ["a", "m", "c"]);
    let c02: f64 = rows.iter().find(|r| r[0] == "0" && r[1] == "2").unwrap()[2].parse().unwrap();
    assert!((c02 - 4.0 / 160.0).abs() < 1e-12);
    let v: Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(v["t"].as_f64().unwrap(), 4.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "model = \"flory\"\noutputs = [\"trajectory\", \"limits\"]\n[initial]\nkind = \"monodisperse\"\n\
         [time_grid]\nstart = 0.0\nend = 2.0\ncount = 5\n",
    )
    .unwrap();
    let o = gelsolve(&["moments", "--config", cfg.to_str().unwrap(), "--t-end", "3"]);
    assert!(o.status.success());
    let (header, rows) = csv(&o);
    assert_eq!(header, ["t", "M", "A", "second_moment"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][0].parse::<f64>().unwrap(), 3.0);

    // run emits what the file lists; limits needs an arms model
    let out = dir.path().join("out");
    let o = gelsolve(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = gelsolve(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "flory-arms",
        "--initial",
        ARMS,
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("trajectory.csv").exists());
    assert!(out.join("limits.json").exists());
}

#[test]
fn bad_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "model = \"flory\"\nunknown = 1\n").unwrap();
    assert_eq!(gelsolve(&["moments", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gelsolve(&["moments", "--config", "/nonexistent.toml"]).status.code(), Some(2));
}
