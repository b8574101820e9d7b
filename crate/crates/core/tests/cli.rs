use std::path::Path;
use std::process::{Command, Output};

const SCALAR: &str = r#"{
    "schema_version": 1,
    "params": {"n": 1, "p": 2.0, "q": 0.5, "alpha": 0.25},
    "backend": {"mode": "kernel", "kernel": {"type": "finite_matrix", "points": [[0.0]], "matrix": [[1.0]]}},
    "sigma": {"variant": "atomic", "dimension": 1, "points": [[0.0]], "weights": [0.5]},
    "mu": {"variant": "atomic", "dimension": 1, "points": [[0.0]], "weights": [0.5]}
}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nlpot"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn scalar_check_and_solve_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SCALAR, &["check"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sigma_norm"));
    let check: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("criteria.json")).unwrap()).unwrap();
    assert_eq!(check["audit"]["violation"], false);

    assert_eq!(run(dir.path(), SCALAR, &["solve"]).status.code(), Some(0));
    let solve: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert!((solve["report"]["u"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("iterations.csv")).unwrap();
    assert!(csv.starts_with("iteration,norm,sup_change,residual\n"));
    let last_norm: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    // u = 1 on an atom of sigma-mass 1/2, so the L^{3/2}(dsigma) norm is 0.5^{2/3}
    assert!((last_norm - 0.5f64.powf(2.0 / 3.0)).abs() < 1e-9);
}

#[test]
fn infinite_criterion_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // atomic sigma has an infinite Wolff potential on its own support
    let cfg = SCALAR
        .replace(r#""n": 1, "p": 2.0, "q": 0.5, "alpha": 0.25"#, r#""n": 2, "p": 2.0, "q": 0.5, "alpha": 0.5"#)
        .replace(r#"{"mode": "kernel", "kernel": {"type": "finite_matrix", "points": [[0.0]], "matrix": [[1.0]]}}"#, r#"{"mode": "wolff"}"#)
        .replace(r#""dimension": 1, "points": [[0.0]]"#, r#""dimension": 2, "points": [[0.0, 0.0]]"#);
    let out = run(dir.path(), &cfg, &["check"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("criteria.json")).unwrap();
    assert!(text.contains("\"+inf\""));
}

#[test]
fn iteration_budget_exhaustion_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SCALAR.replace(r#""schema_version": 1,"#, r#""schema_version": 1, "iteration": {"max_iter": 1},"#);
    assert_eq!(run(dir.path(), &cfg, &["solve"]).status.code(), Some(3));
    let solve: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(solve["report"]["converged"], false);
}

#[test]
fn config_errors_exit_with_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad_schema = SCALAR.replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
    assert_eq!(run(dir.path(), &bad_schema, &["check"]).status.code(), Some(64));
    let unknown = SCALAR.replace(r#""schema_version": 1,"#, r#""schema_version": 1, "bogus": 3,"#);
    assert_eq!(run(dir.path(), &unknown, &["check"]).status.code(), Some(64));
    let bad_q = SCALAR.replace(r#""q": 0.5"#, r#""q": 1.5"#);
    assert_eq!(run(dir.path(), &bad_q, &["solve"]).status.code(), Some(64));
    let missing_file = SCALAR.replace(
        r#""sigma": {"variant": "atomic", "dimension": 1, "points": [[0.0]], "weights": [0.5]}"#,
        r#""sigma": {"file": "nowhere.json"}"#,
    );
    assert_eq!(run(dir.path(), &missing_file, &["check"]).status.code(), Some(64));

    let no_config = Command::new(env!("CARGO_BIN_EXE_nlpot")).arg("check").output().unwrap();
    assert_eq!(no_config.status.code(), Some(64));
    let absent = Command::new(env!("CARGO_BIN_EXE_nlpot"))
        .args(["check", "--config"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(absent.status.code(), Some(64));
}

#[test]
fn measure_files_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sigma.json"),
        r#"{"variant": "atomic", "dimension": 1, "points": [[0.0]], "weights": [0.5]}"#,
    )
    .unwrap();
    let cfg = SCALAR.replace(
        r#""sigma": {"variant": "atomic", "dimension": 1, "points": [[0.0]], "weights": [0.5]}"#,
        r#""sigma": {"file": "sigma.json"}"#,
    );
    assert_eq!(run(dir.path(), &cfg, &["solve"]).status.code(), Some(0));
}

#[test]
fn kernel_test_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SCALAR.replace(
        r#"{"type": "finite_matrix", "points": [[0.0]], "matrix": [[1.0]]}"#,
        r#"{"type": "interval_green"}"#,
    )
    .replace(r#""schema_version": 1,"#, r#""schema_version": 1, "kernel_test": {"wmp_trials": 20},"#);
    assert_eq!(run(dir.path(), &cfg, &["kernel-test"]).status.code(), Some(0));
    let k: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("kernel.json")).unwrap()).unwrap();
    assert!(k["wmp_h_estimate"].as_f64().unwrap() <= 1.0 + 1e-12);
}
