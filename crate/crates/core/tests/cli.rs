use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilateral-bdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn out_dir(dir: &TempDir) -> &str {
    dir.path().to_str().unwrap()
}

#[test]
fn bound_reproduces_the_random_walk_constants() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "bound",
        "--model",
        "ex1",
        "--weights",
        &data("ex1.json"),
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("bound.json"));
    assert!((doc["envelope"]["beta"].as_f64().unwrap() - 13.0 / 28.0).abs() < 1e-9);
    assert!((doc["envelope"]["M"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let csv = fs::read_to_string(dir.path().join("contraction.csv")).unwrap();
    assert!(csv.starts_with("t,bound\n"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn bound_reproduces_the_taxi_constants() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "bound",
        "--model",
        "ex2",
        "--weights",
        &data("ex2.json"),
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&dir.path().join("bound.json"));
    assert!((doc["envelope"]["beta"].as_f64().unwrap() - 0.09375).abs() < 1e-9);
}

#[test]
fn weights_that_do_not_contract_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let weights = dir.path().join("ratio2.json");
    fs::write(&weights, r#"{"head":{"-1":1,"1":1},"pos_ratio":2,"neg_ratio":2}"#).unwrap();
    let out = bin(&[
        "bound",
        "--model",
        "ex1",
        "--weights",
        weights.to_str().unwrap(),
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("bound.json").exists());
}

#[test]
fn truncation_plan_fits_inside_the_reference_window() {
    for ex in ["ex1", "ex2"] {
        let dir = TempDir::new().unwrap();
        let out = bin(&[
            "truncate",
            "--model",
            ex,
            "--weights",
            &data(&format!("{ex}.json")),
            "--weights-star",
            &data(&format!("{ex}-star.json")),
            "--eps",
            "1e-6",
            "--out",
            out_dir(&dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let doc = json(&dir.path().join("truncate.json"));
        let n2 = doc["plan"]["n2"].as_i64().unwrap();
        assert!(n2 <= 150 && doc["plan"]["n1"].as_i64().unwrap() == -n2);
        assert!(doc["plan"]["bound"]["value"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn slower_truncated_weights_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "truncate",
        "--model",
        "ex1",
        "--weights",
        &data("ex1-star.json"),
        "--weights-star",
        &data("ex1.json"),
        "--envelope",
        "1,0.3",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oversized_solver_step_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "solve",
        "--model",
        "ex1",
        "--n1",
        "-20",
        "--n2",
        "20",
        "--dt",
        "0.5",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_model_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, r#"{"name":"bad","birth":[],"death":[]}"#).unwrap();
    let out = bin(&[
        "tail",
        "--model",
        model.to_str().unwrap(),
        "--weights",
        &data("ex1.json"),
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&bin(&["no-such-command"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
}

#[test]
fn solve_writes_trajectory_and_moments() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "solve",
        "--model",
        "ex2",
        "--n1",
        "-40",
        "--n2",
        "40",
        "--t-end",
        "2",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 0);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,k,p\n"));
    assert_eq!(traj.lines().count(), 1 + 21 * 81);
    let moments = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert_eq!(moments.lines().count(), 22);
}

#[test]
fn tail_reports_every_threshold_and_time() {
    let dir = TempDir::new().unwrap();
    let out = bin(&[
        "tail",
        "--model",
        "ex1",
        "--n",
        "5,10",
        "--t",
        "1,inf",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&dir.path().join("tail.json"));
    let bounds = doc["bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), 4);
    let limiting_ten: f64 = bounds[3]["value"].as_str().unwrap().parse().unwrap();
    assert!((limiting_ten - 0.88).abs() < 0.01);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = bin(&[
            "simulate",
            "--model",
            "ex2",
            "--t-end",
            "3",
            "--n-paths",
            "20000",
            "--seed",
            "4",
            "--out",
            out_dir(dir),
        ]);
        assert_eq!(code(&out), 0);
    }
    let read = |d: &TempDir| fs::read(d.path().join("histogram.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["reproduce", "ex1", "--dry-run", "--out", out_dir(&dir)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bound") && text.contains("simulate"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn reproduce_writes_figures_and_passing_checks() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["reproduce", "ex1", "--n-paths", "20000", "--out", out_dir(&dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("ex1_summary.json"));
    assert!((summary["envelope"]["beta"].as_f64().unwrap() - 13.0 / 28.0).abs() < 1e-9);
    assert!((summary["envelope_star"]["beta"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    for (name, ok) in summary["checks"].as_object().unwrap() {
        assert_eq!(ok, &Value::Bool(true), "{name}");
    }
    let figure = fs::read_to_string(dir.path().join("ex1_limiting_probabilities.csv")).unwrap();
    assert!(figure.starts_with("t,p_-5,p_-2,p_0,p_2,p_5\n"));
}
