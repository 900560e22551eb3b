use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sea(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sea"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SEA_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn gen(dir: &Path) {
    let o = sea(&["gen-problem", "--n", "40", "--m", "24", "--k", "3", "--noise", "0.01", "--seed", "5", "--out", "prob"], dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn solve_writes_result_trace_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path());
    let o = sea(&["solve", "--algo", "sea", "--problem", "prob", "--k", "3", "--max-iter", "200", "--out", "run"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let result: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run/result.json")).unwrap()).unwrap();
    assert_eq!(result["algorithm"], "sea");
    assert_eq!(result["support_best"].as_array().unwrap().len(), 3);
    let trace = fs::read_to_string(d.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("t,loss,new_support_flag,support\n"));
    assert_eq!(trace.lines().count(), 201);
    let side: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run/effective_config.json")).unwrap()).unwrap();
    assert_eq!(side["max_iter"], 200);
    assert!(side["eta"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_theory_emits_a_report() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path());
    assert_eq!(code(&sea(&["solve", "--algo", "sea", "--problem", "prob", "--max-iter", "50", "--out", "run"], d.path())), 0);
    let o = sea(&["verify-theory", "--problem", "prob", "--trace", "run/trace.csv", "--out", "report.json"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["k"], 3);
    assert!(report["annihilation_max"].as_f64().unwrap() < 1e-8);
    assert!(report["closed_form_max_rel_error"].as_f64().unwrap() < 1e-8);
    assert!(report["bounds"]["t_oracle"].is_number());
    let result: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run/result.json")).unwrap()).unwrap();
    assert_eq!(report["eta"], result["eta"]);
    assert_eq!(fs::read(d.path().join("report.json")).unwrap(), o.stdout);
}

#[test]
fn deconv_is_byte_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"n": 48, "m_grid": [48], "k_grid": [1, 3], "runs_per_cell": 2, "algorithms": ["sea", "omp", "sea-els"]}"#;
    for out in ["a", "b"] {
        let o = sea(&["deconv", "--scale", "desk", "--seed", "7", "--threads", "2", "--out", out, "--config", cfg], d.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (tree(&d.path().join("a")), tree(&d.path().join("b")));
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
    assert!(names.contains(&"results.csv") && names.contains(&"effective_config.json") && names.contains(&"dist_supp.svg"));
    let results = String::from_utf8(a.iter().find(|f| f.0 == "results.csv").unwrap().1.clone()).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 3);
    let side: Value = serde_json::from_slice(&a.iter().find(|f| f.0 == "effective_config.json").unwrap().1).unwrap();
    assert_eq!(side["base_seed"], 7);
    assert_eq!(side["parallelism"], 2);
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path());
    let cases: &[&[&str]] = &[
        &["solve", "--algo", "sea", "--problem", "prob", "--config", r#"{"bogus": 1}"#],
        &["solve", "--algo", "warp", "--problem", "prob"],
        &["solve", "--algo", "sea", "--problem", "missing"],
        &["solve", "--algo", "sea", "--problem", "prob", "--loss", "hinge"],
        &["deconv", "--config", r#"{"runs_per_cell": 1000000}"#],
        &["phase-diagram", "--config", r#"{"m_grid": []}"#],
        &["phase-diagram", "--scale", "huge"],
        &["deconv", "--threads", "0"],
    ];
    for args in cases {
        let o = sea(args, d.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn thread_env_is_validated_and_overridden() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"n": 16, "m_grid": [16], "k_grid": [1], "runs_per_cell": 1, "algorithms": ["omp"]}"#;
    let run = |env: &str, extra: &[&str]| {
        let mut args = vec!["deconv", "--out", "o", "--config", cfg];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_sea")).args(&args).current_dir(d.path()).env("SEA_THREADS", env).output().unwrap()
    };
    assert_eq!(code(&run("zero", &[])), 2);
    assert_eq!(code(&run("zero", &["--threads", "3"])), 0);
    let side: Value = serde_json::from_str(&fs::read_to_string(d.path().join("o/effective_config.json")).unwrap()).unwrap();
    assert_eq!(side["parallelism"], 3);
    assert_eq!(code(&run("1", &[])), 0);
    let side: Value = serde_json::from_str(&fs::read_to_string(d.path().join("o/effective_config.json")).unwrap()).unwrap();
    assert_eq!(side["parallelism"], 1);
}

#[test]
fn divergence_exits_with_three() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path());
    let o = sea(&["solve", "--algo", "iht", "--problem", "prob", "--eta", "1e300", "--max-iter", "20", "--out", "run"], d.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn logistic_loss_on_binary_labels() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("cls");
    fs::create_dir_all(&p).unwrap();
    let rows = [[1.0, 0.2, -0.3], [0.8, -0.1, 0.5], [-1.1, 0.3, 0.1], [-0.7, -0.4, -0.2], [0.3, 1.0, 0.0], [-0.2, -0.9, 0.4]];
    let mut a = String::from("6,3\n");
    for r in rows {
        a.push_str(&format!("{},{},{}\n", r[0], r[1], r[2]));
    }
    fs::write(p.join("A.csv"), a).unwrap();
    fs::write(p.join("y.csv"), "1\n1\n0\n0\n0\n1\n").unwrap();
    fs::write(p.join("meta.json"), r#"{"k": 1}"#).unwrap();
    let o = sea(&["solve", "--algo", "sea", "--loss", "logistic", "--problem", "cls", "--max-iter", "30", "--out", "run"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let side: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run/effective_config.json")).unwrap()).unwrap();
    assert_eq!(side["loss"], "logistic");
    let bad = sea(&["solve", "--algo", "omp", "--loss", "logistic", "--problem", "cls"], d.path());
    assert_eq!(code(&bad), 2);
}
