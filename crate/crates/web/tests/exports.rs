use serde_json::Value;

use sea_core::model::{build_problem, GeneratorSpec, NoiseMode};
use sea_core::{run_solver, SolverConfig, SolverId};
use sea_web::{deconvolve_json, sea_trace_json};

// JSON parsing may land one ulp away.
fn close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (u, v) in a.iter().zip(b) {
        assert!((u - v).abs() <= 1e-14 * v.abs().max(1.0), "{u} vs {v}");
    }
}

#[test]
fn deconvolution_matches_a_direct_solve() {
    let v: Value = serde_json::from_str(&deconvolve_json(96, 3.0, 5, 0.02, 11, "sea").unwrap()).unwrap();
    let p = build_problem(&GeneratorSpec::convolution(96, 3.0, 5, 11).with_noise(0.02, NoiseMode::AfterA)).unwrap();
    let r = run_solver(SolverId::Sea, &p, &SolverConfig::new(500).with_seed(11)).unwrap();
    let x: Vec<f64> = v["recoveries"][0]["x"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect();
    close(&x, &r.x_best.densify());
    let y: Vec<f64> = v["y"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect();
    close(&y, &p.y);
}

#[test]
fn step_scale_leaves_the_supports_unchanged() {
    let a: Value = serde_json::from_str(&sea_trace_json(25, 50, 4, 0.0, 3, 80, 1.0).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&sea_trace_json(25, 50, 4, 0.0, 3, 80, 10.0).unwrap()).unwrap();
    assert_eq!(a["new_support"], b["new_support"]);
    assert_eq!(a["t_best"], b["t_best"]);
}
