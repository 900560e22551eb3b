//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; the page
//! parses it and draws on a canvas. The `*_json` functions carry the logic so
//! they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;
use wasm_bindgen::JsValue;

use sea_core::experiments::{run_experiment, ExperimentConfig, ExperimentKind, MaxIterPolicy};
use sea_core::metrics;
use sea_core::model::{build_problem, GeneratorSpec, NoiseMode};
use sea_core::{run_solver, Result, SolverConfig, SolverId};

/// Demo sizes stay small enough to answer within a frame or two.
const MAX_N: usize = 512;
const MAX_RUNS: usize = 200;

#[derive(Serialize)]
struct Recovery {
    algorithm: String,
    x: Vec<f64>,
    dist_supp: f64,
    wasserstein: f64,
    rel_l2_loss: f64,
    supports_explored: usize,
}

#[derive(Serialize)]
struct Deconvolution {
    x_star: Vec<f64>,
    y: Vec<f64>,
    recoveries: Vec<Recovery>,
}

#[derive(Serialize)]
struct LossTrace {
    loss: Vec<f64>,
    new_support: Vec<bool>,
    t_best: usize,
    loss_best: f64,
    supports_explored: usize,
    success: bool,
}

#[derive(Serialize)]
struct CellRate {
    algorithm: String,
    success_rate: f64,
    mean_dist_supp: f64,
    mean_supports_explored: f64,
}

fn parse_algos(list: &str) -> Result<Vec<SolverId>> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

fn check_size(n: usize, k: usize) -> Result<()> {
    if n > MAX_N || k == 0 || k > n {
        return Err(sea_core::Error::Config(format!("need 1 <= k <= n <= {MAX_N}")));
    }
    Ok(())
}

/// Blurred spikes recovered by each listed solver.
pub fn deconvolve_json(n: usize, sigma: f64, k: usize, noise: f64, seed: u64, algos: &str) -> Result<String> {
    check_size(n, k)?;
    let spec = GeneratorSpec::convolution(n, sigma, k, seed).with_noise(noise, NoiseMode::AfterA);
    let problem = build_problem(&spec)?;
    let truth = problem.truth()?;
    let mut recoveries = Vec::new();
    for id in parse_algos(algos)? {
        let r = run_solver(id, &problem, &SolverConfig::new(100 * k).with_seed(seed))?;
        recoveries.push(Recovery {
            algorithm: r.algorithm.clone(),
            x: r.x_best.densify(),
            dist_supp: metrics::dist_supp(&r.x_best, &truth.x_star.support, k),
            wasserstein: metrics::wasserstein1_spikes(&r.x_best, &truth.x_star)?,
            rel_l2_loss: metrics::rel_l2_loss(&problem.a, &r.x_best, &problem.y)?,
            supports_explored: r.supports_explored,
        });
    }
    let out = Deconvolution { x_star: truth.x_star.densify(), y: problem.y.clone(), recoveries };
    Ok(serde_json::to_string(&out)?)
}

/// Per-iteration loss of SEA on a Gaussian instance; `eta_scale` multiplies
/// the default step.
pub fn sea_trace_json(m: usize, n: usize, k: usize, noise: f64, seed: u64, max_iter: usize, eta_scale: f64) -> Result<String> {
    check_size(n, k)?;
    if m == 0 || m > MAX_N || max_iter == 0 || max_iter > 10_000 {
        return Err(sea_core::Error::Config("need 1 <= m <= 512 and 1 <= max_iter <= 10000".into()));
    }
    let problem = build_problem(&GeneratorSpec::gaussian(m, n, k, seed).with_noise(noise, NoiseMode::AfterA))?;
    let eta = sea_core::linalg::default_step(&problem.a) * eta_scale;
    let cfg = SolverConfig::new(max_iter).with_eta(eta).with_trace();
    let r = run_solver(SolverId::Sea, &problem, &cfg)?;
    let trace = r.trace.unwrap_or_default();
    let out = LossTrace {
        loss: trace.per_iteration_loss,
        new_support: trace.new_support_flags,
        t_best: r.t_best,
        loss_best: r.loss_best,
        supports_explored: r.supports_explored,
        success: metrics::exact_support_match(&r.x_best, &problem.truth()?.x_star.support),
    };
    Ok(serde_json::to_string(&out)?)
}

/// Success rates of the listed solvers on one `(m, k)` phase-diagram cell.
pub fn phase_cell_json(m: usize, n: usize, k: usize, runs: usize, seed: u64, algos: &str) -> Result<String> {
    check_size(n, k)?;
    if m == 0 || m > n || runs == 0 || runs > MAX_RUNS {
        return Err(sea_core::Error::Config(format!("need 1 <= m <= n and 1 <= runs <= {MAX_RUNS}")));
    }
    let cfg = ExperimentConfig {
        n,
        m_grid: vec![m],
        k_grid: vec![k],
        runs_per_cell: runs,
        algorithms: parse_algos(algos)?,
        max_iter: MaxIterPolicy::PerSparsity(64),
        base_seed: seed,
        parallelism: Some(1),
        ..ExperimentConfig::desk(ExperimentKind::PhaseTransition)
    };
    let grid = run_experiment(&cfg)?;
    let rates: Vec<CellRate> = grid
        .cells
        .iter()
        .map(|c| CellRate {
            algorithm: c.algorithm.clone(),
            success_rate: c.success_rate,
            mean_dist_supp: c.mean_dist_supp,
            mean_supports_explored: c.mean_supports_explored,
        })
        .collect();
    Ok(serde_json::to_string(&rates)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn deconvolve(n: usize, sigma: f64, k: usize, noise: f64, seed: u32, algos: &str) -> std::result::Result<String, JsValue> {
    js(deconvolve_json(n, sigma, k, noise, u64::from(seed), algos))
}

#[wasm_bindgen]
pub fn sea_trace(
    m: usize,
    n: usize,
    k: usize,
    noise: f64,
    seed: u32,
    max_iter: usize,
    eta_scale: f64,
) -> std::result::Result<String, JsValue> {
    js(sea_trace_json(m, n, k, noise, u64::from(seed), max_iter, eta_scale))
}

#[wasm_bindgen]
pub fn phase_cell(m: usize, n: usize, k: usize, runs: usize, seed: u32, algos: &str) -> std::result::Result<String, JsValue> {
    js(phase_cell_json(m, n, k, runs, u64::from(seed), algos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn deconvolution_returns_one_recovery_per_solver() {
        let v: Value = serde_json::from_str(&deconvolve_json(64, 3.0, 4, 0.0, 1, "sea, omp").unwrap()).unwrap();
        assert_eq!(v["x_star"].as_array().unwrap().len(), 64);
        let recs = v["recoveries"].as_array().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0]["algorithm"], "sea");
        assert!(recs.iter().all(|r| r["x"].as_array().unwrap().len() == 64));
    }

    #[test]
    fn trace_has_one_loss_per_iteration() {
        let v: Value = serde_json::from_str(&sea_trace_json(30, 60, 3, 0.0, 2, 120, 1.0).unwrap()).unwrap();
        let loss = v["loss"].as_array().unwrap();
        assert_eq!(loss.len(), 120);
        let best = loss.iter().map(|l| l.as_f64().unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(best, v["loss_best"].as_f64().unwrap());
    }

    #[test]
    fn phase_cell_is_deterministic() {
        let a = phase_cell_json(20, 40, 3, 5, 9, "sea,omp").unwrap();
        assert_eq!(a, phase_cell_json(20, 40, 3, 5, 9, "sea,omp").unwrap());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(deconvolve_json(64, 3.0, 0, 0.0, 1, "sea").is_err());
        assert!(deconvolve_json(64, 3.0, 4, 0.0, 1, "nope").is_err());
        assert!(sea_trace_json(30, 1000, 3, 0.0, 1, 10, 1.0).is_err());
        assert!(phase_cell_json(50, 40, 3, 5, 1, "sea").is_err());
    }
}
