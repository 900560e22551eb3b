//! Seeded benchmark sweeps: phase transitions on Gaussian matrices and
//! spike deconvolution with a Gaussian blur.
//!
//! Every algorithm in a sweep sees the same problem for a given
//! `(cell, run)`, and the whole [`ResultGrid`] is a pure function of the
//! configuration, whatever the thread count.

mod config;
mod output;

pub use config::{zeta_grid, ExperimentConfig, ExperimentKind, MaxIterPolicy, Scale, DESK_INVOCATION_CAP};
pub use output::{cells_csv, emit_csv, emit_svg, results_csv, thresholds_csv, write_outputs, PlotKind};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics;
use crate::model::{
    build_problem, build_problem_with_matrix, derive_seed, generate_matrix, splitmix64, GeneratorSpec, MatrixKind,
    Problem,
};
use crate::solvers::{run_solver, SolverConfig, SolverId};

/// One solver invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub k_prime: usize,
    pub noise_fraction: f64,
    pub noise_mode: String,
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub dist_supp: f64,
    /// Distance between the `min(k, k′)` largest entries; equals
    /// `dist_supp` unless the sparsity is misspecified.
    pub dist_supp_largest: f64,
    pub rel_l2_loss: f64,
    pub wasserstein: f64,
    pub supports_explored: usize,
    pub supports_after_init: usize,
    pub t_best: usize,
    pub loss_best: f64,
    /// Initializer's best loss for warm-started runs.
    pub init_loss: Option<f64>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub k: usize,
    pub algorithm: String,
    pub runs: usize,
    pub success_rate: f64,
    pub mean_dist_supp: f64,
    pub mean_dist_supp_largest: f64,
    pub mean_rel_loss: f64,
    pub mean_wasserstein: f64,
    pub mean_supports_explored: f64,
    pub mean_supports_after_init: f64,
}

/// Largest `k` recovered with success rate `≥ 0.95` at a given `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub m: usize,
    pub algorithm: String,
    pub k: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub kind: String,
    pub n: usize,
    pub algorithms: Vec<String>,
    pub rows: Vec<RunRow>,
    pub cells: Vec<CellSummary>,
    pub thresholds: Vec<Threshold>,
}

impl ResultGrid {
    pub fn cell(&self, m: usize, k: usize, algorithm: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.m == m && c.k == k && c.algorithm == algorithm)
    }

    pub fn rows_for(&self, algorithm: &str) -> impl Iterator<Item = &RunRow> + '_ {
        let a = algorithm.to_string();
        self.rows.iter().filter(move |r| r.algorithm == a)
    }
}

pub const SUCCESS_THRESHOLD: f64 = 0.95;

/// An algorithm entry of a sweep: id, label and step multiplier.
#[derive(Debug, Clone)]
struct Entry {
    id: SolverId,
    label: String,
    eta_mult: f64,
}

fn entries(cfg: &ExperimentConfig) -> Vec<Entry> {
    let mut out = Vec::new();
    for &id in &cfg.algorithms {
        let step_driven = matches!(
            id,
            SolverId::Iht | SolverId::Htp | SolverId::IhtOmp | SolverId::IhtEls | SolverId::HtpOmp | SolverId::HtpEls
        );
        match (&cfg.eta_multipliers, step_driven) {
            (Some(mults), true) => {
                for &mlt in mults {
                    out.push(Entry { id, label: format!("{id}@{mlt}"), eta_mult: mlt });
                }
            }
            _ => out.push(Entry { id, label: id.as_str().to_string(), eta_mult: 1.0 }),
        }
    }
    out
}

/// Seed of the problem for `(m, k, run)`.
pub fn problem_seed(base: u64, m: usize, k: usize, run: usize) -> u64 {
    derive_seed(base ^ splitmix64(((m as u64) << 32) | k as u64), run as u64, 0)
}

struct Task {
    m: usize,
    k: usize,
    run: usize,
}

fn now_ms() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    entries: &[Entry],
    problem: &Problem,
    eta: f64,
    task: &Task,
    seed: u64,
) -> Result<Vec<RunRow>> {
    let truth = problem.truth()?;
    let k_true = task.k;
    let k_solve = problem.k;
    let max_iter = cfg.max_iter.resolve(k_solve);
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let solver_cfg = SolverConfig {
            eta: Some(eta * e.eta_mult),
            max_iter: if e.id == SolverId::Random { cfg.random_draws } else { max_iter },
            seed,
            ..SolverConfig::default()
        };
        let start = if cfg.record_runtime { now_ms() } else { None };
        let r = run_solver(e.id, problem, &solver_cfg)?;
        let runtime_ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        let s_star = &truth.x_star.support;
        rows.push(RunRow {
            kind: cfg.kind.as_str().to_string(),
            m: task.m,
            n: problem.n(),
            k: k_true,
            k_prime: k_solve,
            noise_fraction: cfg.noise_fraction,
            noise_mode: cfg.noise_mode.as_str().to_string(),
            algorithm: e.label.clone(),
            run: task.run,
            seed,
            success: metrics::exact_support_match(&r.x_best, s_star),
            dist_supp: metrics::dist_supp_kprime(&r.x_best, s_star, k_solve),
            dist_supp_largest: metrics::dist_supp_largest(&r.x_best, &truth.x_star, k_true, k_solve),
            rel_l2_loss: metrics::rel_l2_loss(&problem.a, &r.x_best, &problem.y).unwrap_or(f64::NAN),
            wasserstein: metrics::wasserstein1_spikes(&r.x_best, &truth.x_star).unwrap_or(f64::NAN),
            supports_explored: r.supports_explored,
            supports_after_init: r.supports_after_init,
            t_best: r.t_best,
            loss_best: r.loss_best,
            init_loss: r.init_loss,
            runtime_ms,
        });
    }
    Ok(rows)
}

fn map_tasks<F>(tasks: &[Task], threads: usize, f: F) -> Result<Vec<Vec<RunRow>>>
where
    F: Fn(&Task) -> Result<Vec<RunRow>> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            return pool.install(|| tasks.par_iter().map(&f).collect());
        }
    }
    let _ = threads;
    tasks.iter().map(f).collect()
}

/// Phase-transition sweep over `(m, k)` on fresh Gaussian problems.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<ResultGrid> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::PhaseTransition {
        return Err(Error::Config("phase transition needs kind = phase_transition".into()));
    }
    let entries = entries(cfg);
    let mut tasks = Vec::new();
    for &m in &cfg.m_grid {
        for k in cfg.k_values(m) {
            for run in 0..cfg.runs_per_cell {
                tasks.push(Task { m, k, run });
            }
        }
    }
    let rows = map_tasks(&tasks, cfg.threads(), |t| {
        let seed = problem_seed(cfg.base_seed, t.m, t.k, t.run);
        let spec = GeneratorSpec {
            matrix: MatrixKind::Gaussian,
            m: t.m,
            n: cfg.n,
            k: t.k,
            noise_fraction: cfg.noise_fraction,
            noise_mode: cfg.noise_mode,
            amplitude_range: cfg.amplitude_range,
            integer_amplitudes: cfg.integer_amplitudes,
            seed,
        };
        let mut p = build_problem(&spec)?;
        p.k = cfg.solve_k(t.k, cfg.n);
        let eta = linalg::default_step(&p.a);
        run_cell(cfg, &entries, &p, eta, t, seed)
    })?;
    Ok(summarize(cfg, &entries, rows.into_iter().flatten().collect()))
}

/// Deconvolution sweep over `k` on the fixed blur matrix.
pub fn run_deconvolution(cfg: &ExperimentConfig) -> Result<ResultGrid> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Deconvolution {
        return Err(Error::Config("deconvolution needs kind = deconvolution".into()));
    }
    let entries = entries(cfg);
    let base_spec = GeneratorSpec {
        matrix: MatrixKind::Convolution { sigma: cfg.sigma },
        m: cfg.n,
        n: cfg.n,
        k: 1,
        noise_fraction: cfg.noise_fraction,
        noise_mode: cfg.noise_mode,
        amplitude_range: cfg.amplitude_range,
        integer_amplitudes: cfg.integer_amplitudes,
        seed: cfg.base_seed,
    };
    let (a, scaling) = generate_matrix(&base_spec)?;
    let a = Arc::new(a);
    let eta = linalg::default_step(&a);
    let mut tasks = Vec::new();
    for &k in &cfg.k_grid {
        for run in 0..cfg.runs_per_cell {
            tasks.push(Task { m: cfg.n, k, run });
        }
    }
    let rows = map_tasks(&tasks, cfg.threads(), |t| {
        let seed = problem_seed(cfg.base_seed, t.m, t.k, t.run);
        let spec = GeneratorSpec { k: t.k, seed, ..base_spec.clone() };
        let mut p = build_problem_with_matrix(&spec, a.clone(), Some(scaling.clone()))?;
        p.k = cfg.solve_k(t.k, cfg.n);
        run_cell(cfg, &entries, &p, eta, t, seed)
    })?;
    Ok(summarize(cfg, &entries, rows.into_iter().flatten().collect()))
}

/// Dispatches on `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultGrid> {
    match cfg.kind {
        ExperimentKind::PhaseTransition => run_phase_transition(cfg),
        ExperimentKind::Deconvolution => run_deconvolution(cfg),
        other => Err(Error::Config(format!("{} is not a sweep", other.as_str()))),
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

fn summarize(cfg: &ExperimentConfig, entries: &[Entry], rows: Vec<RunRow>) -> ResultGrid {
    let mut cells = Vec::new();
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.m, r.k)).collect();
    keys.dedup();
    for &(m, k) in &keys {
        for e in entries {
            let rs: Vec<&RunRow> = rows.iter().filter(|r| r.m == m && r.k == k && r.algorithm == e.label).collect();
            if rs.is_empty() {
                continue;
            }
            cells.push(CellSummary {
                m,
                k,
                algorithm: e.label.clone(),
                runs: rs.len(),
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64,
                mean_dist_supp: mean(rs.iter().map(|r| r.dist_supp)),
                mean_dist_supp_largest: mean(rs.iter().map(|r| r.dist_supp_largest)),
                mean_rel_loss: mean(rs.iter().map(|r| r.rel_l2_loss)),
                mean_wasserstein: mean(rs.iter().map(|r| r.wasserstein)),
                mean_supports_explored: mean(rs.iter().map(|r| r.supports_explored as f64)),
                mean_supports_after_init: mean(rs.iter().map(|r| r.supports_after_init as f64)),
            });
        }
    }
    let mut thresholds = Vec::new();
    if cfg.kind == ExperimentKind::PhaseTransition {
        for &m in &cfg.m_grid {
            for e in entries {
                let k = cells
                    .iter()
                    .filter(|c| c.m == m && c.algorithm == e.label && c.success_rate >= SUCCESS_THRESHOLD)
                    .map(|c| c.k)
                    .max()
                    .unwrap_or(0);
                thresholds.push(Threshold { m, algorithm: e.label.clone(), k });
            }
        }
    }
    ResultGrid {
        kind: cfg.kind.as_str().to_string(),
        n: cfg.n,
        algorithms: entries.iter().map(|e| e.label.clone()).collect(),
        rows,
        cells,
        thresholds,
    }
}
