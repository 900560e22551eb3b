use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::NoiseMode;
use crate::solvers::SolverId;

/// Desk runs refuse grids needing more solver invocations than this.
pub const DESK_INVOCATION_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    Deconvolution,
    SingleSolve,
    VerifyTheory,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::Deconvolution => "deconvolution",
            ExperimentKind::SingleSolve => "single_solve",
            ExperimentKind::VerifyTheory => "verify_theory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Config(format!("unknown scale {other:?}, expected desk or paper"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxIterPolicy {
    /// `factor · k` iterations.
    PerSparsity(usize),
    Fixed(usize),
}

impl MaxIterPolicy {
    pub fn resolve(&self, k: usize) -> usize {
        match *self {
            MaxIterPolicy::PerSparsity(f) => f * k.max(1),
            MaxIterPolicy::Fixed(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scale: Scale,
    pub n: usize,
    /// Measurement counts swept by phase transitions.
    pub m_grid: Vec<usize>,
    /// Sparsities. Empty in a phase transition means every
    /// `k_step`-th value of `1..=m/2`.
    pub k_grid: Vec<usize>,
    pub k_step: usize,
    pub runs_per_cell: usize,
    pub noise_fraction: f64,
    pub noise_mode: NoiseMode,
    pub amplitude_range: (f64, f64),
    pub integer_amplitudes: bool,
    /// Blur width of the deconvolution kernel.
    pub sigma: f64,
    pub algorithms: Vec<SolverId>,
    pub max_iter: MaxIterPolicy,
    /// Draws made by `random`.
    pub random_draws: usize,
    /// Solve with `k′ = round(ratio · k)` instead of the true sparsity.
    pub k_prime_ratio: Option<f64>,
    /// Step multipliers for step-driven baselines.
    pub eta_multipliers: Option<Vec<f64>>,
    pub base_seed: u64,
    /// Worker threads; `None` uses every available core.
    pub parallelism: Option<usize>,
    /// Wall-clock timing makes output nondeterministic, so it is opt-in.
    pub record_runtime: bool,
}

/// `m = round(n·ζ)` for `count` values of `ζ` evenly spaced in `[0.05, 1]`.
pub fn zeta_grid(n: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let z = if count == 1 { 1.0 } else { 0.05 + 0.95 * i as f64 / (count - 1) as f64 };
            ((n as f64 * z).round() as usize).max(1)
        })
        .collect();
    out.dedup();
    out
}

fn comparison_algorithms() -> Vec<SolverId> {
    use SolverId::*;
    vec![Sea, SeaOmp, SeaEls, Iht, IhtOmp, IhtEls, Htp, HtpOmp, HtpEls, Omp, Ompr, Els]
}

impl ExperimentConfig {
    pub fn desk(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            scale: Scale::Desk,
            n: 60,
            m_grid: zeta_grid(60, 6),
            k_grid: Vec::new(),
            k_step: 2,
            runs_per_cell: 20,
            noise_fraction: 0.01,
            noise_mode: NoiseMode::AfterA,
            amplitude_range: (1.0, 2.0),
            integer_amplitudes: false,
            sigma: 3.0,
            algorithms: comparison_algorithms(),
            max_iter: MaxIterPolicy::PerSparsity(256),
            random_draws: 1000,
            k_prime_ratio: None,
            eta_multipliers: None,
            base_seed: 0,
            parallelism: None,
            record_runtime: false,
        };
        match kind {
            ExperimentKind::Deconvolution => Self {
                n: 128,
                m_grid: vec![128],
                k_grid: vec![1, 2, 4, 6, 8, 10, 12],
                k_step: 1,
                noise_fraction: 0.1,
                max_iter: MaxIterPolicy::Fixed(1000),
                ..base
            },
            _ => base,
        }
    }

    pub fn paper(kind: ExperimentKind) -> Self {
        let desk = Self::desk(kind);
        match kind {
            ExperimentKind::Deconvolution => Self {
                scale: Scale::Paper,
                n: 500,
                m_grid: vec![500],
                k_grid: (1..=50).collect(),
                runs_per_cell: 200,
                ..desk
            },
            _ => Self {
                scale: Scale::Paper,
                n: 500,
                m_grid: zeta_grid(500, 18),
                k_step: 1,
                runs_per_cell: 1000,
                ..desk
            },
        }
    }

    pub fn for_scale(kind: ExperimentKind, scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(kind),
            Scale::Paper => Self::paper(kind),
        }
    }

    /// Sparsities swept at `m` measurements.
    pub fn k_values(&self, m: usize) -> Vec<usize> {
        if self.kind == ExperimentKind::PhaseTransition {
            if self.k_grid.is_empty() {
                (1..=(m / 2).max(1)).step_by(self.k_step.max(1)).collect()
            } else {
                self.k_grid.iter().copied().filter(|&k| k <= m.min(self.n)).collect()
            }
        } else {
            self.k_grid.clone()
        }
    }

    /// Sparsity handed to the solvers when the true one is `k`.
    pub fn solve_k(&self, k: usize, n: usize) -> usize {
        match self.k_prime_ratio {
            Some(r) => ((r * k as f64).round() as usize).clamp(1, n),
            None => k,
        }
    }

    pub fn threads(&self) -> usize {
        self.parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn entry_count(&self) -> usize {
        let step_driven = |id: &SolverId| {
            matches!(
                id,
                SolverId::Iht | SolverId::Htp | SolverId::IhtOmp | SolverId::IhtEls | SolverId::HtpOmp | SolverId::HtpEls
            )
        };
        let mults = self.eta_multipliers.as_ref().map_or(1, |v| v.len());
        self.algorithms.iter().map(|a| if step_driven(a) { mults } else { 1 }).sum()
    }

    /// Total number of solver runs the sweep performs.
    pub fn invocations(&self) -> usize {
        let cells: usize = match self.kind {
            ExperimentKind::PhaseTransition => self.m_grid.iter().map(|&m| self.k_values(m).len()).sum(),
            _ => self.k_grid.len(),
        };
        cells * self.runs_per_cell * self.entry_count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.runs_per_cell == 0 {
            return bad("runs_per_cell must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty".into());
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return bad(format!("noise_fraction must be finite and non-negative, got {}", self.noise_fraction));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("amplitude_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
        }
        if let Some(r) = self.k_prime_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("k_prime_ratio must be positive, got {r}"));
            }
        }
        if let Some(ms) = &self.eta_multipliers {
            if ms.is_empty() || ms.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("eta_multipliers must be a non-empty list of positive numbers".into());
            }
        }
        if self.max_iter.resolve(1) == 0 {
            return bad("max_iter must be positive".into());
        }
        match self.kind {
            ExperimentKind::PhaseTransition => {
                if self.m_grid.is_empty() || self.m_grid.contains(&0) {
                    return bad("m_grid must be non-empty with positive entries".into());
                }
                if self.k_step == 0 {
                    return bad("k_step must be positive".into());
                }
                if self.m_grid.iter().all(|&m| self.k_values(m).is_empty()) {
                    return bad("no sparsity fits any m in m_grid".into());
                }
            }
            ExperimentKind::Deconvolution => {
                if self.n < 3 {
                    return bad("deconvolution needs n >= 3".into());
                }
                if !(self.sigma > 0.0 && self.sigma.is_finite()) {
                    return bad(format!("sigma must be positive, got {}", self.sigma));
                }
                if self.k_grid.is_empty() || self.k_grid.iter().any(|&k| k == 0 || k > self.n) {
                    return bad(format!("k_grid must be non-empty with entries in 1..={}", self.n));
                }
            }
            _ => {}
        }
        if self.scale == Scale::Desk && self.invocations() > DESK_INVOCATION_CAP {
            return bad(format!(
                "desk scale allows at most {DESK_INVOCATION_CAP} solver runs, this grid needs {}",
                self.invocations()
            ));
        }
        Ok(())
    }

    /// Applies a JSON object of field overrides; unknown keys are errors.
    pub fn with_overrides(&self, overrides: &Value) -> Result<Self> {
        let obj = overrides
            .as_object()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        let mut base = serde_json::to_value(self)?;
        let fields = base.as_object_mut().expect("config serializes to an object");
        for (key, v) in obj {
            match fields.get_mut(key) {
                Some(slot) => *slot = v.clone(),
                None => return Err(Error::Config(format!("unknown config key {key:?}"))),
            }
        }
        serde_json::from_value(base).map_err(|e| Error::Config(format!("config: {e}")))
    }
}
