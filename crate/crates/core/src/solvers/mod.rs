//! Sparse solvers behind one interface.
//!
//! Every solver returns a [`SolverResult`] holding the best iterate seen
//! (strictly smaller loss wins, so ties keep the earliest iteration), the
//! final iterate, exploration counters and an optional [`Trace`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LsOptions};
use crate::losses::LossKind;
use crate::model::{Problem, SparseVector, Support};

pub mod greedy;
pub mod oracle;
pub mod random;
pub mod sea;
pub mod thresholding;
pub mod warm;

pub use greedy::{els, omp, ompr};
pub use oracle::oracle_sea;
pub use random::random_search;
pub use sea::{sea, sea_naive};
pub use thresholding::{htp, iht, niht};
pub use warm::warm_start;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size; `None` resolves to `1.8 / σ_max(A)²`.
    pub eta: Option<f64>,
    pub max_iter: usize,
    /// Dense starting point `X⁰` (zeros when absent).
    pub init: Option<Vec<f64>>,
    /// Only random search draws from it.
    pub seed: u64,
    pub record_trace: bool,
    /// Also keep every dense exploration vector `X^t` in the trace.
    pub record_exploration: bool,
    pub loss: LossKind,
    pub ls: LsOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: None,
            max_iter: 1000,
            init: None,
            seed: 0,
            record_trace: false,
            record_exploration: false,
            loss: LossKind::LeastSquares,
            ls: LsOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(max_iter: usize) -> Self {
        Self { max_iter, ..Self::default() }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_exploration(mut self) -> Self {
        self.record_trace = true;
        self.record_exploration = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("step size must be finite and positive (got {eta})")));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "init has length {}, problem has n = {n}",
                    init.len()
                )));
            }
        }
        Ok(())
    }

    /// The step size to use on `problem`.
    pub fn resolve_eta(&self, problem: &Problem) -> f64 {
        self.eta.unwrap_or_else(|| linalg::default_step(&problem.a))
    }

    pub(crate) fn start(&self, n: usize) -> Vec<f64> {
        self.init.clone().unwrap_or_else(|| vec![0.0; n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewSupport {
    pub t: usize,
    pub support: Support,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub per_iteration_loss: Vec<f64>,
    pub new_support_flags: Vec<bool>,
    /// Pairwise-distinct supports in order of first visit.
    pub per_new_support: Vec<NewSupport>,
    pub support_sequence: Vec<Support>,
    /// `x^t` on `support_sequence[t]`.
    pub iterates: Vec<Vec<f64>>,
    /// Dense `X^t`, filled only when exploration recording is on.
    pub exploration: Vec<Vec<f64>>,
    /// Per-iteration step sizes (adaptive solvers only).
    pub step_sizes: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.per_iteration_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_iteration_loss.is_empty()
    }

    /// `x^t` as a sparse vector of dimension `n`.
    pub fn iterate(&self, t: usize, n: usize) -> SparseVector {
        SparseVector {
            n,
            support: self.support_sequence[t].clone(),
            values: self.iterates[t].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub algorithm: String,
    pub x_best: SparseVector,
    pub t_best: usize,
    pub loss_best: f64,
    pub x_final: SparseVector,
    pub loss_final: f64,
    pub iterations_run: usize,
    /// Supports evaluated, counted per the solver's own accounting.
    pub supports_explored: usize,
    /// Distinct supports explored after a warm start's initializer finished.
    pub supports_after_init: usize,
    /// Best loss of a warm start's initializer.
    pub init_loss: Option<f64>,
    /// Restricted minimizations actually performed.
    pub ls_solves: usize,
    pub eta: f64,
    /// Halted on its own criterion before `max_iter`.
    pub halted_early: bool,
    /// A logistic restricted fit hit its norm cap.
    pub capped: bool,
    /// Distinct supports in order of first visit.
    pub explored: Vec<Support>,
    pub trace: Option<Trace>,
}

/// Best-iterate bookkeeping shared by the iterative solvers.
pub(crate) struct Recorder {
    n: usize,
    best: Option<(usize, Support, Vec<f64>, f64)>,
    last: Option<(Support, Vec<f64>, f64)>,
    seen: HashSet<Support>,
    explored: Vec<Support>,
    trace: Option<Trace>,
    record_exploration: bool,
    pub observed: usize,
}

impl Recorder {
    pub fn new(n: usize, config: &SolverConfig) -> Self {
        Self {
            n,
            best: None,
            last: None,
            seen: HashSet::new(),
            explored: Vec::new(),
            trace: config.record_trace.then(Trace::default),
            record_exploration: config.record_exploration,
            observed: 0,
        }
    }

    /// Notes that `support` was evaluated without it becoming an iterate.
    pub fn touch(&mut self, support: &Support) -> bool {
        if self.seen.insert(support.clone()) {
            self.explored.push(support.clone());
            true
        } else {
            false
        }
    }

    /// Records iterate `t`; returns whether its support is new.
    pub fn observe(&mut self, t: usize, support: &Support, values: &[f64], loss: f64) -> bool {
        let is_new = self.touch(support);
        if self.best.as_ref().is_none_or(|b| loss < b.3) {
            self.best = Some((t, support.clone(), values.to_vec(), loss));
        }
        if let Some(tr) = self.trace.as_mut() {
            tr.per_iteration_loss.push(loss);
            tr.new_support_flags.push(is_new);
            if is_new {
                tr.per_new_support.push(NewSupport { t, support: support.clone(), loss });
            }
            tr.support_sequence.push(support.clone());
            tr.iterates.push(values.to_vec());
        }
        self.last = Some((support.clone(), values.to_vec(), loss));
        self.observed += 1;
        is_new
    }

    pub fn explore(&mut self, x: &[f64]) {
        if self.record_exploration {
            if let Some(tr) = self.trace.as_mut() {
                tr.exploration.push(x.to_vec());
            }
        }
    }

    pub fn step_size(&mut self, eta: f64) {
        if let Some(tr) = self.trace.as_mut() {
            tr.step_sizes.push(eta);
        }
    }

    pub fn finish(self, algorithm: &str, eta: f64) -> SolverResult {
        let n = self.n;
        let (t_best, sb, vb, loss_best) =
            self.best.unwrap_or((0, Support::empty(), Vec::new(), f64::INFINITY));
        let (sl, vl, loss_final) = self.last.unwrap_or((Support::empty(), Vec::new(), f64::INFINITY));
        SolverResult {
            algorithm: algorithm.to_string(),
            x_best: SparseVector { n, support: sb, values: vb },
            t_best,
            loss_best,
            x_final: SparseVector { n, support: sl, values: vl },
            loss_final,
            iterations_run: self.observed,
            supports_explored: self.explored.len(),
            supports_after_init: self.explored.len(),
            init_loss: None,
            ls_solves: 0,
            eta,
            halted_early: false,
            capped: false,
            explored: self.explored,
            trace: self.trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    Sea,
    SeaOmp,
    SeaEls,
    OracleSea,
    Iht,
    IhtOmp,
    IhtEls,
    Niht,
    Htp,
    HtpOmp,
    HtpEls,
    Omp,
    Ompr,
    Els,
    Random,
}

impl SolverId {
    pub const ALL: [SolverId; 15] = [
        SolverId::Sea,
        SolverId::SeaOmp,
        SolverId::SeaEls,
        SolverId::OracleSea,
        SolverId::Iht,
        SolverId::IhtOmp,
        SolverId::IhtEls,
        SolverId::Niht,
        SolverId::Htp,
        SolverId::HtpOmp,
        SolverId::HtpEls,
        SolverId::Omp,
        SolverId::Ompr,
        SolverId::Els,
        SolverId::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::Sea => "sea",
            SolverId::SeaOmp => "sea-omp",
            SolverId::SeaEls => "sea-els",
            SolverId::OracleSea => "oracle-sea",
            SolverId::Iht => "iht",
            SolverId::IhtOmp => "iht-omp",
            SolverId::IhtEls => "iht-els",
            SolverId::Niht => "niht",
            SolverId::Htp => "htp",
            SolverId::HtpOmp => "htp-omp",
            SolverId::HtpEls => "htp-els",
            SolverId::Omp => "omp",
            SolverId::Ompr => "ompr",
            SolverId::Els => "els",
            SolverId::Random => "random",
        }
    }

    /// `(initializer, main solver)` for warm-started ids.
    pub fn warm_parts(&self) -> Option<(SolverId, SolverId)> {
        match self {
            SolverId::SeaOmp => Some((SolverId::Omp, SolverId::Sea)),
            SolverId::SeaEls => Some((SolverId::Els, SolverId::Sea)),
            SolverId::IhtOmp => Some((SolverId::Omp, SolverId::Iht)),
            SolverId::IhtEls => Some((SolverId::Els, SolverId::Iht)),
            SolverId::HtpOmp => Some((SolverId::Omp, SolverId::Htp)),
            SolverId::HtpEls => Some((SolverId::Els, SolverId::Htp)),
            _ => None,
        }
    }

    pub fn needs_truth(&self) -> bool {
        matches!(self, SolverId::OracleSea)
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SolverId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver id {s:?}")))
    }
}

/// Runs solver `id` on `problem`.
pub fn run_solver(id: SolverId, problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    config.validate(problem.n())?;
    if config.loss != LossKind::LeastSquares && id != SolverId::Sea {
        return Err(Error::Config(format!(
            "solver {id} supports only the least-squares loss"
        )));
    }
    let resolved;
    let config = if config.eta.is_none() && needs_step(id) {
        resolved = SolverConfig { eta: Some(config.resolve_eta(problem)), ..config.clone() };
        &resolved
    } else {
        config
    };
    if let Some((inner, outer)) = id.warm_parts() {
        let inner_cfg = SolverConfig { init: None, record_trace: false, record_exploration: false, ..config.clone() };
        let mut r = warm_start(inner, outer, problem, &inner_cfg, config)?;
        r.algorithm = id.as_str().to_string();
        return Ok(r);
    }
    match id {
        SolverId::Sea => sea(problem, config),
        SolverId::OracleSea => oracle_sea(problem, config),
        SolverId::Iht => iht(problem, config),
        SolverId::Niht => niht(problem, config),
        SolverId::Htp => htp(problem, config),
        SolverId::Omp => omp(problem, config),
        SolverId::Ompr => ompr(problem, config, None),
        SolverId::Els => els(problem, config, None),
        SolverId::Random => random_search(problem, config),
        _ => unreachable!("warm-started ids handled above"),
    }
}

fn needs_step(id: SolverId) -> bool {
    !matches!(id, SolverId::Omp | SolverId::Ompr | SolverId::Els | SolverId::Random | SolverId::Niht)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in SolverId::ALL {
            assert_eq!(id.as_str().parse::<SolverId>().unwrap(), id);
        }
        assert!("lasso".parse::<SolverId>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0).validate(3).is_err());
        assert!(SolverConfig::new(5).with_eta(-1.0).validate(3).is_err());
        assert!(SolverConfig::new(5).with_init(vec![0.0; 2]).validate(3).is_err());
        assert!(SolverConfig::new(5).with_eta(0.5).validate(3).is_ok());
    }

    #[test]
    fn recorder_keeps_earliest_of_tied_best() {
        let cfg = SolverConfig::new(3).with_trace();
        let mut r = Recorder::new(4, &cfg);
        let s = Support::new(vec![1]);
        let s2 = Support::new(vec![2]);
        r.observe(0, &s, &[1.0], 2.0);
        r.observe(1, &s2, &[1.0], 1.0);
        r.observe(2, &s, &[3.0], 1.0);
        let res = r.finish("x", 1.0);
        assert_eq!(res.t_best, 1);
        assert_eq!(res.supports_explored, 2);
        assert_eq!(res.x_final.values, vec![3.0]);
        let tr = res.trace.unwrap();
        assert_eq!(tr.new_support_flags, vec![true, true, false]);
        assert_eq!(tr.per_new_support.len(), 2);
    }
}
