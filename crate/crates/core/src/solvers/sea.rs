//! Support exploration.
//!
//! ```text
//! S^t     = largest_k(X^t)
//! x^t     = argmin_{supp(x) ⊆ S^t} F(x)
//! X^{t+1} = X^t − η ∇F(x^t)
//! ```
//!
//! `X` accumulates gradients evaluated at sparse fits; its `k` largest entries
//! pick the next support to try. The returned point is the best `x^t` seen.
//! The memoized form computes the fit and the step `η ∇F(x^S)` once per
//! distinct support and is bit-identical to the naive form.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Result;
use crate::losses::Objective;
use crate::model::{largest_k, Problem, Support};

use super::{Recorder, SolverConfig, SolverResult};

/// Dense steps are cached up to this many floats; beyond it they are
/// recomputed (same arithmetic, so results do not change).
const STEP_CACHE_FLOATS: usize = 1 << 24;

struct Fit {
    values: Vec<f64>,
    loss: f64,
    step: Option<Arc<Vec<f64>>>,
    capped: bool,
}

/// Memoized support exploration.
pub fn sea(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let obj = objective(problem, config)?;
    sea_with_objective(&obj, problem.k, config, config.resolve_eta(problem), true)
}

/// Support exploration recomputing the fit at every iteration.
pub fn sea_naive(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let obj = objective(problem, config)?;
    sea_with_objective(&obj, problem.k, config, config.resolve_eta(problem), false)
}

fn objective<'a>(problem: &'a Problem, config: &SolverConfig) -> Result<Objective<'a>> {
    config.validate(problem.n())?;
    Ok(Objective::new(config.loss, &problem.a, &problem.y)?.with_ls_options(config.ls))
}

/// Support exploration for any objective.
pub fn sea_with_objective(
    obj: &Objective<'_>,
    k: usize,
    config: &SolverConfig,
    eta: f64,
    memoize: bool,
) -> Result<SolverResult> {
    let n = obj.a.cols();
    config.validate(n)?;
    let mut x = config.start(n);
    let mut rec = Recorder::new(n, config);
    let mut cache: HashMap<Support, Fit> = HashMap::new();
    let mut cached_floats = 0usize;
    let mut ls_solves = 0usize;
    let mut capped = false;

    for t in 0..config.max_iter {
        rec.explore(&x);
        let s = largest_k(&x, k);
        let mut compute = || -> Result<Fit> {
            let r = obj.restricted_minimize(s.indices())?;
            ls_solves += 1;
            let (loss, grad) = obj.value_and_gradient_sparse(s.indices(), &r.values);
            let keep = !memoize || cached_floats + n <= STEP_CACHE_FLOATS;
            if memoize && keep {
                cached_floats += n;
            }
            let step = keep.then(|| Arc::new(scaled(eta, &grad)));
            Ok(Fit { values: r.values, loss, step, capped: r.capped })
        };
        let owned;
        let fit = if memoize {
            if !cache.contains_key(&s) {
                let f = compute()?;
                cache.insert(s.clone(), f);
            }
            &cache[&s]
        } else {
            owned = compute()?;
            &owned
        };
        capped |= fit.capped;
        rec.observe(t, &s, &fit.values, fit.loss);
        match &fit.step {
            Some(step) => apply(&mut x, step),
            None => {
                let (_, grad) = obj.value_and_gradient_sparse(s.indices(), &fit.values);
                apply(&mut x, &scaled(eta, &grad));
            }
        }
    }

    let mut res = rec.finish(if memoize { "sea" } else { "sea-naive" }, eta);
    res.ls_solves = ls_solves;
    res.capped = capped;
    Ok(res)
}

fn scaled(eta: f64, g: &[f64]) -> Vec<f64> {
    g.iter().map(|v| eta * v).collect()
}

fn apply(x: &mut [f64], step: &[f64]) {
    for (xi, si) in x.iter_mut().zip(step) {
        *xi -= si;
    }
}
