use rand::seq::index::sample;

use crate::error::Result;
use crate::linalg;
use crate::model::{derive_seed, seeded_rng, Problem, Support, TAG_SOLVER};

use super::{Recorder, SolverConfig, SolverResult};

/// Least squares on `max_iter` uniformly drawn `k`-subsets; keeps the best.
pub fn random_search(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let mut rng = seeded_rng(derive_seed(config.seed, 0, TAG_SOLVER));
    let mut rec = Recorder::new(n, config);
    for t in 0..config.max_iter {
        let s = Support::new(sample(&mut rng, n, problem.k).into_vec());
        let vals = linalg::restricted_least_squares(&problem.a, s.indices(), &problem.y, &config.ls)?;
        let z = problem.a.matvec_restricted(s.indices(), &vals);
        let loss = 0.5 * z.iter().zip(&problem.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        rec.observe(t, &s, &vals, loss);
    }
    let mut res = rec.finish("random", 0.0);
    res.ls_solves = config.max_iter;
    Ok(res)
}
