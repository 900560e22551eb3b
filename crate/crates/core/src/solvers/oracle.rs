use crate::error::Result;
use crate::linalg;
use crate::model::{largest_k, Problem};

use super::{Recorder, SolverConfig, SolverResult};

/// Support exploration driven by the ideal update
/// `u^t_i = −η x*_i` for `i ∈ S* \ S^t` (zero elsewhere), `X^{t+1} = X^t − u^t`.
///
/// Halts as soon as `u^t = 0`, i.e. `S* ⊆ S^t`, and returns the least-squares
/// fit on that support. `iterations_run` counts the updates applied.
pub fn oracle_sea(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let truth = problem.truth()?;
    let eta = config.resolve_eta(problem);
    let x_star = &truth.x_star;
    let mut x = config.start(n);
    let mut rec = Recorder::new(n, config);
    let mut updates = 0;
    let mut halted = false;
    let mut ls_solves = 0;
    for t in 0..=config.max_iter {
        rec.explore(&x);
        let s = largest_k(&x, problem.k);
        let missing = x_star.support.difference(&s);
        if config.record_trace || missing.is_empty() || t == config.max_iter {
            let vals = linalg::restricted_least_squares(&problem.a, s.indices(), &problem.y, &config.ls)?;
            ls_solves += 1;
            let loss = ls_loss(problem, s.indices(), &vals);
            rec.observe(t, &s, &vals, loss);
        } else {
            rec.touch(&s);
        }
        if missing.is_empty() {
            halted = true;
            break;
        }
        if t == config.max_iter {
            break;
        }
        for i in missing {
            x[i] += eta * x_star.get(i);
        }
        updates += 1;
    }
    let mut res = rec.finish("oracle-sea", eta);
    // The answer is the fit on the final support, not the best of the trace.
    res.x_best = res.x_final.clone();
    res.loss_best = res.loss_final;
    res.t_best = updates;
    res.iterations_run = updates;
    res.halted_early = halted;
    res.ls_solves = ls_solves;
    Ok(res)
}

fn ls_loss(problem: &Problem, idx: &[usize], vals: &[f64]) -> f64 {
    let z = problem.a.matvec_restricted(idx, vals);
    0.5 * z.iter().zip(&problem.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_problem, GeneratorSpec, MatrixKind};

    #[test]
    fn zero_start_halts_within_k_updates() {
        for seed in 0..20 {
            let p = build_problem(&GeneratorSpec::gaussian(20, 30, 4, seed)).unwrap();
            let r = oracle_sea(&p, &SolverConfig::new(100).with_eta(0.7)).unwrap();
            assert!(r.halted_early);
            assert!(r.iterations_run <= 4);
            assert_eq!(r.x_best.support, p.truth().unwrap().x_star.support);
        }
    }

    #[test]
    fn orthonormal_noiseless_recovers_exactly() {
        let mut spec = GeneratorSpec::gaussian(16, 16, 4, 3);
        spec.matrix = MatrixKind::Orthonormal;
        let p = build_problem(&spec).unwrap();
        let r = oracle_sea(&p, &SolverConfig::new(50).with_eta(1.0)).unwrap();
        let xs = p.truth().unwrap().x_star.densify();
        for (a, b) in r.x_best.densify().iter().zip(&xs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn requires_ground_truth() {
        let p = build_problem(&GeneratorSpec::gaussian(5, 6, 2, 0)).unwrap();
        let bare = Problem::new(p.a.clone(), p.y.clone(), 2).unwrap();
        assert!(oracle_sea(&bare, &SolverConfig::new(5)).is_err());
    }
}
