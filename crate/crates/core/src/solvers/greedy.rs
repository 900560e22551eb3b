//! Greedy support builders and single-swap local searches.

use crate::error::Result;
use crate::linalg::{self, LsOptions};
use crate::model::{largest_k, Problem, SparseVector, Support};

use super::{Recorder, SolverConfig, SolverResult};

/// Index of the largest `|c_i|` outside `exclude`, higher index on ties.
fn argmax_outside(c: &[f64], exclude: &Support) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in c.iter().enumerate() {
        if exclude.contains(i) {
            continue;
        }
        if best.is_none_or(|b| v.abs().total_cmp(&c[b].abs()).is_ge()) {
            best = Some(i);
        }
    }
    best
}

struct Fit {
    support: Support,
    values: Vec<f64>,
    loss: f64,
    residual: Vec<f64>,
}

fn fit(problem: &Problem, support: Support, ls: &LsOptions) -> Result<Fit> {
    let values = linalg::restricted_least_squares(&problem.a, support.indices(), &problem.y, ls)?;
    let z = problem.a.matvec_restricted(support.indices(), &values);
    let residual: Vec<f64> = problem.y.iter().zip(&z).map(|(y, z)| y - z).collect();
    let loss = 0.5 * linalg::dot(&residual, &residual);
    Ok(Fit { support, values, loss, residual })
}

/// `k`-element support obtained by dropping the smallest-magnitude entry of
/// a `(k+1)`-element fit, with the same tie rule as `largest_k`.
fn drop_smallest(f: &Fit, k: usize) -> Support {
    let keep = largest_k(&f.values, k);
    Support::new(keep.iter().map(|a| f.support.indices()[a]).collect())
}

/// Orthogonal matching pursuit: `k` greedy additions, each followed by a
/// least-squares refit. Returns the `k`-sparse iterate.
pub fn omp(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    let mut rec = Recorder::new(n, config);
    let mut support = Support::empty();
    let mut r = problem.y.clone();
    for t in 0..problem.k {
        let c = problem.a.matvec_t(&r);
        let Some(j) = argmax_outside(&c, &support) else { break };
        let mut idx = support.into_indices();
        idx.push(j);
        let f = fit(problem, Support::new(idx), &config.ls)?;
        rec.observe(t, &f.support, &f.values, f.loss);
        support = f.support;
        r = f.residual;
    }
    let mut res = rec.finish("omp", 0.0);
    res.x_best = res.x_final.clone();
    res.loss_best = res.loss_final;
    res.t_best = res.iterations_run.saturating_sub(1);
    res.ls_solves = res.iterations_run;
    Ok(res)
}

fn start_point(problem: &Problem, config: &SolverConfig, start: Option<SparseVector>) -> Result<(SparseVector, usize)> {
    match start {
        Some(s) => Ok((s, 0)),
        None => {
            let r = omp(problem, &SolverConfig { record_trace: false, ..config.clone() })?;
            Ok((r.x_best, r.supports_explored))
        }
    }
}

/// OMP with replacement, one swap at a time: add the best correlated
/// outside index, refit on the `k+1` set, drop the smallest entry, refit,
/// and keep the swap only if the loss strictly decreases.
pub fn ompr(problem: &Problem, config: &SolverConfig, start: Option<SparseVector>) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let k = problem.k;
    let (x0, init_explored) = start_point(problem, config, start)?;
    let mut rec = Recorder::new(n, config);
    let mut cur = fit(problem, largest_k(&x0.densify(), k), &config.ls)?;
    let mut ls_solves = 1;
    rec.observe(0, &cur.support, &cur.values, cur.loss);
    let mut halted = false;
    for t in 1..=config.max_iter {
        let c = problem.a.matvec_t(&cur.residual);
        let Some(j) = argmax_outside(&c, &cur.support) else {
            halted = true;
            break;
        };
        let mut grown = cur.support.indices().to_vec();
        grown.push(j);
        let big = fit(problem, Support::new(grown), &config.ls)?;
        let cand = fit(problem, drop_smallest(&big, k), &config.ls)?;
        ls_solves += 2;
        rec.touch(&cand.support);
        if cand.loss < cur.loss {
            cur = cand;
            rec.observe(t, &cur.support, &cur.values, cur.loss);
        } else {
            halted = true;
            break;
        }
    }
    let mut res = rec.finish("ompr", 0.0);
    res.supports_explored += init_explored;
    res.ls_solves = ls_solves;
    res.halted_early = halted;
    Ok(res)
}

/// Exhaustive local search over single swaps: for every outside index `j`
/// fit on `S ∪ {j}`, drop the smallest entry and refit; move to the best of
/// the `n − k` candidates if it strictly lowers the loss, otherwise stop.
/// Each iteration adds `n − k` to `supports_explored`.
pub fn els(problem: &Problem, config: &SolverConfig, start: Option<SparseVector>) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let k = problem.k;
    let (x0, init_explored) = start_point(problem, config, start)?;
    let mut rec = Recorder::new(n, config);
    let mut cur = fit(problem, largest_k(&x0.densify(), k), &config.ls)?;
    let mut ls_solves = 1;
    rec.observe(0, &cur.support, &cur.values, cur.loss);
    let mut explored = init_explored;
    let mut halted = false;
    for t in 1..=config.max_iter {
        let mut best: Option<Fit> = None;
        for j in 0..n {
            if cur.support.contains(j) {
                continue;
            }
            let mut grown = cur.support.indices().to_vec();
            grown.push(j);
            let big = fit(problem, Support::new(grown), &config.ls)?;
            let cand = fit(problem, drop_smallest(&big, k), &config.ls)?;
            ls_solves += 2;
            rec.touch(&cand.support);
            if best.as_ref().is_none_or(|b| cand.loss < b.loss) {
                best = Some(cand);
            }
        }
        explored += n - k;
        match best {
            Some(b) if b.loss < cur.loss => {
                cur = b;
                rec.observe(t, &cur.support, &cur.values, cur.loss);
            }
            _ => {
                halted = true;
                break;
            }
        }
    }
    let mut res = rec.finish("els", 0.0);
    res.supports_explored = explored;
    res.ls_solves = ls_solves;
    res.halted_early = halted;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{build_problem, GeneratorSpec};
    use std::sync::Arc;

    #[test]
    fn omp_on_identity_picks_largest_entries() {
        let p = Problem::new(Arc::new(DenseMatrix::identity(5)), vec![1.0, -4.0, 2.0, 4.0, 0.5], 2).unwrap();
        let r = omp(&p, &SolverConfig::new(1).with_trace()).unwrap();
        assert_eq!(r.x_best.support.indices(), &[1, 3]);
        // Tie between |−4| and |4|: the higher index enters first.
        assert_eq!(r.trace.unwrap().support_sequence[0].indices(), &[3]);
        assert_eq!(r.x_best.values, vec![-4.0, 4.0]);
    }

    #[test]
    fn omp_single_column_has_zero_residual() {
        let p0 = build_problem(&GeneratorSpec::gaussian(10, 12, 1, 4)).unwrap();
        let y = p0.a.column(7).to_vec();
        let p = Problem::new(p0.a.clone(), y, 1).unwrap();
        let r = omp(&p, &SolverConfig::new(1)).unwrap();
        assert_eq!(r.x_best.support.indices(), &[7]);
        assert!(r.loss_best < 1e-20);
    }

    #[test]
    fn local_searches_never_worsen_their_start() {
        for seed in 0..10 {
            let p = build_problem(&GeneratorSpec::gaussian(10, 12, 2, seed)).unwrap();
            let o = omp(&p, &SolverConfig::new(10)).unwrap();
            let r = ompr(&p, &SolverConfig::new(100), None).unwrap();
            let e = els(&p, &SolverConfig::new(100), None).unwrap();
            assert!(r.loss_best <= o.loss_best);
            assert!(e.loss_best <= o.loss_best);
            assert!(e.halted_early && r.halted_early);
        }
    }

    #[test]
    fn els_counts_candidates_per_iteration() {
        let p = build_problem(&GeneratorSpec::gaussian(10, 12, 2, 1)).unwrap();
        let r = els(&p, &SolverConfig::new(100), None).unwrap();
        // Initializer contributes k, each iteration (including the rejecting one) n − k.
        let accepted = r.iterations_run - 1;
        assert_eq!(r.supports_explored, 2 + (accepted + 1) * 10);
    }

    #[test]
    fn optimal_start_is_kept() {
        let p = build_problem(&GeneratorSpec::gaussian(30, 12, 2, 2)).unwrap();
        let xs = p.truth().unwrap().x_star.clone();
        let r = els(&p, &SolverConfig::new(100), Some(xs.clone())).unwrap();
        assert_eq!(r.iterations_run, 1);
        assert_eq!(r.x_best.support, xs.support);
    }
}
