//! Hard-thresholding baselines: IHT, its normalized variant, and HTP.

use crate::error::Result;
use crate::linalg::{self, norm2};
use crate::losses::Objective;
use crate::model::{largest_k, Problem, SparseVector, Support};

use super::{Recorder, SolverConfig, SolverResult};

/// Halvings allowed per NIHT step before the step is taken as is.
const MAX_HALVINGS: usize = 200;

/// Iterative hard thresholding: `x^t = H_k(X^t)`, `X^{t+1} = x^t − η∇F(x^t)`.
pub fn iht(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let eta = config.resolve_eta(problem);
    let obj = Objective::least_squares(&problem.a, &problem.y);
    let mut x = config.start(n);
    let mut rec = Recorder::new(n, config);
    for t in 0..config.max_iter {
        rec.explore(&x);
        let s = largest_k(&x, problem.k);
        let vals: Vec<f64> = s.iter().map(|i| x[i]).collect();
        let (loss, grad) = obj.value_and_gradient_sparse(s.indices(), &vals);
        rec.observe(t, &s, &vals, loss);
        x = SparseVector::restrict(&x, &s).densify();
        linalg::axpy(-eta, &grad, &mut x);
    }
    Ok(rec.finish("iht", eta))
}

/// Hard thresholding pursuit: `S^{t+1} = L_k(x^t − η∇F(x^t))`, `x^{t+1}` the
/// least-squares fit on `S^{t+1}`; halts when the support repeats.
///
/// A nonzero start is recorded as iterate 0 on its `k` largest entries.
pub fn htp(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let eta = config.resolve_eta(problem);
    let obj = Objective::least_squares(&problem.a, &problem.y).with_ls_options(config.ls);
    let start = config.start(n);
    let mut rec = Recorder::new(n, config);
    let mut prev: Option<Support> = None;
    let mut x = vec![0.0; n];
    if start.iter().any(|&v| v != 0.0) {
        let s = largest_k(&start, problem.k);
        let vals: Vec<f64> = s.iter().map(|i| start[i]).collect();
        rec.explore(&start);
        rec.observe(0, &s, &vals, obj.value_sparse(s.indices(), &vals));
        x = SparseVector { n, support: s.clone(), values: vals }.densify();
        prev = Some(s);
    }
    let mut halted = false;
    let mut solves = 0;
    for _ in 0..config.max_iter {
        let grad = obj.gradient(&x);
        linalg::axpy(-eta, &grad, &mut x);
        rec.explore(&x);
        let s = largest_k(&x, problem.k);
        if prev.as_ref() == Some(&s) {
            halted = true;
            break;
        }
        let fit = obj.restricted_minimize(s.indices())?;
        solves += 1;
        let loss = obj.value_sparse(s.indices(), &fit.values);
        rec.observe(rec.observed, &s, &fit.values, loss);
        x = SparseVector { n, support: s.clone(), values: fit.values }.densify();
        prev = Some(s);
    }
    let mut res = rec.finish("htp", eta);
    res.ls_solves = solves;
    res.halted_early = halted;
    Ok(res)
}

/// Normalized IHT: the step `‖g_Γ‖² / ‖A_Γ g_Γ‖²` (with `g = Aᵀ(y − Ax)`)
/// adapts to the current support `Γ`, and is halved while the support
/// changes and the step exceeds `0.99 ‖Δx‖² / ‖AΔx‖²`.
///
/// From `x = 0` the first support is `largest_k(Aᵀy)`. A vanishing step
/// denominator reuses the previous step (initially `config.eta`, or 1).
pub fn niht(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let n = problem.n();
    config.validate(n)?;
    let a = &problem.a;
    let k = problem.k;
    let mut x = config.start(n);
    let mut gamma = largest_k(&x, k);
    x = SparseVector::restrict(&x, &gamma).densify();
    if x.iter().all(|&v| v == 0.0) {
        gamma = largest_k(&a.matvec_t(&problem.y), k);
    }
    let mut prev_mu = config.eta.unwrap_or(1.0);
    let mut rec = Recorder::new(n, config);
    for t in 0..config.max_iter {
        rec.explore(&x);
        let r: Vec<f64> = problem.y.iter().zip(a.matvec(&x)).map(|(y, z)| y - z).collect();
        let loss = 0.5 * linalg::dot(&r, &r);
        let vals: Vec<f64> = gamma.iter().map(|i| x[i]).collect();
        rec.observe(t, &gamma, &vals, loss);
        let g = a.matvec_t(&r);
        let g_gamma: Vec<f64> = gamma.iter().map(|i| g[i]).collect();
        let num = linalg::dot(&g_gamma, &g_gamma);
        let ag = a.matvec_restricted(gamma.indices(), &g_gamma);
        let den = linalg::dot(&ag, &ag);
        let mut mu = if den > 1e-300 { num / den } else { prev_mu };
        let (mut next, mut next_support) = threshold_step(&x, &g, mu, k);
        for _ in 0..MAX_HALVINGS {
            if next_support == gamma {
                break;
            }
            let d: Vec<f64> = next.iter().zip(&x).map(|(p, q)| p - q).collect();
            let ad = norm2(&a.matvec(&d)).powi(2);
            if ad <= 1e-300 {
                break;
            }
            let omega = 0.99 * linalg::dot(&d, &d) / ad;
            if mu <= omega {
                break;
            }
            mu *= 0.5;
            (next, next_support) = threshold_step(&x, &g, mu, k);
        }
        rec.step_size(mu);
        prev_mu = mu;
        x = next;
        gamma = next_support;
    }
    Ok(rec.finish("niht", prev_mu))
}

fn threshold_step(x: &[f64], g: &[f64], mu: f64, k: usize) -> (Vec<f64>, Support) {
    let full: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi + mu * gi).collect();
    let s = largest_k(&full, k);
    (SparseVector::restrict(&full, &s).densify(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{build_problem, GeneratorSpec, MatrixKind};
    use std::sync::Arc;

    #[test]
    fn iht_on_identity_settles_on_largest_entry() {
        let p = Problem::new(Arc::new(DenseMatrix::identity(3)), vec![3.0, 0.0, -1.0], 1).unwrap();
        let r = iht(&p, &SolverConfig::new(10).with_eta(1.0).with_trace()).unwrap();
        assert_eq!(r.x_best.densify(), vec![3.0, 0.0, 0.0]);
        assert_eq!(r.x_final.densify(), vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn iht_with_tiny_step_stays_at_zero_support_values() {
        let p = build_problem(&GeneratorSpec::gaussian(8, 10, 2, 0)).unwrap();
        let r = iht(&p, &SolverConfig::new(3).with_eta(1e-300).with_trace()).unwrap();
        for v in r.trace.unwrap().iterates.iter().flatten() {
            assert!(v.abs() < 1e-290);
        }
    }

    fn orthonormal(seed: u64) -> Problem {
        let mut spec = GeneratorSpec::gaussian(16, 16, 3, seed);
        spec.matrix = MatrixKind::Orthonormal;
        build_problem(&spec).unwrap()
    }

    #[test]
    fn htp_orthonormal_recovers_and_halts() {
        let p = orthonormal(2);
        let r = htp(&p, &SolverConfig::new(50).with_eta(1.0)).unwrap();
        assert!(r.halted_early);
        assert!(r.iterations_run <= 2);
        let xs = p.truth().unwrap().x_star.densify();
        for (a, b) in r.x_best.densify().iter().zip(&xs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn niht_orthonormal_uses_unit_step() {
        let p = orthonormal(5);
        let r = niht(&p, &SolverConfig::new(10).with_trace()).unwrap();
        for mu in r.trace.unwrap().step_sizes {
            assert!((mu - 1.0).abs() < 1e-12, "{mu}");
        }
    }

    #[test]
    fn niht_halving_contract() {
        let p = build_problem(&GeneratorSpec::gaussian(15, 30, 4, 12)).unwrap();
        let r = niht(&p, &SolverConfig::new(40).with_trace()).unwrap();
        let tr = r.trace.unwrap();
        for t in 0..tr.len() - 1 {
            let x0 = tr.iterate(t, 30).densify();
            let x1 = tr.iterate(t + 1, 30).densify();
            let d: Vec<f64> = x1.iter().zip(&x0).map(|(a, b)| a - b).collect();
            if tr.support_sequence[t] == tr.support_sequence[t + 1] || d.iter().all(|&v| v == 0.0) {
                continue;
            }
            let ad = norm2(&p.a.matvec(&d)).powi(2);
            assert!(tr.step_sizes[t] <= 0.99 * linalg::dot(&d, &d) / ad * (1.0 + 1e-12));
        }
    }
}
