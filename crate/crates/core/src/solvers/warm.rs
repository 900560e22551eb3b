use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::{Problem, Support};

use super::{els, htp, iht, niht, omp, ompr, sea, SolverConfig, SolverId, SolverResult};

/// Runs `inner`, then `outer` started from `X⁰ = x̂` (the inner output,
/// densified). `supports_explored` covers both stages;
/// `supports_after_init` counts outer supports the inner stage never saw.
pub fn warm_start(
    inner: SolverId,
    outer: SolverId,
    problem: &Problem,
    inner_config: &SolverConfig,
    outer_config: &SolverConfig,
) -> Result<SolverResult> {
    let first = match inner {
        SolverId::Omp => omp(problem, inner_config)?,
        SolverId::Els => els(problem, inner_config, None)?,
        SolverId::Ompr => ompr(problem, inner_config, None)?,
        other => return Err(Error::Config(format!("{other} cannot initialize a warm start"))),
    };
    let cfg = SolverConfig { init: Some(first.x_best.densify()), ..outer_config.clone() };
    let mut second = match outer {
        SolverId::Sea => sea(problem, &cfg)?,
        SolverId::Iht => iht(problem, &cfg)?,
        SolverId::Htp => htp(problem, &cfg)?,
        SolverId::Niht => niht(problem, &cfg)?,
        other => return Err(Error::Config(format!("{other} does not accept a dense start"))),
    };
    let seen: HashSet<&Support> = first.explored.iter().collect();
    let fresh: Vec<Support> = second.explored.iter().filter(|s| !seen.contains(s)).cloned().collect();
    second.supports_after_init = fresh.len();
    second.supports_explored += first.supports_explored;
    second.ls_solves += first.ls_solves;
    second.init_loss = Some(first.loss_best);
    second.algorithm = format!("{outer}-{inner}");
    let mut all = first.explored;
    all.extend(fresh);
    second.explored = all;
    Ok(second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_problem, GeneratorSpec, MatrixKind, NoiseMode};

    #[test]
    fn warm_sea_never_loses_to_its_initializer() {
        for seed in 0..10 {
            let p = build_problem(&GeneratorSpec::gaussian(20, 40, 5, seed).with_noise(0.01, NoiseMode::AfterA)).unwrap();
            let cfg = SolverConfig::new(200);
            for inner in [SolverId::Omp, SolverId::Els] {
                let base = match inner {
                    SolverId::Omp => omp(&p, &cfg).unwrap(),
                    _ => els(&p, &cfg, None).unwrap(),
                };
                let w = warm_start(inner, SolverId::Sea, &p, &cfg, &cfg).unwrap();
                assert!(w.loss_best <= base.loss_best);
                assert!(w.supports_explored >= base.supports_explored);
                assert!(w.supports_after_init <= w.supports_explored);
            }
        }
    }

    #[test]
    fn orthonormal_warm_start_matches_cold() {
        let mut spec = GeneratorSpec::gaussian(16, 16, 3, 8);
        spec.matrix = MatrixKind::Orthonormal;
        let p = build_problem(&spec).unwrap();
        let cfg = SolverConfig::new(20).with_eta(1.0);
        let cold = sea(&p, &cfg).unwrap();
        let warm = warm_start(SolverId::Omp, SolverId::Sea, &p, &cfg, &cfg).unwrap();
        assert_eq!(cold.x_best.support, warm.x_best.support);
        for (a, b) in cold.x_best.values.iter().zip(&warm.x_best.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
