use approx::assert_relative_eq;
use proptest::prelude::*;

use sea_core::io;
use sea_core::metrics;
use sea_core::model::{build_problem, GeneratorSpec, NoiseMode};
use sea_core::{largest_k, run_solver, SolverConfig, SolverId, SparseVector, Support};

fn magnitudes() -> impl Strategy<Value = Vec<f64>> {
    // Small integer grid so ties are common.
    prop::collection::vec((-4i32..=4).prop_map(f64::from), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn largest_k_dominates_the_rest(v in magnitudes(), k in 0usize..45) {
        let s = largest_k(&v, k);
        prop_assert_eq!(s.len(), k.min(v.len()));
        for i in s.iter() {
            for j in (0..v.len()).filter(|&j| !s.contains(j)) {
                let (a, b) = (v[i].abs(), v[j].abs());
                prop_assert!(a > b || (a == b && i > j));
            }
        }
    }

    #[test]
    fn sparse_vectors_round_trip(v in prop::collection::vec(-10.0f64..10.0, 1..30), k in 1usize..30) {
        let s = largest_k(&v, k);
        let x = SparseVector::restrict(&v, &s);
        let back = io::sparse_from_csv(&io::sparse_to_csv(&x)).unwrap();
        prop_assert_eq!(&back, &x);
        let dense = x.densify();
        for i in 0..v.len() {
            prop_assert_eq!(dense[i], if s.contains(i) { v[i] } else { 0.0 });
        }
    }

    #[test]
    fn wasserstein_is_symmetric_and_shift_exact(
        pos in prop::collection::btree_set(0usize..20, 1..5),
        amp in 0.5f64..3.0,
        shift in 0usize..20,
    ) {
        let idx: Vec<usize> = pos.into_iter().collect();
        let vals = vec![amp; idx.len()];
        let x = SparseVector::new(40, Support::new(idx.clone()), vals.clone()).unwrap();
        let moved = SparseVector::new(40, Support::new(idx.iter().map(|i| i + shift).collect()), vals).unwrap();
        let d = metrics::wasserstein1_spikes(&x, &moved).unwrap();
        assert_relative_eq!(d, shift as f64, epsilon = 1e-9);
        assert_relative_eq!(d, metrics::wasserstein1_spikes(&moved, &x).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn solvers_return_the_best_visited_fit(seed in 0u64..1000, k in 1usize..5) {
        let p = build_problem(&GeneratorSpec::gaussian(20, 40, k, seed).with_noise(0.05, NoiseMode::AfterA)).unwrap();
        for id in [SolverId::Sea, SolverId::Iht, SolverId::Htp] {
            let r = run_solver(id, &p, &SolverConfig::new(60).with_trace()).unwrap();
            let tr = r.trace.as_ref().unwrap();
            let min = tr.per_iteration_loss.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.loss_best, min);
            prop_assert_eq!(tr.per_iteration_loss[r.t_best], min);
            prop_assert!(r.x_best.support.len() <= k);
        }
    }
}

#[test]
fn problem_bundles_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = build_problem(&GeneratorSpec::convolution(32, 2.0, 3, 4).with_noise(0.1, NoiseMode::BeforeA)).unwrap();
    io::write_problem(dir.path(), &p).unwrap();
    let q = io::read_problem(dir.path()).unwrap();
    assert_eq!(q.k, p.k);
    assert_eq!(q.y, p.y);
    assert_eq!(q.a.as_ref(), p.a.as_ref());
    assert_eq!(q.truth, p.truth);
    assert_eq!(q.spec, p.spec);
}

#[test]
fn traces_round_trip_through_csv() {
    let p = build_problem(&GeneratorSpec::gaussian(15, 30, 2, 8)).unwrap();
    let r = run_solver(SolverId::Sea, &p, &SolverConfig::new(40).with_trace()).unwrap();
    let tr = r.trace.unwrap();
    let back = io::trace_from_csv(&io::trace_to_csv(&tr)).unwrap();
    assert_eq!(back.support_sequence, tr.support_sequence);
    assert_eq!(back.new_support_flags, tr.new_support_flags);
    for (a, b) in back.per_iteration_loss.iter().zip(&tr.per_iteration_loss) {
        assert_relative_eq!(*a, *b, max_relative = 1e-15);
    }
}
