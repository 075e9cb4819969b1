mod support;

use proptest::prelude::*;
use rand::Rng;
use telab::harness::{compute_metrics, evaluate, failure_sweep, reference_zopt, PipelineConfig, RunDoc};
use telab::paths::PathAlgorithm;
use telab::select::SelectionMethod;
use telab::teopt::Phase;
use telab::workload::{gravity_tm, GravityConfig, MassScheme};

use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sweep_is_complete_and_consistent(seed in any::<u64>(), total in 1.0f64..30.0) {
        let mut r = rng(seed);
        let n = r.random_range(4..=6);
        let t = random_connected(&mut r, n, 0.55, &[1.0, 3.0]);
        let before = t.clone();
        let tm = gravity_tm(&t, &GravityConfig { total_demand: total, seed, scheme: MassScheme::UniformRandom }).unwrap();
        let cfg = PipelineConfig::new(PathAlgorithm::Custom, SelectionMethod::Hardnop, u64::MAX);
        let runs = failure_sweep(&t, &tm, &cfg).unwrap();
        prop_assert_eq!(runs.len(), t.edge_count());
        prop_assert_eq!(&t, &before);
        for (e, run) in runs.iter().enumerate() {
            prop_assert_eq!(run.edge, e);
            let res = &run.report.result;
            prop_assert_eq!(res.topology.edge_count(), t.edge_count() - 1);
            let again = compute_metrics(res, reference_zopt(res).unwrap());
            prop_assert_eq!(&again, &run.report.metrics);
            let m = &run.report.metrics;
            prop_assert!(m.satisfied_fraction >= -1e-12 && m.satisfied_fraction <= 1.0 + 1e-9);
            if m.phase == Phase::MinMaxUtilization && m.dropped_pairs == 0 {
                prop_assert!((m.satisfied_fraction - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_connected(&mut r, 6, 0.5, &[1.0, 2.0]);
        let tm = gravity_tm(&t, &GravityConfig { total_demand: 8.0, seed, scheme: MassScheme::UniformRandom }).unwrap();
        for alg in [PathAlgorithm::Vlb, PathAlgorithm::Ksp] {
            let mut cfg = PipelineConfig::new(alg, SelectionMethod::Program, 40);
            cfg.params.seed = seed;
            let a = evaluate(&t, &tm, &cfg);
            let b = evaluate(&t, &tm, &cfg);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(
                    serde_json::to_string(&RunDoc::new(&a, &cfg, None)).unwrap(),
                    serde_json::to_string(&RunDoc::new(&b, &cfg, None)).unwrap()
                ),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "outcomes differ"),
            }
        }
    }

    #[test]
    fn gravity_invariants(seed in any::<u64>(), total in 0.5f64..1e4, degree in any::<bool>()) {
        let t = random_connected(&mut rng(seed), 7, 0.5, &[1.0]);
        let scheme = if degree { MassScheme::Degree } else { MassScheme::UniformRandom };
        let cfg = GravityConfig { total_demand: total, seed, scheme };
        let tm = gravity_tm(&t, &cfg).unwrap();
        prop_assert!((tm.total() - total).abs() <= 1e-9 * total.max(1.0));
        prop_assert!(tm.entries().iter().all(|e| e.demand >= 0.0 && e.src != e.dst));
        prop_assert_eq!(tm.entries().len(), 42);
        prop_assert_eq!(tm, gravity_tm(&t, &cfg).unwrap());
    }
}
