mod support;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use telab::lp::{Relation, Sense};
use telab::paths::{compute_path_set, PathAlgorithm, PathGroup, PathParams};
use telab::teopt::{allocate, max_throughput_fair, min_max_utilization, optimal_mcf, Allocation, Phase};
use telab::topo::{Demand, Topology};

use support::*;

fn random_demands(r: &mut rand_chacha::ChaCha8Rng, n: usize, count: usize, scale: f64) -> Vec<Demand> {
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d))).collect();
    pairs.shuffle(r);
    let mut ds: Vec<Demand> =
        pairs.into_iter().take(count).map(|(src, dst)| Demand { src, dst, value: scale * r.random_range(0.1..2.0) }).collect();
    ds.sort_by_key(|d| (d.src, d.dst));
    ds
}

fn check_allocation(t: &Topology, a: &Allocation, demands: &[Demand]) {
    let recomputed = a.recompute_loads(t);
    for (x, y) in a.link_load.iter().zip(&recomputed) {
        assert!((x - y).abs() <= 1e-9);
    }
    for p in &a.pairs {
        if !p.zero_demand {
            assert!((p.paths.iter().map(|f| f.weight).sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert!(p.paths.iter().all(|f| f.bandwidth >= 0.0));
    }
    assert_eq!(a.pairs.len(), demands.len());
}

#[test]
fn aggregated_mcf_matches_per_commodity() {
    let mut r = rng(9);
    for _ in 0..25 {
        let n = r.random_range(4..=7);
        let t = random_connected(&mut r, n, 0.5, &[1.0, 2.0, 5.0]);
        let count = r.random_range(1..=6);
        let ds = random_demands(&mut r, n, count, 1.0);
        let agg = optimal_mcf(&t, &ds).unwrap();
        let per = per_commodity_mcf(&t, &ds).unwrap();
        assert!((agg - per).abs() <= 1e-6 * (1.0 + per), "{agg} vs {per}");
    }
}

#[test]
fn floors_force_both_pairs_to_their_minimum() {
    // a-b (cap 1), b-c (cap 2); pair (a,c) over a-b-c, pair (b,c) over b-c
    let t = topology("two-link", 3, &[(0, 1, 1.0), (1, 2, 2.0)]);
    let groups = compute_path_set(&t, PathAlgorithm::Custom, &[(0, 2), (1, 2)], &PathParams::default()).unwrap().groups;
    let ds = [Demand { src: 0, dst: 2, value: 2.0 }, Demand { src: 1, dst: 2, value: 2.0 }];
    let a3 = min_max_utilization(&t, &groups, &ds).unwrap();
    assert!((a3.z - 2.0).abs() < 1e-9);
    let a4 = max_throughput_fair(&t, &groups, &ds, a3.z).unwrap();

    // same program written out by hand: x = (b_ac, b_bc)
    let z = a3.z;
    let by_hand = SmallLp {
        sense: Sense::Maximize,
        objective: vec![1.0, 1.0],
        rows: vec![
            (vec![1.0, 0.0], Relation::Le, 1.0),
            (vec![1.0, 1.0], Relation::Le, 2.0),
            (vec![1.0, 0.0], Relation::Ge, 2.0 / z),
            (vec![0.0, 1.0], Relation::Ge, 2.0 / z),
            (vec![1.0, 0.0], Relation::Le, 2.0),
            (vec![0.0, 1.0], Relation::Le, 2.0),
        ],
    };
    let best = vertex_enumeration(&by_hand).unwrap();
    assert!((a4.total_throughput() - best).abs() < 1e-9);
    for p in &a4.pairs {
        assert!(p.total() >= p.demand / z - 1e-9 && p.total() <= p.demand + 1e-9);
    }
}

fn groups_for(t: &Topology, alg: PathAlgorithm, ds: &[Demand], seed: u64) -> Vec<PathGroup> {
    let pairs: Vec<_> = ds.iter().map(|d| (d.src, d.dst)).collect();
    compute_path_set(t, alg, &pairs, &PathParams { seed, ..PathParams::default() }).unwrap().groups
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn allocation_invariants(seed in any::<u64>(), scale in 0.2f64..6.0, alg_idx in 0usize..5) {
        let mut r = rng(seed);
        let n = r.random_range(4..=7);
        let t = random_connected(&mut r, n, 0.5, &[1.0, 2.0, 4.0]);
        let count = r.random_range(1..=8);
        let ds = random_demands(&mut r, n, count, scale);
        let alg = [PathAlgorithm::Custom, PathAlgorithm::Ksp, PathAlgorithm::Edksp, PathAlgorithm::Ecmp, PathAlgorithm::Vlb][alg_idx];
        let groups = groups_for(&t, alg, &ds, seed);

        let a3 = min_max_utilization(&t, &groups, &ds).unwrap();
        check_allocation(&t, &a3, &ds);
        for p in &a3.pairs {
            prop_assert!((p.total() - p.demand).abs() <= 1e-6);
        }
        let zopt = optimal_mcf(&t, &ds).unwrap();
        prop_assert!(a3.z >= zopt - 1e-6, "z {} below zopt {}", a3.z, zopt);

        let a = allocate(&t, &groups, &ds).unwrap();
        if a3.z > 1.0 + 1e-9 {
            prop_assert_eq!(a.phase, Phase::FairThroughput);
            check_allocation(&t, &a, &ds);
            for (l, &load) in a.link_load.iter().enumerate() {
                prop_assert!(load <= t.link_capacity(l) + 1e-6);
            }
            for p in &a.pairs {
                prop_assert!(p.total() >= p.demand / a3.z - 1e-6 && p.total() <= p.demand + 1e-6);
            }
            let total_d: f64 = ds.iter().map(|d| d.value).sum();
            prop_assert!(a.total_throughput() >= total_d / a3.z - 1e-6);
        } else {
            prop_assert_eq!(a.phase, Phase::MinMaxUtilization);
            prop_assert_eq!(&a, &a3);
        }
    }
}
