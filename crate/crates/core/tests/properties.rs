mod common;

use common::{bfs_distances, kernel_oracle, random_connected, random_hyper, rng};
use graphbo_core::io::GraphRecord;
use graphbo_core::mip::{encode_structure, full_assignment};
use graphbo_core::solve::{check_feasible, dual_bound, PartialAssignment};
use graphbo_core::{
    floyd_warshall, gram, k_combined, lcb, posterior, random_baseline, synthetic_oracle, AttributedGraph, BoConfig,
    DomainSpec, GpModel, KernelVariant,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn variant() -> impl Strategy<Value = KernelVariant> {
    prop::sample::select(KernelVariant::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floyd_warshall_matches_bfs(seed in any::<u64>(), n in 1usize..=8, directed in any::<bool>()) {
        let g = random_connected(&mut rng(seed), n, directed, 1, 0);
        let fw = floyd_warshall(&g);
        let bfs = bfs_distances(&g);
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(Some(fw.dist(u, v)), bfs[u][v]);
            }
        }
    }

    #[test]
    fn path_counts_partition_pairs(seed in any::<u64>(), n in 1usize..=7, directed in any::<bool>()) {
        let g = random_connected(&mut rng(seed), n, directed, 2, 1);
        let s = g.summarize();
        prop_assert_eq!(s.length_counts().iter().sum::<usize>(), n * n);
        prop_assert_eq!(s.length_counts()[0], n);
        let labeled: usize = s.labeled_counts_flat().iter().sum();
        prop_assert_eq!(labeled, n * n);
    }

    #[test]
    fn kernel_is_symmetric_and_matches_oracle(
        seed in any::<u64>(), v in variant(), n1 in 1usize..=5, n2 in 1usize..=5, directed in any::<bool>()
    ) {
        let mut r = rng(seed);
        let a = random_connected(&mut r, n1, directed, 2, 1);
        let b = random_connected(&mut r, n2, directed, 2, 1);
        let h = random_hyper(&mut r, v);
        let ab = k_combined(&a, &b, v, &h).unwrap();
        let ba = k_combined(&b, &a, v, &h).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        let oracle = kernel_oracle(&a, &b, v, &h);
        prop_assert!((ab - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn kernel_ignores_node_order(seed in any::<u64>(), v in variant(), n in 1usize..=6, directed in any::<bool>()) {
        let mut r = rng(seed);
        let a = random_connected(&mut r, n, directed, 2, 1);
        let b = random_connected(&mut r, n, directed, 2, 1);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let h = random_hyper(&mut r, v);
        let before = k_combined(&a, &b, v, &h).unwrap();
        let after = k_combined(&a.permuted(&perm), &b, v, &h).unwrap();
        prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
    }

    #[test]
    fn gram_matrices_are_psd(seed in any::<u64>(), v in variant(), t in 1usize..=12) {
        let mut r = rng(seed);
        let points: Vec<_> = (0..t).map(|_| { let n = r.gen_range(1..=5); random_connected(&mut r, n, false, 2, 1) }).collect();
        let h = random_hyper(&mut r, v);
        let k = gram(&points, v, &h).unwrap();
        prop_assert!(k.symmetric_eigenvalues().min() >= -1e-8);
    }

    #[test]
    fn posterior_variance_is_bounded_by_prior(seed in any::<u64>(), v in variant(), t in 1usize..=6) {
        let mut r = rng(seed);
        let points: Vec<_> = (0..t).map(|_| random_connected(&mut r, 4, false, 2, 1)).collect();
        let y = (0..t).map(|_| r.gen_range(-3.0..3.0)).collect();
        let h = random_hyper(&mut r, v);
        let gp = GpModel::condition(points, y, v, h).unwrap();
        let x = random_connected(&mut r, 4, false, 2, 1);
        let (_, var) = posterior(&gp, &x).unwrap();
        let prior = kernel_oracle(&x, &x, v, &h);
        prop_assert!(var >= 0.0);
        prop_assert!(var <= prior * (1.0 + 1e-9));
    }

    #[test]
    fn graph_records_round_trip(seed in any::<u64>(), n in 1usize..=6, directed in any::<bool>()) {
        let g = random_connected(&mut rng(seed), n, directed, 3, 2);
        let json = serde_json::to_string(&GraphRecord::from(&g)).unwrap();
        let back: GraphRecord = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(AttributedGraph::try_from(&back).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn canonical_assignments_satisfy_every_row(seed in any::<u64>(), n in 2usize..=4, directed in any::<bool>()) {
        let g = random_connected(&mut rng(seed), n, directed, 2, 1);
        let m = encode_structure(&DomainSpec::fixed(n, directed, 2, 3), true).unwrap();
        let a = full_assignment(&m, &g).unwrap();
        prop_assert!(check_feasible(&m, &a).unwrap());
    }

    #[test]
    fn dual_bound_underestimates_completions(seed in any::<u64>(), v in variant(), fixed in 0usize..12) {
        let mut r = rng(seed);
        let domain = DomainSpec::fixed(3, false, 2, 2);
        let points: Vec<_> = (0..3).map(|_| random_connected(&mut r, 3, false, 2, 0)).collect();
        let y = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let gp = GpModel::condition(points, y, v, random_hyper(&mut r, v)).unwrap();
        let target = random_connected(&mut r, 3, false, 2, 0);
        let full = PartialAssignment::from_graph(&target, &domain);
        let mut p = PartialAssignment::new(3, &domain);
        for i in 0..fixed.min(p.num_bits()) {
            p.set(i, full.bit(i).unwrap());
        }
        let bound = dual_bound(&p, &domain, &gp, 1.0).unwrap();
        prop_assert!(bound <= lcb(&gp, &target, 1.0).unwrap() + 1e-9);
    }

    #[test]
    fn best_y_never_increases(seed in any::<u64>(), iterations in 0usize..20) {
        let oracle = synthetic_oracle("path_profile", &serde_json::json!({"target": [4.0, 6.0, 6.0, 0.0]})).unwrap();
        let config = BoConfig { initial_samples: 3, iterations, seed, ..BoConfig::default() };
        let h = random_baseline(&oracle, &DomainSpec::fixed(4, false, 1, 1), &config).unwrap();
        prop_assert_eq!(h.len(), 3 + iterations);
        for w in h.records.windows(2) {
            prop_assert!(w[1].best_y <= w[0].best_y);
        }
        let min = h.records.iter().map(|r| r.y).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(h.best_y(), Some(min));
    }
}
