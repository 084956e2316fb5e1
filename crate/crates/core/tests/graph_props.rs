use std::collections::HashSet;

use hnswpp::io::{generate_synthetic, Recipe};
use hnswpp::lid::build_profile;
use hnswpp::oracle::exact_knn;
use hnswpp::{merge_topk, HnswIndex, IndexConfig, Neighbor, SearchParams, SkipPredicate, Variant};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn neighbors() -> impl Strategy<Value = Vec<Neighbor>> {
    prop::collection::vec((0u32..30, 0u8..10), 0..20).prop_map(|v| {
        let mut seen = HashSet::new();
        v.into_iter()
            .filter(|(l, _)| seen.insert(*l))
            .map(|(label, d)| Neighbor { label, distance: d as f32 })
            .collect()
    })
}

proptest! {
    #[test]
    fn merge_matches_sort_and_truncate(w1 in neighbors(), w2 in neighbors(), k in 1usize..40) {
        let got = merge_topk(&w1, &w2, k);
        let mut all: Vec<Neighbor> = w1.iter().chain(&w2).copied().collect();
        all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.label.cmp(&b.label)));
        let mut seen = HashSet::new();
        all.retain(|n| seen.insert(n.label));
        all.truncate(k);
        prop_assert_eq!(got, all);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn built_indexes_hold_invariants(
        v in variant(),
        n in 20usize..160,
        m in 2usize..8,
        seed in any::<u64>(),
        threshold in prop::option::of(0.0f64..1.0),
    ) {
        let data = generate_synthetic(Recipe::Gaussian { dim: 3, clusters: 4, spread: 0.05 }, n, seed).unwrap();
        let profile = build_profile(&data, 8, seed).unwrap();
        let mut c = IndexConfig::new(m, v);
        c.ef_construction = 24;
        c.ef_search = 24;
        c.top_l = 5;
        c.rng_seed = seed;
        c.lid_threshold = threshold;
        let index = HnswIndex::build(&data, c, Some(&profile)).unwrap();
        let violations = index.check_invariants();
        prop_assert!(violations.is_empty(), "{:?}", violations);
        prop_assert_eq!(index.len(), n);

        let queries = generate_synthetic(Recipe::Uniform { dim: 3 }, 10, seed ^ 1).unwrap();
        for q in queries.iter() {
            let k = 10;
            let out = index.search(q, k).unwrap();
            // Closest-M linking can strand a cluster, so fewer than k is legal.
            prop_assert!(!out.neighbors.is_empty() && out.neighbors.len() <= k.min(n));
            prop_assert!(out.skip_count <= v.branch_count());
            if threshold.is_none() || !v.skips_by_default() {
                prop_assert_eq!(out.skip_count, 0);
            }
            let labels: HashSet<u32> = out.neighbors.iter().map(|x| x.label).collect();
            prop_assert_eq!(labels.len(), out.neighbors.len());
            let exact = exact_knn(&data, q, k).unwrap();
            for (i, nb) in out.neighbors.iter().enumerate() {
                let true_d = exact_knn(&data, q, n).unwrap()
                    .into_iter()
                    .find(|x| x.0 == nb.label)
                    .unwrap()
                    .1;
                prop_assert!((nb.distance as f64 - true_d).abs() <= 1e-4 * true_d.max(1.0));
                prop_assert!(nb.distance as f64 >= exact[i].1 - 1e-4);
            }
            prop_assert!(out.neighbors.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn skip_count_monotone_and_unreachable_threshold_is_inert(
        seed in any::<u64>(),
        predicate in prop::sample::select(vec![SkipPredicate::LidAndDistance, SkipPredicate::LidOnly]),
    ) {
        let data = generate_synthetic(Recipe::Gaussian { dim: 4, clusters: 4, spread: 0.08 }, 300, seed).unwrap();
        let profile = build_profile(&data, 10, seed).unwrap();
        let mut c = IndexConfig::new(6, Variant::Full);
        c.ef_construction = 32;
        c.ef_search = 16;
        c.top_l = 6;
        c.rng_seed = seed;
        c.skip_predicate = predicate;
        let index = HnswIndex::build(&data, c, Some(&profile)).unwrap();
        let queries = generate_synthetic(Recipe::Gaussian { dim: 4, clusters: 4, spread: 0.08 }, 40, seed).unwrap();

        let disabled: Vec<_> = queries.iter().map(|q| index.search(q, 5).unwrap()).collect();
        prop_assert!(disabled.iter().all(|o| o.skip_count == 0));
        let unreachable = SearchParams { ef_search: 16, skip: index.skip_rule(Some(1.0 + 1e-6)) };
        prop_assert!(unreachable.skip.is_some());
        for (q, d) in queries.iter().zip(&disabled) {
            prop_assert_eq!(&index.search_with(q, 5, &unreachable).unwrap(), d);
        }

        let mut previous = usize::MAX;
        for t in [0.0, 0.1, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
            let params = SearchParams { ef_search: 16, skip: index.skip_rule(Some(t)) };
            let total: usize = queries.iter().map(|q| index.search_with(q, 5, &params).unwrap().skip_count).sum();
            prop_assert!(total <= previous, "threshold {t}: {total} > {previous}");
            if t == 0.0 && predicate == SkipPredicate::LidOnly {
                // Every upper-layer entry satisfies lid >= 0, so each branch skips once.
                prop_assert_eq!(total, 2 * queries.len());
            }
            previous = total;
        }
    }
}
