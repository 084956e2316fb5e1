use hnswpp::io::{generate_synthetic, uniform_ball, Recipe};
use hnswpp::lid::{self, assign_layers_with_branches, build_profile, estimate_lid, normalize_lids};
use hnswpp::Vectors;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Level capacities replayed from scratch, without the library's helpers.
fn replay_capacities(n: usize, branches: usize, top_l: usize, ml: f64, seed: u64) -> Vec<Vec<usize>> {
    let sizes = if branches == 1 { vec![n] } else { vec![n.div_ceil(2), n / 2] };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .into_iter()
        .map(|size| {
            let mut c = vec![0; top_l];
            for _ in 0..size {
                let u: f64 = 1.0 - rng.random::<f64>();
                let level = ((-u.ln() * ml).floor() as usize).min(top_l - 1);
                c[level] += 1;
            }
            c
        })
        .collect()
}

fn sorted_distances() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, 2..40).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #[test]
    fn estimate_is_scale_invariant(d in sorted_distances(), c in 0.001f64..1000.0) {
        prop_assume!(d.first() != d.last());
        let a = estimate_lid(&d).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
        let b = estimate_lid(&scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        prop_assert!(a > 0.0);
    }

    #[test]
    fn normalization_bounds_and_idempotence(raw in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let n = normalize_lids(&raw);
        prop_assert_eq!(n.len(), raw.len());
        prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
        let again = normalize_lids(&n);
        for (a, b) in n.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] < raw[j] {
                    prop_assert!(n[i] <= n[j]);
                }
            }
        }
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min < max {
            prop_assert!(n.contains(&0.0) && n.contains(&1.0));
        } else {
            prop_assert!(n.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn assignment_respects_capacities(
        lids in prop::collection::vec(0.0f64..=1.0, 1..400),
        top_l in 1usize..8,
        branches in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let ml = 1.0 / 4f64.ln();
        let n = lids.len();
        let a = assign_layers_with_branches(&lids, top_l, ml, seed, branches).unwrap();
        let want = replay_capacities(n, branches, top_l, ml, seed);
        prop_assert_eq!(a.layer_counts(top_l), want.clone());
        let sizes: Vec<usize> = want.iter().map(|c| c.iter().sum()).collect();
        prop_assert_eq!(a.branch_sizes(), sizes);
        prop_assert_eq!(a.order().len(), n);

        // Insertion order is by descending LID, and within a branch layers never increase along it.
        for w in a.order().windows(2) {
            let (x, y) = (lids[w[0] as usize], lids[w[1] as usize]);
            prop_assert!(x > y || (x == y && w[0] < w[1]));
        }
        for b in 0..branches as u8 {
            let layers: Vec<u8> = a
                .order()
                .iter()
                .map(|&l| a.get(l).unwrap())
                .filter(|p| p.branch == b)
                .map(|p| p.layer)
                .collect();
            prop_assert!(layers.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn random_levels_match_replay(n in 1usize..300, top_l in 1usize..8, seed in any::<u64>()) {
        let ml = 1.0 / 8f64.ln();
        let a = lid::random_levels(n, top_l, ml, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for label in 0..n as u32 {
            let u: f64 = 1.0 - rng.random::<f64>();
            let level = ((-u.ln() * ml).floor() as usize).min(top_l - 1);
            prop_assert_eq!(a.get(label).unwrap().layer as usize, level);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_permutation_equivariant_and_scale_invariant(
        seed in any::<u64>(),
        shift in 1usize..59,
        pow in -3i32..4,
    ) {
        let data = generate_synthetic(Recipe::Uniform { dim: 4 }, 60, seed).unwrap();
        let base = build_profile(&data, 8, 0).unwrap();

        let rows: Vec<&[f32]> = (0..60).map(|i| data.get((i + shift) % 60)).collect();
        let permuted = Vectors::from_rows(4, &rows).unwrap();
        let p = build_profile(&permuted, 8, 0).unwrap();
        for i in 0..60 {
            let a = base.raw_lids[(i + shift) % 60];
            prop_assert!((a - p.raw_lids[i]).abs() <= 1e-9 * a);
        }

        // Powers of two scale f32 coordinates exactly.
        let c = 2f32.powi(pow);
        let s = build_profile(&data.scaled(c), 8, 0).unwrap();
        for (a, b) in base.raw_lids.iter().zip(&s.raw_lids) {
            prop_assert!((a - b).abs() <= 1e-9 * a);
        }
        prop_assert!((s.avg_distance - base.avg_distance * c as f64).abs() <= 1e-9 * s.avg_distance);
    }
}

#[test]
fn five_ball_mean_lid_near_five() {
    let data = uniform_ball(5, 1000, 42).unwrap();
    let p = build_profile(&data, lid::DEFAULT_LID_K, 1).unwrap();
    let mean = p.mean_raw();
    assert!((mean - 5.0).abs() <= 1.5, "mean LID {mean}");
    assert!(p.degenerate.is_empty());
}

#[test]
fn duplicate_points_get_max_lid() {
    let mut rows: Vec<Vec<f32>> = (0..30).map(|i| vec![i as f32, (i * i % 7) as f32]).collect();
    rows.extend(std::iter::repeat_n(vec![100.0, 100.0], 6));
    let data = Vectors::from_rows(2, &rows).unwrap();
    let p = build_profile(&data, 4, 0).unwrap();
    assert_eq!(p.degenerate, (30..36).collect::<Vec<u32>>());
    let max = p.raw_lids[..30].iter().copied().fold(f64::MIN, f64::max);
    assert!(p.raw_lids[30..].iter().all(|&x| x == max));
}
