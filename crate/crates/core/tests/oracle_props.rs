use hnswpp::io::{generate_synthetic, Recipe};
use hnswpp::oracle::{average_distance, build_ground_truth, exact_knn, exact_knn_excluding_self};
use hnswpp::Vectors;
use proptest::prelude::*;

fn naive_knn(base: &Vectors, q: &[f32], k: usize) -> Vec<(u32, f64)> {
    let mut all = Vec::new();
    for i in (0..base.len()).rev() {
        let mut s = 0.0f64;
        for d in (0..base.dim()).rev() {
            let diff = base.get(i)[d] as f64 - q[d] as f64;
            s += diff * diff;
        }
        all.push((i as u32, s.sqrt()));
    }
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

proptest! {
    #[test]
    fn prefix_property(seed in any::<u64>(), k1 in 1usize..40, extra in 0usize..40) {
        let base = generate_synthetic(Recipe::Uniform { dim: 3 }, 80, seed).unwrap();
        let q = [0.5f32, 0.25, 0.75];
        let small = exact_knn(&base, &q, k1).unwrap();
        let large = exact_knn(&base, &q, k1 + extra).unwrap();
        prop_assert_eq!(&large[..k1], &small[..]);
        prop_assert!(large.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn quantized_ties_break_by_label(coords in prop::collection::vec(0u8..4, 40), k in 1usize..20) {
        let data: Vec<f32> = coords.iter().map(|&c| c as f32).collect();
        let base = Vectors::from_flat(2, data).unwrap();
        let q = [1.0f32, 2.0];
        prop_assert_eq!(exact_knn(&base, &q, k).unwrap(), naive_knn(&base, &q, k));
    }
}

#[test]
fn agrees_with_independent_loop_order() {
    let base = generate_synthetic(Recipe::Uniform { dim: 8 }, 50, 3).unwrap();
    let queries = generate_synthetic(Recipe::Uniform { dim: 8 }, 20, 4).unwrap();
    let gt = build_ground_truth(&base, &queries, 10).unwrap();
    for (qi, q) in queries.iter().enumerate() {
        let want = naive_knn(&base, q, 10);
        let labels: Vec<u32> = want.iter().map(|x| x.0).collect();
        assert_eq!(gt.row(qi), &labels[..]);
        for (got, (_, d)) in gt.distances[qi].iter().zip(&want) {
            assert!((*got as f64 - d).abs() <= 1e-6 * d.max(1.0));
        }
        assert_eq!(exact_knn(&base, q, 10).unwrap(), want);
    }
    assert_eq!(gt.base_checksum, base.checksum());
    assert_eq!(gt.query_checksum, queries.checksum());
    gt.validate().unwrap();
}

#[test]
fn excluding_self_drops_only_the_point() {
    let base = generate_synthetic(Recipe::Uniform { dim: 4 }, 40, 9).unwrap();
    for i in [0, 17, 39] {
        let with_self = exact_knn(&base, base.get(i), 6).unwrap();
        assert_eq!(with_self[0], (i as u32, 0.0));
        assert_eq!(exact_knn_excluding_self(&base, i, 5).unwrap(), with_self[1..]);
    }
}

#[test]
fn average_distance_within_three_sigma() {
    let base = generate_synthetic(Recipe::Uniform { dim: 2 }, 100, 11).unwrap();
    let mut all = Vec::new();
    for i in 0..100 {
        for j in 0..100 {
            if i != j {
                let (a, b) = (base.get(i), base.get(j));
                let d = ((a[0] as f64 - b[0] as f64).powi(2) + (a[1] as f64 - b[1] as f64).powi(2)).sqrt();
                all.push(d);
            }
        }
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / all.len() as f64;
    let pairs = 10_000;
    let tol = 3.0 * var.sqrt() / (pairs as f64).sqrt();
    for seed in 0..5 {
        let est = average_distance(&base, pairs, seed).unwrap();
        assert!((est - mean).abs() <= tol, "seed {seed}: {est} vs {mean} (tol {tol})");
    }
    assert_eq!(average_distance(&base, pairs, 7).unwrap(), average_distance(&base, pairs, 7).unwrap());
}
