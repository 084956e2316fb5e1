//! Brute-force exact nearest neighbors.
//!
//! Ground truth for recall, neighbor distances for the LID estimator and the
//! average-distance estimate behind `Epsilon::Auto`. Distances accumulate in
//! `f64`; ties are broken by ascending label everywhere.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::squared_l2_f64;
use crate::error::{Error, Result};
use crate::vectors::Vectors;

/// Pair sample size behind the `Epsilon::Auto` estimate.
pub const AVG_DISTANCE_SAMPLE_PAIRS: usize = 10_000;

#[inline]
fn by_distance_then_label(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn select_k(mut all: Vec<(f64, u32)>, k: usize) -> Vec<(u32, f64)> {
    if k < all.len() {
        all.select_nth_unstable_by(k, by_distance_then_label);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_label);
    all.into_iter().map(|(d2, l)| (l, d2.sqrt())).collect()
}

/// The `k` nearest base vectors to `query` as `(label, L2 distance)`, ascending.
pub fn exact_knn(base: &Vectors, query: &[f32], k: usize) -> Result<Vec<(u32, f64)>> {
    if query.len() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            actual: query.len(),
        });
    }
    if k > base.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds base size {}",
            base.len()
        )));
    }
    let all = base
        .iter()
        .enumerate()
        .map(|(i, v)| (squared_l2_f64(query, v), i as u32))
        .collect();
    Ok(select_k(all, k))
}

/// Like [`exact_knn`] for the base point `index` itself, omitting it from the result.
pub fn exact_knn_excluding_self(base: &Vectors, index: usize, k: usize) -> Result<Vec<(u32, f64)>> {
    if k + 1 > base.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} neighbors need more than {} points",
            base.len()
        )));
    }
    let query = base.get(index);
    let all = base
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(i, v)| (squared_l2_f64(query, v), i as u32))
        .collect();
    Ok(select_k(all, k))
}

/// Mean L2 distance over `sample_pairs` seeded random ordered pairs of distinct indices.
pub fn average_distance(base: &Vectors, sample_pairs: usize, seed: u64) -> Result<f64> {
    let n = base.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "average distance needs at least two points".into(),
        ));
    }
    if sample_pairs == 0 {
        return Err(Error::InvalidInput("sample_pairs must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0f64;
    for _ in 0..sample_pairs {
        let i = rng.random_range(0..n);
        // Uniform over the n-1 indices other than i.
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += squared_l2_f64(base.get(i), base.get(j)).sqrt();
    }
    Ok(total / sample_pairs as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub k_gt: usize,
    /// Per query, neighbor labels ascending by distance.
    pub labels: Vec<Vec<u32>>,
    /// Per query, the matching L2 distances.
    pub distances: Vec<Vec<f32>>,
    pub base_checksum: String,
    pub query_checksum: String,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, q: usize) -> &[u32] {
        &self.labels[q]
    }

    /// Rejects rows of the wrong length or with decreasing distances.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.distances.len() {
            return Err(Error::InvalidInput(
                "label and distance blocks differ in length".into(),
            ));
        }
        for (q, (l, d)) in self.labels.iter().zip(&self.distances).enumerate() {
            if l.len() != self.k_gt || d.len() != self.k_gt {
                return Err(Error::InvalidInput(format!(
                    "row {q} has {} labels / {} distances, expected {}",
                    l.len(),
                    d.len(),
                    self.k_gt
                )));
            }
            if d.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(Error::InvalidInput(format!(
                    "row {q} distances are not ascending"
                )));
            }
        }
        Ok(())
    }
}

/// Exact top-`k_gt` for every query; rows come back in query order.
pub fn build_ground_truth(base: &Vectors, queries: &Vectors, k_gt: usize) -> Result<GroundTruth> {
    if queries.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            actual: queries.dim(),
        });
    }
    let rows: Vec<Vec<(u32, f64)>> = (0..queries.len())
        .into_par_iter()
        .map(|q| exact_knn(base, queries.get(q), k_gt))
        .collect::<Result<_>>()?;
    let (labels, distances) = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|(l, d)| (l, d as f32))
                .unzip::<u32, f32, Vec<u32>, Vec<f32>>()
        })
        .unzip();
    Ok(GroundTruth {
        k_gt,
        labels,
        distances,
        base_checksum: base.checksum(),
        query_checksum: queries.checksum(),
    })
}
