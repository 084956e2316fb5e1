//! Local intrinsic dimensionality and LID-driven layer assignment.
//!
//! Each point's LID is the maximum-likelihood estimate over its `k` exact
//! nearest-neighbor distances:
//!
//! ```text
//! LID(x) = ( 1/(k-1) * sum_{i=1}^{k-1} ln(d_k / d_i) )^-1
//! ```
//!
//! Raw values are min-max normalized to `[0, 1]` and the normalized values
//! decide where each node lands: nodes are walked in descending LID order,
//! alternating between two branches, and each takes the highest layer of its
//! branch that still has room under a pre-drawn per-layer capacity.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::{self, AVG_DISTANCE_SAMPLE_PAIRS};
use crate::vectors::Vectors;

/// Neighbor count used for LID estimation unless overridden.
pub const DEFAULT_LID_K: usize = 128;

/// Relative floor applied to neighbor distances before taking logs.
const DISTANCE_FLOOR: f64 = 1e-12;

/// MLE LID from ascending neighbor distances `d_1 <= ... <= d_k` (self excluded).
pub fn estimate_lid(distances: &[f64]) -> Result<f64> {
    let k = distances.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "LID estimation needs at least 2 neighbor distances, got {k}"
        )));
    }
    if distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidInput(
            "neighbor distances must be finite and non-negative".into(),
        ));
    }
    if distances.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(
            "neighbor distances must be sorted ascending".into(),
        ));
    }
    let d_k = distances[k - 1];
    if d_k <= 0.0 {
        return Err(Error::DegenerateNeighborhood(
            "all neighbor distances are zero".into(),
        ));
    }
    let floor = d_k * DISTANCE_FLOOR;
    let sum: f64 = distances[..k - 1]
        .iter()
        .map(|&d| (d_k / d.max(floor)).ln())
        .sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateNeighborhood(
            "all neighbor distances are equal".into(),
        ));
    }
    Ok((k - 1) as f64 / sum)
}

/// Min-max normalization; a constant input maps to all zeros.
pub fn normalize_lids(raw: &[f64]) -> Vec<f64> {
    let (min, max) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let span = max - min;
    if !(span > 0.0) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|&x| ((x - min) / span).clamp(0.0, 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidProfile {
    pub raw_lids: Vec<f64>,
    pub normalized_lids: Vec<f64>,
    pub k_used: usize,
    pub avg_distance: f64,
    /// Labels whose neighborhood was degenerate and received the maximum finite LID.
    pub degenerate: Vec<u32>,
}

impl LidProfile {
    /// Profile from precomputed raw values.
    pub fn from_raw(raw_lids: Vec<f64>, k_used: usize, avg_distance: f64) -> Result<Self> {
        let normalized_lids = normalize_lids(&raw_lids);
        let p = Self {
            raw_lids,
            normalized_lids,
            k_used,
            avg_distance,
            degenerate: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.raw_lids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_lids.is_empty()
    }

    pub fn normalized(&self, label: u32) -> Option<f64> {
        self.normalized_lids.get(label as usize).copied()
    }

    pub fn mean_raw(&self) -> f64 {
        self.raw_lids.iter().sum::<f64>() / self.raw_lids.len().max(1) as f64
    }

    pub fn median_raw(&self) -> f64 {
        let mut v = self.raw_lids.clone();
        v.sort_by(f64::total_cmp);
        match v.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => v[n / 2],
            n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.raw_lids.len() != self.normalized_lids.len() {
            return Err(Error::InvalidInput(
                "raw and normalized LID arrays differ in length".into(),
            ));
        }
        if let Some(i) = self
            .raw_lids
            .iter()
            .position(|x| !(x.is_finite() && *x > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "raw LID of label {i} is not finite and positive"
            )));
        }
        if let Some(i) = self
            .normalized_lids
            .iter()
            .position(|x| !(0.0..=1.0).contains(x))
        {
            return Err(Error::InvalidInput(format!(
                "normalized LID of label {i} lies outside [0, 1]"
            )));
        }
        if self.k_used < 2 {
            return Err(Error::InvalidInput("k_used must be at least 2".into()));
        }
        if !(self.avg_distance.is_finite() && self.avg_distance >= 0.0) {
            return Err(Error::InvalidInput(
                "avg_distance must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// LID profile of `data` from exact `k`-NN distances. `avg_seed` seeds the
/// average-distance pair sample.
pub fn build_profile(data: &Vectors, k: usize, avg_seed: u64) -> Result<LidProfile> {
    if data.len() <= k {
        return Err(Error::InvalidInput(format!(
            "dataset of {} points is too small for k = {k}",
            data.len()
        )));
    }
    let estimates: Vec<Result<Option<f64>>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let nn = oracle::exact_knn_excluding_self(data, i, k)?;
            let d: Vec<f64> = nn.iter().map(|&(_, d)| d).collect();
            match estimate_lid(&d) {
                Ok(lid) => Ok(Some(lid)),
                Err(Error::DegenerateNeighborhood(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let estimates: Vec<Option<f64>> = estimates.into_iter().collect::<Result<_>>()?;

    let max_finite = estimates
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max_finite.is_finite() {
        return Err(Error::DegenerateNeighborhood(
            "no point has a non-degenerate neighborhood".into(),
        ));
    }
    let mut degenerate = Vec::new();
    let raw_lids: Vec<f64> = estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.unwrap_or_else(|| {
                degenerate.push(i as u32);
                max_finite
            })
        })
        .collect();
    if !degenerate.is_empty() {
        log::warn!(
            "{} points have degenerate neighborhoods; assigned max LID {max_finite}",
            degenerate.len()
        );
    }
    let avg_distance = oracle::average_distance(data, AVG_DISTANCE_SAMPLE_PAIRS, avg_seed)?;
    let mut profile = LidProfile::from_raw(raw_lids, k, avg_distance)?;
    profile.degenerate = degenerate;
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Placement {
    pub layer: u8,
    pub branch: u8,
}

/// Per-node `(layer, branch)` placement plus the order nodes should be inserted in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAssignment {
    placements: Vec<Placement>,
    order: Vec<u32>,
    branch_count: usize,
}

impl LayerAssignment {
    /// Checks that `order` is a permutation of the labels and every branch index is in range.
    pub fn new(placements: Vec<Placement>, order: Vec<u32>, branch_count: usize) -> Result<Self> {
        if !(1..=2).contains(&branch_count) {
            return Err(Error::InvalidInput(format!(
                "branch count must be 1 or 2, got {branch_count}"
            )));
        }
        if order.len() != placements.len() {
            return Err(Error::InvalidInput(
                "insertion order does not cover every label".into(),
            ));
        }
        let mut seen = vec![false; placements.len()];
        for &l in &order {
            match seen.get_mut(l as usize) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "label {l} is out of range or repeated in the insertion order"
                    )))
                }
            }
        }
        if let Some(i) = placements
            .iter()
            .position(|p| p.branch as usize >= branch_count)
        {
            return Err(Error::InvalidInput(format!(
                "label {i} is placed in branch {} of {branch_count}",
                placements[i].branch
            )));
        }
        Ok(Self {
            placements,
            order,
            branch_count,
        })
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn get(&self, label: u32) -> Option<Placement> {
        self.placements.get(label as usize).copied()
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Insertion order; for LID-driven assignments this is descending normalized LID.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn branch_count(&self) -> usize {
        self.branch_count
    }

    pub fn top_layer(&self) -> usize {
        self.placements
            .iter()
            .map(|p| p.layer as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn branch_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.branch_count];
        for p in &self.placements {
            s[p.branch as usize] += 1;
        }
        s
    }

    /// `counts[branch][layer]` for layers `0..top_l`.
    pub fn layer_counts(&self, top_l: usize) -> Vec<Vec<usize>> {
        let mut c = vec![vec![0; top_l.max(self.top_layer() + 1)]; self.branch_count];
        for p in &self.placements {
            c[p.branch as usize][p.layer as usize] += 1;
        }
        c
    }
}

/// One draw of the exponential level rule, capped at `top_l - 1`.
pub fn draw_level<R: Rng>(rng: &mut R, ml: f64, top_l: usize) -> usize {
    // 1 - [0,1) lies in (0,1], keeping the log finite.
    let u = 1.0 - rng.random::<f64>();
    let level = (-u.ln() * ml).floor();
    (level.max(0.0) as usize).min(top_l - 1)
}

/// Number of nodes per branch: branch 0 takes the extra node when `n` is odd.
pub fn branch_sizes(n: usize, branch_count: usize) -> Vec<usize> {
    match branch_count {
        1 => vec![n],
        _ => vec![n.div_ceil(2), n / 2],
    }
}

/// Pre-drawn per-branch, per-layer capacities: every node of a branch makes one level draw.
/// Branch 0 draws first, from a single generator seeded with `seed`.
pub fn expected_layer_sizes(sizes: &[usize], top_l: usize, ml: f64, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .iter()
        .map(|&size| {
            let mut counts = vec![0usize; top_l];
            for _ in 0..size {
                counts[draw_level(&mut rng, ml, top_l)] += 1;
            }
            counts
        })
        .collect()
}

/// Indices sorted by descending value; ties keep ascending index.
pub fn descending_order(normalized: &[f64]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..normalized.len() as u32).collect();
    idx.sort_by(|&a, &b| {
        normalized[b as usize]
            .partial_cmp(&normalized[a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

fn check_level_params(top_l: usize, ml: f64) -> Result<()> {
    if top_l < 1 || top_l > u8::MAX as usize {
        return Err(Error::InvalidConfig(format!(
            "top_l must lie in 1..=255, got {top_l}"
        )));
    }
    if !(ml.is_finite() && ml > 0.0) {
        return Err(Error::InvalidConfig(format!("ml must be positive, got {ml}")));
    }
    Ok(())
}

/// Two-branch LID-driven assignment.
pub fn assign_layers(normalized: &[f64], top_l: usize, ml: f64, seed: u64) -> Result<LayerAssignment> {
    assign_layers_with_branches(normalized, top_l, ml, seed, 2)
}

/// LID-driven assignment over `branch_count` (1 or 2) branches.
pub fn assign_layers_with_branches(
    normalized: &[f64],
    top_l: usize,
    ml: f64,
    seed: u64,
    branch_count: usize,
) -> Result<LayerAssignment> {
    check_level_params(top_l, ml)?;
    if !(1..=2).contains(&branch_count) {
        return Err(Error::InvalidConfig(format!(
            "branch count must be 1 or 2, got {branch_count}"
        )));
    }
    if normalized.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("normalized LIDs must be finite".into()));
    }
    let n = normalized.len();
    let sizes = branch_sizes(n, branch_count);
    let expected = expected_layer_sizes(&sizes, top_l, ml, seed);
    let order = descending_order(normalized);

    let mut current = vec![vec![0usize; top_l]; branch_count];
    let mut filled = vec![0usize; branch_count];
    let mut placements = vec![Placement::default(); n];
    let mut next_branch = 0usize;
    for &label in &order {
        let mut branch = next_branch;
        if filled[branch] == sizes[branch] {
            branch = (branch + 1) % branch_count;
        }
        let layer = (0..top_l)
            .rev()
            .find(|&l| current[branch][l] < expected[branch][l])
            .expect("capacities sum to the branch size");
        current[branch][layer] += 1;
        filled[branch] += 1;
        placements[label as usize] = Placement {
            layer: layer as u8,
            branch: branch as u8,
        };
        next_branch = (next_branch + 1) % branch_count;
    }
    LayerAssignment::new(placements, order, branch_count)
}

/// Independent per-node level draws in label order, single branch (standard HNSW).
pub fn random_levels(n: usize, top_l: usize, ml: f64, seed: u64) -> Result<LayerAssignment> {
    check_level_params(top_l, ml)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placements = (0..n)
        .map(|_| Placement {
            layer: draw_level(&mut rng, ml, top_l) as u8,
            branch: 0,
        })
        .collect();
    LayerAssignment::new(placements, (0..n as u32).collect(), 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn hand_case_is_exactly_two() {
        assert_eq!(estimate_lid(&[1.0, E, E]).unwrap(), 2.0);
    }

    #[test]
    fn estimator_error_paths() {
        assert!(matches!(
            estimate_lid(&[1.0, 1.0, 1.0]),
            Err(Error::DegenerateNeighborhood(_))
        ));
        assert!(matches!(
            estimate_lid(&[0.0, 0.0]),
            Err(Error::DegenerateNeighborhood(_))
        ));
        assert!(estimate_lid(&[1.0]).is_err());
        assert!(estimate_lid(&[2.0, 1.0]).is_err());
        assert!(estimate_lid(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn zero_distances_are_clamped_not_infinite() {
        let lid = estimate_lid(&[0.0, 1.0, 2.0]).unwrap();
        assert!(lid.is_finite() && lid > 0.0);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_lids(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_lids(&[3.0, 3.0, 3.0]), vec![0.0; 3]);
        assert_eq!(normalize_lids(&[7.0]), vec![0.0]);
        assert!(normalize_lids(&[]).is_empty());
    }

    #[test]
    fn five_nodes_split_three_two() {
        let a = assign_layers(&[0.1, 0.9, 0.5, 0.3, 0.7], 3, 1.0, 1).unwrap();
        assert_eq!(a.branch_sizes(), vec![3, 2]);
    }

    #[test]
    fn single_layer_alternates_branches() {
        let lids = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
        let a = assign_layers(&lids, 1, 0.5, 3).unwrap();
        let branches: Vec<u8> = a.order().iter().map(|&l| a.get(l).unwrap().branch).collect();
        assert_eq!(branches, vec![0, 1, 0, 1, 0, 1, 0]);
        assert!(a.placements().iter().all(|p| p.layer == 0));
    }

    #[test]
    fn ties_keep_index_order() {
        let a = assign_layers(&[0.5, 0.5, 1.0, 0.5], 1, 1.0, 0).unwrap();
        assert_eq!(a.order(), &[2, 0, 1, 3]);
    }

    #[test]
    fn descending_lid_gets_top_layers_first() {
        // Nodes sorted by LID should fill the top layers of each branch first.
        let n = 400;
        let lids: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let a = assign_layers(&lids, 5, 1.0 / 4f64.ln(), 42).unwrap();
        for branch in 0..2u8 {
            let layers: Vec<u8> = a
                .order()
                .iter()
                .map(|&l| a.get(l).unwrap())
                .filter(|p| p.branch == branch)
                .map(|p| p.layer)
                .collect();
            assert!(layers.windows(2).all(|w| w[0] >= w[1]), "branch {branch}");
        }
    }

    #[test]
    fn random_levels_is_single_branch_in_label_order() {
        let a = random_levels(50, 4, 1.0, 7).unwrap();
        assert_eq!(a.branch_count(), 1);
        assert_eq!(a.order(), (0..50).collect::<Vec<u32>>().as_slice());
        assert_eq!(a, random_levels(50, 4, 1.0, 7).unwrap());
    }

    #[test]
    fn assignment_validation() {
        let p = vec![Placement::default(); 2];
        assert!(LayerAssignment::new(p.clone(), vec![0, 0], 2).is_err());
        assert!(LayerAssignment::new(p.clone(), vec![0], 2).is_err());
        assert!(LayerAssignment::new(p.clone(), vec![1, 0], 3).is_err());
        let bad = vec![Placement { layer: 0, branch: 1 }; 2];
        assert!(LayerAssignment::new(bad, vec![0, 1], 1).is_err());
        assert!(LayerAssignment::new(p, vec![1, 0], 2).is_ok());
    }
}
