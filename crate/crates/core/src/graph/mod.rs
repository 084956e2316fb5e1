//! Layered proximity graph with one or two upper-layer branches over a shared base layer.
//!
//! Each node lives in exactly one branch. A node placed at layer `L` of
//! branch `b` is linked on layers `L..=1` of that branch and on the base
//! layer, which every node shares. Single-branch variants degenerate to
//! ordinary HNSW.
//!
//! Edges are written in both directions when a node is linked; a neighbor
//! whose list overflows keeps its closest `m` (`m0` on the base layer) links,
//! ties by lower label.

mod check;
mod search;
mod snapshot;
mod visited;

use std::collections::BTreeMap;

pub use search::{merge_topk, LayerRef, LayerResult, Neighbor, SearchOutcome, SearchParams, SkipRule};

use crate::config::{Epsilon, IndexConfig, Variant};
use crate::distance::squared_l2;
use crate::error::{Error, Result};
use crate::lid::{self, LayerAssignment, LidProfile, Placement};
use crate::vectors::Vectors;

/// Upper layers `1..top_l` of one branch. `layers[l - 1]` holds layer `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchHierarchy {
    layers: Vec<BTreeMap<u32, Vec<u32>>>,
    entry_point: Option<u32>,
    top_layer: usize,
}

impl BranchHierarchy {
    fn new(top_l: usize) -> Self {
        Self {
            layers: vec![BTreeMap::new(); top_l.saturating_sub(1)],
            entry_point: None,
            top_layer: 0,
        }
    }

    pub fn entry_point(&self) -> Option<u32> {
        self.entry_point
    }

    /// Highest layer occupied by a node of this branch (0 when only the base layer is).
    pub fn top_layer(&self) -> usize {
        self.top_layer
    }

    /// Adjacency of upper layer `level >= 1`.
    pub fn layer(&self, level: usize) -> Option<&BTreeMap<u32, Vec<u32>>> {
        level.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    pub fn upper_layer_count(&self) -> usize {
        self.layers.len()
    }
}

#[derive(Debug, Clone)]
pub struct HnswIndex {
    config: IndexConfig,
    dim: usize,
    /// Slot-indexed vector storage; slot = label.
    vectors: Vec<f32>,
    present: Vec<bool>,
    placements: Vec<Placement>,
    base_layer: Vec<Vec<u32>>,
    branches: Vec<BranchHierarchy>,
    /// First node ever inserted; base-layer entry for a node whose branch is still empty.
    base_entry: Option<u32>,
    /// Normalized LID per label, used by the skip predicate.
    lid_table: Option<Vec<f64>>,
    /// Resolved distance bound of the skip predicate.
    epsilon: Option<f64>,
    len: usize,
}

impl HnswIndex {
    pub fn new(dim: usize, config: IndexConfig) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let branches = (0..config.variant.branch_count())
            .map(|_| BranchHierarchy::new(config.top_l))
            .collect();
        Ok(Self {
            config,
            dim,
            vectors: Vec::new(),
            present: Vec::new(),
            placements: Vec::new(),
            base_layer: Vec::new(),
            branches,
            base_entry: None,
            lid_table: None,
            epsilon: None,
            len: 0,
        })
    }

    /// Builds an index over `data` (labels `0..n`) using the variant's layer plan.
    /// LID-driven variants require `profile`.
    pub fn build(data: &Vectors, config: IndexConfig, profile: Option<&LidProfile>) -> Result<Self> {
        config.validate()?;
        let assignment = plan_assignment(data.len(), &config, profile)?;
        Self::build_with_assignment(data, config, &assignment, profile)
    }

    /// Inserts every vector of `data` following `assignment.order()`.
    pub fn build_with_assignment(
        data: &Vectors,
        config: IndexConfig,
        assignment: &LayerAssignment,
        profile: Option<&LidProfile>,
    ) -> Result<Self> {
        if assignment.len() != data.len() {
            return Err(Error::InvalidInput(format!(
                "assignment covers {} labels but the dataset has {}",
                assignment.len(),
                data.len()
            )));
        }
        if assignment.branch_count() != config.variant.branch_count() {
            return Err(Error::InvalidInput(format!(
                "assignment has {} branches, variant {} needs {}",
                assignment.branch_count(),
                config.variant,
                config.variant.branch_count()
            )));
        }
        let mut index = Self::new(data.dim(), config)?;
        if let Some(p) = profile {
            index.attach_profile(p)?;
        }
        index.reserve(data.len());
        for &label in assignment.order() {
            index.insert(data.get(label as usize), label, assignment)?;
        }
        Ok(index)
    }

    /// Installs the normalized LID table and resolves `Epsilon::Auto`.
    pub fn attach_profile(&mut self, profile: &LidProfile) -> Result<()> {
        profile.validate()?;
        self.epsilon = Some(match self.config.distance_epsilon {
            Epsilon::Auto => profile.avg_distance,
            Epsilon::Fixed(e) => e,
        });
        self.lid_table = Some(profile.normalized_lids.clone());
        Ok(())
    }

    fn reserve(&mut self, n: usize) {
        self.vectors.reserve(n * self.dim);
        self.present.reserve(n);
        self.placements.reserve(n);
        self.base_layer.reserve(n);
    }

    fn ensure_slot(&mut self, label: u32) {
        let need = label as usize + 1;
        if self.present.len() < need {
            self.vectors.resize(need * self.dim, 0.0);
            self.present.resize(need, false);
            self.placements.resize(need, Placement::default());
            self.base_layer.resize_with(need, Vec::new);
        }
    }

    #[inline]
    pub(crate) fn vector(&self, label: u32) -> &[f32] {
        let i = label as usize * self.dim;
        &self.vectors[i..i + self.dim]
    }

    /// Inserts `vector` under `label` at the placement recorded in `assignment`.
    pub fn insert(&mut self, vector: &[f32], label: u32, assignment: &LayerAssignment) -> Result<()> {
        let placement = assignment
            .get(label)
            .ok_or(Error::MissingAssignment(label))?;
        self.insert_placed(vector, label, placement)
    }

    pub fn insert_placed(&mut self, vector: &[f32], label: u32, placement: Placement) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.contains(label) {
            return Err(Error::DuplicateLabel(label));
        }
        let layer = placement.layer as usize;
        let b = placement.branch as usize;
        if b >= self.branches.len() {
            return Err(Error::InvalidInput(format!(
                "label {label} is assigned to branch {b} but the index has {}",
                self.branches.len()
            )));
        }
        if layer >= self.config.top_l {
            return Err(Error::InvalidInput(format!(
                "label {label} is assigned to layer {layer} but top_l is {}",
                self.config.top_l
            )));
        }
        if label == u32::MAX {
            return Err(Error::InvalidInput("label u32::MAX is reserved".into()));
        }

        self.ensure_slot(label);
        let off = label as usize * self.dim;
        self.vectors[off..off + self.dim].copy_from_slice(vector);
        self.placements[label as usize] = placement;

        let ef_c = self.config.ef_construction;
        let m = self.config.m;
        let base_entry = match self.branches[b].entry_point {
            None => {
                for l in 1..=layer {
                    self.branches[b].layers[l - 1].insert(label, Vec::new());
                }
                self.branches[b].entry_point = Some(label);
                self.branches[b].top_layer = layer;
                self.base_entry
            }
            Some(ep) => {
                let top = self.branches[b].top_layer;
                let mut cur = ep;
                for l in (layer + 1..=top).rev() {
                    let w = self.search_internal(vector, &[cur], 1, LayerRef::upper(b, l), &[], None)?;
                    cur = w.nearest[0].label;
                }
                let mut entries = vec![cur];
                for l in (1..=layer.min(top)).rev() {
                    let w = self.search_internal(vector, &entries, ef_c, LayerRef::upper(b, l), &[], None)?;
                    let chosen: Vec<u32> = w.nearest.iter().take(m).map(|n| n.label).collect();
                    self.link_upper(b, l, label, chosen);
                    cur = w.nearest[0].label;
                    entries = w.nearest.iter().map(|n| n.label).collect();
                }
                for l in top + 1..=layer {
                    self.branches[b].layers[l - 1].insert(label, Vec::new());
                }
                if layer > top {
                    self.branches[b].entry_point = Some(label);
                    self.branches[b].top_layer = layer;
                }
                Some(cur)
            }
        };

        if let Some(entry) = base_entry {
            let w = self.search_internal(vector, &[entry], ef_c, LayerRef::Base, &[], None)?;
            let chosen: Vec<u32> = w
                .nearest
                .iter()
                .take(self.config.m0)
                .map(|n| n.label)
                .collect();
            self.link_base(label, chosen);
        }
        if self.base_entry.is_none() {
            self.base_entry = Some(label);
        }
        self.present[label as usize] = true;
        self.len += 1;
        Ok(())
    }

    fn link_upper(&mut self, b: usize, level: usize, label: u32, chosen: Vec<u32>) {
        let cap = self.config.m;
        let mut layer = std::mem::take(&mut self.branches[b].layers[level - 1]);
        for &n in &chosen {
            let list = layer.get_mut(&n).expect("neighbor exists on its layer");
            list.push(label);
            if list.len() > cap {
                self.shrink(n, list, cap);
            }
        }
        layer.insert(label, chosen);
        self.branches[b].layers[level - 1] = layer;
    }

    fn link_base(&mut self, label: u32, chosen: Vec<u32>) {
        let cap = self.config.m0;
        let mut base = std::mem::take(&mut self.base_layer);
        for &n in &chosen {
            let list = &mut base[n as usize];
            list.push(label);
            if list.len() > cap {
                self.shrink(n, list, cap);
            }
        }
        base[label as usize] = chosen;
        self.base_layer = base;
    }

    /// Keeps the `cap` links of `owner` closest to it; ties by lower label.
    fn shrink(&self, owner: u32, list: &mut Vec<u32>, cap: usize) {
        let ov = self.vector(owner);
        let mut scored: Vec<(f32, u32)> = list
            .iter()
            .map(|&n| (squared_l2(ov, self.vector(n)), n))
            .collect();
        scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(cap);
        list.clear();
        list.extend(scored.into_iter().map(|(_, n)| n));
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    /// Mutable access to the search-time fields (`ef_search`, skip threshold).
    pub fn set_ef_search(&mut self, ef_search: usize) -> Result<()> {
        if ef_search < 1 {
            return Err(Error::InvalidConfig("ef_search must be at least 1".into()));
        }
        self.config.ef_search = ef_search;
        Ok(())
    }

    pub fn set_lid_threshold(&mut self, threshold: Option<f64>) -> Result<()> {
        let mut c = self.config.clone();
        c.lid_threshold = threshold;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    pub fn contains(&self, label: u32) -> bool {
        self.present.get(label as usize).copied().unwrap_or(false)
    }

    pub fn placement(&self, label: u32) -> Option<Placement> {
        self.contains(label).then(|| self.placements[label as usize])
    }

    pub fn base_neighbors(&self, label: u32) -> Option<&[u32]> {
        self.contains(label)
            .then(|| self.base_layer[label as usize].as_slice())
    }

    pub fn branches(&self) -> &[BranchHierarchy] {
        &self.branches
    }

    pub fn lid_table(&self) -> Option<&[f64]> {
        self.lid_table.as_deref()
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Labels in ascending order.
    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| i as u32)
    }

    pub fn vector_of(&self, label: u32) -> Option<&[f32]> {
        self.contains(label).then(|| self.vector(label))
    }
}

/// Layer plan for `variant`:
/// - `Basic`: independent level draws, one branch, label order.
/// - `MultiBranch`: the two-branch assignment over constant LIDs, so branches alternate by label.
/// - `LidBased` / `Full`: the LID-driven assignment over one / two branches, descending-LID order.
pub fn plan_assignment(n: usize, config: &IndexConfig, profile: Option<&LidProfile>) -> Result<LayerAssignment> {
    let IndexConfig {
        top_l, ml, rng_seed, ..
    } = *config;
    match config.variant {
        Variant::Basic => lid::random_levels(n, top_l, ml, rng_seed),
        Variant::MultiBranch => lid::assign_layers_with_branches(&vec![0.0; n], top_l, ml, rng_seed, 2),
        v @ (Variant::LidBased | Variant::Full) => {
            let p = profile.ok_or_else(|| {
                Error::InvalidConfig(format!("variant {v} needs a LID profile"))
            })?;
            if p.len() != n {
                return Err(Error::InvalidInput(format!(
                    "LID profile covers {} points but the dataset has {n}",
                    p.len()
                )));
            }
            lid::assign_layers_with_branches(&p.normalized_lids, top_l, ml, rng_seed, v.branch_count())
        }
    }
}
