use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet, VecDeque};

use super::visited::{with_visited, VisitedList};
use super::HnswIndex;
use crate::config::SkipPredicate;
use crate::distance::squared_l2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub label: u32,
    /// L2 distance to the query.
    pub distance: f32,
}

/// A layer of the index: the shared base layer or upper layer `level >= 1` of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerRef {
    Base,
    Upper { branch: usize, level: usize },
}

impl LayerRef {
    /// `level == 0` maps to the base layer.
    pub fn upper(branch: usize, level: usize) -> Self {
        if level == 0 {
            LayerRef::Base
        } else {
            LayerRef::Upper { branch, level }
        }
    }

    fn level(self) -> usize {
        match self {
            LayerRef::Base => 0,
            LayerRef::Upper { level, .. } => level,
        }
    }

    fn branch(self) -> usize {
        match self {
            LayerRef::Base => 0,
            LayerRef::Upper { branch, .. } => branch,
        }
    }
}

/// Layer-skip predicate over the normalized LID of a layer's nearest node and
/// its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipRule {
    pub threshold: f64,
    pub epsilon: f64,
    pub predicate: SkipPredicate,
}

impl SkipRule {
    #[inline]
    pub fn fires(&self, normalized_lid: f64, distance: f64) -> bool {
        match self.predicate {
            SkipPredicate::LidAndDistance => normalized_lid > self.threshold && distance < self.epsilon,
            SkipPredicate::LidOnly => normalized_lid >= self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub ef_search: usize,
    pub skip: Option<SkipRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerResult {
    /// Up to `ef` nodes, ascending by distance.
    pub nearest: Vec<Neighbor>,
    pub skip: bool,
    /// Candidate expansions performed.
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Up to `k` nodes, ascending by distance, no duplicate labels.
    pub neighbors: Vec<Neighbor>,
    pub skip_count: usize,
    /// Base-layer result of branch 0.
    pub w1: Vec<Neighbor>,
    /// Base-layer result of branch 1, disjoint from `w1`; empty for single-branch variants.
    pub w2: Vec<Neighbor>,
    pub hops: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    d: f32,
    label: u32,
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d.total_cmp(&other.d).then(self.label.cmp(&other.label))
    }
}

/// The `k` closest labels of `w1 ∪ w2`, ascending by distance (ties by label).
pub fn merge_topk(w1: &[Neighbor], w2: &[Neighbor], k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = w1.iter().chain(w2).copied().collect();
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.label.cmp(&b.label)));
    let mut seen = HashSet::with_capacity(all.len());
    all.retain(|n| seen.insert(n.label));
    all.truncate(k);
    all
}

impl HnswIndex {
    fn on_layer(&self, label: u32, layer: LayerRef) -> bool {
        match layer {
            LayerRef::Base => self.contains(label),
            LayerRef::Upper { branch, level } => self
                .branches
                .get(branch)
                .and_then(|b| b.layer(level))
                .is_some_and(|l| l.contains_key(&label)),
        }
    }

    #[inline]
    fn links(&self, label: u32, layer: LayerRef) -> &[u32] {
        match layer {
            LayerRef::Base => &self.base_layer[label as usize],
            LayerRef::Upper { branch, level } => self.branches[branch].layers[level - 1]
                .get(&label)
                .map_or(&[], Vec::as_slice),
        }
    }

    /// Best-first search of one layer.
    ///
    /// Nodes in `exclude` are never visited or returned; if every entry is
    /// excluded, a breadth-first probe from the first entry picks the first
    /// reachable node outside the set. With a `skip` rule, `skip` reports
    /// whether the nearest result satisfies it.
    pub fn search_layer(
        &self,
        query: &[f32],
        entry: &[u32],
        ef: usize,
        layer: LayerRef,
        exclude: &[u32],
        skip: Option<&SkipRule>,
    ) -> Result<LayerResult> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        self.search_internal(query, entry, ef, layer, exclude, skip)
    }

    pub(super) fn search_internal(
        &self,
        query: &[f32],
        entry: &[u32],
        ef: usize,
        layer: LayerRef,
        exclude: &[u32],
        skip: Option<&SkipRule>,
    ) -> Result<LayerResult> {
        if ef < 1 {
            return Err(Error::InvalidInput("ef must be at least 1".into()));
        }
        if entry.is_empty() {
            return Err(Error::InvalidInput("entry set is empty".into()));
        }
        if let Some(&bad) = entry.iter().find(|&&e| !self.on_layer(e, layer)) {
            return Err(Error::NotInLayer {
                label: bad,
                layer: layer.level(),
                branch: layer.branch(),
            });
        }
        let slots = self.present.len();
        let (nearest, hops) = with_visited(slots, |visited| {
            for &x in exclude {
                if (x as usize) < slots {
                    visited.insert(x);
                }
            }
            let mut seeds: Vec<u32> = entry
                .iter()
                .copied()
                .filter(|&e| visited.insert(e))
                .collect();
            if seeds.is_empty() {
                let replacement = self
                    .probe_outside(entry[0], layer, visited)
                    .ok_or(Error::ExcludeExhausted)?;
                visited.insert(replacement);
                seeds.push(replacement);
            }
            Ok::<_, Error>(self.beam(query, &seeds, ef, layer, visited))
        })?;

        let skip = match (skip, &self.lid_table) {
            (Some(rule), Some(lids)) => nearest
                .first()
                .is_some_and(|n| rule.fires(lids[n.label as usize], n.distance as f64)),
            _ => false,
        };
        Ok(LayerResult { nearest, skip, hops })
    }

    /// Breadth-first walk from `start` for the first node the visited list does not mark.
    /// Bounded by one full pass over the nodes reachable on `layer`.
    fn probe_outside(&self, start: u32, layer: LayerRef, marked: &VisitedList) -> Option<u32> {
        let mut seen = vec![false; self.present.len()];
        let mut queue = VecDeque::from([start]);
        seen[start as usize] = true;
        while let Some(c) = queue.pop_front() {
            for &e in self.links(c, layer) {
                if !seen[e as usize] {
                    if !marked.contains(e) {
                        return Some(e);
                    }
                    seen[e as usize] = true;
                    queue.push_back(e);
                }
            }
        }
        None
    }

    fn beam(
        &self,
        query: &[f32],
        seeds: &[u32],
        ef: usize,
        layer: LayerRef,
        visited: &mut VisitedList,
    ) -> (Vec<Neighbor>, usize) {
        let mut candidates: BinaryHeap<Reverse<Cand>> = BinaryHeap::with_capacity(ef * 2);
        let mut results: BinaryHeap<Cand> = BinaryHeap::with_capacity(ef + 1);
        for &s in seeds {
            let c = Cand {
                d: squared_l2(query, self.vector(s)),
                label: s,
            };
            candidates.push(Reverse(c));
            results.push(c);
            if results.len() > ef {
                results.pop();
            }
        }
        let mut hops = 0;
        while let Some(Reverse(c)) = candidates.pop() {
            let furthest = results.peek().expect("results never empty").d;
            if c.d > furthest {
                break;
            }
            hops += 1;
            for &e in self.links(c.label, layer) {
                if !visited.insert(e) {
                    continue;
                }
                let d = squared_l2(query, self.vector(e));
                if results.len() < ef || d < results.peek().expect("non-empty").d {
                    let cand = Cand { d, label: e };
                    candidates.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let nearest = results
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                label: c.label,
                distance: c.d.sqrt(),
            })
            .collect();
        (nearest, hops)
    }

    /// Skip rule for `threshold`, if this index can skip at all: the variant
    /// (or `force_skips`) must allow it and a LID table must be attached.
    pub fn skip_rule(&self, threshold: Option<f64>) -> Option<SkipRule> {
        let threshold = threshold?;
        if !(self.config.variant.skips_by_default() || self.config.force_skips) {
            return None;
        }
        self.lid_table.as_ref()?;
        Some(SkipRule {
            threshold,
            epsilon: self.epsilon?,
            predicate: self.config.skip_predicate,
        })
    }

    pub fn default_params(&self) -> SearchParams {
        SearchParams {
            ef_search: self.config.ef_search,
            skip: self.skip_rule(self.config.lid_threshold),
        }
    }

    /// Evaluates the skip predicate for entry point `ep` directly.
    pub fn jump(&self, ep: u32, query: &[f32], threshold: f64, epsilon: f64) -> Result<bool> {
        let lid = self
            .lid_table
            .as_ref()
            .filter(|_| self.contains(ep))
            .and_then(|t| t.get(ep as usize))
            .copied()
            .ok_or(Error::MissingLid(ep))?;
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let d = (squared_l2(self.vector(ep), query) as f64).sqrt();
        let rule = SkipRule {
            threshold,
            epsilon,
            predicate: SkipPredicate::LidAndDistance,
        };
        Ok(rule.fires(lid, d))
    }

    pub fn search(&self, query: &[f32], k: usize) -> Result<SearchOutcome> {
        self.search_with(query, k, &self.default_params())
    }

    /// Descends every branch greedily (one nearest node per upper layer,
    /// jumping straight to the base layer when the skip rule fires), then
    /// searches the base layer from branch 0's entry and from branch 1's
    /// entry with branch 0's result excluded, and merges the two.
    pub fn search_with(&self, query: &[f32], k: usize, params: &SearchParams) -> Result<SearchOutcome> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        if k < 1 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if k > params.ef_search {
            return Err(Error::KExceedsEf {
                k,
                ef_search: params.ef_search,
            });
        }

        let mut hops = 0;
        let mut skip_count = 0;
        let mut base_entries: Vec<Option<u32>> = Vec::with_capacity(self.branches.len());
        for (b, branch) in self.branches.iter().enumerate() {
            let Some(mut cur) = branch.entry_point else {
                base_entries.push(None);
                continue;
            };
            for level in (1..=branch.top_layer).rev() {
                let r = self.search_internal(query, &[cur], 1, LayerRef::upper(b, level), &[], params.skip.as_ref())?;
                hops += r.hops;
                cur = r.nearest[0].label;
                if r.skip {
                    skip_count += 1;
                    break;
                }
            }
            base_entries.push(Some(cur));
        }

        let w1 = match base_entries[0] {
            Some(e) => {
                let r = self.search_internal(query, &[e], params.ef_search, LayerRef::Base, &[], None)?;
                hops += r.hops;
                r.nearest
            }
            None => Vec::new(),
        };
        let w2 = match base_entries.get(1).copied().flatten() {
            Some(e) => {
                let exclude: Vec<u32> = w1.iter().map(|n| n.label).collect();
                match self.search_internal(query, &[e], params.ef_search, LayerRef::Base, &exclude, None) {
                    Ok(r) => {
                        hops += r.hops;
                        r.nearest
                    }
                    Err(Error::ExcludeExhausted) => Vec::new(),
                    Err(e) => return Err(e),
                }
            }
            None => Vec::new(),
        };
        let neighbors = merge_topk(&w1, &w2, k);
        Ok(SearchOutcome {
            neighbors,
            skip_count,
            w1,
            w2,
            hops,
        })
    }
}
