use std::collections::{HashSet, VecDeque};

use super::HnswIndex;

impl HnswIndex {
    /// Structural invariants; returns one message per violation.
    ///
    /// Checked: degree caps, no self or dangling links, upper-layer membership
    /// matching each node's placement on every layer from its own down to 1,
    /// branch disjointness, entry points on their branch's top layer, and a
    /// non-empty base-layer neighbor list for every node once `n >= 2`.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut v = Vec::new();
        let cfg = &self.config;

        if self.branches.len() != cfg.variant.branch_count() {
            v.push(format!(
                "variant {} expects {} branches, index has {}",
                cfg.variant,
                cfg.variant.branch_count(),
                self.branches.len()
            ));
        }
        let count = self.present.iter().filter(|&&p| p).count();
        if count != self.len {
            v.push(format!("len {} but {count} labels present", self.len));
        }

        for label in self.labels() {
            let links = &self.base_layer[label as usize];
            check_links(&mut v, self, label, links, cfg.m0, "base layer");
            if self.len >= 2 && links.is_empty() {
                v.push(format!("label {label} has no base-layer links"));
            }
        }
        for (i, links) in self.base_layer.iter().enumerate() {
            if !self.present[i] && !links.is_empty() {
                v.push(format!("absent slot {i} has base-layer links"));
            }
        }

        for (b, branch) in self.branches.iter().enumerate() {
            for (idx, layer) in branch.layers.iter().enumerate() {
                let level = idx + 1;
                for (&label, links) in layer {
                    match self.placement(label) {
                        None => v.push(format!("absent label {label} on layer {level} of branch {b}")),
                        Some(p) => {
                            if p.branch as usize != b {
                                v.push(format!(
                                    "label {label} of branch {} found on layer {level} of branch {b}",
                                    p.branch
                                ));
                            }
                            if (p.layer as usize) < level {
                                v.push(format!(
                                    "label {label} placed at layer {} found on layer {level}",
                                    p.layer
                                ));
                            }
                        }
                    }
                    let what = format!("layer {level} of branch {b}");
                    check_links(&mut v, self, label, links, cfg.m, &what);
                    if let Some(&bad) = links.iter().find(|n| !layer.contains_key(n)) {
                        v.push(format!("label {label} links to {bad}, which is not on {what}"));
                    }
                }
            }
            let highest = self
                .labels()
                .filter_map(|l| self.placement(l))
                .filter(|p| p.branch as usize == b)
                .map(|p| p.layer as usize)
                .max();
            match (branch.entry_point, highest) {
                (None, None) => {}
                (Some(ep), Some(top)) => {
                    if branch.top_layer != top {
                        v.push(format!(
                            "branch {b} records top layer {} but its highest node is on {top}",
                            branch.top_layer
                        ));
                    }
                    match self.placement(ep) {
                        Some(p) if p.branch as usize == b && p.layer as usize == top => {}
                        _ => v.push(format!("entry point {ep} of branch {b} is not on layer {top}")),
                    }
                }
                (ep, top) => v.push(format!("branch {b} entry {ep:?} inconsistent with top layer {top:?}")),
            }
        }

        for label in self.labels() {
            let p = self.placements[label as usize];
            let Some(branch) = self.branches.get(p.branch as usize) else {
                v.push(format!("label {label} placed in missing branch {}", p.branch));
                continue;
            };
            for level in 1..=p.layer as usize {
                if !branch.layers.get(level - 1).is_some_and(|l| l.contains_key(&label)) {
                    v.push(format!(
                        "label {label} placed at layer {} missing from layer {level} of branch {}",
                        p.layer, p.branch
                    ));
                }
            }
        }
        v
    }

    /// Per branch, how many nodes its entry point reaches through the base
    /// layer and that branch's upper layers. HNSW does not guarantee full
    /// reachability, so callers log shortfalls rather than fail.
    pub fn reachable_counts(&self) -> Vec<usize> {
        self.branches
            .iter()
            .map(|branch| {
                let Some(ep) = branch.entry_point else { return 0 };
                let mut seen = vec![false; self.present.len()];
                let mut queue = VecDeque::from([ep]);
                seen[ep as usize] = true;
                let mut count = 1;
                while let Some(x) = queue.pop_front() {
                    let upper = branch.layers.iter().filter_map(|l| l.get(&x)).flatten();
                    for &y in self.base_layer[x as usize].iter().chain(upper) {
                        if !seen[y as usize] {
                            seen[y as usize] = true;
                            count += 1;
                            queue.push_back(y);
                        }
                    }
                }
                count
            })
            .collect()
    }
}

fn check_links(v: &mut Vec<String>, index: &HnswIndex, label: u32, links: &[u32], cap: usize, what: &str) {
    if links.len() > cap {
        v.push(format!("label {label} has degree {} > {cap} on {what}", links.len()));
    }
    let mut seen = HashSet::with_capacity(links.len());
    for &n in links {
        if n == label {
            v.push(format!("label {label} links to itself on {what}"));
        } else if !index.contains(n) {
            v.push(format!("label {label} links to absent label {n} on {what}"));
        }
        if !seen.insert(n) {
            v.push(format!("label {label} links to {n} twice on {what}"));
        }
    }
}
