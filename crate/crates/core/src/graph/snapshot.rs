//! Binary index snapshot.
//!
//! ```text
//! magic       "HNSWPP1\0"
//! header      u32 dimension, n, top_l, m, m0, variant tag
//! vectors     n * dimension f32
//! placement   n * (u8 layer, u8 branch)
//! adjacency   for layer in 0..top_l, for each label with placement layer >= layer:
//!             u32 degree, degree * u32 label
//! trailer     u32 base entry, u32 branch count, branch count * u32 entry point,
//!             u32 ef_construction, u32 ef_search, f64 ml, f64 lid_threshold (NaN = none),
//!             u8 skip predicate, u8 force_skips, f64 fixed epsilon (NaN = auto), u64 rng seed,
//!             u8 has_lid [, n * f64 normalized LID, f64 resolved epsilon]
//! ```
//!
//! All integers and floats are little-endian; `u32::MAX` encodes "no node".

use super::{BranchHierarchy, HnswIndex};
use crate::config::{Epsilon, IndexConfig, SkipPredicate, Variant};
use crate::error::{Error, Result};
use crate::lid::Placement;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"HNSWPP1\0";
const NONE: u32 = u32::MAX;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::at_byte(self.pos, format!("truncated {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::at_byte(self.pos, reason))
    }
}

fn opt_u32(x: Option<u32>) -> u32 {
    x.unwrap_or(NONE)
}

impl HnswIndex {
    /// Serializes the index. Every slot `0..n` must hold a node.
    pub fn to_snapshot_bytes(&self) -> Result<Vec<u8>> {
        let n = self.present.len();
        if self.len != n {
            return Err(Error::InvalidInput(
                "snapshot requires labels 0..n with no gaps".into(),
            ));
        }
        let cfg = &self.config;
        let mut out = Vec::with_capacity(64 + n * (self.dim * 4 + 2 + 4 + cfg.m0 * 4));
        out.extend_from_slice(SNAPSHOT_MAGIC);
        for x in [self.dim, n, cfg.top_l, cfg.m, cfg.m0] {
            out.extend_from_slice(&(x as u32).to_le_bytes());
        }
        out.extend_from_slice(&cfg.variant.tag().to_le_bytes());
        for x in &self.vectors {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for p in &self.placements {
            out.push(p.layer);
            out.push(p.branch);
        }
        for level in 0..cfg.top_l {
            for label in 0..n as u32 {
                let p = self.placements[label as usize];
                if (p.layer as usize) < level {
                    continue;
                }
                let links: &[u32] = if level == 0 {
                    &self.base_layer[label as usize]
                } else {
                    &self.branches[p.branch as usize].layers[level - 1][&label]
                };
                out.extend_from_slice(&(links.len() as u32).to_le_bytes());
                for l in links {
                    out.extend_from_slice(&l.to_le_bytes());
                }
            }
        }

        out.extend_from_slice(&opt_u32(self.base_entry).to_le_bytes());
        out.extend_from_slice(&(self.branches.len() as u32).to_le_bytes());
        for b in &self.branches {
            out.extend_from_slice(&opt_u32(b.entry_point).to_le_bytes());
        }
        out.extend_from_slice(&(cfg.ef_construction as u32).to_le_bytes());
        out.extend_from_slice(&(cfg.ef_search as u32).to_le_bytes());
        out.extend_from_slice(&cfg.ml.to_le_bytes());
        out.extend_from_slice(&cfg.lid_threshold.unwrap_or(f64::NAN).to_le_bytes());
        out.push(match cfg.skip_predicate {
            SkipPredicate::LidAndDistance => 0,
            SkipPredicate::LidOnly => 1,
        });
        out.push(cfg.force_skips as u8);
        let eps = match cfg.distance_epsilon {
            Epsilon::Auto => f64::NAN,
            Epsilon::Fixed(e) => e,
        };
        out.extend_from_slice(&eps.to_le_bytes());
        out.extend_from_slice(&cfg.rng_seed.to_le_bytes());
        match (&self.lid_table, self.epsilon) {
            (Some(t), Some(e)) => {
                out.push(1);
                for x in t {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                out.extend_from_slice(&e.to_le_bytes());
            }
            _ => out.push(0),
        }
        Ok(out)
    }

    /// Parses a snapshot; with `expected_dim`, rejects any other dimension.
    /// The decoded graph must pass [`HnswIndex::check_invariants`].
    pub fn from_snapshot_bytes(buf: &[u8], expected_dim: Option<usize>) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8, "magic")? != SNAPSHOT_MAGIC {
            return Err(Error::at_byte(0, "bad magic bytes"));
        }
        let dim = r.u32("dimension")? as usize;
        if dim == 0 {
            return r.fail("zero dimension");
        }
        if let Some(d) = expected_dim {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: dim,
                });
            }
        }
        let n = r.u32("node count")? as usize;
        let top_l = r.u32("top_l")? as usize;
        let m = r.u32("m")? as usize;
        let m0 = r.u32("m0")? as usize;
        let tag = r.u32("variant tag")?;
        let variant = match Variant::from_tag(tag) {
            Some(v) => v,
            None => return r.fail(format!("unknown variant tag {tag}")),
        };
        if top_l == 0 || top_l > u8::MAX as usize {
            return r.fail(format!("top_l {top_l} out of range"));
        }

        let vec_bytes = n
            .checked_mul(dim)
            .and_then(|x| x.checked_mul(4))
            .ok_or_else(|| Error::at_byte(r.pos, "vector block size overflows"))?;
        let raw = r.take(vec_bytes, "vector block")?;
        let vectors: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();

        let branch_count = variant.branch_count();
        let mut placements = Vec::with_capacity(n);
        for _ in 0..n {
            let layer = r.u8("placement")?;
            let branch = r.u8("placement")?;
            if layer as usize >= top_l || branch as usize >= branch_count {
                return r.fail(format!("placement ({layer}, {branch}) out of range"));
            }
            placements.push(Placement { layer, branch });
        }

        let mut base_layer = vec![Vec::new(); n];
        let mut branches: Vec<BranchHierarchy> =
            (0..branch_count).map(|_| BranchHierarchy::new(top_l)).collect();
        for level in 0..top_l {
            for label in 0..n {
                let p = placements[label];
                if (p.layer as usize) < level {
                    continue;
                }
                let degree = r.u32("degree")? as usize;
                let cap = if level == 0 { m0 } else { m };
                if degree > cap {
                    return r.fail(format!("degree {degree} exceeds cap {cap}"));
                }
                let mut links = Vec::with_capacity(degree);
                for _ in 0..degree {
                    let l = r.u32("neighbor label")?;
                    if l as usize >= n {
                        return r.fail(format!("neighbor label {l} out of range"));
                    }
                    links.push(l);
                }
                if level == 0 {
                    base_layer[label] = links;
                } else {
                    branches[p.branch as usize].layers[level - 1].insert(label as u32, links);
                }
            }
        }

        let read_node = |r: &mut Reader, what: &str| -> Result<Option<u32>> {
            match r.u32(what)? {
                NONE => Ok(None),
                x if (x as usize) < n => Ok(Some(x)),
                x => r.fail(format!("{what} {x} out of range")),
            }
        };
        let base_entry = read_node(&mut r, "base entry")?;
        let stored_branches = r.u32("branch count")? as usize;
        if stored_branches != branch_count {
            return r.fail(format!(
                "branch count {stored_branches} does not match variant {variant}"
            ));
        }
        for b in branches.iter_mut() {
            b.entry_point = read_node(&mut r, "entry point")?;
            b.top_layer = b
                .entry_point
                .map_or(0, |e| placements[e as usize].layer as usize);
        }

        let ef_construction = r.u32("ef_construction")? as usize;
        let ef_search = r.u32("ef_search")? as usize;
        let ml = r.f64("ml")?;
        let threshold = r.f64("lid_threshold")?;
        let skip_predicate = match r.u8("skip predicate")? {
            0 => SkipPredicate::LidAndDistance,
            1 => SkipPredicate::LidOnly,
            x => return r.fail(format!("unknown skip predicate {x}")),
        };
        let force_skips = match r.u8("force_skips")? {
            0 => false,
            1 => true,
            x => return r.fail(format!("invalid flag {x}")),
        };
        let eps = r.f64("epsilon")?;
        let rng_seed = r.u64("rng seed")?;
        let (lid_table, epsilon) = match r.u8("LID flag")? {
            0 => (None, None),
            1 => {
                let mut t = Vec::with_capacity(n);
                for _ in 0..n {
                    let x = r.f64("normalized LID")?;
                    if !(0.0..=1.0).contains(&x) {
                        return r.fail(format!("normalized LID {x} outside [0, 1]"));
                    }
                    t.push(x);
                }
                (Some(t), Some(r.f64("resolved epsilon")?))
            }
            x => return r.fail(format!("invalid LID flag {x}")),
        };
        if r.pos != buf.len() {
            return r.fail("trailing bytes after snapshot");
        }

        let config = IndexConfig {
            m,
            m0,
            ef_construction,
            ef_search,
            top_l,
            ml,
            lid_threshold: (!threshold.is_nan()).then_some(threshold),
            distance_epsilon: if eps.is_nan() {
                Epsilon::Auto
            } else {
                Epsilon::Fixed(eps)
            },
            skip_predicate,
            force_skips,
            variant,
            rng_seed,
        };
        config.validate()?;
        let index = HnswIndex {
            config,
            dim,
            vectors,
            present: vec![true; n],
            placements,
            base_layer,
            branches,
            base_entry,
            lid_table,
            epsilon,
            len: n,
        };
        let violations = index.check_invariants();
        if let Some(first) = violations.first() {
            return Err(Error::Format {
                location: "snapshot graph".into(),
                reason: format!("{} invariant violations, first: {first}", violations.len()),
            });
        }
        Ok(index)
    }
}
