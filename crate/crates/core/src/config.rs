use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ablation selector.
///
/// | variant       | branches | LID-ordered insertion | skip bridges |
/// |---------------|----------|-----------------------|--------------|
/// | `Basic`       | 1        | no                    | no           |
/// | `MultiBranch` | 2        | no                    | no           |
/// | `LidBased`    | 1        | yes                   | no           |
/// | `Full`        | 2        | yes                   | yes          |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Basic,
    MultiBranch,
    LidBased,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Basic,
        Variant::MultiBranch,
        Variant::LidBased,
        Variant::Full,
    ];

    pub fn branch_count(self) -> usize {
        match self {
            Variant::Basic | Variant::LidBased => 1,
            Variant::MultiBranch | Variant::Full => 2,
        }
    }

    pub fn uses_lid(self) -> bool {
        matches!(self, Variant::LidBased | Variant::Full)
    }

    pub fn skips_by_default(self) -> bool {
        self == Variant::Full
    }

    /// Tag stored in index snapshots.
    pub fn tag(self) -> u32 {
        match self {
            Variant::Basic => 0,
            Variant::MultiBranch => 1,
            Variant::LidBased => 2,
            Variant::Full => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Variant::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::MultiBranch => "multi-branch",
            Variant::LidBased => "lid-based",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" | "hnsw" => Ok(Variant::Basic),
            "multi-branch" | "multibranch" | "multi_branch" => Ok(Variant::MultiBranch),
            "lid-based" | "lidbased" | "lid_based" | "lid" => Ok(Variant::LidBased),
            "full" | "hnswpp" | "hnsw++" => Ok(Variant::Full),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

/// Distance bound of the skip predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// Use the dataset's estimated average pairwise distance from the LID profile.
    Auto,
    Fixed(f64),
}

/// Which clauses the layer-skip predicate evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipPredicate {
    /// `lid(ep) > T && d(ep, q) < eps`
    #[default]
    LidAndDistance,
    /// `lid(ep) >= T` alone; kept for comparison runs.
    LidOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    pub m: usize,
    pub m0: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub top_l: usize,
    pub ml: f64,
    /// Threshold on normalized LID; `None` disables skip bridges.
    pub lid_threshold: Option<f64>,
    pub distance_epsilon: Epsilon,
    pub skip_predicate: SkipPredicate,
    /// Honor `lid_threshold` on variants other than `Full` when a profile exists.
    pub force_skips: bool,
    pub variant: Variant,
    pub rng_seed: u64,
}

impl IndexConfig {
    pub const DEFAULT_TOP_L: usize = 16;

    /// Defaults derived from `m`: `m0 = 2m`, `ml = 1/ln(m)`.
    pub fn new(m: usize, variant: Variant) -> Self {
        Self {
            m,
            m0: 2 * m,
            ef_construction: 128,
            ef_search: 64,
            top_l: Self::DEFAULT_TOP_L,
            ml: default_ml(m),
            lid_threshold: None,
            distance_epsilon: Epsilon::Auto,
            skip_predicate: SkipPredicate::default(),
            force_skips: false,
            variant,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.m0 < self.m {
            return bad(format!("m0 ({}) must be >= m ({})", self.m0, self.m));
        }
        if self.ef_construction < self.m {
            return bad(format!(
                "ef_construction ({}) must be >= m ({})",
                self.ef_construction, self.m
            ));
        }
        if self.ef_search < 1 {
            return bad("ef_search must be at least 1".into());
        }
        if self.top_l < 1 || self.top_l > u8::MAX as usize {
            return bad(format!("top_l must lie in 1..=255, got {}", self.top_l));
        }
        if !(self.ml.is_finite() && self.ml > 0.0) {
            return bad(format!("ml must be positive and finite, got {}", self.ml));
        }
        if let Some(t) = self.lid_threshold {
            // Thresholds above 1 are accepted: they are unreachable and act as "disabled".
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("lid_threshold must be finite and >= 0, got {t}"));
            }
        }
        if let Epsilon::Fixed(e) = self.distance_epsilon {
            if !(e.is_finite() && e > 0.0) {
                return bad(format!("distance_epsilon must be positive, got {e}"));
            }
        }
        Ok(())
    }

    pub fn skips_enabled(&self) -> bool {
        self.lid_threshold.is_some() && (self.variant.skips_by_default() || self.force_skips)
    }
}

pub fn default_ml(m: usize) -> f64 {
    if m > 1 {
        1.0 / (m as f64).ln()
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for v in Variant::ALL {
            IndexConfig::new(16, v).validate().unwrap();
        }
        let c = IndexConfig::new(16, Variant::Full);
        assert_eq!(c.m0, 32);
        assert!((c.ml - 1.0 / 16f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_fields() {
        let mut c = IndexConfig::new(8, Variant::Basic);
        c.m0 = 4;
        assert!(c.validate().is_err());
        let mut c = IndexConfig::new(8, Variant::Basic);
        c.ef_construction = 4;
        assert!(c.validate().is_err());
        let mut c = IndexConfig::new(8, Variant::Basic);
        c.ef_search = 0;
        assert!(c.validate().is_err());
        let mut c = IndexConfig::new(8, Variant::Basic);
        c.lid_threshold = Some(-0.1);
        assert!(c.validate().is_err());
        let mut c = IndexConfig::new(8, Variant::Basic);
        c.distance_epsilon = Epsilon::Fixed(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(Variant::from_tag(v.tag()), Some(v));
        }
        assert!("bogus".parse::<Variant>().is_err());
    }
}
