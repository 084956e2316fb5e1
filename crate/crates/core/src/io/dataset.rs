use std::path::PathBuf;

use super::synthetic::{generate_synthetic, Recipe};
use super::vecs::load_vectors;
use crate::error::{Error, Result};
use crate::vectors::Vectors;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Base vectors from a `.fvecs`/`.bvecs` file. Without a separate query
    /// file, queries are the `query_count` vectors following the base block.
    File {
        base: PathBuf,
        queries: Option<PathBuf>,
    },
    Synthetic(Recipe),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: Source,
    pub dimension: usize,
    pub base_count: usize,
    pub query_count: usize,
    pub seed: u64,
}

/// Base/query split used throughout the benchmarks: 10,000 indexed points and 1,000 queries.
pub const PROTOCOL_BASE: usize = 10_000;
pub const PROTOCOL_QUERIES: usize = 1_000;

impl DatasetSpec {
    /// 12-d, 8 clusters with spread 0.05. The cluster layout is artifact-defined.
    pub fn gaussian_preset(seed: u64) -> Self {
        Self {
            name: "gaussian".into(),
            source: Source::Synthetic(Recipe::Gaussian {
                dim: 12,
                clusters: 8,
                spread: 0.05,
            }),
            dimension: 12,
            base_count: PROTOCOL_BASE,
            query_count: PROTOCOL_QUERIES,
            seed,
        }
    }

    /// 100-d i.i.d. uniform.
    pub fn random_preset(seed: u64) -> Self {
        Self {
            name: "random".into(),
            source: Source::Synthetic(Recipe::Uniform { dim: 100 }),
            dimension: 100,
            base_count: PROTOCOL_BASE,
            query_count: PROTOCOL_QUERIES,
            seed,
        }
    }

    /// 200 base / 50 query points in 8-d, for quick end-to-end runs.
    pub fn smoke_preset(seed: u64) -> Self {
        Self {
            name: "smoke".into(),
            source: Source::Synthetic(Recipe::Uniform { dim: 8 }),
            dimension: 8,
            base_count: 200,
            query_count: 50,
            seed,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "gaussian" => Some(Self::gaussian_preset(seed)),
            "random" => Some(Self::random_preset(seed)),
            "smoke" => Some(Self::smoke_preset(seed)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if self.base_count == 0 {
            return Err(Error::InvalidInput("base_count must be positive".into()));
        }
        if let Source::Synthetic(r) = &self.source {
            if r.dim() != self.dimension {
                return Err(Error::InvalidInput(format!(
                    "recipe dimension {} differs from spec dimension {}",
                    r.dim(),
                    self.dimension
                )));
            }
        }
        Ok(())
    }

    /// Materializes `(base, queries)`.
    pub fn load(&self) -> Result<(Vectors, Vectors)> {
        self.validate()?;
        let (b, q) = (self.base_count, self.query_count);
        let (base, queries) = match &self.source {
            Source::Synthetic(recipe) => {
                let all = generate_synthetic(*recipe, b + q, self.seed)?;
                (all.slice(0..b), all.slice(b..b + q))
            }
            Source::File { base, queries: None } => {
                let all = load_vectors(base)?;
                if all.len() < b + q {
                    return Err(Error::InvalidInput(format!(
                        "{} holds {} vectors, need {}",
                        base.display(),
                        all.len(),
                        b + q
                    )));
                }
                (all.slice(0..b), all.slice(b..b + q))
            }
            Source::File {
                base,
                queries: Some(qpath),
            } => {
                let all = load_vectors(base)?;
                let qs = load_vectors(qpath)?;
                if all.len() < b || qs.len() < q {
                    return Err(Error::InvalidInput(format!(
                        "need {b} base and {q} query vectors, files hold {} and {}",
                        all.len(),
                        qs.len()
                    )));
                }
                (all.slice(0..b), qs.slice(0..q))
            }
        };
        for v in [&base, &queries] {
            if !v.is_empty() && v.dim() != self.dimension {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    actual: v.dim(),
                });
            }
        }
        Ok((base, queries))
    }
}
