//! Dual-branch hierarchical navigable small-world index.
//!
//! The index keeps two upper-layer hierarchies ("branches") over one shared
//! base layer. Nodes are placed into layers by their local intrinsic
//! dimensionality (LID), so sparse, outlier-like points route the upper
//! layers, and a query may jump straight to the base layer once its descent
//! reaches a high-LID node close enough to it. The four [`Variant`]s switch
//! these mechanisms on and off independently.
//!
//! ```no_run
//! use hnswpp::{lid, io, HnswIndex, IndexConfig, Variant};
//!
//! let (base, queries) = io::DatasetSpec::gaussian_preset(7).load()?;
//! let profile = lid::build_profile(&base, lid::DEFAULT_LID_K, 0)?;
//! let mut config = IndexConfig::new(16, Variant::Full);
//! config.lid_threshold = Some(0.8);
//! let index = HnswIndex::build(&base, config, Some(&profile))?;
//! let hits = index.search(queries.get(0), 10)?;
//! println!("{:?} skips={}", hits.neighbors, hits.skip_count);
//! # Ok::<(), hnswpp::Error>(())
//! ```

pub mod config;
pub mod distance;
pub mod error;
pub mod graph;
pub mod io;
pub mod lid;
pub mod oracle;
mod vectors;

pub use config::{Epsilon, IndexConfig, SkipPredicate, Variant};
pub use error::{Error, Result};
pub use graph::{merge_topk, plan_assignment, HnswIndex, LayerRef, Neighbor, SearchOutcome, SearchParams, SkipRule};
pub use lid::{LayerAssignment, LidProfile, Placement};
pub use oracle::GroundTruth;
pub use vectors::Vectors;
