//! Dataset ingestion, synthetic generation and on-disk formats.

mod dataset;
mod persist;
mod synthetic;
mod vecs;

pub use dataset::{DatasetSpec, Source, PROTOCOL_BASE, PROTOCOL_QUERIES};
pub use persist::*;
pub use synthetic::{generate_synthetic, uniform_ball, Recipe};
pub use vecs::*;
