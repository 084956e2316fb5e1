//! Benchmark harness for `hnswpp`: recall/accuracy metrics, timed repeat
//! runs, the four-variant ablation, LID-threshold sweeps and a parameter grid,
//! all emitting CSV.

pub mod harness;
pub mod metrics;

use thiserror::Error;

pub use harness::{
    grid_search, run_ablation, run_benchmark, run_threshold_sweep, write_csv, write_csv_path, BenchOptions,
    measure, GridChoice, Measurement, RunRecord, RunReport, Workload,
};
pub use metrics::{accuracy_at_k, recall_at_k, MetricError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Index(#[from] hnswpp::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid benchmark setup: {0}")]
    Setup(String),
    #[error("index failed {count} structural checks, first: {first}")]
    Invariant { count: usize, first: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
