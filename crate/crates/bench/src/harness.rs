//! Timed build and query runs, ablations, threshold sweeps and the parameter grid.
//!
//! LID profiles and ground truth are computed once per [`Workload`], outside
//! any timed region. Each repeat rebuilds with a seed drawn from the master
//! seed, runs an untimed warm-up batch, then times every query with a
//! monotonic clock.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use hnswpp::io::DatasetSpec;
use hnswpp::lid::build_profile;
use hnswpp::oracle::build_ground_truth;
use hnswpp::{GroundTruth, HnswIndex, IndexConfig, LidProfile, SearchParams, Variant, Vectors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics;
use crate::BenchError;

pub const EF_GRID: [usize; 5] = [16, 32, 64, 128, 256];
pub const THRESHOLD_GRID: [Option<f64>; 6] = [Some(0.5), Some(0.6), Some(0.7), Some(0.8), Some(0.9), None];
pub const DEFAULT_WARMUP: usize = 100;

/// Dataset plus everything derived from it that must stay out of timing.
#[derive(Debug, Clone)]
pub struct Workload {
    pub name: String,
    pub base: Vectors,
    pub queries: Vectors,
    pub profile: LidProfile,
    pub truth: GroundTruth,
}

impl Workload {
    /// Loads `spec` and computes the LID profile (`lid_k` neighbors) and top-`k` ground truth.
    pub fn prepare(spec: &DatasetSpec, k: usize, lid_k: usize) -> Result<Self, BenchError> {
        let (base, queries) = spec.load()?;
        let lid_k = lid_k.min(base.len().saturating_sub(1));
        let profile = build_profile(&base, lid_k, spec.seed)?;
        let truth = build_ground_truth(&base, &queries, k)?;
        Self::from_parts(spec.name.clone(), base, queries, profile, truth)
    }

    pub fn from_parts(
        name: String,
        base: Vectors,
        queries: Vectors,
        profile: LidProfile,
        truth: GroundTruth,
    ) -> Result<Self, BenchError> {
        if profile.len() != base.len() {
            return Err(BenchError::Setup(format!(
                "profile covers {} points, base has {}",
                profile.len(),
                base.len()
            )));
        }
        if truth.len() != queries.len() {
            return Err(BenchError::Setup(format!(
                "ground truth has {} rows for {} queries",
                truth.len(),
                queries.len()
            )));
        }
        if truth.base_checksum != base.checksum() || truth.query_checksum != queries.checksum() {
            return Err(BenchError::Setup(
                "ground truth checksums do not match the dataset".into(),
            ));
        }
        Ok(Self {
            name,
            base,
            queries,
            profile,
            truth,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub k: usize,
    pub repeats: usize,
    pub master_seed: u64,
    /// Leading queries run once, untimed, before each measured batch.
    pub warmup: usize,
    /// Fan queries out over the rayon pool; timings become wall-clock per batch.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            k: 10,
            repeats: 1,
            master_seed: 0,
            warmup: DEFAULT_WARMUP,
            parallel: false,
        }
    }
}

/// Per-repeat build seeds drawn from `master`.
pub fn repeat_seeds(master: u64, repeats: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..repeats).map(|_| rng.random()).collect()
}

/// One CSV row: one (variant, threshold, repeat).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub dataset: String,
    pub variant: String,
    pub threshold: String,
    pub repeat: usize,
    pub seed: u64,
    pub m: usize,
    pub m0: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub top_l: usize,
    pub skip_predicate: String,
    pub k: usize,
    pub queries: usize,
    pub recall_at_k: f64,
    pub accuracy_at_k: f64,
    pub build_seconds: f64,
    pub query_mean_seconds: f64,
    pub query_median_seconds: f64,
    pub query_p99_seconds: f64,
    pub skip_count: u64,
    pub mean_hops: f64,
    pub parallel: bool,
    pub base_checksum: String,
    pub query_checksum: String,
}

/// Medians over the repeats of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub dataset: String,
    pub variant: String,
    pub threshold: String,
    pub m: usize,
    pub m0: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub top_l: usize,
    pub skip_predicate: String,
    pub k: usize,
    pub recall_at_k: f64,
    pub accuracy_at_k: f64,
    pub build_seconds: f64,
    pub query_mean_seconds: f64,
    pub query_median_seconds: f64,
    pub query_p99_seconds: f64,
    pub skip_count: f64,
    pub mean_hops: f64,
    pub runs: usize,
    pub parallel: bool,
    pub base_checksum: String,
    pub query_checksum: String,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl RunReport {
    /// Aggregates rows that share one configuration.
    pub fn from_records(records: &[RunRecord]) -> Result<Self, BenchError> {
        let first = records
            .first()
            .ok_or_else(|| BenchError::Setup("no runs to aggregate".into()))?;
        let med = |f: fn(&RunRecord) -> f64| median(&records.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            dataset: first.dataset.clone(),
            variant: first.variant.clone(),
            threshold: first.threshold.clone(),
            m: first.m,
            m0: first.m0,
            ef_construction: first.ef_construction,
            ef_search: first.ef_search,
            top_l: first.top_l,
            skip_predicate: first.skip_predicate.clone(),
            k: first.k,
            recall_at_k: med(|r| r.recall_at_k),
            accuracy_at_k: med(|r| r.accuracy_at_k),
            build_seconds: med(|r| r.build_seconds),
            query_mean_seconds: med(|r| r.query_mean_seconds),
            query_median_seconds: med(|r| r.query_median_seconds),
            query_p99_seconds: med(|r| r.query_p99_seconds),
            skip_count: med(|r| r.skip_count as f64),
            mean_hops: med(|r| r.mean_hops),
            runs: records.len(),
            parallel: first.parallel,
            base_checksum: first.base_checksum.clone(),
            query_checksum: first.query_checksum.clone(),
        })
    }
}

pub fn threshold_label(t: Option<f64>) -> String {
    t.map_or_else(|| "disabled".to_string(), |t| t.to_string())
}

struct QueryStats {
    results: Vec<Vec<u32>>,
    mean: f64,
    median: f64,
    p99: f64,
    skips: u64,
    hops: u64,
}

fn run_queries(
    index: &HnswIndex,
    queries: &Vectors,
    params: &SearchParams,
    opts: &BenchOptions,
) -> Result<QueryStats, BenchError> {
    let k = opts.k;
    for q in queries.iter().take(opts.warmup) {
        index.search_with(q, k, params)?;
    }
    let one = |q: &[f32]| {
        let t = Instant::now();
        let out = index.search_with(q, k, params)?;
        Ok::<_, hnswpp::Error>((out, t.elapsed().as_secs_f64()))
    };
    let start = Instant::now();
    let outs: Vec<_> = if opts.parallel {
        (0..queries.len())
            .into_par_iter()
            .map(|i| one(queries.get(i)))
            .collect::<Result<_, _>>()?
    } else {
        queries.iter().map(one).collect::<Result<_, _>>()?
    };
    let wall = start.elapsed().as_secs_f64();

    let n = outs.len().max(1) as f64;
    let mut times: Vec<f64> = outs.iter().map(|(_, t)| *t).collect();
    let mean = if opts.parallel {
        wall / n
    } else {
        times.iter().sum::<f64>() / n
    };
    times.sort_by(f64::total_cmp);
    Ok(QueryStats {
        mean,
        median: median(&times),
        p99: percentile(&times, 0.99),
        skips: outs.iter().map(|(o, _)| o.skip_count as u64).sum(),
        hops: outs.iter().map(|(o, _)| o.hops as u64).sum(),
        results: outs
            .into_iter()
            .map(|(o, _)| o.neighbors.into_iter().map(|n| n.label).collect())
            .collect(),
    })
}

/// Builds with `config` and returns the index with its construction time.
/// Structural invariants are checked afterwards, outside the timed region.
pub fn timed_build(w: &Workload, config: &IndexConfig) -> Result<(HnswIndex, f64), BenchError> {
    let profile = (config.variant.uses_lid() || config.force_skips).then_some(&w.profile);
    let start = Instant::now();
    let index = HnswIndex::build(&w.base, config.clone(), profile)?;
    let seconds = start.elapsed().as_secs_f64();
    verify(&index)?;
    for (b, reached) in index.reachable_counts().into_iter().enumerate() {
        if reached < index.len() {
            log::warn!(
                "{}: branch {b} entry reaches {reached} of {} nodes",
                config.variant,
                index.len()
            );
        }
    }
    Ok((index, seconds))
}

pub fn verify(index: &HnswIndex) -> Result<(), BenchError> {
    let violations = index.check_invariants();
    match violations.first() {
        None => Ok(()),
        Some(first) => Err(BenchError::Invariant {
            count: violations.len(),
            first: first.clone(),
        }),
    }
}

/// Accuracy, latency and skip statistics of one query batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub recall_at_k: f64,
    pub accuracy_at_k: f64,
    pub query_mean_seconds: f64,
    pub query_median_seconds: f64,
    pub query_p99_seconds: f64,
    pub skip_count: u64,
    pub mean_hops: f64,
}

/// Runs `queries` against `index` (warm-up first) and scores them against `truth`.
pub fn measure(
    index: &HnswIndex,
    queries: &Vectors,
    truth: &GroundTruth,
    params: &SearchParams,
    opts: &BenchOptions,
) -> Result<Measurement, BenchError> {
    let stats = run_queries(index, queries, params, opts)?;
    Ok(Measurement {
        recall_at_k: metrics::batch_recall(&stats.results, truth, opts.k)?,
        accuracy_at_k: metrics::batch_accuracy(&stats.results, truth, opts.k)?,
        query_mean_seconds: stats.mean,
        query_median_seconds: stats.median,
        query_p99_seconds: stats.p99,
        skip_count: stats.skips,
        mean_hops: stats.hops as f64 / queries.len().max(1) as f64,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    w: &Workload,
    config: &IndexConfig,
    threshold: Option<f64>,
    ef_search: usize,
    repeat: usize,
    build_seconds: f64,
    m: &Measurement,
    opts: &BenchOptions,
) -> RunRecord {
    RunRecord {
        dataset: w.name.clone(),
        variant: config.variant.name().to_string(),
        threshold: threshold_label(threshold),
        repeat,
        seed: config.rng_seed,
        m: config.m,
        m0: config.m0,
        ef_construction: config.ef_construction,
        ef_search,
        top_l: config.top_l,
        skip_predicate: format!("{:?}", config.skip_predicate),
        k: opts.k,
        queries: w.queries.len(),
        recall_at_k: m.recall_at_k,
        accuracy_at_k: m.accuracy_at_k,
        build_seconds,
        query_mean_seconds: m.query_mean_seconds,
        query_median_seconds: m.query_median_seconds,
        query_p99_seconds: m.query_p99_seconds,
        skip_count: m.skip_count,
        mean_hops: m.mean_hops,
        parallel: opts.parallel,
        base_checksum: w.truth.base_checksum.clone(),
        query_checksum: w.truth.query_checksum.clone(),
    }
}

fn check_options(w: &Workload, opts: &BenchOptions) -> Result<(), BenchError> {
    if opts.repeats == 0 {
        return Err(BenchError::Setup("repeats must be positive".into()));
    }
    if opts.k == 0 || opts.k > w.truth.k_gt {
        return Err(BenchError::Setup(format!(
            "k = {} must lie in 1..={} (ground-truth depth)",
            opts.k, w.truth.k_gt
        )));
    }
    Ok(())
}

/// `opts.repeats` fresh builds of `config`, each queried with its own settings.
pub fn run_benchmark(
    w: &Workload,
    config: &IndexConfig,
    opts: &BenchOptions,
) -> Result<(RunReport, Vec<RunRecord>), BenchError> {
    check_options(w, opts)?;
    let mut records = Vec::with_capacity(opts.repeats);
    for (repeat, seed) in repeat_seeds(opts.master_seed, opts.repeats).into_iter().enumerate() {
        let mut c = config.clone();
        c.rng_seed = seed;
        let (index, build_seconds) = timed_build(w, &c)?;
        let params = index.default_params();
        let m = measure(&index, &w.queries, &w.truth, &params, opts)?;
        log::info!(
            "{} repeat {repeat}: build {build_seconds:.3}s, recall {:.4}, {} skips",
            c.variant,
            m.recall_at_k,
            m.skip_count
        );
        records.push(make_record(w, &c, c.lid_threshold, c.ef_search, repeat, build_seconds, &m, opts));
    }
    Ok((RunReport::from_records(&records)?, records))
}

/// One report per variant, every other setting held fixed.
pub fn run_ablation(
    w: &Workload,
    base: &IndexConfig,
    opts: &BenchOptions,
) -> Result<(Vec<RunReport>, Vec<RunRecord>), BenchError> {
    let mut reports = Vec::new();
    let mut records = Vec::new();
    for v in Variant::ALL {
        let mut c = base.clone();
        c.variant = v;
        let (report, rows) = run_benchmark(w, &c, opts)?;
        reports.push(report);
        records.extend(rows);
    }
    Ok((reports, records))
}

/// Builds once per repeat and queries at every threshold (ascending).
pub fn run_threshold_sweep(
    w: &Workload,
    config: &IndexConfig,
    thresholds: &[f64],
    opts: &BenchOptions,
) -> Result<Vec<RunRecord>, BenchError> {
    check_options(w, opts)?;
    if thresholds.is_empty() || thresholds.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(BenchError::Setup("thresholds must be non-empty and strictly ascending".into()));
    }
    if !(config.variant.skips_by_default() || config.force_skips) {
        return Err(BenchError::Setup(format!(
            "variant {} ignores lid_threshold unless force_skips is set",
            config.variant
        )));
    }
    let mut records = Vec::new();
    for (repeat, seed) in repeat_seeds(opts.master_seed, opts.repeats).into_iter().enumerate() {
        let mut c = config.clone();
        c.rng_seed = seed;
        let (index, build_seconds) = timed_build(w, &c)?;
        for &t in thresholds {
            let params = SearchParams {
                ef_search: c.ef_search,
                skip: index.skip_rule(Some(t)),
            };
            let m = measure(&index, &w.queries, &w.truth, &params, opts)?;
            records.push(make_record(w, &c, Some(t), c.ef_search, repeat, build_seconds, &m, opts));
        }
    }
    Ok(records)
}

/// Best (ef_search, threshold) pair of a grid, chosen by median recall, then median query time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChoice {
    pub ef_search: usize,
    pub threshold: Option<f64>,
    pub report: RunReport,
}

/// Builds once per repeat and queries every grid point. Thresholds are
/// ignored for variants that cannot skip; `ef_search < k` points are dropped.
pub fn grid_search(
    w: &Workload,
    config: &IndexConfig,
    efs: &[usize],
    thresholds: &[Option<f64>],
    opts: &BenchOptions,
) -> Result<(GridChoice, Vec<RunRecord>), BenchError> {
    check_options(w, opts)?;
    let efs: Vec<usize> = efs.iter().copied().filter(|&ef| ef >= opts.k).collect();
    let thresholds: Vec<Option<f64>> = if config.variant.skips_by_default() || config.force_skips {
        thresholds.to_vec()
    } else {
        vec![None]
    };
    if efs.is_empty() || thresholds.is_empty() {
        return Err(BenchError::Setup("empty parameter grid".into()));
    }
    let mut records = Vec::new();
    for (repeat, seed) in repeat_seeds(opts.master_seed, opts.repeats).into_iter().enumerate() {
        let mut c = config.clone();
        c.rng_seed = seed;
        let (index, build_seconds) = timed_build(w, &c)?;
        for &ef in &efs {
            for &t in &thresholds {
                let params = SearchParams {
                    ef_search: ef,
                    skip: index.skip_rule(t),
                };
                let m = measure(&index, &w.queries, &w.truth, &params, opts)?;
                records.push(make_record(w, &c, t, ef, repeat, build_seconds, &m, opts));
            }
        }
    }

    let mut best: Option<GridChoice> = None;
    for &ef in &efs {
        for &t in &thresholds {
            let label = threshold_label(t);
            let rows: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.ef_search == ef && r.threshold == label)
                .cloned()
                .collect();
            let report = RunReport::from_records(&rows)?;
            let better = best.as_ref().is_none_or(|b| {
                report.recall_at_k > b.report.recall_at_k
                    || (report.recall_at_k == b.report.recall_at_k
                        && report.query_mean_seconds < b.report.query_mean_seconds)
            });
            if better {
                best = Some(GridChoice {
                    ef_search: ef,
                    threshold: t,
                    report,
                });
            }
        }
    }
    Ok((best.expect("grid is non-empty"), records))
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_path<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<(), BenchError> {
    write_csv(rows, std::fs::File::create(path)?)
}
