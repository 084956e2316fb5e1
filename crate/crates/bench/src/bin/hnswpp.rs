use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hnswpp::io::{self, DatasetSpec, Recipe, Source};
use hnswpp::lid::{self, build_profile};
use hnswpp::oracle::build_ground_truth;
use hnswpp::{Epsilon, HnswIndex, IndexConfig, SearchParams, SkipPredicate, Variant};
use hnswpp_bench::harness::{self, EF_GRID, THRESHOLD_GRID};
use hnswpp_bench::{BenchError, BenchOptions, Workload};

macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($arg)*)?;
    }};
}

const EXIT_INPUT: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hnswpp", version, about = "Build, query and benchmark dual-branch HNSW indexes")]
struct Cli {
    /// Master seed: data generation and per-repeat build seeds derive from it.
    #[arg(long, env = "HNSWPP_SEED", default_value_t = 0, global = true)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic base/query pair as .fvecs files.
    Gen(GenArgs),
    /// Compute a LID profile for a vector file.
    Lid(LidArgs),
    /// Compute exact ground truth.
    Gt(GtArgs),
    /// Build an index and write a snapshot.
    Build(BuildArgs),
    /// Query a snapshot and report recall, accuracy and latency.
    Query(QueryArgs),
    /// Run all four variants with every other setting fixed.
    Ablate(AblateArgs),
    /// Query one build per repeat at ascending LID thresholds.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RecipeKind {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PredicateArg {
    LidAndDistance,
    LidOnly,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Synthetic preset: gaussian, random or smoke. Used when --base is absent.
    #[arg(long, default_value = "gaussian", conflicts_with = "base")]
    preset: String,
    /// Base vectors (.fvecs or .bvecs).
    #[arg(long)]
    base: Option<PathBuf>,
    /// Query vectors; without it, queries follow the base block in --base.
    #[arg(long, requires = "base")]
    queries: Option<PathBuf>,
    #[arg(long)]
    base_count: Option<usize>,
    #[arg(long)]
    query_count: Option<usize>,
    /// Seed for synthetic data; defaults to the master seed.
    #[arg(long)]
    data_seed: Option<u64>,
}

impl DatasetArgs {
    fn spec(&self, master: u64) -> Result<DatasetSpec> {
        let seed = self.data_seed.unwrap_or(master);
        let mut spec = match &self.base {
            None => DatasetSpec::preset(&self.preset, seed)
                .with_context(|| format!("unknown preset `{}`", self.preset))?,
            Some(base) => {
                let all = io::load_vectors(base)?;
                let query_count = match (&self.queries, self.query_count) {
                    (_, Some(q)) => q,
                    (Some(q), None) => io::load_vectors(q)?.len(),
                    (None, None) => io::PROTOCOL_QUERIES.min(all.len() / 2),
                };
                let base_count = match (&self.queries, self.base_count) {
                    (_, Some(b)) => b,
                    (Some(_), None) => all.len(),
                    (None, None) => all.len().saturating_sub(query_count),
                };
                DatasetSpec {
                    name: base
                        .file_stem()
                        .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
                    source: Source::File {
                        base: base.clone(),
                        queries: self.queries.clone(),
                    },
                    dimension: all.dim(),
                    base_count,
                    query_count,
                    seed,
                }
            }
        };
        if self.base.is_none() {
            if let Some(b) = self.base_count {
                spec.base_count = b;
            }
            if let Some(q) = self.query_count {
                spec.query_count = q;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// basic, multi-branch, lid-based or full.
    #[arg(long, default_value = "full")]
    variant: Variant,
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Base-layer degree cap; defaults to 2m.
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long, default_value_t = 128)]
    ef_construction: usize,
    #[arg(long, default_value_t = 64)]
    ef_search: usize,
    #[arg(long, default_value_t = IndexConfig::DEFAULT_TOP_L)]
    top_l: usize,
    /// Level normalization; defaults to 1/ln(m).
    #[arg(long)]
    ml: Option<f64>,
    /// Normalized-LID threshold, or "disabled".
    #[arg(long, default_value = "disabled", value_parser = parse_threshold)]
    lid_threshold: Threshold,
    /// Skip distance bound, or "auto" for the sampled average distance.
    #[arg(long, default_value = "auto", value_parser = parse_epsilon)]
    epsilon: Epsilon,
    #[arg(long, value_enum, default_value = "lid-and-distance")]
    skip_predicate: PredicateArg,
    /// Honor --lid-threshold on variants other than full.
    #[arg(long)]
    force_skips: bool,
    /// Level-generation seed; defaults to the master seed.
    #[arg(long)]
    build_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
struct Threshold(Option<f64>);

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s.eq_ignore_ascii_case("disabled") || s.eq_ignore_ascii_case("none") {
        return Ok(Threshold(None));
    }
    s.parse::<f64>()
        .map(|t| Threshold(Some(t)))
        .map_err(|e| format!("expected a number or `disabled`: {e}"))
}

fn parse_epsilon(s: &str) -> Result<Epsilon, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Epsilon::Auto);
    }
    s.parse::<f64>()
        .map(Epsilon::Fixed)
        .map_err(|e| format!("expected a number or `auto`: {e}"))
}

impl IndexArgs {
    fn config(&self, master: u64) -> Result<IndexConfig> {
        let mut c = IndexConfig::new(self.m, self.variant);
        if let Some(m0) = self.m0 {
            c.m0 = m0;
        }
        if let Some(ml) = self.ml {
            c.ml = ml;
        }
        c.ef_construction = self.ef_construction;
        c.ef_search = self.ef_search;
        c.top_l = self.top_l;
        c.lid_threshold = self.lid_threshold.0;
        c.distance_epsilon = self.epsilon;
        c.skip_predicate = match self.skip_predicate {
            PredicateArg::LidAndDistance => SkipPredicate::LidAndDistance,
            PredicateArg::LidOnly => SkipPredicate::LidOnly,
        };
        c.force_skips = self.force_skips;
        c.rng_seed = self.build_seed.unwrap_or(master);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Untimed warm-up queries before each measured batch.
    #[arg(long, default_value_t = harness::DEFAULT_WARMUP)]
    warmup: usize,
    /// Run queries in parallel; latencies become wall-clock and are flagged in the CSV.
    #[arg(long)]
    parallel: bool,
    /// Neighbors used by the LID estimator.
    #[arg(long, default_value_t = lid::DEFAULT_LID_K)]
    lid_k: usize,
    /// Per-repeat CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self, master: u64) -> BenchOptions {
        BenchOptions {
            k: self.k,
            repeats: self.repeats,
            master_seed: master,
            warmup: self.warmup,
            parallel: self.parallel,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Preset to generate; ignored when --recipe is given.
    #[arg(long, default_value = "gaussian")]
    preset: String,
    #[arg(long, value_enum)]
    recipe: Option<RecipeKind>,
    #[arg(long, default_value_t = 12)]
    dim: usize,
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    #[arg(long)]
    base_count: Option<usize>,
    #[arg(long)]
    query_count: Option<usize>,
    #[arg(long)]
    out_base: PathBuf,
    #[arg(long)]
    out_queries: PathBuf,
}

#[derive(Args, Debug)]
struct LidArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, default_value_t = lid::DEFAULT_LID_K)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GtArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Precomputed LID profile; computed on the fly when the variant needs one.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = lid::DEFAULT_LID_K)]
    lid_k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Override the snapshot's ef_search.
    #[arg(long)]
    ef_search: Option<usize>,
    /// Override the snapshot's threshold ("disabled" turns skips off).
    #[arg(long, value_parser = parse_threshold)]
    lid_threshold: Option<Threshold>,
    #[arg(long, default_value_t = harness::DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    index: IndexArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Tune each variant over the ef_search x threshold grid instead of running the fixed config.
    #[arg(long)]
    grid: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    index: IndexArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
    thresholds: Vec<f64>,
}

fn write_or_print<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            harness::write_csv_path(rows, p).with_context(|| format!("writing {}", p.display()))?;
            log::info!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => harness::write_csv(rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn gen(args: GenArgs, master: u64) -> Result<()> {
    let mut spec = DatasetSpec::preset(&args.preset, master)
        .with_context(|| format!("unknown preset `{}`", args.preset))?;
    if let Some(kind) = args.recipe {
        let recipe = match kind {
            RecipeKind::Uniform => Recipe::Uniform { dim: args.dim },
            RecipeKind::Gaussian => Recipe::Gaussian {
                dim: args.dim,
                clusters: args.clusters,
                spread: args.spread,
            },
        };
        spec.name = "custom".into();
        spec.source = Source::Synthetic(recipe);
        spec.dimension = args.dim;
    }
    spec.base_count = args.base_count.unwrap_or(spec.base_count);
    spec.query_count = args.query_count.unwrap_or(spec.query_count);
    let (base, queries) = spec.load()?;
    io::write_fvecs(&args.out_base, &base)?;
    io::write_fvecs(&args.out_queries, &queries)?;
    say!(
        "{} base / {} query vectors, dim {}, base checksum {}",
        base.len(),
        queries.len(),
        base.dim(),
        base.checksum()
    );
    Ok(())
}

fn lid_cmd(args: LidArgs, master: u64) -> Result<()> {
    let base = io::load_vectors(&args.base)?;
    let start = Instant::now();
    let profile = build_profile(&base, args.k, master)?;
    io::save_profile(&args.out, &profile)?;
    say!(
        "LID mean {:.3}, median {:.3}, avg distance {:.4}, {} degenerate, {:.2}s",
        profile.mean_raw(),
        profile.median_raw(),
        profile.avg_distance,
        profile.degenerate.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn gt_cmd(args: GtArgs) -> Result<()> {
    let base = io::load_vectors(&args.base)?;
    let queries = io::load_vectors(&args.queries)?;
    let gt = build_ground_truth(&base, &queries, args.k)?;
    io::save_ground_truth(&args.out, &gt)?;
    say!("ground truth for {} queries at depth {}", gt.len(), gt.k_gt);
    Ok(())
}

fn build_cmd(args: BuildArgs, master: u64) -> Result<()> {
    let spec = args.data.spec(master)?;
    let config = args.index.config(master)?;
    let (base, _) = spec.load()?;
    let profile = match (&args.profile, config.variant.uses_lid() || config.force_skips) {
        (Some(p), _) => Some(io::load_profile(p)?),
        (None, true) => Some(build_profile(&base, args.lid_k.min(base.len() - 1), spec.seed)?),
        (None, false) => None,
    };
    let start = Instant::now();
    let index = HnswIndex::build(&base, config, profile.as_ref())?;
    let seconds = start.elapsed().as_secs_f64();
    harness::verify(&index)?;
    io::save_snapshot(&args.out, &index)?;
    say!(
        "built {} ({} points, dim {}) in {seconds:.3}s -> {}",
        index.config().variant,
        index.len(),
        index.dim(),
        args.out.display()
    );
    Ok(())
}

fn query_cmd(args: QueryArgs) -> Result<()> {
    let queries = io::load_vectors(&args.queries)?;
    let mut index = io::load_snapshot(&args.index, Some(queries.dim()))?;
    let truth = io::load_ground_truth(&args.gt)?;
    if truth.query_checksum != queries.checksum() {
        bail!(BenchError::Setup("ground truth was computed for other queries".into()));
    }
    if let Some(ef) = args.ef_search {
        index.set_ef_search(ef)?;
    }
    if let Some(t) = args.lid_threshold {
        index.set_lid_threshold(t.0)?;
    }
    let params: SearchParams = index.default_params();
    let opts = BenchOptions {
        k: args.k,
        warmup: args.warmup,
        parallel: args.parallel,
        ..BenchOptions::default()
    };
    let m = harness::measure(&index, &queries, &truth, &params, &opts)?;
    say!(
        "recall@{k} {:.4}  accuracy@{k} {:.4}  mean {:.1}us  p99 {:.1}us  skips {}  hops {:.1}",
        m.recall_at_k,
        m.accuracy_at_k,
        m.query_mean_seconds * 1e6,
        m.query_p99_seconds * 1e6,
        m.skip_count,
        m.mean_hops,
        k = args.k
    );
    if let Some(out) = &args.out {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            variant: &'a str,
            ef_search: usize,
            threshold: String,
            k: usize,
            recall_at_k: f64,
            accuracy_at_k: f64,
            query_mean_seconds: f64,
            query_median_seconds: f64,
            query_p99_seconds: f64,
            skip_count: u64,
            mean_hops: f64,
            parallel: bool,
        }
        let row = Row {
            variant: index.config().variant.name(),
            ef_search: params.ef_search,
            threshold: harness::threshold_label(params.skip.map(|s| s.threshold)),
            k: args.k,
            recall_at_k: m.recall_at_k,
            accuracy_at_k: m.accuracy_at_k,
            query_mean_seconds: m.query_mean_seconds,
            query_median_seconds: m.query_median_seconds,
            query_p99_seconds: m.query_p99_seconds,
            skip_count: m.skip_count,
            mean_hops: m.mean_hops,
            parallel: args.parallel,
        };
        write_or_print(&[row], Some(out))?;
    }
    Ok(())
}

fn ablate(args: AblateArgs, master: u64) -> Result<()> {
    let spec = args.data.spec(master)?;
    let config = args.index.config(master)?;
    let opts = args.run.options(master);
    let w = Workload::prepare(&spec, opts.k, args.run.lid_k)?;
    if args.grid {
        let mut all = Vec::new();
        for v in Variant::ALL {
            let mut c = config.clone();
            c.variant = v;
            let (choice, rows) = harness::grid_search(&w, &c, &EF_GRID, &THRESHOLD_GRID, &opts)?;
            say!(
                "{:<13} best ef_search {:>3}, threshold {:<8} recall {:.4}, mean query {:.1}us",
                v.name(),
                choice.ef_search,
                harness::threshold_label(choice.threshold),
                choice.report.recall_at_k,
                choice.report.query_mean_seconds * 1e6
            );
            all.extend(rows);
        }
        return write_or_print(&all, args.run.out.as_deref());
    }
    let (reports, rows) = harness::run_ablation(&w, &config, &opts)?;
    for r in &reports {
        say!(
            "{:<13} recall {:.4}  accuracy {:.4}  build {:.3}s  query {:.1}us  skips {}",
            r.variant,
            r.recall_at_k,
            r.accuracy_at_k,
            r.build_seconds,
            r.query_mean_seconds * 1e6,
            r.skip_count
        );
    }
    write_or_print(&rows, args.run.out.as_deref())
}

fn sweep(args: SweepArgs, master: u64) -> Result<()> {
    let spec = args.data.spec(master)?;
    let config = args.index.config(master)?;
    let opts = args.run.options(master);
    let w = Workload::prepare(&spec, opts.k, args.run.lid_k)?;
    let rows = harness::run_threshold_sweep(&w, &config, &args.thresholds, &opts)?;
    for r in &rows {
        say!(
            "repeat {} threshold {:<4} skips {:>6}  recall {:.4}  query {:.1}us",
            r.repeat,
            r.threshold,
            r.skip_count,
            r.recall_at_k,
            r.query_mean_seconds * 1e6
        );
    }
    write_or_print(&rows, args.run.out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    let master = cli.seed;
    match cli.command {
        Command::Gen(a) => gen(a, master),
        Command::Lid(a) => lid_cmd(a, master),
        Command::Gt(a) => gt_cmd(a),
        Command::Build(a) => build_cmd(a, master),
        Command::Query(a) => query_cmd(a),
        Command::Ablate(a) => ablate(a, master),
        Command::Sweep(a) => sweep(a, master),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BenchError>() {
        Some(BenchError::Invariant { .. }) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        let io_err = match e.downcast_ref::<csv::Error>() {
            Some(c) => match c.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            },
            None => e.downcast_ref::<std::io::Error>(),
        };
        io_err.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
