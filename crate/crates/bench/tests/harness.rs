use hnswpp::io::DatasetSpec;
use hnswpp::oracle::exact_knn;
use hnswpp::{IndexConfig, Variant};
use hnswpp_bench::harness::{self, THRESHOLD_GRID};
use hnswpp_bench::metrics::{batch_accuracy, batch_recall};
use hnswpp_bench::{
    grid_search, run_ablation, run_benchmark, run_threshold_sweep, write_csv, BenchError, BenchOptions, RunRecord,
    Workload,
};

fn smoke() -> Workload {
    Workload::prepare(&DatasetSpec::smoke_preset(3), 10, 32).unwrap()
}

fn config(v: Variant) -> IndexConfig {
    let mut c = IndexConfig::new(6, v);
    c.ef_construction = 32;
    c.ef_search = 16;
    c
}

fn opts(repeats: usize) -> BenchOptions {
    BenchOptions {
        repeats,
        master_seed: 11,
        warmup: 5,
        ..BenchOptions::default()
    }
}

fn non_timing(r: &RunRecord) -> RunRecord {
    RunRecord {
        build_seconds: 0.0,
        query_mean_seconds: 0.0,
        query_median_seconds: 0.0,
        query_p99_seconds: 0.0,
        ..r.clone()
    }
}

#[test]
fn smoke_run_completes() {
    let w = smoke();
    let (report, rows) = run_benchmark(&w, &config(Variant::Full), &opts(1)).unwrap();
    assert_eq!(report.runs, 1);
    assert_eq!(rows.len(), 1);
    assert!(report.recall_at_k > 0.0 && report.recall_at_k <= 1.0);
    assert!((0.0..=1.0).contains(&report.accuracy_at_k));
    assert!(report.build_seconds > 0.0 && report.query_mean_seconds > 0.0);
}

#[test]
fn comparable_reports_share_checksums() {
    let w = smoke();
    let (basic, _) = run_benchmark(&w, &config(Variant::Basic), &opts(1)).unwrap();
    let (full, _) = run_benchmark(&w, &config(Variant::Full), &opts(1)).unwrap();
    assert_eq!(basic.base_checksum, full.base_checksum);
    assert_eq!(basic.query_checksum, full.query_checksum);
    assert_ne!(basic.variant, full.variant);
}

#[test]
fn five_repeats_report_medians() {
    let w = smoke();
    let (report, rows) = run_benchmark(&w, &config(Variant::MultiBranch), &opts(5)).unwrap();
    assert_eq!(report.runs, 5);
    assert_eq!(rows.len(), 5);
    let seeds: std::collections::HashSet<u64> = rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 5);
    let builds: Vec<f64> = rows.iter().map(|r| r.build_seconds).collect();
    assert_eq!(report.build_seconds, harness::median(&builds));
}

#[test]
fn reruns_reproduce_non_timing_columns() {
    let w = smoke();
    let (_, a) = run_ablation(&w, &config(Variant::Basic), &opts(2)).unwrap();
    let (_, b) = run_ablation(&w, &config(Variant::Basic), &opts(2)).unwrap();
    assert_eq!(a.len(), 8);
    assert_eq!(a.iter().map(non_timing).collect::<Vec<_>>(), b.iter().map(non_timing).collect::<Vec<_>>());
}

#[test]
fn csv_header_is_fixed() {
    let w = smoke();
    let (_, rows) = run_benchmark(&w, &config(Variant::Basic), &opts(1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "dataset,variant,threshold,repeat,seed,m,m0,ef_construction,ef_search,top_l,skip_predicate,k,queries,\
         recall_at_k,accuracy_at_k,build_seconds,query_mean_seconds,query_median_seconds,query_p99_seconds,\
         skip_count,mean_hops,parallel,base_checksum,query_checksum"
    );
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn sweep_examples() {
    let w = smoke();
    let rows = run_threshold_sweep(&w, &config(Variant::Full), &[1.1], &opts(1)).unwrap();
    assert_eq!(rows[0].skip_count, 0);

    let thresholds = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let rows = run_threshold_sweep(&w, &config(Variant::Full), &thresholds, &opts(2)).unwrap();
    assert_eq!(rows.len(), 12);
    for repeat in 0..2 {
        let skips: Vec<u64> = rows.iter().filter(|r| r.repeat == repeat).map(|r| r.skip_count).collect();
        assert!(skips.windows(2).all(|p| p[0] >= p[1]), "{skips:?}");
        assert_eq!(*skips.last().unwrap(), 0);
    }

    // At the top threshold the predicate never fires, so recall matches a skip-free run.
    let (disabled, _) = run_benchmark(&w, &config(Variant::Full), &opts(2)).unwrap();
    let top: Vec<f64> = rows.iter().filter(|r| r.threshold == "1").map(|r| r.recall_at_k).collect();
    assert_eq!(harness::median(&top), disabled.recall_at_k);

    assert!(matches!(
        run_threshold_sweep(&w, &config(Variant::Full), &[0.5, 0.5], &opts(1)),
        Err(BenchError::Setup(_))
    ));
    assert!(matches!(
        run_threshold_sweep(&w, &config(Variant::Basic), &[0.5], &opts(1)),
        Err(BenchError::Setup(_))
    ));
}

#[test]
fn grid_picks_best_recall() {
    let w = smoke();
    let (choice, rows) = grid_search(&w, &config(Variant::Full), &[8, 16, 64], &THRESHOLD_GRID, &opts(1)).unwrap();
    // ef_search 8 < k is dropped.
    assert_eq!(rows.len(), 2 * THRESHOLD_GRID.len());
    let best = rows.iter().map(|r| r.recall_at_k).fold(f64::MIN, f64::max);
    assert_eq!(choice.report.recall_at_k, best);

    let (_, rows) = grid_search(&w, &config(Variant::Basic), &[16], &THRESHOLD_GRID, &opts(1)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].threshold, "disabled");
}

#[test]
fn batch_metrics_match_hand_count() {
    let w = smoke();
    let queries = w.queries.slice(0..10);
    let mut truth = w.truth.clone();
    truth.labels.truncate(10);
    truth.distances.truncate(10);

    // Odd queries get the exact answer; even ones get the exact ranks 2..=11 (true NN missing, 9 of 10 kept).
    let results: Vec<Vec<u32>> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let exact: Vec<u32> = exact_knn(&w.base, q, 11).unwrap().iter().map(|x| x.0).collect();
            if i % 2 == 1 {
                exact[..10].to_vec()
            } else {
                exact[1..].to_vec()
            }
        })
        .collect();
    assert_eq!(batch_accuracy(&results, &truth, 10).unwrap(), 0.5);
    assert!((batch_recall(&results, &truth, 10).unwrap() - 0.95).abs() < 1e-12);
    assert!(batch_recall(&results[..9], &truth, 10).is_err());
}

#[test]
fn parallel_mode_is_flagged_and_agrees() {
    let w = smoke();
    let mut o = opts(1);
    let (seq, _) = run_benchmark(&w, &config(Variant::Full), &o).unwrap();
    o.parallel = true;
    let (par, _) = run_benchmark(&w, &config(Variant::Full), &o).unwrap();
    assert!(par.parallel && !seq.parallel);
    assert_eq!(par.recall_at_k, seq.recall_at_k);
    assert_eq!(par.skip_count, seq.skip_count);
}

#[test]
fn bad_options_are_rejected() {
    let w = smoke();
    let mut o = opts(0);
    assert!(run_benchmark(&w, &config(Variant::Basic), &o).is_err());
    o.repeats = 1;
    o.k = 11;
    assert!(run_benchmark(&w, &config(Variant::Basic), &o).is_err());
}
