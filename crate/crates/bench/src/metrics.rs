//! Recall and accuracy against exact ground truth.
//!
//! `accuracy@k` is the hit rate of the single true nearest neighbor: a query
//! scores 1 when the rank-1 ground-truth label appears anywhere in the
//! returned `k`, else 0.

use std::collections::HashSet;

use hnswpp::GroundTruth;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("k must be positive")]
    ZeroK,
    #[error("ground-truth row holds {have} labels, fewer than k = {k}")]
    ShortTruth { have: usize, k: usize },
    #[error("{returned} labels returned for k = {k}")]
    TooManyResults { returned: usize, k: usize },
    #[error("{results} result rows for {truth} ground-truth rows")]
    BatchMismatch { results: usize, truth: usize },
}

fn check(returned: &[u32], truth: &[u32], k: usize) -> Result<(), MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    if truth.len() < k {
        return Err(MetricError::ShortTruth { have: truth.len(), k });
    }
    if returned.len() > k {
        return Err(MetricError::TooManyResults {
            returned: returned.len(),
            k,
        });
    }
    Ok(())
}

/// `|returned ∩ truth[..k]| / k`.
pub fn recall_at_k(returned: &[u32], truth: &[u32], k: usize) -> Result<f64, MetricError> {
    check(returned, truth, k)?;
    let want: HashSet<u32> = truth[..k].iter().copied().collect();
    let hits = returned
        .iter()
        .copied()
        .collect::<HashSet<u32>>()
        .intersection(&want)
        .count();
    Ok(hits as f64 / k as f64)
}

pub fn accuracy_at_k(returned: &[u32], truth: &[u32], k: usize) -> Result<f64, MetricError> {
    check(returned, truth, k)?;
    Ok(if returned.contains(&truth[0]) { 1.0 } else { 0.0 })
}

type PerQuery = fn(&[u32], &[u32], usize) -> Result<f64, MetricError>;

fn batch(results: &[Vec<u32>], gt: &GroundTruth, k: usize, f: PerQuery) -> Result<f64, MetricError> {
    if results.len() != gt.len() {
        return Err(MetricError::BatchMismatch {
            results: results.len(),
            truth: gt.len(),
        });
    }
    if results.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (q, r) in results.iter().enumerate() {
        total += f(r, gt.row(q), k)?;
    }
    Ok(total / results.len() as f64)
}

/// Mean recall@k over a query batch.
pub fn batch_recall(results: &[Vec<u32>], gt: &GroundTruth, k: usize) -> Result<f64, MetricError> {
    batch(results, gt, k, recall_at_k)
}

/// Fraction of queries whose true nearest neighbor was returned.
pub fn batch_accuracy(results: &[Vec<u32>], gt: &GroundTruth, k: usize) -> Result<f64, MetricError> {
    batch(results, gt, k, accuracy_at_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_examples() {
        let truth: Vec<u32> = (0..10).collect();
        assert_eq!(recall_at_k(&truth, &truth, 10).unwrap(), 1.0);
        let disjoint: Vec<u32> = (10..20).collect();
        assert_eq!(recall_at_k(&disjoint, &truth, 10).unwrap(), 0.0);
        let half: Vec<u32> = (5..15).collect();
        assert_eq!(recall_at_k(&half, &truth, 10).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_examples() {
        let truth = [7, 1, 2];
        assert_eq!(accuracy_at_k(&[1, 2, 7], &truth, 3).unwrap(), 1.0);
        assert_eq!(accuracy_at_k(&[1, 2, 3], &truth, 3).unwrap(), 0.0);
    }

    #[test]
    fn mismatches_are_errors() {
        assert_eq!(
            recall_at_k(&[1], &[1, 2], 3),
            Err(MetricError::ShortTruth { have: 2, k: 3 })
        );
        assert_eq!(
            recall_at_k(&[1, 2, 3], &[1, 2], 2),
            Err(MetricError::TooManyResults { returned: 3, k: 2 })
        );
        assert_eq!(accuracy_at_k(&[], &[1], 0), Err(MetricError::ZeroK));
    }
}
