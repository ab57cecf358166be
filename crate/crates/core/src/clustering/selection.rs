use nalgebra::DMatrix;
use serde::Serialize;

use super::pam::pam;
use super::{ClusterAssignment, ClusterError, DistanceMatrix, Metric, Result};

/// Mean silhouette over all points.
///
/// `s(i) = (b − a) / max(a, b)` where `a` is the mean distance to the rest of
/// the point's cluster and `b` the smallest mean distance to another
/// cluster. Points in singleton clusters, and points with `a = b = 0`,
/// score 0.
pub fn silhouette_from_distances(dist: &DistanceMatrix, labels: &[usize]) -> Result<f64> {
    let n = dist.len();
    if labels.len() != n {
        return Err(ClusterError::LabelMismatch {
            labels: labels.len(),
            points: n,
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusterError::SingleCluster);
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &d) in dist.row(i).iter().enumerate() {
            sums[labels[j]] += d;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

pub fn silhouette(points: &DMatrix<f64>, labels: &[usize], metric: Metric) -> Result<f64> {
    let dist = DistanceMatrix::from_points(points, metric)?;
    silhouette_from_distances(&dist, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KReport {
    pub k: usize,
    pub cost: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: ClusterAssignment,
    pub table: Vec<KReport>,
    /// Set when the requested upper bound exceeded the number of points.
    pub truncated_from: Option<usize>,
}

/// Fits every `k` in `[k_lo, min(k_hi, n)]` and keeps the fit with the
/// highest mean silhouette, preferring the smaller `k` on ties.
pub fn sweep_k_distances(
    dist: &DistanceMatrix,
    k_lo: usize,
    k_hi: usize,
    max_iter: usize,
    seed: u64,
) -> Result<SweepResult> {
    let n = dist.len();
    let hi = k_hi.min(n);
    let lo = k_lo.max(2);
    if lo > hi || k_lo > k_hi {
        return Err(ClusterError::EmptySweep { lo: k_lo, hi: k_hi });
    }
    let mut best: Option<ClusterAssignment> = None;
    let mut table = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let mut fit = pam(dist, k, max_iter)?;
        fit.seed = seed;
        table.push(KReport {
            k,
            cost: fit.cost,
            silhouette: fit.silhouette,
        });
        if best.as_ref().map_or(true, |b| fit.silhouette > b.silhouette) {
            best = Some(fit);
        }
    }
    Ok(SweepResult {
        best: best.expect("non-empty sweep"),
        table,
        truncated_from: (k_hi > n).then_some(k_hi),
    })
}

pub fn sweep_k(
    points: &DMatrix<f64>,
    k_lo: usize,
    k_hi: usize,
    metric: Metric,
    seed: u64,
) -> Result<SweepResult> {
    let dist = DistanceMatrix::from_points(points, metric)?;
    sweep_k_distances(&dist, k_lo, k_hi, 100, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(xs.len(), 1, xs)
    }

    #[test]
    fn separated_pairs_score_high() {
        let s = silhouette(&line(&[0.0, 1.0, 10.0, 11.0]), &[0, 0, 1, 1], Metric::Euclidean).unwrap();
        // outer points: a = 1, b = 10.5; inner points: a = 1, b = 9.5
        let expected = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
        assert!((s - expected).abs() < 1e-15, "{s}");
        assert!(s > 0.89);
    }

    #[test]
    fn identical_points_score_zero() {
        let s = silhouette(&line(&[2.0; 4]), &[0, 0, 1, 1], Metric::Euclidean).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn singleton_scores_zero() {
        let p = line(&[0.0, 1.0, 10.0]);
        let dist = DistanceMatrix::from_points(&p, Metric::Euclidean).unwrap();
        let s = silhouette_from_distances(&dist, &[0, 0, 1]).unwrap();
        // points 0 and 1: a = 1, b = 10 and 9
        let expected = ((10.0 - 1.0) / 10.0 + (9.0 - 1.0) / 9.0 + 0.0) / 3.0;
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn single_cluster_is_error() {
        assert_eq!(
            silhouette(&line(&[0.0, 1.0]), &[0, 0], Metric::Euclidean),
            Err(ClusterError::SingleCluster)
        );
        assert!(matches!(
            silhouette(&line(&[0.0, 1.0]), &[0], Metric::Euclidean),
            Err(ClusterError::LabelMismatch { .. })
        ));
    }

    #[test]
    fn sweep_picks_two_blobs() {
        let p = line(&[0.0, 0.2, 0.4, 0.1, 50.0, 50.3, 50.1, 49.8]);
        let r = sweep_k(&p, 2, 5, Metric::Euclidean, 7).unwrap();
        assert_eq!(r.best.k(), 2);
        assert_eq!(r.table.iter().map(|t| t.k).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert_eq!(r.best.seed, 7);
        assert!(r.truncated_from.is_none());
    }

    #[test]
    fn sweep_truncates_and_single() {
        let p = line(&[0.0, 1.0, 5.0]);
        let r = sweep_k(&p, 2, 10, Metric::Euclidean, 0).unwrap();
        assert_eq!(r.truncated_from, Some(10));
        assert_eq!(r.table.len(), 2);
        let r = sweep_k(&p, 2, 2, Metric::Euclidean, 0).unwrap();
        assert_eq!(r.table.len(), 1);
        assert!(sweep_k(&p, 3, 2, Metric::Euclidean, 0).is_err());
    }
}
