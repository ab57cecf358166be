//! Partitioning Around Medoids: greedy BUILD followed by best-improvement
//! SWAP passes.
//!
//! Ties are always resolved towards the lowest index, which makes the
//! result independent of the seed. After SWAP converges, each medoid is
//! replaced by the lowest-indexed member of its cluster that gives the same
//! total cost, so among equal-cost solutions reachable this way the
//! smallest medoid indices are reported.

use nalgebra::DMatrix;

use super::selection::silhouette_from_distances;
use super::{ClusterError, DistanceMatrix, Metric, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub metric: Metric,
    pub max_iter: usize,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn new(k: usize, metric: Metric) -> Self {
        ClusterConfig {
            k,
            metric,
            max_iter: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Medoid row indices, ascending; cluster `c` has medoid `medoids[c]`.
    pub medoids: Vec<usize>,
    pub labels: Vec<usize>,
    pub cost: f64,
    pub silhouette: f64,
    pub build_cost: f64,
    /// Total cost after each improving SWAP pass.
    pub swap_costs: Vec<f64>,
    pub seed: u64,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.medoids.len()
    }
}

/// Nearest and second-nearest medoid distances per point.
struct Nearest {
    slot: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn nearest(dist: &DistanceMatrix, medoids: &[usize]) -> Nearest {
    let n = dist.len();
    let mut out = Nearest {
        slot: vec![0; n],
        d1: vec![f64::INFINITY; n],
        d2: vec![f64::INFINITY; n],
    };
    for j in 0..n {
        for (s, &m) in medoids.iter().enumerate() {
            let d = dist.get(m, j);
            if d < out.d1[j] {
                out.d2[j] = out.d1[j];
                out.d1[j] = d;
                out.slot[j] = s;
            } else if d < out.d2[j] {
                out.d2[j] = d;
            }
        }
    }
    out
}

fn total_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    nearest(dist, medoids).d1.iter().sum()
}

/// Cost after replacing the medoid in `slot` by point `h`.
fn swap_cost(dist: &DistanceMatrix, near: &Nearest, slot: usize, h: usize) -> f64 {
    let dh = dist.row(h);
    (0..dist.len())
        .map(|j| {
            let keep = if near.slot[j] == slot { near.d2[j] } else { near.d1[j] };
            keep.min(dh[j])
        })
        .sum()
}

fn build(dist: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = dist.len();
    let mut medoids = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    let mut d1 = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best = (f64::INFINITY, usize::MAX);
        for c in (0..n).filter(|&c| !is_medoid[c]) {
            let row = dist.row(c);
            let cost: f64 = d1.iter().zip(row).map(|(a, b)| a.min(*b)).sum();
            if cost < best.0 {
                best = (cost, c);
            }
        }
        let c = best.1;
        medoids.push(c);
        is_medoid[c] = true;
        for (d, x) in d1.iter_mut().zip(dist.row(c)) {
            *d = d.min(*x);
        }
    }
    medoids
}

fn improves(new: f64, old: f64) -> bool {
    old - new > 1e-12 * old.abs().max(f64::MIN_POSITIVE)
}

/// PAM on a precomputed distance matrix. The returned silhouette is 0 when
/// fewer than two clusters are non-empty.
pub fn pam(dist: &DistanceMatrix, k: usize, max_iter: usize) -> Result<ClusterAssignment> {
    let n = dist.len();
    if k < 2 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let mut medoids = build(dist, k);
    let build_cost = total_cost(dist, &medoids);
    let mut cost = build_cost;
    let mut swap_costs = Vec::new();

    let mut passes = 0;
    loop {
        while passes < max_iter {
            let near = nearest(dist, &medoids);
            let mut best = (cost, usize::MAX, usize::MAX);
            for slot in 0..k {
                for h in (0..n).filter(|h| !medoids.contains(h)) {
                    let c = swap_cost(dist, &near, slot, h);
                    if c < best.0 {
                        best = (c, slot, h);
                    }
                }
            }
            if best.1 == usize::MAX || !improves(best.0, cost) {
                break;
            }
            medoids[best.1] = best.2;
            cost = total_cost(dist, &medoids);
            swap_costs.push(cost);
            passes += 1;
        }

        // equal-cost moves towards lower indices; each move lowers the index
        // sum. A move can open up a new improving swap, so SWAP runs again.
        let mut moved = false;
        loop {
            let near = nearest(dist, &medoids);
            let mut step = None;
            'slots: for slot in 0..k {
                let m = medoids[slot];
                for h in (0..m).filter(|&h| near.slot[h] == slot && !medoids.contains(&h)) {
                    if swap_cost(dist, &near, slot, h) <= cost {
                        step = Some((slot, h));
                        break 'slots;
                    }
                }
            }
            let Some((slot, h)) = step else { break };
            medoids[slot] = h;
            cost = total_cost(dist, &medoids);
            moved = true;
        }
        if !moved || passes >= max_iter {
            break;
        }
    }

    medoids.sort_unstable();
    let labels = assign(dist, &medoids);
    let cost = labels
        .iter()
        .enumerate()
        .map(|(j, &c)| dist.get(medoids[c], j))
        .sum();
    let silhouette = silhouette_from_distances(dist, &labels).unwrap_or(0.0);
    Ok(ClusterAssignment {
        medoids,
        labels,
        cost,
        silhouette,
        build_cost,
        swap_costs,
        seed: 0,
    })
}

/// Nearest-medoid labels; a medoid always belongs to its own cluster and
/// other ties go to the lowest cluster id.
fn assign(dist: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..dist.len())
        .map(|j| {
            if let Some(own) = medoids.iter().position(|&m| m == j) {
                return own;
            }
            let mut best = (f64::INFINITY, 0);
            for (c, &m) in medoids.iter().enumerate() {
                let d = dist.get(m, j);
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        })
        .collect()
}

pub fn kmedoids_fit(points: &DMatrix<f64>, config: &ClusterConfig) -> Result<ClusterAssignment> {
    let n = points.nrows();
    if config.k < 2 || config.k > n {
        return Err(ClusterError::InvalidK { k: config.k, n });
    }
    let dist = DistanceMatrix::from_points(points, config.metric)?;
    let mut fit = pam(&dist, config.k, config.max_iter)?;
    fit.seed = config.seed;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(xs.len(), 1, xs)
    }

    fn exhaustive_pairs(dist: &DistanceMatrix) -> (f64, (usize, usize)) {
        let n = dist.len();
        let mut best = (f64::INFINITY, (0, 0));
        for a in 0..n {
            for b in a + 1..n {
                let c: f64 = (0..n).map(|j| dist.get(a, j).min(dist.get(b, j))).sum();
                if c < best.0 - 1e-12 {
                    best = (c, (a, b));
                }
            }
        }
        best
    }

    #[test]
    fn two_pairs_on_a_line() {
        let p = line(&[0.0, 1.0, 10.0, 11.0]);
        let dist = DistanceMatrix::from_points(&p, Metric::Euclidean).unwrap();
        let (opt, pair) = exhaustive_pairs(&dist);
        assert_eq!((opt, pair), (2.0, (0, 2)));

        let fit = kmedoids_fit(&p, &ClusterConfig::new(2, Metric::Euclidean)).unwrap();
        assert_eq!(fit.cost, 2.0);
        assert_eq!(fit.medoids, vec![0, 2]);
        assert_eq!(fit.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn k_equals_n() {
        let p = line(&[3.0, -1.0, 7.5]);
        let fit = kmedoids_fit(&p, &ClusterConfig::new(3, Metric::Euclidean)).unwrap();
        assert_eq!(fit.cost, 0.0);
        assert_eq!(fit.medoids, vec![0, 1, 2]);
        assert_eq!(fit.labels, vec![0, 1, 2]);
    }

    #[test]
    fn identical_points() {
        let p = line(&[4.0; 5]);
        let fit = kmedoids_fit(&p, &ClusterConfig::new(2, Metric::Euclidean)).unwrap();
        assert_eq!(fit.cost, 0.0);
        assert_eq!(fit.medoids, vec![0, 1]);
        assert_eq!(fit.labels[1], 1);
    }

    #[test]
    fn invalid_inputs() {
        let p = line(&[0.0, 1.0]);
        assert_eq!(
            kmedoids_fit(&p, &ClusterConfig::new(3, Metric::Euclidean)),
            Err(ClusterError::InvalidK { k: 3, n: 2 })
        );
        let p = line(&[0.0, f64::INFINITY, 2.0]);
        assert!(matches!(
            kmedoids_fit(&p, &ClusterConfig::new(2, Metric::Euclidean)),
            Err(ClusterError::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn swap_passes_strictly_decrease() {
        // BUILD picks the central point first, which is suboptimal here
        let p = line(&[0.0, 1.0, 2.0, 6.0, 7.0, 8.0, 20.0, 21.0]);
        let fit = kmedoids_fit(&p, &ClusterConfig::new(3, Metric::Euclidean)).unwrap();
        let mut prev = fit.build_cost;
        for &c in &fit.swap_costs {
            assert!(c < prev);
            prev = c;
        }
        assert!(fit.cost <= fit.build_cost);
    }

    #[test]
    fn medoid_labels_consistent() {
        let p = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 0.1, 0.2, 5.0, 5.0, 5.1, 4.9, 9.0, 0.0, 9.2, 0.1]);
        let fit = kmedoids_fit(&p, &ClusterConfig::new(3, Metric::Euclidean)).unwrap();
        let dist = DistanceMatrix::from_points(&p, Metric::Euclidean).unwrap();
        for (c, &m) in fit.medoids.iter().enumerate() {
            assert_eq!(fit.labels[m], c);
        }
        for j in 0..6 {
            let own = dist.get(fit.medoids[fit.labels[j]], j);
            assert!(fit.medoids.iter().all(|&m| own <= dist.get(m, j)));
        }
        assert_eq!(fit.labels, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn tie_move_is_followed_by_swap() {
        // BUILD lands on {2, 0}; the equal-cost move to {1, 0} leaves an
        // improving swap to {1, 3}
        let p = DMatrix::from_row_slice(
            4,
            2,
            &[0.9726, 4.2208, 3.9145, -1.5667, -2.3757, -1.3314, -3.3017, 3.0674],
        );
        let dist = DistanceMatrix::from_points(&p, Metric::Euclidean).unwrap();
        let fit = pam(&dist, 2, 100).unwrap();
        let near = nearest(&dist, &fit.medoids);
        for slot in 0..2 {
            for h in (0..4).filter(|h| !fit.medoids.contains(h)) {
                assert!(swap_cost(&dist, &near, slot, h) >= fit.cost - 1e-9);
            }
        }
        assert_eq!(fit.medoids, vec![1, 3]);
    }
}
