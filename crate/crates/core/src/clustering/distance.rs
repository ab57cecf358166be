use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{check_finite, Result};
use crate::vectors::TfIdfMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `1 − cos(x, y)`. A zero row is at distance 0 from another zero row
    /// and 1 from anything else.
    Cosine,
    Euclidean,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!("unknown metric `{other}` (expected cosine or euclidean)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

fn cosine_distance(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    match (norm_a == 0.0, norm_b == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => (1.0 - dot / (norm_a * norm_b)).clamp(0.0, 2.0),
    }
}

/// Symmetric pairwise distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_points(points: &DMatrix<f64>, metric: Metric) -> Result<Self> {
        check_finite(points)?;
        let n = points.nrows();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| points.row(i).iter().copied().collect())
            .collect();
        let norms: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        Ok(Self::build(n, |i, j| match metric {
            Metric::Euclidean => rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                cosine_distance(dot, norms[i], norms[j])
            }
        }))
    }

    /// Distances between sparse TF-IDF rows.
    pub fn from_tfidf(m: &TfIdfMatrix, metric: Metric) -> Self {
        let n = m.n_rows();
        let sq_norms: Vec<f64> = (0..n)
            .map(|i| m.row(i).iter().map(|(_, w)| w * w).sum())
            .collect();
        let sparse_dot = |a: &[(usize, f64)], b: &[(usize, f64)]| {
            let (mut i, mut j, mut acc) = (0, 0, 0.0);
            while i < a.len() && j < b.len() {
                match a[i].0.cmp(&b[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        acc += a[i].1 * b[j].1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            acc
        };
        Self::build(n, |i, j| {
            let dot = sparse_dot(m.row(i), m.row(j));
            match metric {
                Metric::Cosine => cosine_distance(dot, sq_norms[i].sqrt(), sq_norms[j].sqrt()),
                Metric::Euclidean => (sq_norms[i] + sq_norms[j] - 2.0 * dot).max(0.0).sqrt(),
            }
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::build(n, f)
    }

    fn build(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}
