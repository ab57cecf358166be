//! K-medoids clustering, k selection and dimensionality reduction.
//!
//! Points are rows of an [`nalgebra::DMatrix`]; sparse TF-IDF rows can be
//! clustered directly through [`DistanceMatrix::from_tfidf`].

mod distance;
mod embeddings;
mod ipca;
mod pam;
mod selection;

use thiserror::Error;

pub use distance::{DistanceMatrix, Metric};
pub use embeddings::{
    load_embeddings, load_ids, write_embeddings_binary, write_embeddings_text, EmbeddingFormat,
    EmbeddingMatrix,
};
pub use ipca::{ipca_fit, ipca_fit_batches, reduce_to_variance, IpcaModel};
pub use pam::{kmedoids_fit, pam, ClusterAssignment, ClusterConfig};
pub use selection::{silhouette, silhouette_from_distances, sweep_k, sweep_k_distances, KReport, SweepResult};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is out of range for {n} points (need 2 ≤ k ≤ n)")]
    InvalidK { k: usize, n: usize },
    #[error("sweep range [{lo}, {hi}] is empty")]
    EmptySweep { lo: usize, hi: usize },
    #[error("input contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("silhouette needs at least two non-empty clusters")]
    SingleCluster,
    #[error("label vector has {labels} entries for {points} points")]
    LabelMismatch { labels: usize, points: usize },
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("incremental PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("retained components explain at most {max_ratio:.6} of the variance, below {threshold}")]
    VarianceUnreachable { threshold: f64, max_ratio: f64 },
    #[error("model has not been fitted")]
    NotFitted,
    #[error("embedding shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, ClusterError>;

pub(crate) fn check_finite(points: &nalgebra::DMatrix<f64>) -> Result<()> {
    for row in 0..points.nrows() {
        for col in 0..points.ncols() {
            if !points[(row, col)].is_finite() {
                return Err(ClusterError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}
