//! Incremental PCA.
//!
//! Each batch is centred on its own mean and stacked below the current
//! components scaled by their singular values, plus one row correcting for
//! the shift between the running mean and the batch mean. The SVD of that
//! stack yields the updated components, so the data never has to be held in
//! memory at once.

use nalgebra::{DMatrix, DVector, SVD};

use super::{check_finite, ClusterError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IpcaModel {
    pub mean: DVector<f64>,
    /// Per-feature population variance of all samples seen.
    pub var: DVector<f64>,
    /// One orthonormal principal axis per row, by decreasing variance.
    pub components: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub n_seen: usize,
}

impl IpcaModel {
    pub fn new(n_features: usize) -> Self {
        IpcaModel {
            mean: DVector::zeros(n_features),
            var: DVector::zeros(n_features),
            components: DMatrix::zeros(0, n_features),
            singular_values: Vec::new(),
            explained_variance: Vec::new(),
            explained_variance_ratio: Vec::new(),
            n_seen: 0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn partial_fit(&mut self, batch: &DMatrix<f64>) -> Result<()> {
        let d = self.n_features();
        if batch.ncols() != d {
            return Err(ClusterError::ColumnMismatch {
                expected: d,
                got: batch.ncols(),
            });
        }
        let nb = batch.nrows();
        if nb == 0 {
            return Err(ClusterError::EmptyBatch);
        }
        check_finite(batch)?;

        let n_old = self.n_seen as f64;
        let n_new = n_old + nb as f64;
        let batch_mean = DVector::from_iterator(d, batch.column_iter().map(|c| c.mean()));
        let mut centred = batch.clone();
        for (mut col, m) in centred.column_iter_mut().zip(batch_mean.iter()) {
            col.add_scalar_mut(-m);
        }
        let batch_ss = DVector::from_iterator(d, centred.column_iter().map(|c| c.norm_squared()));

        let stacked = if self.n_seen == 0 {
            self.var = batch_ss / n_new;
            self.mean = batch_mean;
            centred
        } else {
            let shift = &self.mean - &batch_mean;
            let ss = self.var.scale(n_old)
                + batch_ss
                + shift.component_mul(&shift).scale(n_old * nb as f64 / n_new);
            self.var = ss / n_new;
            let correction = shift.scale((n_old * nb as f64 / n_new).sqrt());
            let m = self.n_components();
            let mut stacked = DMatrix::zeros(m + nb + 1, d);
            for i in 0..m {
                let row = self.components.row(i) * self.singular_values[i];
                stacked.set_row(i, &row);
            }
            stacked.view_mut((m, 0), (nb, d)).copy_from(&centred);
            stacked.set_row(m + nb, &correction.transpose());
            self.mean = (&self.mean * n_old + &batch_mean * nb as f64) / n_new;
            stacked
        };
        self.n_seen += nb;

        let svd = SVD::new(stacked, false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let keep = v_t.nrows().min(d).min(self.n_seen);
        let mut components = v_t.rows(0, keep).into_owned();
        flip_signs(&mut components);
        let s: Vec<f64> = svd.singular_values.iter().take(keep).copied().collect();

        let total_ss = self.var.sum() * self.n_seen as f64;
        self.explained_variance = s
            .iter()
            .map(|x| x * x / (self.n_seen as f64 - 1.0).max(1.0))
            .collect();
        self.explained_variance_ratio = s
            .iter()
            .map(|x| if total_ss > 0.0 { x * x / total_ss } else { 0.0 })
            .collect();
        self.components = components;
        self.singular_values = s;
        Ok(())
    }

    /// Projects `points` onto the first `m` components.
    pub fn transform(&self, points: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
        if points.ncols() != self.n_features() {
            return Err(ClusterError::ColumnMismatch {
                expected: self.n_features(),
                got: points.ncols(),
            });
        }
        let mut centred = points.clone();
        for (mut col, mu) in centred.column_iter_mut().zip(self.mean.iter()) {
            col.add_scalar_mut(-mu);
        }
        Ok(centred * self.components.rows(0, m).transpose())
    }
}

/// Makes the largest-magnitude entry of every row positive.
fn flip_signs(components: &mut DMatrix<f64>) {
    for mut row in components.row_iter_mut() {
        let pivot = row.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            row.neg_mut();
        }
    }
}

/// Fits a model over `batches` in order.
pub fn ipca_fit_batches(batches: &[DMatrix<f64>]) -> Result<IpcaModel> {
    let first = batches.first().ok_or(ClusterError::TooFewSamples(0))?;
    let total: usize = batches.iter().map(|b| b.nrows()).sum();
    if total < 2 {
        return Err(ClusterError::TooFewSamples(total));
    }
    let mut model = IpcaModel::new(first.ncols());
    for b in batches {
        model.partial_fit(b)?;
    }
    Ok(model)
}

/// Fits a model on `data` in consecutive row batches of `batch_size`.
pub fn ipca_fit(data: &DMatrix<f64>, batch_size: usize) -> Result<IpcaModel> {
    let n = data.nrows();
    if n < 2 {
        return Err(ClusterError::TooFewSamples(n));
    }
    let step = batch_size.max(1);
    let batches: Vec<DMatrix<f64>> = (0..n)
        .step_by(step)
        .map(|start| data.rows(start, step.min(n - start)).into_owned())
        .collect();
    ipca_fit_batches(&batches)
}

/// Projects onto the shortest prefix of components whose cumulative
/// explained-variance ratio reaches `threshold`; returns the projection and
/// the number of components used.
pub fn reduce_to_variance(
    model: &IpcaModel,
    points: &DMatrix<f64>,
    threshold: f64,
) -> Result<(DMatrix<f64>, usize)> {
    if model.n_seen == 0 || model.n_components() == 0 {
        return Err(ClusterError::NotFitted);
    }
    let mut cumulative = 0.0;
    let mut m = None;
    for (i, r) in model.explained_variance_ratio.iter().enumerate() {
        cumulative += r;
        // summed ratios of full-rank data land a few ulps below 1
        if cumulative >= threshold - 1e-12 {
            m = Some(i + 1);
            break;
        }
    }
    let m = m.ok_or(ClusterError::VarianceUnreachable {
        threshold,
        max_ratio: cumulative,
    })?;
    Ok((model.transform(points, m)?, m))
}
