//! Column standardization and principal component analysis.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STD_FLOOR: f64 = 1e-12;
pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("expected {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("variance target must be in (0, 1], got {0}")]
    InvalidTarget(f64),
    #[error("training data has zero total variance")]
    NoVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Per-column z-scoring learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn column_mean(col: &[f64]) -> f64 {
    // exact for constant columns so they map to zero
    if col.iter().all(|v| v.to_bits() == col[0].to_bits()) {
        return col[0];
    }
    col.iter().sum::<f64>() / col.len() as f64
}

pub fn fit_standardizer(train: &DMatrix<f64>) -> Result<Standardizer, FeatureError> {
    let n = train.nrows();
    if n < 2 {
        return Err(FeatureError::TooFewRows(n));
    }
    let mut mean = Vec::with_capacity(train.ncols());
    let mut std = Vec::with_capacity(train.ncols());
    for col in train.column_iter() {
        let col = col.as_slice();
        let m = column_mean(col);
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        if !var.is_finite() {
            return Err(FeatureError::NonFinite);
        }
        mean.push(m);
        std.push(var.sqrt().max(STD_FLOOR));
    }
    Ok(Standardizer { mean, std })
}

pub fn apply_standardizer(s: &Standardizer, x: &DMatrix<f64>) -> Result<DMatrix<f64>, FeatureError> {
    if x.ncols() != s.mean.len() {
        return Err(FeatureError::WidthMismatch { expected: s.mean.len(), got: x.ncols() });
    }
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let (m, sd) = (s.mean[j], s.std[j]);
        col.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }
    Ok(out)
}

/// Retained principal axes of the training covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One unit-norm row per component, `n_components × n_features`.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalue of each retained component.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub variance_target: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn cumulative_ratio(&self) -> f64 {
        self.explained_variance_ratio.iter().sum()
    }
}

/// Sample covariance (n − 1 denominator) of the rows of `x`.
pub fn sample_covariance(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mean: Vec<f64> = x.column_iter().map(|c| column_mean(c.as_slice())).collect();
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.iter_mut().for_each(|v| *v -= mean[j]);
    }
    let cov = centered.tr_mul(&centered) / (n - 1) as f64;
    (mean, cov)
}

/// Keeps the smallest leading set of components whose cumulative explained
/// variance reaches `variance_target`. Each component's largest-magnitude
/// entry is made positive.
pub fn fit_pca(train: &DMatrix<f64>, variance_target: f64) -> Result<PcaModel, FeatureError> {
    let n = train.nrows();
    if n < 2 {
        return Err(FeatureError::TooFewRows(n));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(FeatureError::InvalidTarget(variance_target));
    }
    if train.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    let (mean, cov) = sample_covariance(train);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(FeatureError::NoVariance);
    }

    let mut keep = values.len();
    let mut cum = 0.0;
    for (k, v) in values.iter().enumerate() {
        cum += v / total;
        if cum >= variance_target - 1e-12 {
            keep = k + 1;
            break;
        }
    }

    let mut components = Vec::with_capacity(keep);
    for &i in &order[..keep] {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut pivot = 0;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / norm);
        components.push(v);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues: values[..keep].to_vec(),
        explained_variance_ratio: values[..keep].iter().map(|v| v / total).collect(),
        variance_target,
    })
}

/// Projects centered rows onto the retained components.
pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>, FeatureError> {
    let d = model.n_features();
    if x.ncols() != d {
        return Err(FeatureError::WidthMismatch { expected: d, got: x.ncols() });
    }
    let k = model.n_components();
    let mut out = DMatrix::zeros(x.nrows(), k);
    let mut row = vec![0.0; d];
    for i in 0..x.nrows() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = x[(i, j)] - model.mean[j];
        }
        for (c, comp) in model.components.iter().enumerate() {
            out[(i, c)] = comp.iter().zip(&row).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

/// Maps scores back to feature space: `mean + scoresᵀ·components`.
pub fn pca_reconstruct(model: &PcaModel, scores: &[f64]) -> Vec<f64> {
    let mut out = model.mean.clone();
    for (s, comp) in scores.iter().zip(&model.components) {
        for (o, c) in out.iter_mut().zip(comp) {
            *o += s * c;
        }
    }
    out
}
