//! Quadratic discriminant analysis with shrinkage toward a scaled identity.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError};

pub const DEFAULT_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdaParams {
    pub lambda: f64,
    /// Replace every class covariance by the identity.
    pub identity_covariance: bool,
}

impl Default for QdaParams {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA, identity_covariance: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaClass {
    pub prior: f64,
    pub mean: Vec<f64>,
    /// Regularized covariance, row-major.
    pub covariance: Vec<Vec<f64>>,
    /// Lower Cholesky factor of `covariance`, row-major.
    pub chol_lower: Vec<Vec<f64>>,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaModel {
    pub lambda: f64,
    pub n_features: usize,
    pub classes: Vec<QdaClass>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Fits per-class Gaussians. The covariance of class `k` is shrunk to
/// `(1 - λ)·Σ_k + λ·(tr Σ_k / d)·I`; a class with zero spread borrows the
/// pooled scale instead.
pub fn train_qda(x: &DMatrix<f64>, y: &[usize], n_classes: usize, params: &QdaParams) -> Result<QdaModel, ClassifyError> {
    let (n, d) = x.shape();
    if !(0.0..=1.0).contains(&params.lambda) {
        return Err(ClassifyError::Config(format!("QDA lambda must be in [0, 1], got {}", params.lambda)));
    }
    let mut rows_of = vec![Vec::new(); n_classes];
    for (i, &l) in y.iter().enumerate() {
        rows_of[l].push(i);
    }
    for (k, rows) in rows_of.iter().enumerate() {
        if rows.len() < 2 {
            return Err(ClassifyError::TooFewPerClass { class: k, count: rows.len(), needed: 2 });
        }
    }

    let mut stats = Vec::with_capacity(n_classes);
    for rows in &rows_of {
        let nk = rows.len();
        let mut mean = vec![0.0; d];
        for &i in rows {
            for j in 0..d {
                mean[j] += x[(i, j)];
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk as f64);
        let mut centered = DMatrix::zeros(nk, d);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..d {
                centered[(r, j)] = x[(i, j)] - mean[j];
            }
        }
        let cov = centered.tr_mul(&centered) / (nk - 1) as f64;
        stats.push((nk, mean, cov));
    }
    let pooled_scale = {
        let s: f64 = stats.iter().map(|(_, _, c)| c.trace()).sum::<f64>() / (n_classes * d) as f64;
        if s > 0.0 { s } else { 1.0 }
    };

    let mut classes = Vec::with_capacity(n_classes);
    for (k, (nk, mean, cov)) in stats.into_iter().enumerate() {
        let reg = if params.identity_covariance {
            DMatrix::identity(d, d)
        } else {
            let scale = cov.trace() / d as f64;
            let scale = if scale > 0.0 { scale } else { pooled_scale };
            cov * (1.0 - params.lambda) + DMatrix::identity(d, d) * (params.lambda * scale)
        };
        let chol = Cholesky::new(reg.clone()).ok_or(ClassifyError::SingularCovariance { class: k })?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(ClassifyError::SingularCovariance { class: k });
        }
        classes.push(QdaClass {
            prior: nk as f64 / n as f64,
            mean,
            covariance: to_rows(&reg),
            chol_lower: to_rows(&l),
            log_det,
        });
    }
    Ok(QdaModel { lambda: params.lambda, n_features: d, classes })
}

impl QdaModel {
    /// `log π_k − ½ log|Σ_k| − ½ (x − μ_k)ᵀ Σ_k⁻¹ (x − μ_k)` for each class.
    pub fn discriminants(&self, x: &[f64]) -> Vec<f64> {
        let d = self.n_features;
        let mut z = vec![0.0; d];
        self.classes
            .iter()
            .map(|c| {
                // forward substitution: L z = x − μ
                for i in 0..d {
                    let mut s = x[i] - c.mean[i];
                    for j in 0..i {
                        s -= c.chol_lower[i][j] * z[j];
                    }
                    z[i] = s / c.chol_lower[i][i];
                }
                let maha: f64 = z.iter().map(|v| v * v).sum();
                c.prior.ln() - 0.5 * c.log_det - 0.5 * maha
            })
            .collect()
    }
}

impl Classifier for QdaModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        let g = self.discriminants(x);
        let mut best = 0;
        for (k, v) in g.iter().enumerate() {
            if *v > g[best] {
                best = k;
            }
        }
        best
    }
}
