//! Classifiers over reduced feature vectors, plus splitting and
//! cross-validation.

mod bundle;
mod cv;
pub mod knn;
mod model;
pub mod qda;
mod split;
pub mod svm;

use nalgebra::DMatrix;
use thiserror::Error;

pub use bundle::{BundleMetadata, Preprocessing, TrainedClassifier, BUNDLE_FORMAT};
pub use cv::{cross_validate, CvReport};
pub use knn::{KnnParams, SubspaceKnnModel};
pub use model::{ClassifierKind, Model, TrainerConfig};
pub use qda::{QdaModel, QdaParams};
pub use split::{split_train_test, stratified_folds, Split};
pub use svm::{Kernel, SvmModel, SvmParams};

use crate::metrics::MetricsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("class {class} has {count} training rows, need at least {needed}")]
    TooFewPerClass { class: usize, count: usize, needed: usize },
    #[error("invalid classifier configuration: {0}")]
    Config(String),
    #[error("covariance of class {class} is not positive definite")]
    SingularCovariance { class: usize },
    #[error("SVM solver did not converge after {iterations} iterations (gap {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("expected {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("unknown model tag `{0}`")]
    UnknownModelTag(String),
    #[error("label vector has {labels} entries for {rows} rows")]
    LabelLength { rows: usize, labels: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Row `i` of `x` as an owned vector.
pub fn row_of(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

pub(crate) fn check_labels(x: &DMatrix<f64>, y: &[usize], n_classes: usize) -> Result<(), ClassifyError> {
    if x.nrows() != y.len() {
        return Err(ClassifyError::LabelLength { rows: x.nrows(), labels: y.len() });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(ClassifyError::LabelOutOfRange { label, n_classes });
    }
    Ok(())
}

pub trait Classifier {
    fn n_features(&self) -> usize;

    /// Class index for one feature vector of length `n_features()`.
    fn predict_row(&self, x: &[f64]) -> usize;

    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>, ClassifyError> {
        if x.ncols() != self.n_features() {
            return Err(ClassifyError::WidthMismatch { expected: self.n_features(), got: x.ncols() });
        }
        Ok((0..x.nrows()).map(|i| self.predict_row(&row_of(x, i))).collect())
    }
}
