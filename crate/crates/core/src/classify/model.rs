use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::knn::{self, KnnParams, SubspaceKnnModel};
use super::qda::{self, QdaModel, QdaParams};
use super::svm::{self, Kernel, SvmModel, SvmParams};
use super::{check_labels, Classifier, ClassifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "qda")]
    Qda,
    #[serde(rename = "svm-gauss")]
    SvmGauss,
    #[serde(rename = "svm-quad")]
    SvmQuad,
    #[serde(rename = "svm-cubic")]
    SvmCubic,
    #[serde(rename = "subspace-knn")]
    SubspaceKnn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Qda,
        ClassifierKind::SvmGauss,
        ClassifierKind::SvmQuad,
        ClassifierKind::SvmCubic,
        ClassifierKind::SubspaceKnn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::Qda => "qda",
            ClassifierKind::SvmGauss => "svm-gauss",
            ClassifierKind::SvmQuad => "svm-quad",
            ClassifierKind::SvmCubic => "svm-cubic",
            ClassifierKind::SubspaceKnn => "subspace-knn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| ClassifyError::UnknownModelTag(s.to_string()))
    }
}

/// Hyperparameters for every classifier family; only the fields of the
/// selected `kind` are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub kind: ClassifierKind,
    pub qda_lambda: f64,
    pub qda_identity_covariance: bool,
    pub svm_c: f64,
    pub svm_tol: f64,
    /// Gaussian width; `None` means `1 / (d · var(X))` on the training rows.
    pub svm_gamma: Option<f64>,
    pub svm_coef0: f64,
    pub svm_max_iter: usize,
    pub knn_learners: usize,
    pub knn_subspace_dim: Option<usize>,
    pub knn_k: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::SvmCubic,
            qda_lambda: qda::DEFAULT_LAMBDA,
            qda_identity_covariance: false,
            svm_c: svm::DEFAULT_C,
            svm_tol: svm::DEFAULT_TOL,
            svm_gamma: None,
            svm_coef0: 1.0,
            svm_max_iter: svm::DEFAULT_MAX_ITER,
            knn_learners: knn::DEFAULT_LEARNERS,
            knn_subspace_dim: None,
            knn_k: knn::DEFAULT_K,
        }
    }
}

impl TrainerConfig {
    pub fn with_kind(kind: ClassifierKind) -> Self {
        Self { kind, ..Default::default() }
    }

    fn svm_params(&self, x: &DMatrix<f64>) -> SvmParams {
        let kernel = match self.kind {
            ClassifierKind::SvmGauss => Kernel::Gaussian { gamma: self.svm_gamma.unwrap_or_else(|| svm::default_gamma(x)) },
            ClassifierKind::SvmQuad => Kernel::Polynomial { degree: 2, coef0: self.svm_coef0 },
            _ => Kernel::Polynomial { degree: 3, coef0: self.svm_coef0 },
        };
        SvmParams { kernel, c: self.svm_c, tol: self.svm_tol, max_iter: self.svm_max_iter }
    }

    /// Fits the configured classifier. `seed` only affects the subspace
    /// ensemble.
    pub fn train(&self, x: &DMatrix<f64>, y: &[usize], n_classes: usize, seed: u64) -> Result<Model, ClassifyError> {
        check_labels(x, y, n_classes)?;
        Ok(match self.kind {
            ClassifierKind::Qda => Model::Qda(qda::train_qda(
                x,
                y,
                n_classes,
                &QdaParams { lambda: self.qda_lambda, identity_covariance: self.qda_identity_covariance },
            )?),
            ClassifierKind::SvmGauss => Model::SvmGauss(svm::train_svm(x, y, n_classes, &self.svm_params(x))?),
            ClassifierKind::SvmQuad => Model::SvmQuad(svm::train_svm(x, y, n_classes, &self.svm_params(x))?),
            ClassifierKind::SvmCubic => Model::SvmCubic(svm::train_svm(x, y, n_classes, &self.svm_params(x))?),
            ClassifierKind::SubspaceKnn => Model::SubspaceKnn(knn::train_subspace_knn(
                x,
                y,
                n_classes,
                &KnnParams { n_learners: self.knn_learners, subspace_dim: self.knn_subspace_dim, k: self.knn_k },
                seed,
            )?),
        })
    }
}

/// A fitted classifier, serialized as `{"tag": ..., "parameters": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "parameters")]
pub enum Model {
    #[serde(rename = "qda")]
    Qda(QdaModel),
    #[serde(rename = "svm-gauss")]
    SvmGauss(SvmModel),
    #[serde(rename = "svm-quad")]
    SvmQuad(SvmModel),
    #[serde(rename = "svm-cubic")]
    SvmCubic(SvmModel),
    #[serde(rename = "subspace-knn")]
    SubspaceKnn(SubspaceKnnModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Qda(_) => ClassifierKind::Qda,
            Model::SvmGauss(_) => ClassifierKind::SvmGauss,
            Model::SvmQuad(_) => ClassifierKind::SvmQuad,
            Model::SvmCubic(_) => ClassifierKind::SvmCubic,
            Model::SubspaceKnn(_) => ClassifierKind::SubspaceKnn,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Qda(m) => m,
            Model::SvmGauss(m) | Model::SvmQuad(m) | Model::SvmCubic(m) => m,
            Model::SubspaceKnn(m) => m,
        }
    }

    pub fn as_svm(&self) -> Option<&SvmModel> {
        match self {
            Model::SvmGauss(m) | Model::SvmQuad(m) | Model::SvmCubic(m) => Some(m),
            _ => None,
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        self.inner().predict_row(x)
    }
}
