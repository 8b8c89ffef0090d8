use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, Model};
use crate::error::{Error, Result};
use crate::features::{apply_standardizer, pca_transform, PcaModel, Standardizer};
use crate::freqselect::FrequencySelection;
use crate::metrics::{evaluate_predictions, EvaluationReport};
use crate::rf::{feature_matrix_subset, LabeledDataset, Representation, RfError};

pub const BUNDLE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub format: u32,
    pub crate_version: String,
    pub classes: Vec<String>,
    pub seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub n_train: usize,
    /// SHA-256 of the serialized pipeline configuration.
    pub config_hash: String,
}

/// Everything applied to a raw trace before the classifier sees it:
/// representation → selected columns → standardization → PCA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub representation: Representation,
    pub open_circuit_cap: f64,
    pub grid: Vec<f64>,
    pub selection: FrequencySelection,
    pub standardizer: Option<Standardizer>,
    pub pca: PcaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub metadata: BundleMetadata,
    pub preprocessing: Preprocessing,
    pub model: Model,
}

fn width_err(expected: usize, got: usize) -> Error {
    ClassifyError::WidthMismatch { expected, got }.into()
}

impl TrainedClassifier {
    /// Checks that every stage's width matches the next one.
    pub fn validate(&self) -> Result<()> {
        let p = &self.preprocessing;
        let width = p.representation.width(p.grid.len());
        if p.selection.n_columns != width {
            return Err(width_err(width, p.selection.n_columns));
        }
        if let Some(&bad) = p.selection.kept_indices.iter().find(|&&c| c >= width) {
            return Err(width_err(width, bad + 1));
        }
        let kept = p.selection.kept_indices.len();
        if let Some(s) = &p.standardizer {
            if s.mean.len() != kept || s.std.len() != kept {
                return Err(width_err(kept, s.mean.len()));
            }
        }
        if p.pca.n_features() != kept {
            return Err(width_err(kept, p.pca.n_features()));
        }
        if self.model.n_features() != p.pca.n_components() {
            return Err(width_err(p.pca.n_components(), self.model.n_features()));
        }
        Ok(())
    }

    pub fn classes(&self) -> &[String] {
        &self.metadata.classes
    }

    /// PCA scores of the given traces (all traces when `rows` is `None`).
    pub fn transform(&self, dataset: &LabeledDataset, rows: Option<&[usize]>) -> Result<DMatrix<f64>> {
        let p = &self.preprocessing;
        let g = dataset.grid();
        if g.len() != p.grid.len() || g.iter().zip(&p.grid).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(RfError::GridMismatch { trace: 0 }.into());
        }
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..dataset.len()).collect();
                &all
            }
        };
        let x = feature_matrix_subset(dataset, p.representation, p.open_circuit_cap, rows, &p.selection.kept_indices).values;
        let x = match &p.standardizer {
            Some(s) => apply_standardizer(s, &x)?,
            None => x,
        };
        Ok(pca_transform(&p.pca, &x)?)
    }

    /// Classifies PCA-score rows directly.
    pub fn predict_scores(&self, scores: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(self.model.predict(scores)?)
    }

    pub fn predict_dataset(&self, dataset: &LabeledDataset, rows: Option<&[usize]>) -> Result<Vec<usize>> {
        self.predict_scores(&self.transform(dataset, rows)?)
    }

    /// Maps the dataset's labels onto this bundle's class roster.
    pub fn label_indices(&self, dataset: &LabeledDataset) -> Result<Vec<usize>> {
        dataset
            .traces()
            .iter()
            .map(|t| {
                let l = t.label.as_deref().unwrap_or("");
                self.metadata
                    .classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| RfError::UnknownLabel(l.to_string()).into())
            })
            .collect()
    }

    /// Scores the given rows (all when `None`) against their labels.
    pub fn evaluate(&self, dataset: &LabeledDataset, rows: Option<&[usize]>) -> Result<EvaluationReport> {
        let labels = self.label_indices(dataset)?;
        let truth: Vec<usize> = match rows {
            Some(r) => r.iter().map(|&i| labels[i]).collect(),
            None => labels,
        };
        let pred = self.predict_dataset(dataset, rows)?;
        Ok(evaluate_predictions(
            &truth,
            &pred,
            &self.metadata.classes,
            Some(self.model.kind().tag().to_string()),
            Some(self.metadata.split_seed),
        )?)
    }
}
