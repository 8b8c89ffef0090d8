//! End-to-end flow: split → select → standardize → PCA → cross-validate →
//! fit → held-out evaluation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{
    cross_validate, split_train_test, BundleMetadata, CvReport, Preprocessing, Split, TrainedClassifier,
    TrainerConfig, BUNDLE_FORMAT,
};
use crate::error::{Error, Result};
use crate::features::{apply_standardizer, fit_pca, fit_standardizer, pca_transform, DEFAULT_VARIANCE_TARGET};
use crate::freqselect::{select_frequencies, FrequencySelection, RelevancePolicy};
use crate::metrics::EvaluationReport;
use crate::rf::{feature_matrix_subset, LabeledDataset, Representation, DEFAULT_OPEN_CIRCUIT_CAP};
use crate::seed::{self, streams};

pub const DEFAULT_MAX_CORR: f64 = 0.90;
pub const DEFAULT_TEST_FRACTION: f64 = 0.30;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub policy: RelevancePolicy,
    pub max_corr: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { policy: RelevancePolicy::default(), max_corr: DEFAULT_MAX_CORR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaConfig {
    pub variance_target: f64,
    pub standardize: bool,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { variance_target: DEFAULT_VARIANCE_TARGET, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub representation: Representation,
    pub open_circuit_cap: f64,
    pub selection: SelectionConfig,
    pub pca: PcaConfig,
    pub model: TrainerConfig,
    pub test_fraction: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            representation: Representation::default(),
            open_circuit_cap: DEFAULT_OPEN_CIRCUIT_CAP,
            selection: SelectionConfig::default(),
            pca: PcaConfig::default(),
            model: TrainerConfig::default(),
            test_fraction: DEFAULT_TEST_FRACTION,
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.selection.policy.validate()?;
        if !(self.selection.max_corr > 0.0) {
            return Err(Error::Config(format!("max_corr must be > 0, got {}", self.selection.max_corr)));
        }
        if !(self.pca.variance_target > 0.0 && self.pca.variance_target <= 1.0) {
            return Err(Error::Config(format!("variance target must be in (0, 1], got {}", self.pca.variance_target)));
        }
        if !(self.open_circuit_cap > 0.0) {
            return Err(Error::Config(format!("open-circuit cap must be positive, got {}", self.open_circuit_cap)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn split_seed(&self) -> u64 {
        seed::derive(self.seed, streams::SPLIT)
    }
}

/// Runs both selection stages on the given rows (all when `None`).
pub fn select(
    dataset: &LabeledDataset,
    labels: &[usize],
    rows: Option<&[usize]>,
    cfg: &PipelineConfig,
) -> Result<FrequencySelection> {
    let all: Vec<usize> = (0..dataset.len()).collect();
    let rows = rows.unwrap_or(&all);
    let cols: Vec<usize> = (0..cfg.representation.width(dataset.grid().len())).collect();
    let x = feature_matrix_subset(dataset, cfg.representation, cfg.open_circuit_cap, rows, &cols).values;
    let y: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    Ok(select_frequencies(&x, &y, dataset.classes(), &cfg.selection.policy, cfg.selection.max_corr)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub n_columns: usize,
    pub stage1_count: usize,
    pub stage2_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub model_tag: String,
    pub seed: u64,
    pub split_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub selection: SelectionSummary,
    pub n_components: usize,
    pub cumulative_explained_variance: f64,
    pub cv: CvReport,
    pub test: EvaluationReport,
}

impl TrainingReport {
    /// F1 (CV), F1 (test), precision, recall, specificity, accuracy.
    pub fn summary_row(&self) -> [f64; 6] {
        [
            self.cv.aggregate.f1,
            self.test.f1,
            self.test.precision,
            self.test.recall,
            self.test.specificity,
            self.test.accuracy_overall,
        ]
    }
}

pub const SUMMARY_HEADER: [&str; 6] = ["f1_train", "f1_test", "precision", "recall", "specificity", "accuracy"];

/// Trains on the dataset's own labels. See [`train_with_labels`].
pub fn train(
    dataset: &LabeledDataset,
    cfg: &PipelineConfig,
    selection: Option<FrequencySelection>,
) -> Result<(TrainedClassifier, TrainingReport)> {
    let labels = dataset.label_indices()?;
    train_with_labels(dataset, &labels, cfg, selection)
}

/// Full training flow with explicit class indices into `dataset.classes()`.
/// When `selection` is `None` it is computed on the training split only.
pub fn train_with_labels(
    dataset: &LabeledDataset,
    labels: &[usize],
    cfg: &PipelineConfig,
    selection: Option<FrequencySelection>,
) -> Result<(TrainedClassifier, TrainingReport)> {
    cfg.validate()?;
    let classes = dataset.classes().to_vec();
    let split_seed = cfg.split_seed();
    let Split { train, test } = split_train_test(labels, classes.len(), cfg.test_fraction, split_seed)?;

    let selection = match selection {
        Some(s) => {
            let width = cfg.representation.width(dataset.grid().len());
            if s.n_columns != width {
                return Err(crate::classify::ClassifyError::WidthMismatch { expected: width, got: s.n_columns }.into());
            }
            s
        }
        None => select(dataset, labels, Some(&train), cfg)?,
    };
    let x = feature_matrix_subset(dataset, cfg.representation, cfg.open_circuit_cap, &train, &selection.kept_indices)
        .values;
    let standardizer = if cfg.pca.standardize { Some(fit_standardizer(&x)?) } else { None };
    let x = match &standardizer {
        Some(s) => apply_standardizer(s, &x)?,
        None => x,
    };
    let pca = fit_pca(&x, cfg.pca.variance_target)?;
    let scores = pca_transform(&pca, &x)?;
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();

    let cv = cross_validate(&scores, &y, &classes, cfg.folds, &cfg.model, seed::derive(cfg.seed, streams::CV))?;
    let model = cfg.model.train(&scores, &y, classes.len(), seed::derive(cfg.seed, streams::ENSEMBLE))?;

    let bundle = TrainedClassifier {
        metadata: BundleMetadata {
            format: BUNDLE_FORMAT,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            classes: classes.clone(),
            seed: cfg.seed,
            split_seed,
            test_fraction: cfg.test_fraction,
            folds: cfg.folds,
            n_train: train.len(),
            config_hash: cfg.hash(),
        },
        preprocessing: Preprocessing {
            representation: cfg.representation,
            open_circuit_cap: cfg.open_circuit_cap,
            grid: dataset.grid().to_vec(),
            selection,
            standardizer,
            pca,
        },
        model,
    };
    bundle.validate()?;

    let pred = bundle.predict_dataset(dataset, Some(&test))?;
    let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    let test_report = crate::metrics::evaluate_predictions(
        &truth,
        &pred,
        &classes,
        Some(cfg.model.kind.tag().to_string()),
        Some(split_seed),
    )?;
    let p = &bundle.preprocessing;
    let report = TrainingReport {
        model_tag: cfg.model.kind.tag().to_string(),
        seed: cfg.seed,
        split_seed,
        n_train: train.len(),
        n_test: test.len(),
        selection: SelectionSummary {
            n_columns: p.selection.n_columns,
            stage1_count: p.selection.stage1_count,
            stage2_count: p.selection.stage2_count,
        },
        n_components: p.pca.n_components(),
        cumulative_explained_variance: p.pca.cumulative_ratio(),
        cv,
        test: test_report,
    };
    Ok((bundle, report))
}

/// Held-out rows of `dataset` under the bundle's own split.
pub fn bundle_test_rows(bundle: &TrainedClassifier, dataset: &LabeledDataset) -> Result<Vec<usize>> {
    let labels = bundle.label_indices(dataset)?;
    let split = split_train_test(
        &labels,
        bundle.metadata.classes.len(),
        bundle.metadata.test_fraction,
        bundle.metadata.split_seed,
    )?;
    Ok(split.test)
}

/// Applies the stored chain to `dataset`; with `test_split` only the rows
/// the bundle held out during training are scored.
pub fn evaluate(bundle: &TrainedClassifier, dataset: &LabeledDataset, test_split: bool) -> Result<EvaluationReport> {
    bundle.validate()?;
    if test_split {
        let rows = bundle_test_rows(bundle, dataset)?;
        bundle.evaluate(dataset, Some(&rows))
    } else {
        bundle.evaluate(dataset, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ClassifierKind, ClassifyError};
    use crate::cmos::{SimulatorConfig, SweepGrid};

    fn small_corpus(noise: f64) -> LabeledDataset {
        let cfg = SimulatorConfig {
            grid: SweepGrid { start_hz: 5e5, stop_hz: 4e9, n_points: 200 },
            noise_sigma: noise,
            observations_per_class: 40,
            ..Default::default()
        };
        crate::cmos::synthesize_dataset(&cfg).unwrap()
    }

    /// Keeps every column and nearly all variance. Noise-free curves are so
    /// smooth that redundancy pruning leaves only a couple of points.
    pub(crate) fn lossless(kind: ClassifierKind) -> PipelineConfig {
        PipelineConfig {
            model: TrainerConfig::with_kind(kind),
            selection: SelectionConfig { policy: RelevancePolicy::TopFraction { fraction: 1.0 }, max_corr: 1.01 },
            pca: PcaConfig { variance_target: 0.999, standardize: true },
            ..Default::default()
        }
    }

    #[test]
    fn noise_free_corpus_is_separable_for_every_classifier() {
        let ds = small_corpus(0.0);
        for kind in ClassifierKind::ALL {
            let (bundle, report) = train(&ds, &lossless(kind), None).unwrap();
            assert_eq!(report.selection.stage2_count, 200);
            assert_eq!(report.test.f1, 1.0, "{kind}");
            assert_eq!(evaluate(&bundle, &ds, false).unwrap().f1, 1.0, "{kind}");
        }
    }

    #[test]
    fn stored_test_metrics_reproduce_from_bundle() {
        let ds = small_corpus(0.12);
        let cfg = PipelineConfig { model: TrainerConfig::with_kind(ClassifierKind::Qda), ..Default::default() };
        let (bundle, report) = train(&ds, &cfg, None).unwrap();
        let json = serde_json::to_string(&bundle).unwrap();
        let back: TrainedClassifier = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bundle);
        let again = evaluate(&back, &ds, true).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&report.test).unwrap());
    }

    #[test]
    fn matrix_bypass_checks_width() {
        let ds = small_corpus(0.0);
        let cfg = PipelineConfig { model: TrainerConfig::with_kind(ClassifierKind::Qda), ..Default::default() };
        let (bundle, _) = train(&ds, &cfg, None).unwrap();
        let k = bundle.preprocessing.pca.n_components();
        let bad = nalgebra::DMatrix::zeros(2, k + 1);
        assert!(matches!(
            bundle.predict_scores(&bad),
            Err(Error::Classify(ClassifyError::WidthMismatch { .. }))
        ));
    }

    #[test]
    fn config_rejections() {
        let ds = small_corpus(0.0);
        let cfg = PipelineConfig { folds: 1, ..Default::default() };
        assert_eq!(train(&ds, &cfg, None).unwrap_err().exit_code(), 2);
        let cfg = PipelineConfig { test_fraction: 0.0, ..Default::default() };
        assert_eq!(train(&ds, &cfg, None).unwrap_err().exit_code(), 2);
    }
}
