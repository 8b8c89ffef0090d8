use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_labels, stratified_folds, Classifier, ClassifyError, TrainerConfig};
use crate::metrics::{aggregate, evaluate_predictions, AggregateMetrics, EvaluationReport};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvaluationReport>,
    pub aggregate: AggregateMetrics,
}

fn take_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Stratified k-fold cross-validation. Each fold trains on the other
/// folds and is scored on its own rows; the aggregate is the unweighted
/// mean over folds.
pub fn cross_validate(
    x: &DMatrix<f64>,
    y: &[usize],
    classes: &[String],
    folds: usize,
    trainer: &TrainerConfig,
    seed: u64,
) -> Result<CvReport, ClassifyError> {
    check_labels(x, y, classes.len())?;
    let assignment = stratified_folds(y, classes.len(), folds, seed)?;
    let mut reports = Vec::with_capacity(folds);
    for f in 0..folds {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| assignment[i] == f);
        let xtr = take_rows(x, &kept);
        let ytr: Vec<usize> = kept.iter().map(|&i| y[i]).collect();
        let model = trainer.train(&xtr, &ytr, classes.len(), seed::derive_indexed(seed, f as u64, 3))?;
        let pred = model.predict(&take_rows(x, &held))?;
        let truth: Vec<usize> = held.iter().map(|&i| y[i]).collect();
        reports.push(evaluate_predictions(&truth, &pred, classes, Some(trainer.kind.tag().into()), Some(seed))?);
    }
    let aggregate = aggregate(&reports);
    Ok(CvReport { folds: reports, aggregate })
}
