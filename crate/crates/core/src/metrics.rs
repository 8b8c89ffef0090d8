//! Confusion matrices and macro-averaged classification metrics.
//!
//! Every per-class quantity is one-vs-rest: for class `i`, `TP` is the
//! diagonal entry, `FP` the rest of column `i`, `FN` the rest of row `i`,
//! and `TN` everything else.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("label index {0} is outside the class roster")]
    UnknownLabel(usize),
    #[error("y_true and y_pred differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("class {0:?} has no true rows")]
    EmptyTrueClass(String),
    #[error("metric needs at least two classes")]
    SingleClass,
    #[error("nothing to evaluate")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    /// `counts[i][j]`: rows of true class `i` predicted as class `j`.
    pub counts: Vec<Vec<u64>>,
}

/// One-vs-rest tallies for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneVsRest {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn one_vs_rest(&self, i: usize) -> OneVsRest {
        let n = self.n_classes();
        let tp = self.counts[i][i];
        let row: u64 = self.counts[i].iter().sum();
        let col: u64 = (0..n).map(|r| self.counts[r][i]).sum();
        let fn_ = row - tp;
        let fp = col - tp;
        OneVsRest { tp, fp, fn_, tn: self.total() - tp - fp - fn_ }
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: &[String]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::Length(y_true.len(), y_pred.len()));
    }
    let n = classes.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let bad = if t >= n { Some(t) } else if p >= n { Some(p) } else { None };
        if let Some(b) = bad {
            return Err(MetricsError::UnknownLabel(b));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), counts })
}

/// A macro average together with the classes whose term was 0/0 and was
/// counted as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroScore {
    pub value: f64,
    pub undefined: Vec<usize>,
}

fn macro_average(cm: &ConfusionMatrix, term: impl Fn(OneVsRest) -> (u64, u64)) -> MacroScore {
    let n = cm.n_classes();
    let mut sum = 0.0;
    let mut undefined = Vec::new();
    for i in 0..n {
        let (num, den) = term(cm.one_vs_rest(i));
        if den == 0 {
            undefined.push(i);
        } else {
            sum += num as f64 / den as f64;
        }
    }
    MacroScore { value: if n == 0 { 0.0 } else { sum / n as f64 }, undefined }
}

/// Mean over classes of `TP / (TP + FP)`; a never-predicted class adds 0.
pub fn precision_macro(cm: &ConfusionMatrix) -> MacroScore {
    macro_average(cm, |c| (c.tp, c.tp + c.fp))
}

/// Mean over classes of `TP / (TP + FN)`. Every class must have true rows.
pub fn recall_macro(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let s = macro_average(cm, |c| (c.tp, c.tp + c.fn_));
    if let Some(&i) = s.undefined.first() {
        return Err(MetricsError::EmptyTrueClass(cm.classes[i].clone()));
    }
    Ok(s.value)
}

/// Mean over classes of `TN / (TN + FP)`.
pub fn specificity_macro(cm: &ConfusionMatrix) -> Result<MacroScore, MetricsError> {
    if cm.n_classes() < 2 {
        return Err(MetricsError::SingleClass);
    }
    Ok(macro_average(cm, |c| (c.tn, c.tn + c.fp)))
}

/// Mean over classes of one-vs-rest accuracy `(TP + TN) / total`.
pub fn accuracy_macro_ovr(cm: &ConfusionMatrix) -> f64 {
    macro_average(cm, |c| (c.tp + c.tn, c.tp + c.tn + c.fp + c.fn_)).value
}

/// `trace / total`.
pub fn accuracy_overall(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        0.0
    } else {
        cm.trace() as f64 / total as f64
    }
}

/// Harmonic mean of macro precision and recall; 0 when both are 0.
pub fn f1_macro(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_tag: Option<String>,
    pub split_seed: Option<u64>,
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub n_rows: u64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    /// Macro-averaged one-vs-rest accuracy.
    pub accuracy_macro_ovr: f64,
    /// Fraction of rows classified correctly.
    pub accuracy_overall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub flags: Vec<String>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Full metric suite for a confusion matrix.
pub fn evaluate_confusion(
    cm: &ConfusionMatrix,
    model_tag: Option<String>,
    split_seed: Option<u64>,
) -> Result<EvaluationReport, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let precision = precision_macro(cm);
    let recall = recall_macro(cm)?;
    let specificity = specificity_macro(cm)?;
    let mut flags: Vec<String> = precision
        .undefined
        .iter()
        .map(|&i| format!("precision_undefined:{}", cm.classes[i]))
        .collect();
    flags.extend(specificity.undefined.iter().map(|&i| format!("specificity_undefined:{}", cm.classes[i])));

    let per_class = (0..cm.n_classes())
        .map(|i| {
            let c = cm.one_vs_rest(i);
            let p = ratio(c.tp, c.tp + c.fp);
            let r = ratio(c.tp, c.tp + c.fn_);
            ClassMetrics {
                class: cm.classes[i].clone(),
                precision: p,
                recall: r,
                specificity: ratio(c.tn, c.tn + c.fp),
                f1: f1_macro(p, r),
                support: c.tp + c.fn_,
            }
        })
        .collect();

    Ok(EvaluationReport {
        model_tag,
        split_seed,
        classes: cm.classes.clone(),
        confusion: cm.counts.clone(),
        n_rows: cm.total(),
        precision: precision.value,
        recall,
        specificity: specificity.value,
        accuracy_macro_ovr: accuracy_macro_ovr(cm),
        accuracy_overall: accuracy_overall(cm),
        f1: f1_macro(precision.value, recall),
        per_class,
        flags,
    })
}

/// Convenience wrapper over [`confusion`] and [`evaluate_confusion`].
pub fn evaluate_predictions(
    y_true: &[usize],
    y_pred: &[usize],
    classes: &[String],
    model_tag: Option<String>,
    split_seed: Option<u64>,
) -> Result<EvaluationReport, MetricsError> {
    evaluate_confusion(&confusion(y_true, y_pred, classes)?, model_tag, split_seed)
}

/// Unweighted mean of the headline metrics over several reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n_reports: usize,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub accuracy_macro_ovr: f64,
    pub accuracy_overall: f64,
    pub f1: f64,
}

pub fn aggregate(reports: &[EvaluationReport]) -> AggregateMetrics {
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&EvaluationReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    AggregateMetrics {
        n_reports: reports.len(),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        specificity: mean(|r| r.specificity),
        accuracy_macro_ovr: mean(|r| r.accuracy_macro_ovr),
        accuracy_overall: mean(|r| r.accuracy_overall),
        f1: mean(|r| r.f1),
    }
}
