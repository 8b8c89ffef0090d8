//! Two-stage frequency-point selection.
//!
//! Stage one scores every feature column by its strongest Pearson
//! correlation with a one-vs-rest class indicator and keeps the top of the
//! ranking. Stage two walks the survivors in relevance order and drops any
//! column that is too correlated with one already kept.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("vectors must have equal length >= 2 (got {0} and {1})")]
    Length(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("labels contain fewer than two classes")]
    SingleClass,
    #[error("selection is empty")]
    EmptySelection,
    #[error("invalid selection parameter: {0}")]
    Config(String),
}

/// Sample Pearson correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SelectError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(SelectError::Length(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if is_flat(x, sxx) || is_flat(y, syy) {
        return Err(SelectError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Constant up to rounding: the centered sum of squares is at the level of
/// the cancellation error of the mean.
fn is_flat(v: &[f64], centered_ss: f64) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let noise = scale * f64::EPSILON * 4.0;
    centered_ss <= noise * noise * v.len() as f64
}

/// Per-column relevance: max over classes of |r| with that class's 0/1
/// indicator, and the class attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceScores {
    pub scores: Vec<f64>,
    pub argmax: Vec<usize>,
}

pub fn class_relevance(
    features: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
) -> Result<RelevanceScores, SelectError> {
    let n = features.nrows();
    if n < 2 || labels.len() != n {
        return Err(SelectError::Length(n, labels.len()));
    }
    let mut class_n = vec![0usize; n_classes];
    for &l in labels {
        class_n[l] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&k| class_n[k] > 0).collect();
    if present.len() < 2 {
        return Err(SelectError::SingleClass);
    }
    let nf = n as f64;

    let per_column: Vec<(f64, usize)> = (0..features.ncols())
        .into_par_iter()
        .map(|j| {
            let col = features.column(j);
            let col = col.as_slice();
            let mean = col.iter().sum::<f64>() / nf;
            let sxx: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            if is_flat(col, sxx) {
                return (0.0, present[0]);
            }
            let mut class_sum = vec![0.0; n_classes];
            for (v, &l) in col.iter().zip(labels) {
                class_sum[l] += v - mean;
            }
            // r = S_k / sqrt(sxx · n_k (n - n_k) / n), where S_k sums the
            // centered column over class k.
            let mut best = (-1.0, present[0]);
            for &k in &present {
                let nk = class_n[k] as f64;
                let denom = (sxx * nk * (nf - nk) / nf).sqrt();
                let r = if denom > 0.0 { (class_sum[k] / denom).abs().min(1.0) } else { 0.0 };
                if r > best.0 {
                    best = (r, k);
                }
            }
            best
        })
        .collect();

    Ok(RelevanceScores {
        scores: per_column.iter().map(|p| p.0).collect(),
        argmax: per_column.iter().map(|p| p.1).collect(),
    })
}

/// Stage-one rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelevancePolicy {
    /// Keep the `ceil(f·m)` best columns.
    TopFraction { fraction: f64 },
    /// Keep columns scoring at least `t · max(score)`.
    RelThreshold { threshold: f64 },
    /// Intersection of the two.
    Both { fraction: f64, threshold: f64 },
}

impl Default for RelevancePolicy {
    fn default() -> Self {
        Self::Both { fraction: 0.20, threshold: 0.70 }
    }
}

impl RelevancePolicy {
    pub fn validate(&self) -> Result<(), SelectError> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(SelectError::Config(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        match *self {
            Self::TopFraction { fraction } => check("top fraction", fraction),
            Self::RelThreshold { threshold } => check("relevance threshold", threshold),
            Self::Both { fraction, threshold } => {
                check("top fraction", fraction)?;
                check("relevance threshold", threshold)
            }
        }
    }

    pub fn fraction(&self) -> Option<f64> {
        match *self {
            Self::TopFraction { fraction } | Self::Both { fraction, .. } => Some(fraction),
            Self::RelThreshold { .. } => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Self::RelThreshold { threshold } | Self::Both { threshold, .. } => Some(threshold),
            Self::TopFraction { .. } => None,
        }
    }
}

/// Column indices ordered by descending score, ties to the lower index.
pub fn relevance_order(scores: &RelevanceScores) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.scores.len()).collect();
    order.sort_by(|&a, &b| scores.scores[b].total_cmp(&scores.scores[a]).then(a.cmp(&b)));
    order
}

/// Applies the stage-one policy. The result is in descending relevance
/// order, ready for [`prune_redundant`].
pub fn select_relevant(scores: &RelevanceScores, policy: &RelevancePolicy) -> Result<Vec<usize>, SelectError> {
    policy.validate()?;
    let m = scores.scores.len();
    let mut order = relevance_order(scores);
    if let Some(f) = policy.fraction() {
        // guard against 0.2 * 10000 landing a hair above 2000
        let keep = ((f * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
        order.truncate(keep);
    }
    if let Some(t) = policy.threshold() {
        let max = scores.scores.iter().copied().fold(0.0f64, f64::max);
        let cut = t * max;
        order.retain(|&i| scores.scores[i] >= cut);
    }
    if order.is_empty() {
        return Err(SelectError::EmptySelection);
    }
    Ok(order)
}

/// Outcome of both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySelection {
    /// Kept feature columns, ascending.
    pub kept_indices: Vec<usize>,
    pub stage1_count: usize,
    pub stage2_count: usize,
    /// Number of feature columns the selection was computed over.
    pub n_columns: usize,
    pub policy: Option<RelevancePolicy>,
    pub max_corr: f64,
    /// Relevance of each kept column (parallel to `kept_indices`).
    #[serde(default)]
    pub relevance: Vec<f64>,
    /// Class most correlated with each kept column.
    #[serde(default)]
    pub argmax_class: Vec<String>,
}

impl FrequencySelection {
    /// Fills the per-kept relevance and class columns.
    pub fn annotate(&mut self, scores: &RelevanceScores, classes: &[String]) {
        self.relevance = self.kept_indices.iter().map(|&i| scores.scores[i]).collect();
        self.argmax_class = self.kept_indices.iter().map(|&i| classes[scores.argmax[i]].clone()).collect();
    }
}

/// Greedy redundancy pass: walk `candidates` in the given (relevance) order
/// and keep a column iff its |r| with every kept column is below `max_corr`.
/// Constant columns correlate with nothing.
pub fn prune_redundant(
    features: &DMatrix<f64>,
    candidates: &[usize],
    max_corr: f64,
) -> Result<FrequencySelection, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::EmptySelection);
    }
    if !(max_corr > 0.0) || max_corr.is_nan() {
        return Err(SelectError::Config(format!("max_corr must be > 0, got {max_corr}")));
    }
    let n = features.nrows();
    if n < 2 {
        return Err(SelectError::Length(n, n));
    }
    // Unit-norm centered columns: r(i, j) is then a dot product.
    let normalized: Vec<Option<Vec<f64>>> = candidates
        .par_iter()
        .map(|&j| {
            let col = features.column(j);
            let col = col.as_slice();
            let mean = col.iter().sum::<f64>() / n as f64;
            let mut v: Vec<f64> = col.iter().map(|x| x - mean).collect();
            let ss: f64 = v.iter().map(|x| x * x).sum();
            if is_flat(col, ss) {
                return None;
            }
            let norm = ss.sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            Some(v)
        })
        .collect();

    let mut kept: Vec<usize> = Vec::new();
    let mut kept_vecs: Vec<&[f64]> = Vec::new();
    for (pos, &cand) in candidates.iter().enumerate() {
        let redundant = match &normalized[pos] {
            None => false,
            Some(v) => kept_vecs.iter().any(|k| {
                let r: f64 = k.iter().zip(v).map(|(a, b)| a * b).sum();
                r.abs().min(1.0) >= max_corr
            }),
        };
        if !redundant {
            kept.push(cand);
            if let Some(v) = &normalized[pos] {
                kept_vecs.push(v);
            }
        }
    }
    kept.sort_unstable();
    kept.dedup();
    Ok(FrequencySelection {
        stage2_count: kept.len(),
        kept_indices: kept,
        stage1_count: candidates.len(),
        n_columns: features.ncols(),
        policy: None,
        max_corr,
        relevance: Vec::new(),
        argmax_class: Vec::new(),
    })
}

/// Runs both stages and annotates the result.
pub fn select_frequencies(
    features: &DMatrix<f64>,
    labels: &[usize],
    classes: &[String],
    policy: &RelevancePolicy,
    max_corr: f64,
) -> Result<FrequencySelection, SelectError> {
    let scores = class_relevance(features, labels, classes.len())?;
    let candidates = select_relevant(&scores, policy)?;
    let mut sel = prune_redundant(features, &candidates, max_corr)?;
    sel.policy = Some(*policy);
    sel.annotate(&scores, classes);
    Ok(sel)
}

/// Largest |r| over all kept pairs, recomputed with [`pearson`] directly.
/// Zero-variance pairs count as 0.
pub fn max_kept_pair_correlation(features: &DMatrix<f64>, kept: &[usize]) -> f64 {
    let cols: Vec<Vec<f64>> = kept.iter().map(|&j| features.column(j).iter().copied().collect()).collect();
    (0..cols.len())
        .into_par_iter()
        .map(|a| {
            (a + 1..cols.len())
                .map(|b| pearson(&cols[a], &cols[b]).map(f64::abs).unwrap_or(0.0))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
