//! Random-subspace ensemble of nearest-neighbour learners.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{row_of, Classifier, ClassifyError};
use crate::seed;

pub const DEFAULT_LEARNERS: usize = 30;
pub const DEFAULT_K: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub n_learners: usize,
    /// Features per learner; `None` means `ceil(d / 2)`.
    pub subspace_dim: Option<usize>,
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { n_learners: DEFAULT_LEARNERS, subspace_dim: None, k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceLearner {
    /// Ascending feature indices seen by this learner.
    pub features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceKnnModel {
    pub k: usize,
    pub seed: u64,
    pub n_classes: usize,
    pub n_features: usize,
    pub learners: Vec<SubspaceLearner>,
    /// Training rows, shared by all learners.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn train_subspace_knn(
    x: &DMatrix<f64>,
    y: &[usize],
    n_classes: usize,
    p: &KnnParams,
    seed: u64,
) -> Result<SubspaceKnnModel, ClassifyError> {
    let (n, d) = x.shape();
    let dim = p.subspace_dim.unwrap_or(d.div_ceil(2));
    if p.n_learners == 0 || p.k == 0 || dim == 0 || dim > d {
        return Err(ClassifyError::Config(format!(
            "subspace KNN needs learners > 0, k > 0 and 0 < dim <= {d}; got learners={} k={} dim={dim}",
            p.n_learners, p.k
        )));
    }
    if n < p.k {
        return Err(ClassifyError::TooFewPerClass { class: 0, count: n, needed: p.k });
    }
    let learners = (0..p.n_learners)
        .map(|l| {
            let mut rng = seed::rng(seed::derive_indexed(seed, l as u64, 2));
            let mut features = sample(&mut rng, d, dim).into_vec();
            features.sort_unstable();
            SubspaceLearner { features }
        })
        .collect();
    Ok(SubspaceKnnModel {
        k: p.k,
        seed,
        n_classes,
        n_features: d,
        learners,
        rows: (0..n).map(|i| row_of(x, i)).collect(),
        labels: y.to_vec(),
    })
}

impl SubspaceKnnModel {
    /// Vote of a single learner. Distance ties go to the lower row index,
    /// vote ties to the lower class index.
    pub fn learner_vote(&self, learner: usize, x: &[f64]) -> usize {
        let feats = &self.learners[learner].features;
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (feats.iter().map(|&f| (r[f] - x[f]) * (r[f] - x[f])).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut counts = vec![0usize; self.n_classes];
        for &(_, i) in &dist[..k] {
            counts[self.labels[i]] += 1;
        }
        argmax_first(&counts)
    }

    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for l in 0..self.learners.len() {
            counts[self.learner_vote(l, x)] += 1;
        }
        counts
    }
}

fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

impl Classifier for SubspaceKnnModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        argmax_first(&self.votes(x))
    }
}
