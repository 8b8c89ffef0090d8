use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::seed;

/// Row indices of a train/test partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn rows_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

/// Stratified split: each class sends `round_half_up(fraction · n_class)`
/// shuffled rows to the test side (at most `n_class - 1`).
pub fn split_train_test(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Split, ClassifyError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ClassifyError::Config(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, mut rows) in rows_by_class(labels, n_classes).into_iter().enumerate() {
        if rows.len() < 2 {
            return Err(ClassifyError::TooFewPerClass { class: k, count: rows.len(), needed: 2 });
        }
        rows.shuffle(&mut seed::rng(seed::derive_indexed(seed, k as u64, 0)));
        let n_test = ((test_fraction * rows.len() as f64) + 0.5 + 1e-9).floor() as usize;
        let n_test = n_test.min(rows.len() - 1);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    if test.is_empty() {
        return Err(ClassifyError::Config("test split is empty".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified fold id for every row: each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped so fold sizes
/// stay balanced.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>, ClassifyError> {
    if folds < 2 {
        return Err(ClassifyError::Config(format!("cross-validation needs at least 2 folds, got {folds}")));
    }
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for (k, mut rows) in rows_by_class(labels, n_classes).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < folds {
            return Err(ClassifyError::TooFewPerClass { class: k, count: rows.len(), needed: folds });
        }
        rows.shuffle(&mut seed::rng(seed::derive_indexed(seed, k as u64, 1)));
        for r in rows {
            assignment[r] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(per_class: usize, classes: usize) -> Vec<usize> {
        (0..per_class * classes).map(|i| i / per_class).collect()
    }

    #[test]
    fn full_corpus_scale_split() {
        let labels = balanced(445, 4);
        let s = split_train_test(&labels, 4, 0.30, 0).unwrap();
        for k in 0..4 {
            assert_eq!(s.test.iter().filter(|&&i| labels[i] == k).count(), 134);
            assert_eq!(s.train.iter().filter(|&&i| labels[i] == k).count(), 311);
        }
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1780).collect::<Vec<_>>());
        assert_eq!(s, split_train_test(&labels, 4, 0.30, 0).unwrap());
        assert_ne!(s, split_train_test(&labels, 4, 0.30, 1).unwrap());
    }

    #[test]
    fn split_errors() {
        let labels = balanced(10, 2);
        assert!(matches!(split_train_test(&labels, 2, 0.0, 0), Err(ClassifyError::Config(_))));
        assert!(matches!(split_train_test(&labels, 2, 1.0, 0), Err(ClassifyError::Config(_))));
        assert!(matches!(
            split_train_test(&[0, 0, 1], 2, 0.3, 0),
            Err(ClassifyError::TooFewPerClass { class: 1, count: 1, needed: 2 })
        ));
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<usize> = (0..311 * 4).map(|i| i % 4).collect();
        let f = stratified_folds(&labels, 4, 5, 3).unwrap();
        for fold in 0..5 {
            for k in 0..4 {
                let c = (0..labels.len()).filter(|&i| f[i] == fold && labels[i] == k).count();
                // 311 / 5 = 62.2
                assert!((62..=63).contains(&c), "fold {fold} class {k}: {c}");
            }
        }
        assert!(matches!(stratified_folds(&labels, 4, 1, 0), Err(ClassifyError::Config(_))));
        assert!(matches!(
            stratified_folds(&[0, 0, 1, 1], 2, 3, 0),
            Err(ClassifyError::TooFewPerClass { .. })
        ));
    }
}
