use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, NEAR_OPEN_EPS};

/// Impedance magnitude above which a point is clamped and flagged.
pub const DEFAULT_OPEN_CIRCUIT_CAP: f64 = 1e6;

/// Real-valued view of a sweep used as classifier input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// `|Z|` per frequency.
    #[default]
    ImpedanceMagnitude,
    /// `Re Z` and `Im Z` per frequency, interleaved: column `2j` is the real
    /// part at frequency `j`, column `2j + 1` the imaginary part.
    ImpedanceRealImag,
    /// `|tau|` per frequency.
    ReflectionMagnitude,
}

impl Representation {
    pub fn columns_per_frequency(self) -> usize {
        match self {
            Self::ImpedanceRealImag => 2,
            _ => 1,
        }
    }

    pub fn width(self, n_frequencies: usize) -> usize {
        n_frequencies * self.columns_per_frequency()
    }

    /// Frequency index that feature column `col` is computed from.
    pub fn frequency_of_column(self, col: usize) -> usize {
        col / self.columns_per_frequency()
    }

    fn value(self, tau: Complex64, z_ref: f64, col_offset: usize, cap: f64) -> (f64, bool) {
        if self == Self::ReflectionMagnitude {
            return (tau.norm(), false);
        }
        let one = Complex64::new(1.0, 0.0);
        let den = one - tau;
        let z = if den.norm() <= NEAR_OPEN_EPS {
            None
        } else {
            Some(z_ref * (one + tau) / den)
        };
        match (self, z) {
            (Self::ImpedanceMagnitude, Some(z)) if z.norm() <= cap => (z.norm(), false),
            (Self::ImpedanceMagnitude, _) => (cap, true),
            (_, Some(z)) => {
                let part = if col_offset == 0 { z.re } else { z.im };
                if part.abs() <= cap {
                    (part, false)
                } else {
                    (cap.copysign(part), true)
                }
            }
            // tau ~ 1: Z is real and unbounded
            (_, None) => (if col_offset == 0 { cap } else { 0.0 }, col_offset == 0),
        }
    }
}

/// Feature matrix plus the columns where at least one point was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub clamped_columns: Vec<usize>,
}

/// Builds the `n_traces × width` feature matrix over the whole grid.
pub fn feature_matrix(dataset: &LabeledDataset, repr: Representation, cap: f64) -> FeatureMatrix {
    let width = repr.width(dataset.grid().len());
    let cols: Vec<usize> = (0..width).collect();
    feature_matrix_columns(dataset, repr, cap, &cols)
}

/// Builds only the listed feature columns, in the given order.
pub fn feature_matrix_columns(
    dataset: &LabeledDataset,
    repr: Representation,
    cap: f64,
    columns: &[usize],
) -> FeatureMatrix {
    let rows: Vec<usize> = (0..dataset.len()).collect();
    feature_matrix_subset(dataset, repr, cap, &rows, columns)
}

/// Builds the listed columns for the listed traces, both in the given order.
pub fn feature_matrix_subset(
    dataset: &LabeledDataset,
    repr: Representation,
    cap: f64,
    rows: &[usize],
    columns: &[usize],
) -> FeatureMatrix {
    let per = repr.columns_per_frequency();
    let n = rows.len();
    let traces = dataset.traces();
    let mut clamped = vec![false; columns.len()];
    let mut values = DMatrix::<f64>::zeros(n, columns.len());
    for (j, &col) in columns.iter().enumerate() {
        let freq = col / per;
        let offset = col % per;
        let mut column = values.column_mut(j);
        for (i, &r) in rows.iter().enumerate() {
            let trace = &traces[r];
            let (v, flagged) = repr.value(trace.gamma()[freq], trace.z_ref(), offset, cap);
            column[i] = v;
            clamped[j] |= flagged;
        }
    }
    let clamped_columns = columns
        .iter()
        .zip(&clamped)
        .filter(|(_, &f)| f)
        .map(|(&c, _)| c)
        .collect();
    FeatureMatrix { values, clamped_columns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::SweepTrace;

    fn dataset(gammas: Vec<Vec<Complex64>>) -> LabeledDataset {
        let m = gammas[0].len();
        let grid: std::sync::Arc<[f64]> = (1..=m).map(|i| i as f64 * 1e6).collect::<Vec<_>>().into();
        let traces = gammas
            .into_iter()
            .map(|g| SweepTrace::new(grid.clone(), g, 50.0, false).unwrap().with_label("a"))
            .collect();
        LabeledDataset::from_traces(traces).unwrap()
    }

    #[test]
    fn matched_load_gives_fifty() {
        let ds = dataset(vec![vec![Complex64::default(); 4]; 3]);
        let fm = feature_matrix(&ds, Representation::ImpedanceMagnitude, DEFAULT_OPEN_CIRCUIT_CAP);
        assert_eq!(fm.values.shape(), (3, 4));
        assert!(fm.values.iter().all(|&v| v == 50.0));
        assert!(fm.clamped_columns.is_empty());
    }

    #[test]
    fn real_imag_doubles_width() {
        let ds = dataset(vec![vec![Complex64::new(0.1, 0.2); 5]]);
        let fm = feature_matrix(&ds, Representation::ImpedanceRealImag, DEFAULT_OPEN_CIRCUIT_CAP);
        assert_eq!(fm.values.ncols(), 10);
        let z = 50.0 * (Complex64::new(1.1, 0.2)) / Complex64::new(0.9, -0.2);
        assert!((fm.values[(0, 2)] - z.re).abs() < 1e-12);
        assert!((fm.values[(0, 3)] - z.im).abs() < 1e-12);
    }

    #[test]
    fn resistive_point_and_clamp() {
        let ds = dataset(vec![vec![Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0)]]);
        let fm = feature_matrix(&ds, Representation::ImpedanceMagnitude, DEFAULT_OPEN_CIRCUIT_CAP);
        assert!((fm.values[(0, 0)] - 75.0).abs() < 1e-12);
        assert_eq!(fm.values[(0, 1)], DEFAULT_OPEN_CIRCUIT_CAP);
        assert_eq!(fm.clamped_columns, vec![1]);
        let fm = feature_matrix(&ds, Representation::ReflectionMagnitude, DEFAULT_OPEN_CIRCUIT_CAP);
        assert_eq!(fm.values[(0, 1)], 1.0);
    }

    #[test]
    fn labels_do_not_matter() {
        let ds = dataset(vec![vec![Complex64::new(0.3, -0.1); 3], vec![Complex64::new(-0.4, 0.2); 3]]);
        let a = feature_matrix(&ds, Representation::ImpedanceMagnitude, 1e6);
        let b = feature_matrix(&ds.without_labels(), Representation::ImpedanceMagnitude, 1e6);
        assert_eq!(a, b);
    }
}
