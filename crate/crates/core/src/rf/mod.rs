//! Reflection/impedance arithmetic and sweep-data ingestion.

mod dataset;
mod representation;
pub mod touchstone;

pub use dataset::{read_dataset_csv, write_dataset_csv, CsvOptions, LabeledDataset};
pub use representation::{
    feature_matrix, feature_matrix_columns, feature_matrix_subset, FeatureMatrix, Representation, DEFAULT_OPEN_CIRCUIT_CAP,
};
pub use touchstone::parse_touchstone;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reference impedance of a standard VNA port.
pub const DEFAULT_Z_REF: f64 = 50.0;

/// `|1 - tau|` below this is treated as an open circuit.
pub const NEAR_OPEN_EPS: f64 = 1e-12;

/// How far `|tau|` may exceed 1 on a passive trace before it is rejected.
pub const DEFAULT_PASSIVE_SLACK: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RfError {
    #[error("reflection coefficient {re}{im:+}j is too close to 1 (open circuit)")]
    NearOpenCircuit { re: f64, im: f64 },
    #[error("load impedance equals -z_ref, reflection coefficient is unbounded")]
    DegenerateLoad,
    #[error("reference impedance must be positive and finite, got {0}")]
    InvalidReference(f64),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("|tau| = {magnitude} at point {index} exceeds passive bound 1 + {slack}")]
    NotPassive { index: usize, magnitude: f64, slack: f64 },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("frequencies not strictly increasing and positive at line {line}")]
    NonMonotoneFrequencies { line: usize },
    #[error("line {line}: expected 3 numbers, found {found}")]
    ArityError { line: usize, found: usize },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid number {token:?} at line {line}")]
    InvalidNumber { line: usize, token: String },
    #[error("input is not valid UTF-8")]
    InvalidEncoding,
    #[error("trace needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("frequency and reflection arrays differ in length ({freq} vs {gamma})")]
    LengthMismatch { freq: usize, gamma: usize },
    #[error("trace {trace} does not share the dataset frequency grid")]
    GridMismatch { trace: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("malformed CSV at line {line}: {msg}")]
    MalformedCsv { line: usize, msg: String },
}

/// Dimensionless complex reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionCoefficient(pub Complex64);

/// Complex impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impedance(pub Complex64);

impl ReflectionCoefficient {
    pub fn new(re: f64, im: f64) -> Result<Self, RfError> {
        if !re.is_finite() || !im.is_finite() {
            return Err(RfError::NonFinite(format!("tau = {re} + {im}j")));
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn magnitude(self) -> f64 {
        self.0.norm()
    }
}

impl Impedance {
    pub fn new(re: f64, im: f64) -> Result<Self, RfError> {
        if !re.is_finite() || !im.is_finite() {
            return Err(RfError::NonFinite(format!("z = {re} + {im}j")));
        }
        Ok(Self(Complex64::new(re, im)))
    }
}

fn check_z_ref(z_ref: f64) -> Result<(), RfError> {
    if z_ref > 0.0 && z_ref.is_finite() {
        Ok(())
    } else {
        Err(RfError::InvalidReference(z_ref))
    }
}

/// `Z = z_ref (1 + tau) / (1 - tau)`.
pub fn reflection_to_impedance(tau: ReflectionCoefficient, z_ref: f64) -> Result<Impedance, RfError> {
    check_z_ref(z_ref)?;
    let one = Complex64::new(1.0, 0.0);
    let den = one - tau.0;
    if den.norm() <= NEAR_OPEN_EPS {
        return Err(RfError::NearOpenCircuit { re: tau.0.re, im: tau.0.im });
    }
    Ok(Impedance(z_ref * (one + tau.0) / den))
}

/// `tau = (Z - z_ref) / (Z + z_ref)`.
pub fn impedance_to_reflection(z: Impedance, z_ref: f64) -> Result<ReflectionCoefficient, RfError> {
    check_z_ref(z_ref)?;
    let den = z.0 + z_ref;
    if den.re == 0.0 && den.im == 0.0 {
        return Err(RfError::DegenerateLoad);
    }
    Ok(ReflectionCoefficient((z.0 - z_ref) / den))
}

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub source: String,
    pub seed: Option<u64>,
}

/// One swept observation: a frequency grid with its reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    frequencies: Arc<[f64]>,
    gamma: Vec<Complex64>,
    z_ref: f64,
    pub label: Option<String>,
    pub meta: TraceMeta,
    passive: bool,
}

impl SweepTrace {
    /// Builds a trace after checking the grid and reflection invariants.
    ///
    /// A single-point sweep is accepted; everything downstream works per
    /// frequency column.
    pub fn new(
        frequencies: Arc<[f64]>,
        gamma: Vec<Complex64>,
        z_ref: f64,
        passive: bool,
    ) -> Result<Self, RfError> {
        check_z_ref(z_ref)?;
        if frequencies.len() != gamma.len() {
            return Err(RfError::LengthMismatch { freq: frequencies.len(), gamma: gamma.len() });
        }
        if frequencies.is_empty() {
            return Err(RfError::TooFewPoints { min: 1, got: 0 });
        }
        check_grid(&frequencies).map_err(|i| RfError::NonMonotoneFrequencies { line: i })?;
        for g in &gamma {
            if !g.re.is_finite() || !g.im.is_finite() {
                return Err(RfError::NonFinite(format!("tau = {g}")));
            }
        }
        let trace = Self {
            frequencies,
            gamma,
            z_ref,
            label: None,
            meta: TraceMeta::default(),
            passive,
        };
        if passive {
            trace.check_passive(DEFAULT_PASSIVE_SLACK)?;
        }
        Ok(trace)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn grid(&self) -> &Arc<[f64]> {
        &self.frequencies
    }

    pub fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn is_passive(&self) -> bool {
        self.passive
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Rejects points with `|tau| > 1 + slack` and logs the ones that only
    /// exceed 1.
    pub fn check_passive(&self, slack: f64) -> Result<(), RfError> {
        let mut over = 0usize;
        for (index, g) in self.gamma.iter().enumerate() {
            let magnitude = g.norm();
            if magnitude > 1.0 + slack {
                return Err(RfError::NotPassive { index, magnitude, slack });
            }
            if magnitude > 1.0 {
                over += 1;
            }
        }
        if over > 0 {
            log::warn!("{over} point(s) with |tau| slightly above 1 accepted within slack {slack}");
        }
        Ok(())
    }

    pub fn impedance(&self) -> Result<Vec<Impedance>, RfError> {
        self.gamma
            .iter()
            .map(|&g| reflection_to_impedance(ReflectionCoefficient(g), self.z_ref))
            .collect()
    }
}

/// Returns the index of the first offending entry if the grid is not strictly
/// increasing and positive.
pub(crate) fn check_grid(f: &[f64]) -> Result<(), usize> {
    for (i, &x) in f.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(i);
        }
        if i > 0 && x <= f[i - 1] {
            return Err(i);
        }
    }
    Ok(())
}
