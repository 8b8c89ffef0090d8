//! Firmware activity fingerprinting from RF impedance sweeps.
//!
//! The crate covers the whole chain from VNA reflection data to a trained
//! classifier:
//!
//! * [`rf`] converts reflection coefficients to impedance and reads
//!   Touchstone and dataset CSV files,
//! * [`cmos`] models switching-gate impedance and synthesizes labeled sweep
//!   corpora,
//! * [`freqselect`] picks informative, mutually non-redundant frequencies,
//! * [`features`] standardizes and projects onto principal components,
//! * [`classify`] holds the QDA, kernel SVM and subspace-KNN classifiers plus
//!   splitting and cross-validation,
//! * [`metrics`] builds confusion matrices and macro-averaged scores,
//! * [`pipeline`] wires the stages together the way the `zscan` binary runs
//!   them.

pub mod classify;
pub mod cmos;
pub mod error;
pub mod features;
pub mod freqselect;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod rf;
pub mod seed;

pub use error::{Error, Result};
