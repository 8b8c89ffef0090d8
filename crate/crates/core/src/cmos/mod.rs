//! CMOS switching-impedance model and the synthetic corpus generator built
//! on it.

mod device;
mod sim;

pub use device::{
    gate_impedance, network_impedance, parasitic_capacitance, r_effective, r_linear, r_saturation,
    BaselineNetwork, CapacitanceParams, GateBranch, MosfetParams, ParasiticCapacitance, Polarity,
};
pub use sim::{
    draw_realization, realization_reflection, synthesize_dataset, ActivityProfile, CountDistribution,
    Realization, SimulatorConfig, SweepGrid,
};

use thiserror::Error;

use crate::rf::RfError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmosError {
    #[error("overdrive {overdrive} V is not positive; transistor is not conducting")]
    SubthresholdBias { overdrive: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("simulator config: {0}")]
    Config(String),
    #[error(transparent)]
    Rf(#[from] RfError),
}
