//! Synthetic sweep corpora built from the switching-gate network model.
//!
//! Each activity class is a distribution over how many gate branches conduct
//! and over their R/C values. One observation draws a branch set and a
//! perturbed baseline network, evaluates the network impedance across the
//! grid, converts it to a reflection coefficient and adds measurement noise
//! in the reflection domain.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::device::{network_impedance, BaselineNetwork, GateBranch};
use super::CmosError;
use crate::rf::{impedance_to_reflection, LabeledDataset, SweepTrace, TraceMeta};
use crate::seed;

/// Linear frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub n_points: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { start_hz: 500e3, stop_hz: 4e9, n_points: 10_000 }
    }
}

impl SweepGrid {
    pub fn frequencies(&self) -> Vec<f64> {
        let step = (self.stop_hz - self.start_hz) / (self.n_points - 1) as f64;
        let mut f: Vec<f64> = (0..self.n_points).map(|i| self.start_hz + step * i as f64).collect();
        f[self.n_points - 1] = self.stop_hz;
        f
    }
}

/// Number of conducting branches: `round(mean + jitter·N(0,1))`, floored at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub mean: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub class_name: String,
    pub gates: CountDistribution,
    /// Uniform range for each branch's effective resistance (ohms).
    pub r_eff: [f64; 2],
    /// Uniform range for each branch's equivalent capacitance (farads).
    pub c_eq: [f64; 2],
    /// Log-normal spread applied independently to R, L and C of the baseline
    /// network for every observation.
    pub baseline_perturbation: f64,
}

impl ActivityProfile {
    fn new(name: &str, gates: f64, r_eff: [f64; 2], c_eq: [f64; 2]) -> Self {
        Self {
            class_name: name.to_string(),
            gates: CountDistribution { mean: gates, jitter: 0.15 },
            r_eff,
            c_eq,
            baseline_perturbation: 0.05,
        }
    }

    /// The four workloads: idle, all I/O pins toggling at maximum current,
    /// a background big-number exponentiation, and AES on short strings.
    ///
    /// These values are synthetic. They are picked so that the classes
    /// separate cleanly without noise and overlap under the default noise.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::new("idle", 2.0, [260.0, 380.0], [7e-12, 10e-12]),
            Self::new("max_io", 8.0, [100.0, 130.0], [12e-12, 16e-12]),
            Self::new("background_exp", 4.0, [360.0, 480.0], [17e-12, 24e-12]),
            Self::new("aes", 4.0, [80.0, 110.0], [4.5e-12, 6e-12]),
        ]
    }

    fn check(&self) -> Result<(), CmosError> {
        let bad = |msg: String| Err(CmosError::Config(format!("profile {:?}: {msg}", self.class_name)));
        if self.class_name.is_empty() || self.class_name.contains([',', '\n', '\r']) {
            return bad("class name must be non-empty without commas or newlines".into());
        }
        if !(self.gates.mean > 0.0 && self.gates.mean.is_finite()) {
            return bad(format!("gate mean must be > 0, got {}", self.gates.mean));
        }
        if !(self.gates.jitter >= 0.0 && self.gates.jitter.is_finite()) {
            return bad(format!("gate jitter must be >= 0, got {}", self.gates.jitter));
        }
        for (name, [lo, hi]) in [("r_eff", self.r_eff), ("c_eq", self.c_eq)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if !(self.baseline_perturbation >= 0.0 && self.baseline_perturbation.is_finite()) {
            return bad(format!("baseline perturbation must be >= 0, got {}", self.baseline_perturbation));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorConfig {
    pub grid: SweepGrid,
    pub z_ref: f64,
    pub baseline: BaselineNetwork,
    pub profiles: Vec<ActivityProfile>,
    /// Standard deviation of the complex noise added to each reflection
    /// coefficient (`E|n|² = sigma²`).
    pub noise_sigma: f64,
    /// Lag-one correlation of the noise along the frequency grid; 0 gives
    /// independent points. The per-point standard deviation stays
    /// `noise_sigma` for any value.
    pub noise_correlation: f64,
    pub observations_per_class: usize,
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            grid: SweepGrid::default(),
            z_ref: 50.0,
            baseline: BaselineNetwork { series_r: 1.0, series_l: 0.5e-9, shunt_c: 5e-12 },
            profiles: ActivityProfile::defaults(),
            noise_sigma: 0.12,
            noise_correlation: 0.99,
            observations_per_class: 445,
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<(), CmosError> {
        let bad = |msg: String| Err(CmosError::Config(msg));
        let g = &self.grid;
        if !(g.start_hz > 0.0 && g.start_hz < g.stop_hz && g.stop_hz.is_finite()) {
            return bad(format!("grid needs 0 < start < stop, got [{}, {}]", g.start_hz, g.stop_hz));
        }
        if g.n_points < 2 {
            return bad(format!("grid needs at least 2 points, got {}", g.n_points));
        }
        let f = g.frequencies();
        if f.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grid spacing underflows; frequencies are not strictly increasing".into());
        }
        if !(self.z_ref > 0.0 && self.z_ref.is_finite()) {
            return bad(format!("z_ref must be > 0, got {}", self.z_ref));
        }
        self.baseline.check()?;
        if self.profiles.is_empty() {
            return bad("at least one activity profile is required".into());
        }
        for (i, p) in self.profiles.iter().enumerate() {
            p.check()?;
            if self.profiles[..i].iter().any(|q| q.class_name == p.class_name) {
                return bad(format!("duplicate class name {:?}", p.class_name));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return bad(format!("noise_correlation must be in [0, 1), got {}", self.noise_correlation));
        }
        if self.observations_per_class == 0 {
            return bad("observations_per_class must be >= 1".into());
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.class_name.clone()).collect()
    }

    /// Seed of the stream that produces observation `obs` of class `class`.
    pub fn observation_seed(&self, class: usize, obs: usize) -> u64 {
        seed::derive_indexed(self.seed, class as u64, obs as u64)
    }
}

/// Circuit realization drawn for one observation, before noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub baseline: BaselineNetwork,
    pub branches: Vec<GateBranch>,
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws the circuit for one observation. Consumes the stream in a fixed
/// order: branch count, baseline R/L/C, then (r, c) per branch.
pub fn draw_realization<R: Rng>(
    rng: &mut R,
    profile: &ActivityProfile,
    baseline: &BaselineNetwork,
) -> Result<Realization, CmosError> {
    let count = (profile.gates.mean + profile.gates.jitter * normal(rng)).round().max(0.0) as usize;
    let p = profile.baseline_perturbation;
    let mut scale = || (p * normal(rng)).exp();
    let baseline = BaselineNetwork {
        series_r: baseline.series_r * scale(),
        series_l: baseline.series_l * scale(),
        shunt_c: baseline.shunt_c * scale(),
    };
    let branches = (0..count)
        .map(|_| {
            let r = uniform(rng, profile.r_eff);
            let c = uniform(rng, profile.c_eq);
            GateBranch::new(r, c)
        })
        .collect::<Result<_, _>>()?;
    Ok(Realization { baseline, branches })
}

/// Noise-free reflection coefficients of a realization over `freqs`.
pub fn realization_reflection(
    real: &Realization,
    freqs: &[f64],
    z_ref: f64,
) -> Result<Vec<Complex64>, CmosError> {
    freqs
        .iter()
        .map(|&f| {
            let z = network_impedance(&real.baseline, &real.branches, 2.0 * PI * f);
            impedance_to_reflection(z, z_ref).map(|t| t.0).map_err(CmosError::from)
        })
        .collect()
}

fn synthesize_one(
    cfg: &SimulatorConfig,
    grid: &Arc<[f64]>,
    class: usize,
    obs: usize,
) -> Result<SweepTrace, CmosError> {
    let profile = &cfg.profiles[class];
    let obs_seed = cfg.observation_seed(class, obs);
    let mut rng = seed::rng(obs_seed);
    let real = draw_realization(&mut rng, profile, &cfg.baseline)?;
    let mut gamma = realization_reflection(&real, grid, cfg.z_ref)?;

    if cfg.noise_sigma > 0.0 {
        // AR(1) along the grid with stationary std noise_sigma.
        let rho = cfg.noise_correlation;
        let innovation = (1.0 - rho * rho).sqrt();
        let comp = cfg.noise_sigma / std::f64::consts::SQRT_2;
        let mut state = Complex64::new(0.0, 0.0);
        for (i, g) in gamma.iter_mut().enumerate() {
            let w = Complex64::new(comp * normal(&mut rng), comp * normal(&mut rng));
            state = if i == 0 { w } else { rho * state + innovation * w };
            *g += state;
        }
    }

    let passive = cfg.noise_sigma == 0.0;
    Ok(SweepTrace::new(grid.clone(), gamma, cfg.z_ref, passive)?
        .with_label(profile.class_name.clone())
        .with_meta(TraceMeta { source: format!("synthetic:{}/{obs}", profile.class_name), seed: Some(obs_seed) }))
}

/// Generates `observations_per_class` traces for every profile, ordered by
/// (class, observation).
pub fn synthesize_dataset(cfg: &SimulatorConfig) -> Result<LabeledDataset, CmosError> {
    cfg.validate()?;
    let grid: Arc<[f64]> = cfg.grid.frequencies().into();
    let n = cfg.observations_per_class;
    let traces = (0..cfg.profiles.len() * n)
        .into_par_iter()
        .map(|k| synthesize_one(cfg, &grid, k / n, k % n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabeledDataset::new(traces, cfg.class_names())?)
}
