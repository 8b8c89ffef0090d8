//! Switching-gate equivalent circuit: channel on-resistance, parasitic
//! capacitance, and the RC branch each active gate adds between supply and
//! ground.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CmosError;
use crate::rf::Impedance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Nmos,
    Pmos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosfetParams {
    /// Process transconductance k' in A/V².
    pub transconductance: f64,
    /// W/L.
    pub aspect_ratio: f64,
    pub v_threshold: f64,
    pub v_drain: f64,
    pub v_source: f64,
    pub polarity: Polarity,
}

impl MosfetParams {
    fn check(&self) -> Result<(), CmosError> {
        if !(self.transconductance > 0.0) {
            return Err(CmosError::InvalidParameter(format!(
                "transconductance must be > 0, got {}",
                self.transconductance
            )));
        }
        if !(self.aspect_ratio > 0.0) {
            return Err(CmosError::InvalidParameter(format!(
                "aspect ratio must be > 0, got {}",
                self.aspect_ratio
            )));
        }
        Ok(())
    }

    /// Drain-source voltage magnitude. PMOS values are taken by magnitude so
    /// both polarities share one formula.
    pub fn v_ds(&self) -> f64 {
        let v = self.v_drain - self.v_source;
        match self.polarity {
            Polarity::Nmos => v,
            Polarity::Pmos => v.abs(),
        }
    }

    /// Gate overdrive `V_DS - V_t` (by magnitude for PMOS).
    pub fn overdrive(&self) -> f64 {
        match self.polarity {
            Polarity::Nmos => self.v_ds() - self.v_threshold,
            Polarity::Pmos => self.v_ds() - self.v_threshold.abs(),
        }
    }

    fn biased_overdrive(&self) -> Result<f64, CmosError> {
        self.check()?;
        let ov = self.overdrive();
        if ov > 0.0 && ov.is_finite() {
            Ok(ov)
        } else {
            Err(CmosError::SubthresholdBias { overdrive: ov })
        }
    }
}

/// Effective on-resistance in the linear region:
/// `½·ov / (⅜·k'·(W/L)·ov²)`.
pub fn r_linear(p: &MosfetParams) -> Result<f64, CmosError> {
    let ov = p.biased_overdrive()?;
    Ok((0.5 * ov) / (0.375 * p.transconductance * p.aspect_ratio * ov * ov))
}

/// Effective on-resistance in saturation: `V_DS / (½·k'·(W/L)·ov²)`.
pub fn r_saturation(p: &MosfetParams) -> Result<f64, CmosError> {
    let ov = p.biased_overdrive()?;
    Ok(p.v_ds() / (0.5 * p.transconductance * p.aspect_ratio * ov * ov))
}

/// Average of the linear and saturation resistances.
pub fn r_effective(r_lin: f64, r_sat: f64) -> f64 {
    0.5 * (r_lin + r_sat)
}

/// Inputs for the gate-drain overlap and drain-bulk junction capacitances.
/// Lengths in metres, areas in m², capacitances per unit in F/m or F/m².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CapacitanceParams {
    pub c_overlap: f64,
    pub width: f64,
    pub k_bottom: f64,
    pub area_drain: f64,
    pub cj_bottom: f64,
    pub k_sidewall: f64,
    pub perimeter_drain: f64,
    pub cj_sidewall: f64,
    /// Wiring capacitance from layout extraction, taken as given.
    pub c_wire: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParasiticCapacitance {
    pub c_gd: f64,
    pub c_db: f64,
    pub c_total: f64,
}

pub fn parasitic_capacitance(p: &CapacitanceParams) -> Result<ParasiticCapacitance, CmosError> {
    let fields = [
        ("c_overlap", p.c_overlap),
        ("width", p.width),
        ("k_bottom", p.k_bottom),
        ("area_drain", p.area_drain),
        ("cj_bottom", p.cj_bottom),
        ("k_sidewall", p.k_sidewall),
        ("perimeter_drain", p.perimeter_drain),
        ("cj_sidewall", p.cj_sidewall),
        ("c_wire", p.c_wire),
    ];
    for (name, v) in fields {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CmosError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
        }
    }
    let c_gd = 2.0 * p.c_overlap * p.width;
    let c_db = p.k_bottom * p.area_drain * p.cj_bottom + p.k_sidewall * p.perimeter_drain * p.cj_sidewall;
    Ok(ParasiticCapacitance { c_gd, c_db, c_total: c_gd + c_db + p.c_wire })
}

/// Series RC seen through one conducting transistor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateBranch {
    r_eff: f64,
    c_eq: f64,
}

impl GateBranch {
    pub fn new(r_eff: f64, c_eq: f64) -> Result<Self, CmosError> {
        if !(r_eff > 0.0 && r_eff.is_finite() && c_eq > 0.0 && c_eq.is_finite()) {
            return Err(CmosError::InvalidParameter(format!(
                "gate branch needs r_eff > 0 and c_eq > 0, got ({r_eff}, {c_eq})"
            )));
        }
        Ok(Self { r_eff, c_eq })
    }

    /// Branch from device parameters: averaged on-resistance and the total
    /// parasitic capacitance.
    pub fn from_device(mos: &MosfetParams, cap: &CapacitanceParams) -> Result<Self, CmosError> {
        let r = r_effective(r_linear(mos)?, r_saturation(mos)?);
        Self::new(r, parasitic_capacitance(cap)?.c_total)
    }

    pub fn r_eff(&self) -> f64 {
        self.r_eff
    }

    pub fn c_eq(&self) -> f64 {
        self.c_eq
    }
}

/// `R - j/(ωC)`: the parasitic capacitance dominates the reactance.
pub fn gate_impedance(b: &GateBranch, omega: f64) -> Impedance {
    Impedance(Complex64::new(b.r_eff, -1.0 / (omega * b.c_eq)))
}

/// Board-level network the gate branches hang off: a series R-L feed and a
/// shunt capacitance to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineNetwork {
    pub series_r: f64,
    pub series_l: f64,
    pub shunt_c: f64,
}

impl BaselineNetwork {
    pub fn check(&self) -> Result<(), CmosError> {
        for (name, v) in [("series_r", self.series_r), ("series_l", self.series_l), ("shunt_c", self.shunt_c)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CmosError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `R + jωL` in series with the shunt capacitance and every gate branch in
/// parallel. With nothing in the parallel set (no branches, `C = 0`) the
/// parallel section contributes zero impedance.
pub fn network_impedance(baseline: &BaselineNetwork, branches: &[GateBranch], omega: f64) -> Impedance {
    let mut admittance = Complex64::new(0.0, omega * baseline.shunt_c);
    for b in branches {
        admittance += 1.0 / gate_impedance(b, omega).0;
    }
    let parallel = if admittance == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        1.0 / admittance
    };
    Impedance(Complex64::new(baseline.series_r, omega * baseline.series_l) + parallel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nmos() -> MosfetParams {
        MosfetParams {
            transconductance: 100e-6,
            aspect_ratio: 10.0,
            v_threshold: 0.5,
            v_drain: 1.5,
            v_source: 0.0,
            polarity: Polarity::Nmos,
        }
    }

    #[test]
    fn on_resistance_hand_values() {
        assert_relative_eq!(r_linear(&nmos()).unwrap(), 0.5 / 0.375e-3, max_relative = 1e-12);
        assert_relative_eq!(r_saturation(&nmos()).unwrap(), 3000.0, max_relative = 1e-12);
        let r = r_effective(r_linear(&nmos()).unwrap(), 3000.0);
        assert_relative_eq!(r, (4000.0 / 3.0 + 3000.0) / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn pmos_uses_magnitudes() {
        let p = MosfetParams {
            v_threshold: -0.5,
            v_drain: 0.0,
            v_source: 1.5,
            polarity: Polarity::Pmos,
            ..nmos()
        };
        assert_relative_eq!(r_linear(&p).unwrap(), r_linear(&nmos()).unwrap());
        assert_relative_eq!(r_saturation(&p).unwrap(), 3000.0, max_relative = 1e-12);
    }

    #[test]
    fn subthreshold_is_error() {
        let p = MosfetParams { v_drain: 0.5, ..nmos() };
        assert!(matches!(r_linear(&p), Err(CmosError::SubthresholdBias { .. })));
        assert!(matches!(r_saturation(&p), Err(CmosError::SubthresholdBias { .. })));
        let p = MosfetParams { transconductance: 0.0, ..nmos() };
        assert!(matches!(r_linear(&p), Err(CmosError::InvalidParameter(_))));
    }

    #[test]
    fn scaling() {
        let base_lin = r_linear(&nmos()).unwrap();
        let base_sat = r_saturation(&nmos()).unwrap();
        let wide = MosfetParams { aspect_ratio: 20.0, ..nmos() };
        assert_relative_eq!(r_linear(&wide).unwrap(), base_lin / 2.0, max_relative = 1e-12);
        let strong = MosfetParams { transconductance: 200e-6, ..nmos() };
        assert_relative_eq!(r_saturation(&strong).unwrap(), base_sat / 2.0, max_relative = 1e-12);
        assert_eq!(r_effective(100.0, 300.0), 200.0);
        assert_eq!(r_effective(7.5, 7.5), 7.5);
    }

    #[test]
    fn capacitance_rows() {
        let p = CapacitanceParams { c_overlap: 1e-15 / 1e-6, width: 2e-6, ..Default::default() };
        assert_relative_eq!(parasitic_capacitance(&p).unwrap().c_gd, 4e-15, max_relative = 1e-12);
        let zero = parasitic_capacitance(&CapacitanceParams::default()).unwrap();
        assert_eq!((zero.c_gd, zero.c_db, zero.c_total), (0.0, 0.0, 0.0));
        let p = CapacitanceParams { k_bottom: 1.0, area_drain: 1e-12, cj_bottom: 1e-3, ..Default::default() };
        assert_relative_eq!(parasitic_capacitance(&p).unwrap().c_db, 1e-15, max_relative = 1e-12);
        let p = CapacitanceParams { c_wire: -1.0, ..Default::default() };
        assert!(parasitic_capacitance(&p).is_err());
    }

    #[test]
    fn gate_and_network() {
        let b = GateBranch::new(200.0, 1e-12).unwrap();
        let z = gate_impedance(&b, 1e9).0;
        assert_relative_eq!(z.re, 200.0);
        assert_relative_eq!(z.im, -1000.0, max_relative = 1e-12);
        assert!(gate_impedance(&b, 1e18).0.im.abs() <= 1e-6 * 200.0);
        let half = GateBranch::new(200.0, 0.5e-12).unwrap();
        assert_relative_eq!(gate_impedance(&half, 1e9).0.im, -2000.0, max_relative = 1e-12);

        let open = BaselineNetwork { series_r: 1.0, series_l: 2e-9, shunt_c: 0.0 };
        let z = network_impedance(&open, &[], 1e9).0;
        assert_eq!(z, Complex64::new(1.0, 2.0));

        let zero = BaselineNetwork { series_r: 0.0, series_l: 0.0, shunt_c: 0.0 };
        let z = network_impedance(&zero, &[b, b], 1e9).0;
        assert_relative_eq!(z.re, 100.0, max_relative = 1e-12);
        assert_relative_eq!(z.im, -500.0, max_relative = 1e-12);

        let series = BaselineNetwork { series_r: 1.0, ..zero };
        let z = network_impedance(&series, &[b], 1e9).0;
        assert_relative_eq!(z.re, 201.0, max_relative = 1e-12);
        assert_relative_eq!(z.im, -1000.0, max_relative = 1e-12);
    }

    #[test]
    fn branch_from_device() {
        let cap = CapacitanceParams { c_wire: 1e-15, ..Default::default() };
        let b = GateBranch::from_device(&nmos(), &cap).unwrap();
        assert_relative_eq!(b.r_eff(), (4000.0 / 3.0 + 3000.0) / 2.0, max_relative = 1e-12);
        assert_eq!(b.c_eq(), 1e-15);
    }
}
