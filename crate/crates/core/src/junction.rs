//! Deterministic junction physics in the tilted washboard picture.
//!
//! The phase particle sits in `U(φ) = -E_J (cos φ + i φ)` with
//! `E_J = (ħ/2e) I_c` and `i = I/I_c`. Everything here is a pure function of
//! explicit inputs, in SI units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{H, PHI0_REDUCED};
use crate::error::{Error, Result};

/// Physical identity of the detector junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionParams {
    /// Critical current I_c (A).
    pub critical_current: f64,
    /// Junction capacitance C (F).
    pub capacitance: f64,
    /// Normal-state resistance R_N (Ω).
    pub normal_resistance: f64,
    /// Subgap resistance R_qp (Ω). Defaults to R_N when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgap_resistance: Option<f64>,
    /// Gap voltage 2Δ/e (V).
    pub gap_voltage: f64,
}

impl Default for JunctionParams {
    /// The Al-AlOx-Al sample: I_c = 170 nA, R_N = 1480 Ω, C = 80 fF
    /// (2.5 × 0.7 μm² at ~45 fF/μm²), V_g = 0.4 mV.
    fn default() -> Self {
        JunctionParams {
            critical_current: 170e-9,
            capacitance: 80e-15,
            normal_resistance: 1480.0,
            subgap_resistance: None,
            gap_voltage: 0.4e-3,
        }
    }
}

/// Dimensionless bias `i = I / I_c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasPoint(pub f64);

impl BiasPoint {
    /// Checked constructor for bias points that must sit inside a well.
    pub fn new(i: f64) -> Result<Self> {
        check_bias(i)?;
        Ok(BiasPoint(i))
    }

    pub fn ratio(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_bias(i: f64) -> Result<()> {
    if !i.is_finite() || i < 0.0 {
        return Err(Error::InvalidParameter(format!("bias ratio must be >= 0, got {i}")));
    }
    if i >= 1.0 {
        return Err(Error::NoBarrier(i));
    }
    Ok(())
}

/// Normalized washboard potential `U/E_J = -(cos φ + i φ)`.
pub fn washboard_potential(phase: f64, i: f64) -> f64 {
    -(phase.cos() + i * phase)
}

/// Normalized barrier `ΔU/E_J = 2(√(1-i²) - i·arccos i)`.
pub fn barrier_height_normalized(i: f64) -> Result<f64> {
    check_bias(i)?;
    Ok(2.0 * ((1.0 - i * i).sqrt() - i * i.acos()))
}

/// Zero-temperature Ambegaokar–Baratoff critical current `πΔ/(2 e R_N)`,
/// with the gap Δ given in joules.
pub fn theoretical_critical_current(gap: f64, normal_resistance: f64) -> f64 {
    PI * gap / (2.0 * crate::constants::E * normal_resistance)
}

impl JunctionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("critical_current", self.critical_current),
            ("capacitance", self.capacitance),
            ("normal_resistance", self.normal_resistance),
            ("gap_voltage", self.gap_voltage),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let r_qp = self.subgap();
        if !(r_qp.is_finite() && r_qp >= self.normal_resistance) {
            return Err(Error::InvalidParameter(format!(
                "subgap_resistance must be >= normal_resistance, got {r_qp}"
            )));
        }
        Ok(())
    }

    pub fn subgap(&self) -> f64 {
        self.subgap_resistance.unwrap_or(self.normal_resistance)
    }

    /// Josephson energy `E_J = (ħ/2e) I_c` (J).
    pub fn josephson_energy(&self) -> f64 {
        PHI0_REDUCED * self.critical_current
    }

    /// Barrier height ΔU (J) at bias ratio `i`.
    pub fn barrier_height(&self, i: f64) -> Result<f64> {
        Ok(self.josephson_energy() * barrier_height_normalized(i)?)
    }

    /// Junction inductance `L_JJ = (ħ/2e)(I_c² - I²)^(-1/2)` at bias current `current` (A).
    pub fn junction_inductance(&self, current: f64) -> Result<f64> {
        let ic = self.critical_current;
        if !(current.abs() < ic) {
            return Err(Error::InductanceDivergence { current, critical: ic });
        }
        Ok(PHI0_REDUCED / (ic * ic - current * current).sqrt())
    }

    /// Parallel-RLC quality factor `Q = R_N √(C / L_JJ)`.
    pub fn quality_factor(&self, current: f64) -> Result<f64> {
        let l = self.junction_inductance(current)?;
        Ok(self.normal_resistance * (self.capacitance / l).sqrt())
    }

    /// Zero-bias plasma frequency `ω_p0 = (L_JJ(0) C)^(-1/2)` (rad/s).
    pub fn plasma_frequency_zero_bias(&self) -> f64 {
        let l0 = PHI0_REDUCED / self.critical_current;
        1.0 / (l0 * self.capacitance).sqrt()
    }

    /// Small-oscillation plasma frequency at bias ratio `i` (rad/s).
    pub fn plasma_frequency(&self, i: f64) -> Result<f64> {
        check_bias(i)?;
        Ok(self.plasma_frequency_zero_bias() * (1.0 - i * i).powf(0.25))
    }

    /// Damping quality factor of the phase dynamics at zero bias,
    /// `ω_p0 R_qp C`. The bias-dependent value is this times `(1-i²)^(1/4)`.
    pub fn dynamic_quality_factor_zero_bias(&self) -> f64 {
        self.plasma_frequency_zero_bias() * self.subgap() * self.capacitance
    }

    /// Damping quality factor seen by the phase particle at bias ratio `i`.
    pub fn dynamic_quality_factor(&self, i: f64) -> Result<f64> {
        check_bias(i)?;
        Ok(self.dynamic_quality_factor_zero_bias() * (1.0 - i * i).powf(0.25))
    }

    /// Current pulse amplitude produced by an absorbed photon of frequency `freq` (Hz):
    /// `ΔI = √(2hf L_JJ⁻¹ (1 + 2π/Q)⁻¹)`.
    pub fn photon_current_pulse(&self, current: f64, freq: f64) -> Result<f64> {
        if !(freq.is_finite() && freq > 0.0) {
            return Err(Error::InvalidParameter(format!("photon frequency must be > 0, got {freq}")));
        }
        let l = self.junction_inductance(current)?;
        let q = self.quality_factor(current)?;
        Ok((2.0 * H * freq / l / (1.0 + 2.0 * PI / q)).sqrt())
    }

    /// Stored (supercurrent) and dissipated parts of the photon energy, `(E_s, E_d)`.
    pub fn energy_partition(&self, current: f64, freq: f64) -> Result<(f64, f64)> {
        let l = self.junction_inductance(current)?;
        let di = self.photon_current_pulse(current, freq)?;
        let stored = 0.5 * l * di * di;
        Ok((stored, H * freq - stored))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn washboard_examples() {
        assert_eq!(washboard_potential(0.0, 0.0), -1.0);
        assert!((washboard_potential(PI, 0.0) - 1.0).abs() < 1e-15);
        let phi = 0.8f64.asin();
        assert!((washboard_potential(phi, 0.8) + 1.341_836_174_401_29).abs() < 1e-12);
    }

    #[test]
    fn barrier_examples() {
        let p = JunctionParams::default();
        let ej = p.josephson_energy();
        assert!(rel(p.barrier_height(0.0).unwrap(), 2.0 * ej) < 1e-15);
        assert!(p.barrier_height(1.0 - 1e-12).unwrap() < 1e-15 * ej);
        // mpmath: 9.53344272882126e-24 J, 0.170398225930745 E_J
        assert!(rel(p.barrier_height(0.8).unwrap(), 9.533_442_728_821_26e-24) < 1e-12);
        assert!(matches!(p.barrier_height(1.0), Err(Error::NoBarrier(_))));
        assert!(p.barrier_height(-0.1).is_err());
    }

    #[test]
    fn barrier_matches_numerical_extrema() {
        // brute-force golden-section search for the well minimum and barrier maximum
        fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) < f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            0.5 * (a + b)
        }
        for k in 1..=9 {
            let i = k as f64 / 10.0;
            let asin = i.asin();
            let pmin = golden(|x| washboard_potential(x, i), -PI / 2.0, asin + 0.5 * (PI - 2.0 * asin));
            let pmax = golden(|x| -washboard_potential(x, i), pmin, PI + 0.5);
            let num = washboard_potential(pmax, i) - washboard_potential(pmin, i);
            let ana = barrier_height_normalized(i).unwrap();
            assert!(rel(num, ana) < 1e-10, "i={i}: {num} vs {ana}");
        }
    }

    #[test]
    fn inductance_examples() {
        let p = JunctionParams::default();
        assert!(rel(p.junction_inductance(0.0).unwrap(), 1.935_917_520_443_84e-9) < 1e-12);
        assert!(rel(p.junction_inductance(0.8 * 170e-9).unwrap(), 3.226_529_200_739_74e-9) < 1e-12);
        assert!(matches!(
            p.junction_inductance(170e-9),
            Err(Error::InductanceDivergence { .. })
        ));
    }

    #[test]
    fn quality_factor_examples() {
        let p = JunctionParams::default();
        assert!(rel(p.quality_factor(0.0).unwrap(), 9.514_002_993_749_1) < 1e-12);
        assert!(rel(p.quality_factor(0.8 * 170e-9).unwrap(), 7.369_515_030_111_56) < 1e-12);
        let tiny = JunctionParams { capacitance: 1e-30, ..p };
        assert!(tiny.quality_factor(0.0).unwrap() < 1e-5);
    }

    #[test]
    fn plasma_frequency_examples() {
        let p = JunctionParams::default();
        assert!(rel(p.plasma_frequency(0.0).unwrap(), 8.035_475_501_477_28e10) < 1e-12);
        assert!(rel(p.plasma_frequency(0.8).unwrap(), 6.224_252_559_215_84e10) < 1e-12);
        // response time of order the inverse plasma frequency, below 1 ns
        assert!(2.0 * PI / p.plasma_frequency(0.0).unwrap() < 1e-9);
        assert!(p.plasma_frequency(1.0).is_err());
    }

    #[test]
    fn photon_pulse_examples() {
        let p = JunctionParams::default();
        let di = p.photon_current_pulse(0.75 * 170e-9, 13.95e9).unwrap();
        assert!(rel(di, 5.904_029_443_486_19e-8) < 1e-12);
        assert!((50e-9..=70e-9).contains(&di));

        // lossless limit
        let lossless = JunctionParams { normal_resistance: 1e30, ..p };
        let l = lossless.junction_inductance(0.5e-7).unwrap();
        let lim = (2.0 * H * 13.95e9 / l).sqrt();
        assert!(rel(lossless.photon_current_pulse(0.5e-7, 13.95e9).unwrap(), lim) < 1e-12);

        assert!(p.photon_current_pulse(0.0, 1e-3).unwrap() < 1e-12);
        assert!(p.photon_current_pulse(0.0, 0.0).is_err());
    }

    #[test]
    fn energy_partition_ratio() {
        let p = JunctionParams::default();
        let current = 0.7 * 170e-9;
        let (es, ed) = p.energy_partition(current, 13.95e9).unwrap();
        let q = p.quality_factor(current).unwrap();
        assert!(rel(es / ed, q / (2.0 * PI)) < 1e-10);
    }

    #[test]
    fn ambegaokar_baratoff_examples() {
        let mev = 1e-3 * crate::constants::E;
        assert!(rel(theoretical_critical_current(0.180 * mev, 1480.0), 1.910_427_965_020_82e-7) < 1e-12);
        assert!(rel(theoretical_critical_current(0.200 * mev, 1480.0), 2.122_697_738_912_02e-7) < 1e-12);
        assert_eq!(theoretical_critical_current(0.0, 1480.0), 0.0);
    }

    #[test]
    fn validation() {
        assert!(JunctionParams::default().validate().is_ok());
        let bad = JunctionParams { subgap_resistance: Some(100.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = JunctionParams { capacitance: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
