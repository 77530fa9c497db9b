use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_squared_weights;
use crate::constants::{E, H};
use crate::error::{Error, Result};

/// Truncation tolerance on the Bessel weight sum.
const WEIGHT_TOL: f64 = 1e-9;

/// Anything that yields a DC current at a bias voltage.
pub trait IvSource {
    fn current(&self, voltage: f64) -> f64;
    /// Voltage interval where `current` is defined.
    fn support(&self) -> (f64, f64);
}

/// Sampled IV curve on a strictly increasing voltage grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvCurve {
    voltage: Vec<f64>,
    current: Vec<f64>,
}

impl IvCurve {
    pub fn new(voltage: Vec<f64>, current: Vec<f64>) -> Result<Self> {
        if voltage.len() != current.len() {
            return Err(Error::InvalidParameter(format!(
                "IV curve length mismatch: {} voltages, {} currents",
                voltage.len(),
                current.len()
            )));
        }
        if voltage.is_empty() {
            return Err(Error::InsufficientData("IV curve needs at least one sample".into()));
        }
        if voltage.iter().chain(&current).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("IV curve contains non-finite values".into()));
        }
        if let Some(k) = voltage.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotone(format!("voltage not strictly increasing at index {}", k + 1)));
        }
        Ok(IvCurve { voltage, current })
    }

    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }

    pub fn current_samples(&self) -> &[f64] {
        &self.current
    }

    pub fn len(&self) -> usize {
        self.voltage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltage.is_empty()
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, v: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        if !(v >= lo && v <= hi) {
            return None;
        }
        let k = self.voltage.partition_point(|&x| x <= v);
        if k == 0 {
            return Some(self.current[0]);
        }
        if k >= self.voltage.len() {
            return Some(self.current[self.current.len() - 1]);
        }
        let (v0, v1) = (self.voltage[k - 1], self.voltage[k]);
        let (i0, i1) = (self.current[k - 1], self.current[k]);
        if v == v0 {
            return Some(i0);
        }
        Some(i0 + (i1 - i0) * (v - v0) / (v1 - v0))
    }
}

impl IvSource for IvCurve {
    fn current(&self, voltage: f64) -> f64 {
        self.interpolate(voltage).unwrap_or(f64::NAN)
    }

    fn support(&self) -> (f64, f64) {
        (self.voltage[0], self.voltage[self.voltage.len() - 1])
    }
}

/// Smoothed quasiparticle branch: `I = V·[(1−s)/R_sg + s/R_N]` with
/// `s = 1/(1 + e^{−(|V| − 2Δ/e)/w})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkIvModel {
    /// Superconducting gap Δ (J).
    pub gap: f64,
    pub normal_resistance: f64,
    pub subgap_resistance: f64,
    /// Transition width (V).
    pub width: f64,
}

impl DarkIvModel {
    pub fn new(gap: f64, normal_resistance: f64, subgap_resistance: f64, width: f64) -> Result<Self> {
        let m = DarkIvModel { gap, normal_resistance, subgap_resistance, width };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap.is_finite() && self.gap > 0.0) {
            return Err(Error::InvalidParameter(format!("gap must be > 0, got {}", self.gap)));
        }
        if !(self.normal_resistance.is_finite() && self.normal_resistance > 0.0) {
            return Err(Error::InvalidParameter(format!("R_N must be > 0, got {}", self.normal_resistance)));
        }
        if !(self.subgap_resistance.is_finite() && self.subgap_resistance >= self.normal_resistance) {
            return Err(Error::InvalidParameter(format!(
                "R_sg must be finite and >= R_N, got {}",
                self.subgap_resistance
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter(format!("transition width must be > 0, got {}", self.width)));
        }
        Ok(())
    }

    /// 2Δ/e (V).
    pub fn gap_voltage(&self) -> f64 {
        2.0 * self.gap / E
    }

    /// Samples the model on `n` equally spaced points of `[v_min, v_max]`.
    pub fn sample(&self, v_min: f64, v_max: f64, n: usize) -> Result<IvCurve> {
        if n < 2 || v_max <= v_min {
            return Err(Error::InvalidParameter("sampling needs n >= 2 and v_max > v_min".into()));
        }
        let v: Vec<f64> = (0..n).map(|k| v_min + (v_max - v_min) * k as f64 / (n - 1) as f64).collect();
        let i = v.iter().map(|&x| self.current(x)).collect();
        IvCurve::new(v, i)
    }
}

impl IvSource for DarkIvModel {
    fn current(&self, v: f64) -> f64 {
        let z = (v.abs() - self.gap_voltage()) / self.width;
        let s = 1.0 / (1.0 + (-z).exp());
        v * ((1.0 - s) / self.subgap_resistance + s / self.normal_resistance)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Monochromatic drive in Tien–Gordon units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatDrive {
    pub frequency: f64,
    /// α = eV_ac/(hf).
    pub alpha: f64,
}

impl PatDrive {
    pub fn new(frequency: f64, alpha: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidParameter(format!("drive frequency must be > 0, got {frequency}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(PatDrive { frequency, alpha })
    }

    pub fn from_db(frequency: f64, power_db: f64, alpha_ref: f64) -> Result<Self> {
        Self::new(frequency, alpha_from_db(power_db, alpha_ref))
    }

    pub fn power_db(&self, alpha_ref: f64) -> f64 {
        power_db(self.alpha, alpha_ref)
    }
}

/// Relative power `20 log₁₀(α/α_ref)`.
pub fn power_db(alpha: f64, alpha_ref: f64) -> f64 {
    20.0 * (alpha / alpha_ref).log10()
}

pub fn alpha_from_db(power_db: f64, alpha_ref: f64) -> f64 {
    alpha_ref * 10f64.powf(power_db / 20.0)
}

/// hf/e (V).
pub fn photon_voltage(freq: f64) -> f64 {
    H * freq / E
}

/// Middle of the first photon step, `2Δ/e − hf/(2e)`.
pub fn default_probe_voltage(gap_voltage: f64, freq: f64) -> f64 {
    gap_voltage - 0.5 * photon_voltage(freq)
}

/// `I(V) = Σ_n J_n²(α) I_dark(V + n hf/e)` on `grid`.
pub fn tien_gordon_iv<S: IvSource + ?Sized>(dark: &S, grid: &[f64], drive: &PatDrive) -> Result<IvCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty voltage grid".into()));
    }
    let weights = bessel_j_squared_weights(drive.alpha, WEIGHT_TOL);
    let order = weights.len() - 1;
    let dv = photon_voltage(drive.frequency);
    let (lo, hi) = dark.support();
    let need_lo = grid[0] - order as f64 * dv;
    let need_hi = grid[grid.len() - 1] + order as f64 * dv;
    if need_lo < lo {
        return Err(Error::InsufficientSupport(need_lo));
    }
    if need_hi > hi {
        return Err(Error::InsufficientSupport(need_hi));
    }
    let current = grid
        .iter()
        .map(|&v| {
            let mut i = weights[0] * dark.current(v);
            for (n, w) in weights.iter().enumerate().skip(1) {
                let s = n as f64 * dv;
                i += w * (dark.current(v + s) + dark.current(v - s));
            }
            i
        })
        .collect();
    IvCurve::new(grid.to_vec(), current)
}

/// Current at the probe voltage by linear interpolation.
pub fn extract_step_current(iv: &IvCurve, v_probe: f64) -> Result<f64> {
    iv.interpolate(v_probe).ok_or(Error::InsufficientSupport(v_probe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::E;

    const MEV: f64 = 1e-3 * E;

    fn model() -> DarkIvModel {
        DarkIvModel::new(0.2 * MEV, 1480.0, 148_000.0, 0.5e-6).unwrap()
    }

    #[test]
    fn dark_branch_values() {
        let m = model();
        assert_eq!(m.current(0.0), 0.0);
        assert_eq!(m.current(-0.3e-3), -m.current(0.3e-3));
        let v = 2e-3;
        assert!((m.current(v) * 1480.0 / v - 1.0).abs() < 1e-3);
        let v = 0.39e-3;
        assert!((m.current(v) * 148_000.0 / v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn photon_voltage_at_mode2() {
        assert!((photon_voltage(13.95e9) - 57.69e-6).abs() < 0.01e-6);
    }

    #[test]
    fn zero_drive_reproduces_dark_curve() {
        let m = model();
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 3e-6).collect();
        let pat = tien_gordon_iv(&m, &grid, &PatDrive::new(13.95e9, 0.0).unwrap()).unwrap();
        for (v, i) in grid.iter().zip(pat.current_samples()) {
            assert_eq!(*i, m.current(*v));
        }
    }

    #[test]
    fn step_onset_one_photon_below_gap() {
        let m = model();
        let f = 13.95e9;
        let onset = m.gap_voltage() - photon_voltage(f);
        assert!((onset - 0.342e-3).abs() < 0.5e-6);
        let d = PatDrive::new(f, 0.5).unwrap();
        let grid: Vec<f64> = (0..6001).map(|k| 0.30e-3 + k as f64 * 1e-8).collect();
        let pat = tien_gordon_iv(&m, &grid, &d).unwrap();
        // largest slope of the excess current sits at the onset
        let excess: Vec<f64> = pat.current_samples().iter().zip(grid.iter()).map(|(i, &v)| i - m.current(v)).collect();
        let k = (1..excess.len()).max_by(|&a, &b| (excess[a] - excess[a - 1]).total_cmp(&(excess[b] - excess[b - 1]))).unwrap();
        assert!((grid[k] - onset).abs() < 0.1e-6, "{} vs {onset}", grid[k]);
    }

    #[test]
    fn higher_orders_shift_by_photon_voltage() {
        let m = model();
        let f = 13.95e9;
        let dv = photon_voltage(f);
        let d = PatDrive::new(f, 1.5).unwrap();
        let grid: Vec<f64> = (0..30001).map(|k| 0.15e-3 + k as f64 * 1e-8).collect();
        let pat = tien_gordon_iv(&m, &grid, &d).unwrap();
        let c = pat.current_samples();
        let slope: Vec<f64> = (1..c.len()).map(|k| c[k] - c[k - 1] - (m.current(grid[k]) - m.current(grid[k - 1]))).collect();
        for order in 1..=3 {
            let want = m.gap_voltage() - order as f64 * dv;
            let lo = grid.partition_point(|&v| v < want - 0.3 * dv);
            let hi = grid.partition_point(|&v| v < want + 0.3 * dv);
            let k = (lo..hi).max_by(|&a, &b| slope[a - 1].total_cmp(&slope[b - 1])).unwrap();
            assert!((grid[k] - want).abs() < 0.05e-6, "order {order}: {} vs {want}", grid[k]);
        }
    }

    #[test]
    fn insufficient_support_on_sampled_dark_curve() {
        let dark = model().sample(0.0, 0.5e-3, 501).unwrap();
        let grid = vec![0.01e-3, 0.49e-3];
        assert!(matches!(
            tien_gordon_iv(&dark, &grid, &PatDrive::new(13.95e9, 0.3).unwrap()),
            Err(Error::InsufficientSupport(_))
        ));
    }

    #[test]
    fn probe_current_on_dark_subgap_branch() {
        let m = model();
        let dark = m.sample(0.0, 0.6e-3, 601).unwrap();
        let vp = default_probe_voltage(m.gap_voltage(), 13.95e9);
        let i = extract_step_current(&dark, vp).unwrap();
        assert!((i * 148_000.0 / vp - 1.0).abs() < 1e-6);
        assert!(extract_step_current(&dark, 1.0).is_err());
    }

    #[test]
    fn step_current_monotone_in_alpha() {
        let m = model();
        let f = 13.95e9;
        let vp = default_probe_voltage(m.gap_voltage(), f);
        let mut prev = f64::MIN;
        for k in 0..=36 {
            let a = k as f64 * 0.05;
            let iv = tien_gordon_iv(&m, &[vp], &PatDrive::new(f, a).unwrap()).unwrap();
            let i = extract_step_current(&iv, vp).unwrap();
            assert!(i > prev, "alpha {a}");
            prev = i;
        }
    }

    #[test]
    fn spectral_weight_conserved() {
        let m = model();
        let f = 13.95e9;
        let grid: Vec<f64> = (0..=150_000).map(|k| -1.5e-3 + k as f64 * 2e-8).collect();
        let dark = tien_gordon_iv(&m, &grid, &PatDrive::new(f, 0.0).unwrap()).unwrap();
        let trap = |c: &IvCurve| c.current_samples().windows(2).map(|w| 0.5 * (w[0] + w[1]) * 2e-8).collect::<Vec<_>>();
        let abs_dark: f64 = trap(&dark).iter().map(|x| x.abs()).sum();
        for a in [0.5, 1.0, 2.0] {
            let pat = tien_gordon_iv(&m, &grid, &PatDrive::new(f, a).unwrap()).unwrap();
            let i_pat: f64 = trap(&pat).iter().sum();
            let i_dark: f64 = trap(&dark).iter().sum();
            assert!((i_pat - i_dark).abs() / abs_dark < 1e-6, "alpha {a}");
        }
    }

    #[test]
    fn db_mapping_round_trip() {
        let d = PatDrive::from_db(13.95e9, -6.0, 0.2).unwrap();
        assert!((d.power_db(0.2) + 6.0).abs() < 1e-12);
        assert!((power_db(0.4, 0.2) - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(PatDrive::new(1e9, -0.1).is_err());
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        let c = IvCurve::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(c.interpolate(1.0), Some(2.0));
        assert_eq!(c.interpolate(2.0), Some(3.0));
        assert_eq!(c.interpolate(3.0), Some(4.0));
        assert_eq!(c.interpolate(3.5), None);
        assert!(IvCurve::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
