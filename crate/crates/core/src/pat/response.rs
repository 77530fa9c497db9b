use std::f64::consts::LN_10;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::Calibration;
use super::iv::{alpha_from_db, extract_step_current, tien_gordon_iv, IvCurve, IvSource, PatDrive};
use crate::error::{Error, Result};
use crate::lsq::{minimize, LsqOptions};
use crate::source::cavity_s21;

/// Minimum peak-to-floor contrast for a meaningful Lorentzian fit (dB).
const MIN_CONTRAST_DB: f64 = 0.5;

/// Lorentzian in dB: `offset − 10 log₁₀(1 + 4Q²((f − f₀)/f₀)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub f0: f64,
    pub q: f64,
    pub offset_db: f64,
    pub rms_db: f64,
    /// False when the curve is too flat to locate a resonance.
    pub identifiable: bool,
}

impl LorentzianFit {
    pub fn eval(&self, f: f64) -> f64 {
        let d = 2.0 * self.q * (f - self.f0) / self.f0;
        self.offset_db - 10.0 * (1.0 + d * d).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub freq: Vec<f64>,
    /// Relative power, peak normalised to 0 dB.
    pub power_db: Vec<f64>,
    pub fit: LorentzianFit,
}

/// Step currents at `v_probe` for drive powers `powers_db` relative to `alpha_ref`.
pub fn simulate_calibration<S: IvSource + Sync + ?Sized>(
    dark: &S,
    freq: f64,
    alpha_ref: f64,
    powers_db: &[f64],
    v_probe: f64,
) -> Result<Vec<(f64, f64)>> {
    powers_db
        .par_iter()
        .map(|&p| {
            let drive = PatDrive::new(freq, alpha_from_db(p, alpha_ref))?;
            let iv = tien_gordon_iv(dark, &[v_probe], &drive)?;
            Ok((p, extract_step_current(&iv, v_probe)?))
        })
        .collect()
}

/// IV curves on `grid` for a source of fixed amplitude `alpha_src` seen
/// through a cavity `(f0, Q)`; `None` means a flat transmission.
pub fn simulate_sweep<S: IvSource + Sync + ?Sized>(
    dark: &S,
    freqs: &[f64],
    alpha_src: f64,
    cavity: Option<(f64, f64)>,
    grid: &[f64],
) -> Result<Vec<(f64, IvCurve)>> {
    freqs
        .par_iter()
        .map(|&f| {
            let gain_db = cavity.map_or(0.0, |(f0, q)| cavity_s21(f, f0, q, None));
            let drive = PatDrive::new(f, alpha_src * 10f64.powf(gain_db / 20.0))?;
            Ok((f, tien_gordon_iv(dark, grid, &drive)?))
        })
        .collect()
}

/// Converts probe currents of a frequency sweep to relative power through
/// the calibration inverse, normalises the peak to 0 dB and fits a Lorentzian.
pub fn reconstruct_response(sweep: &[(f64, IvCurve)], cal: &Calibration, v_probe: f64) -> Result<ResponseCurve> {
    if sweep.len() < 4 {
        return Err(Error::InsufficientData(format!("response needs >= 4 sweep points, got {}", sweep.len())));
    }
    let mut pts: Vec<(f64, f64)> = sweep
        .par_iter()
        .map(|(f, iv)| Ok((*f, cal.inverse(extract_step_current(iv, v_probe)?)?)))
        .collect::<Result<_>>()?;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let freq: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let power_db: Vec<f64> = pts.iter().map(|p| p.1 - peak).collect();
    let fit = fit_lorentzian_db(&freq, &power_db)?;
    Ok(ResponseCurve { freq, power_db, fit })
}

/// Least-squares Lorentzian on a dB curve; `freqs` must be sorted.
pub fn fit_lorentzian_db(freqs: &[f64], db: &[f64]) -> Result<LorentzianFit> {
    if freqs.len() != db.len() || freqs.len() < 4 {
        return Err(Error::InsufficientData("Lorentzian fit needs >= 4 (f, dB) points".into()));
    }
    let kmax = (0..db.len()).max_by(|&a, &b| db[a].total_cmp(&db[b])).unwrap();
    let top = db[kmax];
    let contrast = top - db.iter().copied().fold(f64::INFINITY, f64::min);
    let identifiable = contrast >= MIN_CONTRAST_DB;
    if identifiable && (kmax == 0 || kmax == db.len() - 1) {
        return Err(Error::InsufficientData("frequency sweep does not bracket the resonance".into()));
    }
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    let half = 0.5 * (f_hi - f_lo);
    let fc = 0.5 * (f_lo + f_hi);
    let above: Vec<f64> = freqs.iter().zip(db).filter(|(_, &y)| y >= top - 3.0).map(|(&f, _)| f).collect();
    let fwhm = (above[above.len() - 1] - above[0]).max((f_hi - f_lo) / freqs.len() as f64);
    let q0 = (freqs[kmax] / fwhm).clamp(1.0, 1e9);

    // x = [(f0 − fc)/half, ln Q, offset]
    let model = |x: &[f64]| {
        let f0 = fc + half * x[0];
        let q = x[1].exp();
        let n = freqs.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for k in 0..n {
            let d = (freqs[k] - f0) / f0;
            let u = 4.0 * q * q * d * d;
            let g_u = 10.0 / (LN_10 * (1.0 + u));
            r[k] = x[2] - 10.0 * u.ln_1p() / LN_10 - db[k];
            let du_df0 = 8.0 * q * q * d * (-freqs[k] / (f0 * f0));
            j[(k, 0)] = -g_u * du_df0 * half;
            j[(k, 1)] = -g_u * 2.0 * u;
            j[(k, 2)] = 1.0;
        }
        (r, j)
    };
    let x0 = [(freqs[kmax] - fc) / half, q0.ln(), top];
    let out = minimize(model, &x0, &[-1.0, 0.0, -1e3], &[1.0, 1e9f64.ln(), 1e3], &LsqOptions::default());
    Ok(LorentzianFit {
        f0: fc + half * out.x[0],
        q: out.x[1].exp(),
        offset_db: out.x[2],
        rms_db: (out.cost / freqs.len() as f64).sqrt(),
        identifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::E;
    use crate::pat::{build_calibration, default_probe_voltage, DarkIvModel};

    fn dark() -> DarkIvModel {
        DarkIvModel::new(0.2e-3 * E, 1480.0, 148_000.0, 0.5e-6).unwrap()
    }

    fn round_trip(f0: f64, q: f64) -> ResponseCurve {
        let m = dark();
        let vp = default_probe_voltage(m.gap_voltage(), f0);
        let powers: Vec<f64> = (0..=34).map(|k| -30.0 + k as f64).collect();
        let cal = build_calibration(&simulate_calibration(&m, f0, 0.2, &powers, vp).unwrap()).unwrap();
        let lw = f0 / q;
        let freqs: Vec<f64> = (0..=60).map(|k| f0 - 4.0 * lw + k as f64 * 8.0 * lw / 60.0).collect();
        let grid = [vp - 1e-6, vp, vp + 1e-6];
        let sweep = simulate_sweep(&m, &freqs, 0.2, Some((f0, q)), &grid).unwrap();
        reconstruct_response(&sweep, &cal, vp).unwrap()
    }

    #[test]
    fn recovers_mode2() {
        let r = round_trip(13.95e9, 4650.0);
        assert!(r.fit.identifiable);
        assert!((r.fit.f0 - 13.95e9).abs() < 1e6, "{:?}", r.fit);
        assert!((r.fit.q / 4650.0 - 1.0).abs() < 0.05, "{:?}", r.fit);
        assert_eq!(r.power_db.iter().copied().fold(f64::MIN, f64::max), 0.0);
    }

    #[test]
    fn recovers_mode1() {
        let r = round_trip(8.81e9, 7340.0);
        assert!((r.fit.f0 - 8.81e9).abs() < 1e6, "{:?}", r.fit);
        assert!((r.fit.q / 7340.0 - 1.0).abs() < 0.05, "{:?}", r.fit);
    }

    #[test]
    fn flat_input_is_flat_and_unidentifiable() {
        let m = dark();
        let f = 13.95e9;
        let vp = default_probe_voltage(m.gap_voltage(), f);
        let powers: Vec<f64> = (0..=34).map(|k| -30.0 + k as f64).collect();
        let cal = build_calibration(&simulate_calibration(&m, f, 0.2, &powers, vp).unwrap()).unwrap();
        // fixed photon energy: every point is the same IV curve
        let iv = tien_gordon_iv(&m, &[vp], &PatDrive::new(f, 0.1).unwrap()).unwrap();
        let sweep: Vec<(f64, IvCurve)> = (0..20).map(|k| (f - 1e7 + k as f64 * 1e6, iv.clone())).collect();
        let r = reconstruct_response(&sweep, &cal, vp).unwrap();
        assert!(r.power_db.iter().all(|p| p.abs() < 1e-6));
        assert!(!r.fit.identifiable);
        // with the photon energy following the sweep frequency
        let freqs: Vec<f64> = (0..20).map(|k| f - 1e7 + k as f64 * 1e6).collect();
        let sweep = simulate_sweep(&m, &freqs, 0.1, None, &[vp]).unwrap();
        let r = reconstruct_response(&sweep, &cal, vp).unwrap();
        assert!(r.power_db.iter().all(|p| p.abs() < 1e-3), "{:?}", r.power_db);
        assert!(!r.fit.identifiable);
    }

    #[test]
    fn calibration_range_exceeded() {
        let m = dark();
        let f = 13.95e9;
        let vp = default_probe_voltage(m.gap_voltage(), f);
        let powers: Vec<f64> = (0..=10).map(|k| -10.0 + k as f64).collect();
        let cal = build_calibration(&simulate_calibration(&m, f, 0.2, &powers, vp).unwrap()).unwrap();
        let freqs: Vec<f64> = (0..=20).map(|k| f - 2e7 + k as f64 * 2e6).collect();
        let sweep = simulate_sweep(&m, &freqs, 0.2, Some((f, 4650.0)), &[vp]).unwrap();
        assert!(matches!(reconstruct_response(&sweep, &cal, vp), Err(Error::OutOfCalibrationRange { .. })));
    }
}
