use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{minimize, LsqOptions};

/// Exponential calibration `I = A·e^{B·P} + C` between relative power `P` (dB)
/// and probe current `I` (A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Fitted power range (dB).
    pub p_min: f64,
    pub p_max: f64,
    /// RMS residual of the fit (A).
    pub rms_residual: f64,
}

/// Relative slack on range checks, to absorb rounding in round trips.
const RANGE_SLACK: f64 = 1e-9;

impl Calibration {
    /// Current at power `p`, unchecked.
    pub fn eval(&self, p: f64) -> f64 {
        self.a * (self.b * p).exp() + self.c
    }

    fn slack(&self) -> f64 {
        RANGE_SLACK * (self.p_max - self.p_min).abs().max(1.0)
    }

    pub fn forward(&self, p: f64) -> Result<f64> {
        if !(p >= self.p_min - self.slack() && p <= self.p_max + self.slack()) {
            return Err(Error::OutOfCalibrationRange { value: p, lo: self.p_min, hi: self.p_max });
        }
        Ok(self.eval(p))
    }

    /// Current range spanned by the fitted power range.
    pub fn current_range(&self) -> (f64, f64) {
        let (x, y) = (self.eval(self.p_min), self.eval(self.p_max));
        (x.min(y), x.max(y))
    }

    /// Power (dB) producing `current`; errors outside the fitted range.
    pub fn inverse(&self, current: f64) -> Result<f64> {
        let (lo, hi) = self.current_range();
        let u = (current - self.c) / self.a;
        if u <= 0.0 {
            return Err(Error::OutOfCalibrationRange { value: current, lo, hi });
        }
        let p = u.ln() / self.b;
        if !(p >= self.p_min - self.slack() && p <= self.p_max + self.slack()) {
            return Err(Error::OutOfCalibrationRange { value: current, lo, hi });
        }
        Ok(p)
    }
}

/// Least-squares exponential fit to `(power_dB, step_current)` pairs.
///
/// `B` is located by a one-dimensional search with `A`, `C` solved linearly
/// for each trial value, then all three are polished jointly.
pub fn build_calibration(pairs: &[(f64, f64)]) -> Result<Calibration> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!("calibration needs >= 3 pairs, got {}", pairs.len())));
    }
    if pairs.iter().any(|(p, i)| !p.is_finite() || !i.is_finite()) {
        return Err(Error::InvalidParameter("calibration pairs must be finite".into()));
    }
    let mut pts = pairs.to_vec();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    if pts.windows(2).any(|w| w[1].0 == w[0].0) {
        return Err(Error::NonMonotone("repeated calibration power".into()));
    }
    let up = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let down = pts.windows(2).all(|w| w[1].1 < w[0].1);
    if !(up || down) {
        return Err(Error::NonMonotone("step current is not monotone in power".into()));
    }
    let p: Vec<f64> = pts.iter().map(|x| x.0).collect();
    // currents in units of their largest magnitude
    let scale = pts.iter().map(|x| x.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let y: Vec<f64> = pts.iter().map(|x| x.1 / scale).collect();
    let span = p[p.len() - 1] - p[0];
    // centre powers to keep e^{BP} well scaled
    let p0 = 0.5 * (p[0] + p[p.len() - 1]);
    let pc: Vec<f64> = p.iter().map(|x| x - p0).collect();

    let profile = |b: f64| -> (f64, f64, f64) {
        let e: Vec<f64> = pc.iter().map(|x| (b * x).exp()).collect();
        let n = e.len() as f64;
        let (se, see) = (e.iter().sum::<f64>(), e.iter().map(|v| v * v).sum::<f64>());
        let (sy, sey) = (y.iter().sum::<f64>(), e.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>());
        let det = n * see - se * se;
        if det.abs() < 1e-300 {
            return (f64::INFINITY, 0.0, 0.0);
        }
        let a = (n * sey - se * sy) / det;
        let c = (sy - a * se) / n;
        let ssr = e.iter().zip(&y).map(|(ev, yv)| (a * ev + c - yv).powi(2)).sum();
        (ssr, a, c)
    };

    // log-spaced B grid of both signs, scaled to the power span
    let bmax = 30.0 / span;
    let bmin = 1e-4 / span;
    let mut grid: Vec<f64> = (0..=120).map(|k| bmin * (bmax / bmin).powf(k as f64 / 120.0)).collect();
    grid.extend(grid.clone().iter().map(|b| -b));
    grid.sort_by(f64::total_cmp);
    let k = (0..grid.len()).min_by(|&a, &b| profile(grid[a]).0.total_cmp(&profile(grid[b]).0)).unwrap();
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if profile(x1).0 < profile(x2).0 {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let b = 0.5 * (lo + hi);
    let (_, a, c) = profile(b);

    let model = |x: &[f64]| {
        let r = DVector::from_iterator(pc.len(), pc.iter().zip(&y).map(|(pv, yv)| x[0] * (x[1] * pv).exp() + x[2] - yv));
        let j = DMatrix::from_fn(pc.len(), 3, |row, col| {
            let e = (x[1] * pc[row]).exp();
            match col {
                0 => e,
                1 => x[0] * pc[row] * e,
                _ => 1.0,
            }
        });
        (r, j)
    };
    let inf = f64::INFINITY;
    let polished = minimize(model, &[a, b, c], &[-inf; 3], &[inf; 3], &LsqOptions { step_tolerance: 1e-14, ..Default::default() });
    let (a, b, c) = (polished.x[0], polished.x[1], polished.x[2]);
    if a == 0.0 || b == 0.0 {
        return Err(Error::Numerical("calibration fit is degenerate (flat response)".into()));
    }
    // undo centring: A e^{B(P − p0)} = (A e^{−B p0}) e^{BP}
    Ok(Calibration {
        a: scale * a * (-b * p0).exp(),
        b,
        c: scale * c,
        p_min: p[0],
        p_max: p[p.len() - 1],
        rms_residual: scale * (polished.cost / p.len() as f64).sqrt(),
    })
}
