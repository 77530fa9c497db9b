use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use super::ks::ks_exponential;
use crate::error::{Error, Result};
use crate::stream::EventStream;

/// Least-squares power law on a log-log histogram: `density ∝ t^{-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    /// Natural-log intercept.
    pub intercept: f64,
    pub r_squared: f64,
    pub n_bins: usize,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum WaitingTimeFit {
    Exponential { tau: f64, t_min: f64, t_max: f64, ks_statistic: f64 },
    PowerLaw(PowerLawFit),
}

impl WaitingTimeFit {
    /// Exponential with τ̂ from [`fit_exponential`] and its KS distance as goodness.
    pub fn exponential(stream: &EventStream) -> Result<Self> {
        let tau = fit_exponential(stream)?;
        let iv = stream.intervals();
        let t_min = iv.iter().copied().fold(f64::MAX, f64::min);
        let t_max = iv.iter().copied().fold(f64::MIN, f64::max);
        let ks_statistic = ks_exponential(stream)?.d;
        Ok(WaitingTimeFit::Exponential { tau, t_min, t_max, ks_statistic })
    }
}

/// Maximum-likelihood exponential mean: the arithmetic mean interval.
pub fn fit_exponential(stream: &EventStream) -> Result<f64> {
    if stream.len() < 3 {
        return Err(Error::InsufficientData(format!("exponential fit needs >= 2 intervals, got {}", stream.len().saturating_sub(1))));
    }
    let iv = stream.intervals();
    Ok(iv.iter().sum::<f64>() / iv.len() as f64)
}

/// Fits `ln density = c − alpha·ln t` over bins whose centre lies in `[t_min, t_max]`.
pub fn fit_power_law(hist: &Histogram, t_min: f64, t_max: f64) -> Result<PowerLawFit> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::InvalidParameter(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    let pts: Vec<(f64, f64)> = hist
        .centers()
        .into_iter()
        .zip(&hist.density)
        .filter(|&(t, &d)| t >= t_min && t <= t_max && d > 0.0 && t > 0.0)
        .map(|(t, &d)| (t.ln(), d.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs >= 4 populated bins in [{t_min}, {t_max}], got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerLawFit { alpha: -slope, intercept, r_squared, n_bins: pts.len(), t_min, t_max })
}
