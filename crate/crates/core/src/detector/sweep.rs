//! Switching rate vs bias for a set of cavity temperatures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape::{total_escape_rate, EscapeConfig};
use crate::junction::JunctionParams;
use crate::seed::derive_seed;
use crate::source::{mean_occupation, CavityMode};

use super::sde::{photon_switch_probability, PulseShape, SdeConfig};

/// Detector response at one bias point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub bias: f64,
    /// Switching probability per photon for each mode.
    pub switch_probability: Vec<f64>,
    /// Standard error of each probability.
    pub switch_probability_err: Vec<f64>,
    /// Dark count rate (Hz).
    pub dark_rate: f64,
}

/// Where the per-bias detector response comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasCalibration {
    /// Run the SDE tier for the photon response and the escape-rate theory
    /// for dark counts, plus a bias-independent residual floor.
    Simulated {
        params: JunctionParams,
        /// Junction (noise) temperature for the SDE and escape rates (K).
        junction_temperature: f64,
        escape: EscapeConfig,
        /// Residual dark rate not described by escape theory (Hz).
        dark_floor: f64,
        trials: usize,
        sde: SdeConfig,
    },
    /// User-supplied table; biases must match the requested grid.
    Table(Vec<CalibrationPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bias_ratio: f64,
    pub temp_k: f64,
    pub rate_hz: f64,
    pub rate_err_hz: f64,
}

impl BiasCalibration {
    /// Response at each bias of `biases` for photons of `modes`.
    pub fn evaluate(&self, modes: &[CavityMode], biases: &[f64], seed: u64) -> Result<Vec<CalibrationPoint>> {
        match self {
            BiasCalibration::Table(points) => biases
                .iter()
                .map(|&b| {
                    points
                        .iter()
                        .find(|p| (p.bias - b).abs() <= 1e-12 * b.abs().max(1.0))
                        .filter(|p| p.switch_probability.len() == modes.len())
                        .cloned()
                        .ok_or_else(|| Error::InvalidParameter(format!("no calibration entry for bias {b}")))
                })
                .collect(),
            BiasCalibration::Simulated { params, junction_temperature, escape, dark_floor, trials, sde } => {
                let jobs: Vec<(usize, usize)> =
                    (0..biases.len()).flat_map(|b| (0..modes.len()).map(move |m| (b, m))).collect();
                let probs: Result<Vec<(f64, f64)>> = jobs
                    .par_iter()
                    .map(|&(b, m)| {
                        let i = biases[b];
                        let pulse = PulseShape::for_photon(params, i, modes[m].frequency)?;
                        let est = photon_switch_probability(
                            params,
                            i,
                            *junction_temperature,
                            &pulse,
                            *trials,
                            sde,
                            derive_seed(seed, &[b as u64, m as u64]),
                        )?;
                        Ok((est.probability, est.std_err))
                    })
                    .collect();
                let probs = probs?;
                biases
                    .iter()
                    .enumerate()
                    .map(|(b, &i)| {
                        let slice = &probs[b * modes.len()..(b + 1) * modes.len()];
                        Ok(CalibrationPoint {
                            bias: i,
                            switch_probability: slice.iter().map(|p| p.0).collect(),
                            switch_probability_err: slice.iter().map(|p| p.1).collect(),
                            dark_rate: total_escape_rate(params, i, escape)? + dark_floor,
                        })
                    })
                    .collect()
            }
        }
    }
}

/// `rate(bias, T) = dark(bias) + Σ p_i(bias) η_i n̄(f_i, T) / τ_i` on the
/// grid `biases × temperatures`, rows ordered by bias then temperature.
pub fn sweep_bias(
    calibration: &BiasCalibration,
    modes: &[CavityMode],
    temperatures: &[f64],
    biases: &[f64],
    seed: u64,
) -> Result<(Vec<CalibrationPoint>, Vec<SweepRow>)> {
    for m in modes {
        m.validate()?;
    }
    if let Some(t) = temperatures.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!("temperature must be > 0, got {t}")));
    }
    let points = calibration.evaluate(modes, biases, seed)?;
    let mut rows = Vec::with_capacity(points.len() * temperatures.len());
    for pt in &points {
        for &t in temperatures {
            let mut rate = pt.dark_rate;
            let mut var = 0.0;
            for (k, m) in modes.iter().enumerate() {
                let flux = m.efficiency * mean_occupation(m.frequency, t) / m.lifetime();
                rate += pt.switch_probability[k] * flux;
                let se = pt.switch_probability_err.get(k).copied().unwrap_or(0.0);
                var += (se * flux).powi(2);
            }
            rows.push(SweepRow { bias_ratio: pt.bias, temp_k: t, rate_hz: rate, rate_err_hz: var.sqrt() });
        }
    }
    Ok((points, rows))
}

/// Bias maximizing `rate(t_hot) / rate(t_cold)`, with that ratio.
pub fn optimal_bias(rows: &[SweepRow], t_hot: f64, t_cold: f64) -> Option<(f64, f64)> {
    let at = |b: f64, t: f64| {
        rows.iter()
            .find(|r| r.bias_ratio == b && (r.temp_k - t).abs() <= 1e-12)
            .map(|r| r.rate_hz)
    };
    let mut biases: Vec<f64> = rows.iter().map(|r| r.bias_ratio).collect();
    biases.dedup();
    biases
        .into_iter()
        .filter_map(|b| {
            let hot = at(b, t_hot)?;
            let cold = at(b, t_cold)?;
            (cold > 0.0).then_some((b, hot / cold))
        })
        .fold(None, |best: Option<(f64, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
}
