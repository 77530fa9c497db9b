//! Thermal cavity modes as photon sources.
//!
//! A mode of frequency `f` and loaded quality factor `Q` holds on average
//! `n̄ = 1/(e^{hf/k_B T} - 1)` photons which leak out with lifetime
//! `τ = Q/(2πf)`; a fraction `η` of them is detected, giving the rate
//! `η n̄ / τ`. Arrival times are generated either as a homogeneous Poisson
//! process or as a Cox process driven by a chaotic (complex Gaussian) field,
//! which has `g²(0) = 2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{H, K_B};
use crate::error::{Error, Result};
use crate::seed::{rng_from, SimRng};
use crate::stream::{EventLabel, EventStream};

/// Arrival statistics of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StatsModel {
    Poisson,
    #[default]
    ThermalBunched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityMode {
    /// Resonance frequency (Hz).
    pub frequency: f64,
    /// Loaded quality factor.
    pub quality_factor: f64,
    /// Detection efficiency η ∈ [0, 1].
    pub efficiency: f64,
    #[serde(default)]
    pub stats_model: StatsModel,
    /// Intensity correlation time (s); the photon lifetime when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_int: Option<f64>,
}

impl CavityMode {
    pub fn new(frequency: f64, quality_factor: f64, efficiency: f64) -> Self {
        CavityMode { frequency, quality_factor, efficiency, stats_model: StatsModel::default(), tau_int: None }
    }

    pub fn with_stats(mut self, model: StatsModel) -> Self {
        self.stats_model = model;
        self
    }

    pub fn with_tau_int(mut self, tau: f64) -> Self {
        self.tau_int = Some(tau);
        self
    }

    /// Photon lifetime `Q / (2π f)` (s).
    pub fn lifetime(&self) -> f64 {
        self.quality_factor / (2.0 * PI * self.frequency)
    }

    pub fn correlation_time(&self) -> f64 {
        self.tau_int.unwrap_or_else(|| self.lifetime())
    }

    /// Detected photon rate `η n̄ / τ` at temperature `t` (Hz).
    pub fn rate(&self, t: f64) -> f64 {
        self.efficiency / self.lifetime() * mean_occupation(self.frequency, t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::InvalidParameter(format!("mode frequency must be > 0, got {}", self.frequency)));
        }
        if !(self.quality_factor.is_finite() && self.quality_factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mode quality factor must be > 0, got {}",
                self.quality_factor
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter(format!("mode efficiency must be in [0, 1], got {}", self.efficiency)));
        }
        if let Some(t) = self.tau_int {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameter(format!("tau_int must be > 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// The two cavity modes that matter below ~100 mK, with the efficiencies
/// extracted from the rate-vs-temperature fit.
pub fn reference_modes() -> Vec<CavityMode> {
    vec![CavityMode::new(8.81e9, 7340.0, 0.0125), CavityMode::new(13.95e9, 4650.0, 0.45)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub modes: Vec<CavityMode>,
    /// Dark count rate r_DC (Hz).
    pub dark_rate: f64,
    /// Cavity temperature (K).
    pub temperature: f64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            m.validate()?;
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("dark rate must be >= 0, got {}", self.dark_rate)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature must be > 0, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// Bose–Einstein occupation `1 / (e^{hf/k_B T} - 1)`.
pub fn mean_occupation(freq: f64, temperature: f64) -> f64 {
    let x = H * freq / (K_B * temperature);
    1.0 / x.exp_m1()
}

/// `ln n̄`, finite even where `n̄` underflows.
pub fn ln_mean_occupation(freq: f64, temperature: f64) -> f64 {
    let x = H * freq / (K_B * temperature);
    -x - (-(-x).exp()).ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonRate {
    pub per_mode: Vec<f64>,
    pub dark: f64,
    pub total: f64,
}

/// Detected rate summed over modes plus the dark floor.
pub fn photon_rate(cfg: &SourceConfig) -> PhotonRate {
    let per_mode: Vec<f64> = cfg.modes.iter().map(|m| m.rate(cfg.temperature)).collect();
    let total = per_mode.iter().sum::<f64>() + cfg.dark_rate;
    PhotonRate { per_mode, dark: cfg.dark_rate, total }
}

/// Homogeneous Poisson arrivals.
pub fn sample_poisson_stream(rate: f64, duration: f64, label: EventLabel, seed: u64) -> Result<EventStream> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be >= 0, got {rate}")));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be >= 0, got {duration}")));
    }
    let mut rng = rng_from(seed, &[]);
    Ok(poisson_times(&mut rng, rate, duration, label, duration).with_seed(seed))
}

fn poisson_times(rng: &mut SimRng, rate: f64, duration: f64, label: EventLabel, record: f64) -> EventStream {
    let mut times = Vec::with_capacity((rate * duration * 1.01 + 16.0).min(1e8) as usize);
    if rate > 0.0 {
        let mut t = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += e / rate;
            if t > duration {
                break;
            }
            if times.last().is_some_and(|&p| t <= p) {
                continue;
            }
            times.push(t);
        }
    }
    let labels = vec![label; times.len()];
    EventStream::from_sorted_unchecked(times, labels, record)
}

/// Maximum number of field updates in one Cox-process record.
pub const MAX_FIELD_STEPS: u64 = 200_000_000;

/// Below this `r·τ_int` the excess Fano factor `2rτ` is unobservable and the
/// Cox generator falls back to Poisson arrivals when the step budget is exceeded.
pub const POISSON_LIMIT: f64 = 1e-3;

/// Field updates per correlation time.
const STEPS_PER_TAU: f64 = 16.0;

/// Cox-process arrivals with mean rate `rate` and intensity correlation time `tau_int`.
///
/// The intensity is `rate·|a(t)|²` where `a` is a unit-power complex
/// Ornstein–Uhlenbeck field with amplitude correlation time `2·tau_int`, so
/// `g²(τ) = 1 + e^{-|τ|/tau_int}` and the long-window Fano factor is
/// `1 + 2·rate·tau_int`.
pub fn sample_cox_stream(
    rate: f64,
    tau_int: f64,
    duration: f64,
    label: EventLabel,
    seed: u64,
) -> Result<EventStream> {
    if !(tau_int.is_finite() && tau_int > 0.0) {
        return Err(Error::InvalidParameter(format!("tau_int must be > 0, got {tau_int}")));
    }
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be >= 0, got {rate}")));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be >= 0, got {duration}")));
    }
    let mut rng = rng_from(seed, &[]);
    if rate == 0.0 || duration == 0.0 {
        return Ok(EventStream::from_sorted_unchecked(Vec::new(), Vec::new(), duration).with_seed(seed));
    }
    let dt = tau_int / STEPS_PER_TAU;
    let steps = (duration / dt).ceil();
    if steps > MAX_FIELD_STEPS as f64 {
        if rate * tau_int <= POISSON_LIMIT {
            log::info!(
                "r·tau_int = {:.3e} below {POISSON_LIMIT:e}: generating Poisson arrivals",
                rate * tau_int
            );
            return Ok(poisson_times(&mut rng, rate, duration, label, duration).with_seed(seed));
        }
        return Err(Error::InvalidParameter(format!(
            "tau_int = {tau_int:e} s needs {steps:e} field steps over {duration} s (limit {MAX_FIELD_STEPS})"
        )));
    }
    let steps = steps as u64;
    let dt = duration / steps as f64;

    // exact OU update for each quadrature, stationary variance 1/2
    let rho = (-dt / (2.0 * tau_int)).exp();
    let kick = ((1.0 - rho * rho) * 0.5).sqrt();
    let half = 0.5f64.sqrt();
    let mut x: f64 = half * rng.sample::<f64, _>(StandardNormal);
    let mut y: f64 = half * rng.sample::<f64, _>(StandardNormal);
    let mut lam0 = rate * (x * x + y * y);

    let mut times = Vec::with_capacity((rate * duration * 1.05 + 16.0).min(1e8) as usize);
    let mut target: f64 = Exp1.sample(&mut rng);
    for k in 0..steps {
        x = rho * x + kick * rng.sample::<f64, _>(StandardNormal);
        y = rho * y + kick * rng.sample::<f64, _>(StandardNormal);
        let lam1 = rate * (x * x + y * y);
        let t0 = k as f64 * dt;
        // intensity is linear in time across the step
        let step_mass = 0.5 * (lam0 + lam1) * dt;
        while target <= step_mass {
            let s = solve_linear_hazard(lam0, lam1, dt, target);
            let t = (t0 + s).min(duration);
            if times.last().is_none_or(|&p| t > p) {
                times.push(t);
            }
            target += <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng);
        }
        target -= step_mass;
        lam0 = lam1;
    }
    let labels = vec![label; times.len()];
    Ok(EventStream::from_sorted_unchecked(times, labels, duration).with_seed(seed))
}

/// Smallest `s ∈ [0, dt]` with `λ0 s + (λ1-λ0) s² / (2dt) = mass`.
fn solve_linear_hazard(lam0: f64, lam1: f64, dt: f64, mass: f64) -> f64 {
    let a = 0.5 * (lam1 - lam0) / dt;
    let s = if a.abs() < 1e-14 * (lam0 + lam1).max(1e-300) / dt {
        mass / lam0
    } else {
        // numerically stable root of a s² + lam0 s - mass = 0
        let disc = (lam0 * lam0 + 4.0 * a * mass).max(0.0);
        2.0 * mass / (lam0 + disc.sqrt())
    };
    s.clamp(0.0, dt)
}

/// Arrivals from one cavity mode at temperature `t`, following its statistics model.
pub fn sample_thermal_stream(
    mode: &CavityMode,
    mode_index: u32,
    temperature: f64,
    duration: f64,
    seed: u64,
) -> Result<EventStream> {
    mode.validate()?;
    let rate = mode.rate(temperature);
    let label = EventLabel::Mode(mode_index);
    match mode.stats_model {
        StatsModel::Poisson => sample_poisson_stream(rate, duration, label, seed),
        StatsModel::ThermalBunched => sample_cox_stream(rate, mode.correlation_time(), duration, label, seed),
    }
}

/// Lorentzian power transmission around `f0`, 0 dB at the peak. `floor_db`
/// adds an incoherent background level relative to the peak.
pub fn cavity_s21(freq: f64, f0: f64, q: f64, floor_db: Option<f64>) -> f64 {
    let detune = 2.0 * q * (freq - f0) / f0;
    let lorentz = 1.0 / (1.0 + detune * detune);
    match floor_db {
        Some(fl) => {
            let b = 10f64.powf(fl / 10.0);
            10.0 * ((lorentz + b) / (1.0 + b)).log10()
        }
        None => 10.0 * lorentz.log10(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_examples() {
        let f = 1e10;
        let t = H * f / (K_B * 2f64.ln());
        assert!((mean_occupation(f, t) - 1.0).abs() < 1e-12);
        assert!((mean_occupation(13.95e9, 0.08) / 2.320_754_414_098_546e-4 - 1.0).abs() < 1e-12);
        assert!(mean_occupation(13.95e9, 1e-4) < 1e-300);
        assert!(mean_occupation(13.95e9, 0.05) > mean_occupation(13.95e9, 0.04));
    }

    #[test]
    fn rate_examples() {
        let modes = reference_modes();
        assert!((modes[1].lifetime() / 5.305_164_769_729_845e-8 - 1.0).abs() < 1e-12);
        let cfg = SourceConfig { modes: vec![modes[1]], dark_rate: 0.0, temperature: 0.08 };
        let r = photon_rate(&cfg);
        assert!((r.total / 1968.533554891881 - 1.0).abs() < 1e-12);

        let dark_only = SourceConfig {
            modes: vec![CavityMode::new(13.95e9, 4650.0, 0.0)],
            dark_rate: 0.1,
            temperature: 0.08,
        };
        assert_eq!(photon_rate(&dark_only).total, 0.1);
    }

    #[test]
    fn per_mode_rates_cross_near_55_mk() {
        let m = reference_modes();
        assert!(m[0].rate(0.0545) > m[1].rate(0.0545));
        assert!(m[0].rate(0.0551) < m[1].rate(0.0551));
    }

    #[test]
    fn poisson_stream_basics() {
        let s = sample_poisson_stream(0.0, 10.0, EventLabel::Dark, 1).unwrap();
        assert!(s.is_empty());
        let s = sample_poisson_stream(100.0, 1000.0, EventLabel::Dark, 7).unwrap();
        let n = s.len() as f64;
        assert!((n - 1e5).abs() < 4.0 * 1e5f64.sqrt(), "{n}");
        assert!(s.validate().is_ok());
        assert_eq!(s, sample_poisson_stream(100.0, 1000.0, EventLabel::Dark, 7).unwrap());
        assert_ne!(s, sample_poisson_stream(100.0, 1000.0, EventLabel::Dark, 8).unwrap());
    }

    #[test]
    fn cox_rejects_bad_tau() {
        assert!(sample_cox_stream(1.0, 0.0, 1.0, EventLabel::Mode(0), 1).is_err());
        assert!(sample_cox_stream(1.0, -1.0, 1.0, EventLabel::Mode(0), 1).is_err());
    }

    #[test]
    fn cox_mean_rate() {
        let s = sample_cox_stream(2.0, 0.1, 20_000.0, EventLabel::Mode(0), 3).unwrap();
        // Cox variance: N·(1 + 2rτ) = 40000·1.4
        let sd = (40_000.0f64 * 1.4).sqrt();
        assert!((s.len() as f64 - 40_000.0).abs() < 4.0 * sd, "{}", s.len());
        assert!(s.validate().is_ok());
    }

    #[test]
    fn cox_short_correlation_falls_back() {
        let mode = reference_modes()[1];
        let s = sample_thermal_stream(&mode, 1, 0.08, 10.0, 5).unwrap();
        let n = s.len() as f64;
        assert!((n - 19_685.0).abs() < 4.0 * 19_685f64.sqrt());
    }

    #[test]
    fn hazard_root() {
        let s = solve_linear_hazard(1.0, 3.0, 1.0, 2.0);
        assert!((s + s * s - 2.0).abs() < 1e-12);
        assert!((solve_linear_hazard(2.0, 2.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        let s = solve_linear_hazard(0.0, 4.0, 2.0, 1.0);
        assert!((s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn s21_examples() {
        assert_eq!(cavity_s21(13.95e9, 13.95e9, 4650.0, None), 0.0);
        for sign in [-1.0, 1.0] {
            let f = 13.95e9 * (1.0 + sign / (2.0 * 4650.0));
            assert!((cavity_s21(f, 13.95e9, 4650.0, None) + 3.0).abs() < 0.1);
            assert!((cavity_s21(f, 13.95e9, 4650.0, Some(-60.0)) + 3.0).abs() < 0.1);
        }
        assert!((13.95e9f64 / 4650.0 - 3.0e6).abs() < 1e-6);
        assert!(cavity_s21(20e9, 13.95e9, 4650.0, Some(-40.0)) >= -40.0 - 1e-9);
    }
}
