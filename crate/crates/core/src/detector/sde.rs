//! Stochastic RCSJ dynamics in dimensionless units.
//!
//! Time is measured in units of `1/ω_p0` and current in units of `I_c`:
//!
//! ```text
//! φ'' + β φ' + sin φ = i + i_drive(τ) + ξ(τ),   ⟨ξ(τ₁)ξ(τ₂)⟩ = 2βγ δ(τ₁ - τ₂)
//! ```
//!
//! with damping `β = 1/Q₀` (`Q₀ = ω_p0 R_qp C`) and noise strength
//! `γ = k_B T / E_J`. In equilibrium the mean kinetic energy `⟨φ'²/2⟩` is `γ/2`.
//! The integrator is the stochastic Heun scheme, which for additive noise is
//! strong order 1.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{K_B, PHI0_REDUCED};
use crate::error::{Error, Result};
use crate::junction::{check_bias, JunctionParams};
use crate::seed::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeConfig {
    /// Integration step in units of `1/ω_p0`.
    pub timestep: f64,
    /// Longest simulated time per trial, in units of `1/ω_p0`.
    pub max_time: f64,
    /// Phase excursion from the reference minimum that arms the switch test.
    pub excursion_threshold: f64,
    /// Confirmation window after the excursion (units of `1/ω_p0`).
    pub confirm_window: f64,
    /// Mean phase velocity over the window that confirms the running state.
    pub confirm_velocity: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            timestep: 0.01,
            max_time: 1e4,
            excursion_threshold: 4.0 * PI,
            confirm_window: 20.0,
            confirm_velocity: 0.1,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("timestep", self.timestep),
            ("max_time", self.max_time),
            ("excursion_threshold", self.excursion_threshold),
            ("confirm_window", self.confirm_window),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("sde {name} must be > 0, got {v}")));
            }
        }
        if !(self.confirm_velocity.is_finite() && self.confirm_velocity >= 0.0) {
            return Err(Error::InvalidParameter("sde confirm_velocity must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    #[default]
    HalfSine,
    /// `A·exp(-t/duration)` after arrival.
    ExponentialDecay,
    Rectangular,
}

/// Photon-induced current pulse in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    #[serde(default)]
    pub kind: PulseKind,
    /// Peak current ΔI (A).
    pub amplitude: f64,
    /// Duration, or decay time for the exponential shape (s).
    pub duration: f64,
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!("pulse amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse duration must be > 0, got {}", self.duration)));
        }
        Ok(())
    }

    /// Half-sine pulse lasting two plasma periods at bias `i`, with the
    /// amplitude of a photon of frequency `freq`.
    pub fn for_photon(params: &JunctionParams, i: f64, freq: f64) -> Result<Self> {
        let amplitude = params.photon_current_pulse(i * params.critical_current, freq)?;
        let period = 2.0 * PI / params.plasma_frequency(i)?;
        Ok(PulseShape { kind: PulseKind::HalfSine, amplitude, duration: 2.0 * period })
    }
}

/// External current program in dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    None,
    /// Pulse of normalized amplitude `amplitude` (units of I_c) starting at
    /// `start` and lasting `duration` (units of `1/ω_p0`).
    Pulse { kind: PulseKind, amplitude: f64, start: f64, duration: f64 },
}

impl Drive {
    /// Convert an SI pulse arriving at dimensionless time `start`.
    pub fn from_pulse(params: &JunctionParams, pulse: &PulseShape, start: f64) -> Drive {
        let wp0 = params.plasma_frequency_zero_bias();
        Drive::Pulse {
            kind: pulse.kind,
            amplitude: pulse.amplitude / params.critical_current,
            start,
            duration: pulse.duration * wp0,
        }
    }

    #[inline]
    pub fn value(&self, tau: f64) -> f64 {
        match *self {
            Drive::None => 0.0,
            Drive::Pulse { kind, amplitude, start, duration } => {
                let s = tau - start;
                if s < 0.0 {
                    return 0.0;
                }
                match kind {
                    PulseKind::HalfSine if s <= duration => amplitude * (PI * s / duration).sin(),
                    PulseKind::Rectangular if s <= duration => amplitude,
                    PulseKind::ExponentialDecay => amplitude * (-s / duration).exp(),
                    _ => 0.0,
                }
            }
        }
    }

    fn peak(&self) -> f64 {
        match *self {
            Drive::None => 0.0,
            Drive::Pulse { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// Dimensionless problem data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProblem {
    pub bias: f64,
    /// β = 1/Q₀.
    pub damping: f64,
    /// γ = k_B T / E_J.
    pub noise: f64,
}

impl PhaseProblem {
    pub fn new(params: &JunctionParams, i: f64, temperature: f64) -> Result<Self> {
        params.validate()?;
        check_bias(i)?;
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
        }
        Ok(PhaseProblem {
            bias: i,
            damping: 1.0 / params.dynamic_quality_factor_zero_bias(),
            noise: K_B * temperature / params.josephson_energy(),
        })
    }

    pub fn well_minimum(&self) -> f64 {
        self.bias.asin()
    }

    /// Small-oscillation frequency at the bias point, in units of ω_p0.
    pub fn well_frequency(&self) -> f64 {
        (1.0 - self.bias * self.bias).sqrt().sqrt()
    }

    /// Draw (φ, φ') from the harmonic-well Boltzmann distribution.
    pub fn thermal_state<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let w2 = (1.0 - self.bias * self.bias).sqrt();
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        (self.well_minimum() + n1 * (self.noise / w2).sqrt(), n2 * self.noise.sqrt())
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub switched: bool,
    /// Dimensionless switching time (time of the armed excursion), if switched.
    pub switch_time: Option<f64>,
    /// Switching time in seconds.
    pub switch_time_s: Option<f64>,
    /// Time actually integrated (units of 1/ω_p0).
    pub elapsed: f64,
    /// Mean phase velocity over the last confirmation window, converted to volts.
    pub final_voltage_proxy: f64,
    /// Time-averaged φ'²/2 over the run.
    pub mean_kinetic_energy: f64,
}

/// Integrate the dimensionless equation from `(phi, dphi)`.
///
/// `record`, when given, receives `[τ, φ, φ']` every `stride` steps.
pub fn integrate_phase<R: Rng + ?Sized>(
    problem: &PhaseProblem,
    drive: &Drive,
    cfg: &SdeConfig,
    state: (f64, f64),
    rng: &mut R,
    mut record: Option<(&mut Vec<[f64; 3]>, usize)>,
) -> Result<TrajectoryOutcome> {
    cfg.validate()?;
    let dt = cfg.timestep;
    let beta = problem.damping;
    let bias = problem.bias;
    let sigma = (2.0 * beta * problem.noise * dt).sqrt();
    // ten times the running-state terminal velocity
    let blowup = 50f64.max(10.0 * (1.0 + bias + drive.peak()) / beta.max(1e-12));
    let period_min = problem.well_minimum();
    let driven = !matches!(drive, Drive::None);

    let (mut phi, mut v) = state;
    let mut reference = period_min;
    let mut tau = 0.0;
    let mut kinetic = 0.0;
    let mut n_steps: u64 = 0;
    // (time of excursion, phase at excursion)
    let mut armed: Option<(f64, f64)> = None;
    let max_steps = (cfg.max_time / dt).ceil() as u64;
    let window_steps = (cfg.confirm_window / dt).ceil() as u64;
    let mut confirm_until: u64 = 0;
    let mut last_window_velocity = 0.0;
    let mut window_start = (0u64, phi);

    let mut step: u64 = 0;
    loop {
        if armed.is_none() && step >= max_steps {
            break;
        }
        let f0 = if driven { bias + drive.value(tau) } else { bias };
        let a0 = f0 - beta * v - fast_sin(phi);
        let dw = if sigma > 0.0 { sigma * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
        let phi_p = phi + v * dt;
        let v_p = v + a0 * dt + dw;
        let f1 = if driven { bias + drive.value(tau + dt) } else { bias };
        let a1 = f1 - beta * v_p - fast_sin(phi_p);
        phi += 0.5 * (v + v_p) * dt;
        v += 0.5 * (a0 + a1) * dt + dw;
        step += 1;
        tau = step as f64 * dt;
        kinetic += 0.5 * v * v;
        n_steps += 1;

        if let Some((buf, stride)) = record.as_mut() {
            if step % (*stride as u64).max(1) == 0 {
                buf.push([tau, phi, v]);
            }
        }

        if !(phi.is_finite() && v.is_finite()) || v.abs() > blowup {
            return Err(Error::UnstableTimestep { time: tau });
        }

        if step - window_start.0 >= window_steps {
            last_window_velocity = (phi - window_start.1) / (window_steps as f64 * dt);
            window_start = (step, phi);
        }

        match armed {
            None => {
                if (phi - reference).abs() > cfg.excursion_threshold {
                    armed = Some((tau, phi));
                    confirm_until = step + window_steps;
                }
            }
            Some((t_arm, phi_arm)) if step >= confirm_until => {
                let mean_v = (phi - phi_arm) / (tau - t_arm);
                if mean_v.abs() > cfg.confirm_velocity {
                    return Ok(TrajectoryOutcome {
                        switched: true,
                        switch_time: Some(t_arm),
                        elapsed: tau,
                        final_velocity: mean_v,
                        mean_kinetic_energy: kinetic / n_steps as f64,
                    });
                }
                // retrapped: re-arm from the nearest minimum
                let k = ((phi - period_min) / (2.0 * PI)).round();
                reference = period_min + 2.0 * PI * k;
                armed = None;
            }
            Some(_) => {}
        }
    }
    Ok(TrajectoryOutcome {
        switched: false,
        switch_time: None,
        elapsed: tau,
        final_velocity: last_window_velocity,
        mean_kinetic_energy: if n_steps > 0 { kinetic / n_steps as f64 } else { 0.0 },
    })
}

/// Raw dimensionless outcome of [`integrate_phase`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub switched: bool,
    pub switch_time: Option<f64>,
    pub elapsed: f64,
    pub final_velocity: f64,
    pub mean_kinetic_energy: f64,
}

/// Integrate the RCSJ equation at bias `i` and temperature `temperature`,
/// starting at rest in the well minimum.
pub fn integrate_rcsj(
    params: &JunctionParams,
    i: f64,
    temperature: f64,
    drive: &Drive,
    cfg: &SdeConfig,
    seed: u64,
) -> Result<TrajectorySummary> {
    let problem = PhaseProblem::new(params, i, temperature)?;
    let mut rng = rng_from(seed, &[]);
    let out = integrate_phase(&problem, drive, cfg, (problem.well_minimum(), 0.0), &mut rng, None)?;
    Ok(summarize(params, &out))
}

/// As [`integrate_rcsj`], also returning `[τ, φ, φ']` samples every `stride` steps.
pub fn rcsj_trajectory(
    params: &JunctionParams,
    i: f64,
    temperature: f64,
    drive: &Drive,
    cfg: &SdeConfig,
    seed: u64,
    stride: usize,
) -> Result<(TrajectorySummary, Vec<[f64; 3]>)> {
    let problem = PhaseProblem::new(params, i, temperature)?;
    let mut rng = rng_from(seed, &[]);
    let mut buf = Vec::new();
    let out = integrate_phase(
        &problem,
        drive,
        cfg,
        (problem.well_minimum(), 0.0),
        &mut rng,
        Some((&mut buf, stride)),
    )?;
    Ok((summarize(params, &out), buf))
}

fn summarize(params: &JunctionParams, out: &TrajectoryOutcome) -> TrajectorySummary {
    let wp0 = params.plasma_frequency_zero_bias();
    TrajectorySummary {
        switched: out.switched,
        switch_time: out.switch_time,
        switch_time_s: out.switch_time.map(|t| t / wp0),
        elapsed: out.elapsed,
        // V = (ħ/2e) dφ/dt = (ħ/2e) ω_p0 φ'
        final_voltage_proxy: PHI0_REDUCED * wp0 * out.final_velocity,
        mean_kinetic_energy: out.mean_kinetic_energy,
    }
}

/// Monte Carlo fraction with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEstimate {
    pub probability: f64,
    pub std_err: f64,
    pub trials: usize,
    pub switches: usize,
}

impl SwitchEstimate {
    fn from_counts(switches: usize, trials: usize) -> Self {
        let p = switches as f64 / trials as f64;
        SwitchEstimate { probability: p, std_err: (p * (1.0 - p) / trials as f64).sqrt(), trials, switches }
    }
}

/// Probability that a current pulse switches the junction within the
/// observation window, over thermal initial states and arrival phases.
///
/// Each trial starts from a thermal state in the well, lets the pulse arrive
/// uniformly within one plasma period, and watches for ten plasma periods
/// after the pulse has ended.
pub fn photon_switch_probability(
    params: &JunctionParams,
    i: f64,
    temperature: f64,
    pulse: &PulseShape,
    trials: usize,
    cfg: &SdeConfig,
    seed: u64,
) -> Result<SwitchEstimate> {
    if trials < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 trials, got {trials}")));
    }
    pulse.validate()?;
    let problem = PhaseProblem::new(params, i, temperature)?;
    let period = 2.0 * PI / problem.well_frequency();
    let wp0 = params.plasma_frequency_zero_bias();
    let pulse_len = match pulse.kind {
        PulseKind::ExponentialDecay => 5.0 * pulse.duration * wp0,
        _ => pulse.duration * wp0,
    };
    let trial_cfg = SdeConfig { max_time: period + pulse_len + 10.0 * period, ..*cfg };
    let outcomes: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from(seed, &[k as u64]);
            let start = rng.random::<f64>() * period;
            let state = problem.thermal_state(&mut rng);
            let drive = Drive::from_pulse(params, pulse, start);
            integrate_phase(&problem, &drive, &trial_cfg, state, &mut rng, None).map(|o| o.switched)
        })
        .collect();
    let switches = outcomes?.into_iter().filter(|&s| s).count();
    Ok(SwitchEstimate::from_counts(switches, trials))
}

/// Escape rate estimated from repeated runs at constant bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    /// Escape rate in Hz.
    pub rate: f64,
    /// Relative standard error `1/√switches`.
    pub rel_err: f64,
    pub switches: usize,
    pub trials: usize,
    /// Total observed time (s), including censored trials.
    pub exposure: f64,
}

/// Maximum-likelihood escape rate `switches / exposure` from `trials`
/// independent runs, each censored at `cfg.max_time`.
pub fn estimate_escape_rate(
    params: &JunctionParams,
    i: f64,
    temperature: f64,
    trials: usize,
    cfg: &SdeConfig,
    seed: u64,
) -> Result<EscapeEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let problem = PhaseProblem::new(params, i, temperature)?;
    let runs: Result<Vec<(bool, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from(seed, &[k as u64]);
            let state = problem.thermal_state(&mut rng);
            let o = integrate_phase(&problem, &Drive::None, cfg, state, &mut rng, None)?;
            Ok((o.switched, o.switch_time.unwrap_or(o.elapsed)))
        })
        .collect();
    let runs = runs?;
    let switches = runs.iter().filter(|r| r.0).count();
    let exposure_dimless: f64 = runs.iter().map(|r| r.1).sum();
    let wp0 = params.plasma_frequency_zero_bias();
    let exposure = exposure_dimless / wp0;
    let rate = switches as f64 / exposure;
    let rel_err = if switches > 0 { 1.0 / (switches as f64).sqrt() } else { f64::INFINITY };
    Ok(EscapeEstimate { rate, rel_err, switches, trials, exposure })
}

/// `sin x` via reduction to [−π/2, π/2] and a degree-17 Taylor polynomial;
/// absolute error below 1e-13 for |x| < 1e6.
#[inline]
fn fast_sin(x: f64) -> f64 {
    const TAU_HI: f64 = std::f64::consts::TAU;
    const TAU_LO: f64 = 2.4492935982947064e-16;
    let k = (x * (1.0 / TAU_HI)).round();
    let mut r = (x - k * TAU_HI) - k * TAU_LO;
    if r > FRAC_PI_2 {
        r = PI - r;
    } else if r < -FRAC_PI_2 {
        r = -PI - r;
    }
    let r2 = r * r;
    let mut p = -1.0 / 121645100408832000.0 * r2 + 1.0 / 355687428096000.0;
    for c in [-1.0 / 1307674368000.0, 1.0 / 6227020800.0, -1.0 / 39916800.0, 1.0 / 362880.0, -1.0 / 5040.0, 1.0 / 120.0, -1.0 / 6.0] {
        p = p * r2 + c;
    }
    // odd series: r(1 + r²(−1/6 + r²(1/120 + …)))
    r + r * r2 * p
}
