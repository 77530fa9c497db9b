//! Dark-count theory: thermal activation over and quantum tunneling through
//! the washboard barrier, and switching under a time-dependent bias.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::junction::JunctionParams;

/// Prefactor used in front of the Arrhenius factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PrefactorModel {
    /// `a_t = 1`.
    #[default]
    TransitionState,
    /// `a_t = min(1, 7.2 ΔU / (Q k_B T))`, the energy-diffusion limit at weak damping.
    LowDampingCorrection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeConfig {
    #[serde(default)]
    pub prefactor_model: PrefactorModel,
    #[serde(default = "default_true")]
    pub include_mqt: bool,
    /// Junction noise temperature (K).
    pub temperature: f64,
}

fn default_true() -> bool {
    true
}

impl EscapeConfig {
    pub fn new(temperature: f64) -> Self {
        EscapeConfig { prefactor_model: PrefactorModel::TransitionState, include_mqt: true, temperature }
    }

    pub fn thermal_only(temperature: f64) -> Self {
        EscapeConfig { include_mqt: false, ..Self::new(temperature) }
    }

    pub fn validate(&self) -> Result<()> {
        check_temperature(self.temperature)
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be > 0, got {t}")));
    }
    Ok(())
}

/// Thermal activation rate Γ_th (Hz).
pub fn thermal_escape_rate(
    params: &JunctionParams,
    i: f64,
    temperature: f64,
    model: PrefactorModel,
) -> Result<f64> {
    check_temperature(temperature)?;
    let du = params.barrier_height(i)?;
    let attempt = params.plasma_frequency(i)? / (2.0 * PI);
    let kt = K_B * temperature;
    let prefactor = match model {
        PrefactorModel::TransitionState => 1.0,
        PrefactorModel::LowDampingCorrection => {
            let q = params.dynamic_quality_factor(i)?;
            (7.2 * du / (q * kt)).min(1.0)
        }
    };
    Ok(prefactor * attempt * (-du / kt).exp())
}

/// Macroscopic quantum tunneling rate Γ_q (Hz), capped at the attempt frequency.
pub fn mqt_rate(params: &JunctionParams, i: f64) -> Result<f64> {
    let du = params.barrier_height(i)?;
    let wp = params.plasma_frequency(i)?;
    let q = params.dynamic_quality_factor(i)?;
    let attempt = wp / (2.0 * PI);
    let x = du / (HBAR * wp);
    let rate = attempt * (120.0 * PI * 7.2 * x).sqrt() * (-7.2 * x * (1.0 + 0.87 / q)).exp();
    Ok(rate.min(attempt))
}

/// Total escape rate `Γ_th + Γ_q·[include_mqt]` (Hz).
pub fn total_escape_rate(params: &JunctionParams, i: f64, cfg: &EscapeConfig) -> Result<f64> {
    let th = thermal_escape_rate(params, i, cfg.temperature, cfg.prefactor_model)?;
    let q = if cfg.include_mqt { mqt_rate(params, i)? } else { 0.0 };
    Ok(th + q)
}

/// Mean switching time τ₀ = 1/Γ (s).
pub fn total_lifetime(params: &JunctionParams, i: f64, cfg: &EscapeConfig) -> Result<f64> {
    Ok(1.0 / total_escape_rate(params, i, cfg)?)
}

/// Crossover temperature `ħω_p / (2π k_B)` between thermal and quantum escape.
pub fn crossover_temperature(params: &JunctionParams, i: f64) -> Result<f64> {
    Ok(HBAR * params.plasma_frequency(i)? / (2.0 * PI * K_B))
}

/// Piecewise-linear bias current program `I(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRamp {
    points: Vec<(f64, f64)>,
}

impl BiasRamp {
    /// `points` are `(time s, current A)` with strictly increasing times.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a ramp needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::NonMonotone("ramp times must be strictly increasing".into()));
        }
        if points.iter().any(|&(t, c)| !t.is_finite() || !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidParameter("ramp currents must be finite and >= 0".into()));
        }
        Ok(BiasRamp { points })
    }

    /// Linear ramp from zero to `final_current` over `rise_time`.
    pub fn linear(rise_time: f64, final_current: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (rise_time, final_current)])
    }

    /// Constant bias held for `duration`.
    pub fn constant(current: f64, duration: f64) -> Result<Self> {
        Self::new(vec![(0.0, current), (duration, current)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0].0
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn current_at(&self, t: f64) -> f64 {
        let p = &self.points;
        if t <= p[0].0 {
            return p[0].1;
        }
        let k = p.partition_point(|&(tk, _)| tk <= t);
        if k >= p.len() {
            return p[p.len() - 1].1;
        }
        let (t0, c0) = p[k - 1];
        let (t1, c1) = p[k];
        c0 + (c1 - c0) * (t - t0) / (t1 - t0)
    }
}

/// Closest allowed approach to the critical current for ramp evaluation.
pub const RAMP_BIAS_CAP: f64 = 1.0 - 1e-9;

/// Cumulative switching probability `P(t) = 1 - exp(-∫Γ dt)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingDistribution {
    pub times: Vec<f64>,
    pub currents: Vec<f64>,
    /// Integrated hazard ∫₀ᵗ Γ dt'.
    pub hazard: Vec<f64>,
    /// `true` when the ramp reached I_c and was clamped.
    pub truncated: bool,
}

impl SwitchingDistribution {
    pub fn cumulative(&self) -> Vec<f64> {
        self.hazard.iter().map(|h| -(-h).exp_m1()).collect()
    }

    pub fn probability_at(&self, t: f64) -> f64 {
        let h = interp(&self.times, &self.hazard, t);
        -(-h).exp_m1()
    }

    pub fn final_probability(&self) -> f64 {
        -(-self.hazard[self.hazard.len() - 1]).exp_m1()
    }

    /// Time by which a fraction `p` of junctions has switched, or `None` if the
    /// ramp ends first.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if !(0.0..1.0).contains(&p) {
            return None;
        }
        let target = -(-p).ln_1p();
        let last = *self.hazard.last()?;
        if target > last {
            return None;
        }
        let k = self.hazard.partition_point(|&h| h < target);
        if k == 0 {
            return Some(self.times[0]);
        }
        let (h0, h1) = (self.hazard[k - 1], self.hazard[k]);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        if h1 == h0 {
            return Some(t0);
        }
        Some(t0 + (t1 - t0) * (target - h0) / (h1 - h0))
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    /// Switching current at quantile `p`.
    pub fn current_quantile(&self, p: f64) -> Option<f64> {
        let t = self.quantile(p)?;
        Some(interp(&self.times, &self.currents, t))
    }

    /// Draw one switching time; `None` when the junction survives the ramp.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let k = xs.partition_point(|&v| v <= x);
    if k >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

/// Escape rate along a ramp, clamping the bias below I_c.
fn ramp_rate(params: &JunctionParams, cfg: &EscapeConfig, current: f64, clamped: &mut bool) -> Result<f64> {
    let mut i = current / params.critical_current;
    if i >= RAMP_BIAS_CAP {
        *clamped = true;
        i = RAMP_BIAS_CAP;
    }
    total_escape_rate(params, i, cfg)
}

/// Switching-time distribution under a bias ramp, integrating the hazard
/// with adaptive Simpson quadrature between `points_per_segment` output nodes.
pub fn ramp_switching_distribution(
    params: &JunctionParams,
    ramp: &BiasRamp,
    cfg: &EscapeConfig,
    points_per_segment: usize,
) -> Result<SwitchingDistribution> {
    cfg.validate()?;
    let n = points_per_segment.max(1);
    let mut clamped = false;
    let mut times = vec![ramp.start()];
    let mut currents = vec![ramp.points()[0].1];
    let mut hazard = vec![0.0];
    let mut total = 0.0;
    for seg in ramp.points().windows(2) {
        let (t0, t1) = (seg[0].0, seg[1].0);
        for k in 0..n {
            let a = t0 + (t1 - t0) * k as f64 / n as f64;
            let b = if k + 1 == n { t1 } else { t0 + (t1 - t0) * (k + 1) as f64 / n as f64 };
            let mut err = None;
            let mut f = |t: f64| match ramp_rate(params, cfg, ramp.current_at(t), &mut clamped) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            };
            let piece = adaptive_simpson(&mut f, a, b, 1e-13, 60);
            if let Some(e) = err {
                return Err(e);
            }
            total += piece;
            times.push(b);
            currents.push(ramp.current_at(b));
            hazard.push(total);
        }
    }
    if clamped {
        log::warn!("bias ramp reaches the critical current; truncated at i = {RAMP_BIAS_CAP}");
    }
    Ok(SwitchingDistribution { times, currents, hazard, truncated: clamped })
}

/// Adaptive Simpson integration with a relative tolerance.
///
/// The tolerance is made absolute from a 64-panel composite estimate and
/// halved per level; the evaluation count is capped so noisy integrands
/// (e.g. rounding near the critical current) cannot recurse without end.
pub(crate) fn adaptive_simpson<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rel_tol: f64, max_depth: u32) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    let xs: Vec<f64> = (0..=2 * PANELS).map(|k| a + 0.5 * h * k as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let rough: f64 = (0..PANELS).map(|p| h / 6.0 * (fs[2 * p] + 4.0 * fs[2 * p + 1] + fs[2 * p + 2])).sum();
    let eps = (rel_tol * rough.abs()).max(f64::MIN_POSITIVE) / PANELS as f64;
    let mut budget: u64 = 1 << 22;
    (0..PANELS)
        .map(|p| {
            let (x0, x1) = (xs[2 * p], xs[2 * p + 2]);
            let whole = h / 6.0 * (fs[2 * p] + 4.0 * fs[2 * p + 1] + fs[2 * p + 2]);
            let ends = (fs[2 * p], fs[2 * p + 1], fs[2 * p + 2]);
            simpson_step(f, x0, x1, ends, whole, eps, max_depth, &mut budget)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    (fa, fm, fb): (f64, f64, f64),
    whole: f64,
    eps: f64,
    depth: u32,
    budget: &mut u64,
) -> f64 {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    *budget = budget.saturating_sub(2);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    let delta = both - whole;
    if depth == 0 || *budget == 0 || delta.abs() <= 15.0 * eps {
        return both + delta / 15.0;
    }
    simpson_step(f, a, m, (fa, flm, fm), left, 0.5 * eps, depth - 1, budget)
        + simpson_step(f, m, b, (fm, frm, fb), right, 0.5 * eps, depth - 1, budget)
}
