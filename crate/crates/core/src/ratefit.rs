//! Fit of detected rate vs cavity temperature to the thermal mode model
//! `r(T) = r_DC + Σ η_i n̄(f_i, T) / τ_i` with `f_i`, `Q_i` held fixed.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{minimize, LsqOptions};
use crate::seed::rng_from;
use crate::source::{ln_mean_occupation, mean_occupation, CavityMode};

/// Upper bound on the dark rate parameter (Hz).
pub const MAX_DARK_RATE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateDataPoint {
    /// Cavity temperature (K).
    pub temp_k: f64,
    pub rate_hz: f64,
    pub rate_err_hz: f64,
}

impl RateDataPoint {
    pub fn new(temp_k: f64, rate_hz: f64, rate_err_hz: f64) -> Result<Self> {
        let p = RateDataPoint { temp_k, rate_hz, rate_err_hz };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temp_k.is_finite() && self.temp_k > 0.0) {
            return Err(Error::InvalidParameter(format!("temperature must be > 0, got {}", self.temp_k)));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz >= 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {}", self.rate_hz)));
        }
        if !(self.rate_err_hz.is_finite() && self.rate_err_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate error must be > 0, got {}", self.rate_err_hz)));
        }
        Ok(())
    }
}

/// Fit parameters: one efficiency per mode, then the dark rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub efficiencies: Vec<f64>,
    pub dark_rate: f64,
}

impl RateParams {
    fn to_vec(&self) -> Vec<f64> {
        let mut v = self.efficiencies.clone();
        v.push(self.dark_rate);
        v
    }

    fn from_slice(x: &[f64]) -> Self {
        let (eta, dark) = x.split_at(x.len() - 1);
        RateParams { efficiencies: eta.to_vec(), dark_rate: dark[0] }
    }
}

/// `r_DC + Σ η_i n̄(f_i, T)/τ_i`; the efficiencies stored on `modes` are ignored.
pub fn model_rate(t: f64, modes: &[CavityMode], params: &RateParams) -> f64 {
    params.dark_rate
        + modes
            .iter()
            .zip(&params.efficiencies)
            .map(|(m, eta)| eta * mode_sensitivity(m, t))
            .sum::<f64>()
}

fn mode_sensitivity(m: &CavityMode, t: f64) -> f64 {
    mean_occupation(m.frequency, t) / m.lifetime()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Starting efficiencies tried for every mode (cartesian product).
    pub eta_grid: [f64; 4],
    pub max_iterations: usize,
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { eta_grid: [0.01, 0.1, 0.4, 0.9], max_iterations: 200, step_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_step_norm: f64,
    /// Index of the winning multi-start.
    pub start_index: usize,
    pub starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: RateParams,
    /// Parameter names in covariance order.
    pub names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    /// √diag(covariance).
    pub std_errors: Vec<f64>,
    /// False where the data cannot constrain the parameter across its bounds.
    pub identifiable: Vec<bool>,
    pub chi2: f64,
    pub reduced_chi2: f64,
    /// Weighted log-space residuals.
    pub residuals: Vec<f64>,
    pub n_points: usize,
    pub convergence: ConvergenceReport,
}

/// Log-space weighted least squares with bounds η ∈ [0, 1], r_DC ∈ [0, 10 Hz].
///
/// Each point contributes `(ln r(T_k) − ln rate_k) / (err_k / rate_k)`.
/// Points with zero rate carry no log-space information and are skipped.
pub fn fit(data: &[RateDataPoint], modes: &[CavityMode], opts: &FitOptions) -> Result<FitResult> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("at least one mode is required".into()));
    }
    for p in data {
        p.validate()?;
    }
    for m in modes {
        m.validate()?;
    }
    let pts: Vec<RateDataPoint> = data.iter().copied().filter(|p| p.rate_hz > 0.0).collect();
    if pts.len() < data.len() {
        log::warn!("skipping {} zero-rate point(s) in the log-space fit", data.len() - pts.len());
    }
    let n_par = modes.len() + 1;
    if pts.len() < n_par + 1 {
        return Err(Error::InsufficientData(format!("fit needs >= {} positive-rate points, got {}", n_par + 1, pts.len())));
    }

    // sensitivities s_ki = n̄_i(T_k)/τ_i and weights √w_k = rate/err
    let sens: Vec<Vec<f64>> = pts.iter().map(|p| modes.iter().map(|m| mode_sensitivity(m, p.temp_k)).collect()).collect();
    let sqrt_w: Vec<f64> = pts.iter().map(|p| p.rate_hz / p.rate_err_hz).collect();
    let ln_y: Vec<f64> = pts.iter().map(|p| p.rate_hz.ln()).collect();

    let residual = |x: &[f64]| {
        let n = pts.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, n_par);
        for k in 0..n {
            let m = (x[n_par - 1] + sens[k].iter().zip(x).map(|(s, e)| s * e).sum::<f64>()).max(1e-300);
            r[k] = sqrt_w[k] * (m.ln() - ln_y[k]);
            for i in 0..n_par - 1 {
                j[(k, i)] = sqrt_w[k] * sens[k][i] / m;
            }
            j[(k, n_par - 1)] = sqrt_w[k] / m;
        }
        (r, j)
    };

    let mut lower = vec![0.0; n_par];
    let mut upper = vec![1.0; n_par];
    lower[n_par - 1] = 0.0;
    upper[n_par - 1] = MAX_DARK_RATE;

    // dark-rate start from the coldest point
    let coldest = pts.iter().min_by(|a, b| a.temp_k.total_cmp(&b.temp_k)).unwrap();
    let dark0 = coldest.rate_hz.clamp(1e-3, MAX_DARK_RATE * 0.99);
    let starts: Vec<Vec<f64>> = grid_starts(&opts.eta_grid, modes.len())
        .into_iter()
        .map(|mut v| {
            v.push(dark0);
            v
        })
        .collect();

    let lsq = LsqOptions { max_iterations: opts.max_iterations, step_tolerance: opts.step_tolerance, ..Default::default() };
    let outcomes: Vec<_> = starts.par_iter().map(|x0| minimize(residual, x0, &lower, &upper, &lsq)).collect();
    let (start_index, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)))
        .unwrap();
    if !best.converged {
        log::warn!("rate fit did not converge in {} iterations; reporting best iterate", best.iterations);
    }

    let j = &best.jacobian;
    let jtj = j.transpose() * j;
    let cov = invert_psd(&jtj);
    let identifiable: Vec<bool> = (0..n_par).map(|c| j.column(c).norm() * (upper[c] - lower[c]) >= 2.0).collect();
    let std_errors = (0..n_par).map(|c| cov[(c, c)].max(0.0).sqrt()).collect();
    let dof = (pts.len() - n_par) as f64;
    let mut names: Vec<String> = (1..=modes.len()).map(|k| format!("eta{k}")).collect();
    names.push("dark_rate".into());

    Ok(FitResult {
        params: RateParams::from_slice(&best.x),
        names,
        covariance: (0..n_par).map(|r| (0..n_par).map(|c| cov[(r, c)]).collect()).collect(),
        std_errors,
        identifiable,
        chi2: best.cost,
        reduced_chi2: best.cost / dof,
        residuals: best.residuals.clone(),
        n_points: pts.len(),
        convergence: ConvergenceReport {
            converged: best.converged,
            iterations: best.iterations,
            final_step_norm: best.step_norm,
            start_index,
            starts: starts.len(),
        },
    })
}

fn grid_starts(grid: &[f64], dims: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dims {
        out = out.into_iter().flat_map(|v| grid.iter().map(move |&g| [v.as_slice(), &[g]].concat())).collect();
    }
    out
}

/// Inverse of a symmetric PSD matrix, falling back to the pseudo-inverse.
fn invert_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = m.clone().cholesky() {
        let inv = c.inverse();
        return (&inv + inv.transpose()) * 0.5;
    }
    let eig = m.clone().symmetric_eigen();
    let tol = eig.eigenvalues.amax() * 1e-12 * m.nrows() as f64;
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..m.nrows() {
        let l = eig.eigenvalues[k];
        if l > tol {
            d[(k, k)] = 1.0 / l;
        }
    }
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Standard deviation of the fitted parameters over parametric resamples
/// `rate_k = r̂(T_k)·exp(σ_k ξ)` with `σ_k = err_k/rate_k`.
///
/// An empirical spread to compare with the covariance-based errors.
pub fn parametric_spread(
    data: &[RateDataPoint],
    modes: &[CavityMode],
    result: &FitResult,
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if resamples < 2 {
        return Err(Error::InvalidParameter("parametric spread needs >= 2 resamples".into()));
    }
    let pts: Vec<RateDataPoint> = data.iter().copied().filter(|p| p.rate_hz > 0.0).collect();
    let fits: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from(seed, &[b as u64]);
            let synth: Vec<RateDataPoint> = pts
                .iter()
                .map(|p| {
                    let rel = p.rate_err_hz / p.rate_hz;
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    let r = model_rate(p.temp_k, modes, &result.params) * (rel * xi).exp();
                    RateDataPoint { temp_k: p.temp_k, rate_hz: r, rate_err_hz: rel * r }
                })
                .collect();
            fit(&synth, modes, &FitOptions::default()).map(|f| f.params.to_vec())
        })
        .collect::<Result<_>>()?;
    let n_par = fits[0].len();
    Ok((0..n_par)
        .map(|c| {
            let xs: Vec<f64> = fits.iter().map(|f| f[c]).collect();
            crate::stats::mean_std(&xs).1
        })
        .collect())
}

/// Temperature where two modes contribute equal detected rates, by bisection
/// on `ln r₁ − ln r₂` over (1 mK, 1 K).
pub fn contribution_crossover(mode1: &CavityMode, mode2: &CavityMode) -> Result<f64> {
    for m in [mode1, mode2] {
        m.validate()?;
        if m.efficiency <= 0.0 {
            return Err(Error::InvalidParameter("crossover needs positive efficiencies".into()));
        }
    }
    let ln_rate = |m: &CavityMode, t: f64| m.efficiency.ln() + ln_mean_occupation(m.frequency, t) - m.lifetime().ln();
    let diff = |t: f64| ln_rate(mode1, t) - ln_rate(mode2, t);
    let (mut lo, mut hi) = (1e-3, 1.0);
    let (dlo, dhi) = (diff(lo), diff(hi));
    let scale = dlo.abs().max(dhi.abs()).max(1.0);
    if dlo.abs() < 1e-12 * scale && dhi.abs() < 1e-12 * scale && diff(0.03).abs() < 1e-12 * scale {
        return Err(Error::DegenerateCrossing);
    }
    if dlo.signum() == dhi.signum() {
        return Err(Error::NoCrossing);
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if diff(mid).signum() == dlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
