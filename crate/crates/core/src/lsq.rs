//! Box-constrained Levenberg–Marquardt for small dense problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqOptions {
    pub max_iterations: usize,
    /// Stop when `‖Δx‖ / (‖x‖ + tiny) < step_tolerance` after an accepted step.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions { max_iterations: 200, step_tolerance: 1e-8, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LsqOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    /// Σ r².
    pub cost: f64,
    pub iterations: usize,
    /// Relative norm of the last accepted step.
    pub step_norm: f64,
    pub converged: bool,
}

/// Minimises `Σ r(x)²` for `lower ≤ x ≤ upper`.
///
/// `model(x)` returns residuals and their Jacobian. Steps are projected onto
/// the box; coordinates sitting on a bound whose gradient points outward are
/// frozen for that iteration.
pub fn minimize<F>(model: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &LsqOptions) -> LsqOutcome
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for k in 0..n {
            x[k] = x[k].clamp(lower[k], upper[k]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let (mut r, mut j) = model(&x);
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut step_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let g = j.transpose() * &r;
        let free: Vec<usize> = (0..n)
            .filter(|&k| {
                let at_lo = x[k] <= lower[k] && g[k] > 0.0;
                let at_hi = x[k] >= upper[k] && g[k] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        if free.is_empty() || free.iter().all(|&k| g[k].abs() < 1e-300) {
            converged = true;
            step_norm = 0.0;
            break;
        }
        let jf = j.select_columns(free.iter());
        let a = jf.transpose() * &jf;
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| g[k]));

        let mut accepted = false;
        for _ in 0..60 {
            let mut m = a.clone();
            for d in 0..free.len() {
                m[(d, d)] += lambda * a[(d, d)].max(1e-12);
            }
            let Some(delta) = m.cholesky().map(|c| c.solve(&(-&gf))) else {
                lambda *= 4.0;
                continue;
            };
            let mut trial = x.clone();
            for (d, &k) in free.iter().enumerate() {
                trial[k] += delta[d];
            }
            clamp(&mut trial);
            let (rt, jt) = model(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let dx: f64 = x.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let xn: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                step_norm = dx / (xn + 1e-300);
                let improvement = cost - ct;
                x = trial;
                r = rt;
                j = jt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if step_norm < opts.step_tolerance || improvement <= 1e-15 * cost.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent possible at any damping: stationary to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    LsqOutcome { x, residuals: r.iter().copied().collect(), jacobian: j, cost, iterations, step_norm, converged }
}
