use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::error::{Error, Result};
use crate::seed::rng_from;
use crate::stream::EventStream;

/// Moments of the inter-event intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub n_events: usize,
    /// Mean interval τ (s).
    pub mean: f64,
    /// Sample standard deviation σ (s).
    pub std: f64,
    /// τ/σ; `+∞` when all intervals are equal.
    pub ratio: f64,
    /// Percentile bootstrap interval for τ/σ, when requested.
    pub ratio_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bootstrap {
    pub resamples: usize,
    /// Coverage, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalOptions {
    /// Subtract this dead time from every interval before computing moments.
    pub dead_time_correction: Option<f64>,
    pub bootstrap: Option<Bootstrap>,
}

pub fn interval_stats(stream: &EventStream) -> Result<IntervalStats> {
    interval_stats_with(stream, &IntervalOptions::default())
}

pub fn interval_stats_with(stream: &EventStream, opts: &IntervalOptions) -> Result<IntervalStats> {
    if stream.len() < 3 {
        return Err(Error::InsufficientData(format!("interval statistics need >= 3 events, got {}", stream.len())));
    }
    let mut iv = stream.intervals();
    if let Some(td) = opts.dead_time_correction {
        iv.iter_mut().for_each(|x| *x -= td);
    }
    let (mean, std) = mean_std(&iv);
    let ratio = ratio(mean, std);
    let ratio_ci = match opts.bootstrap {
        Some(b) => Some(bootstrap_ratio(&iv, &b)?),
        None => None,
    };
    Ok(IntervalStats { n_events: stream.len(), mean, std, ratio, ratio_ci })
}

fn ratio(mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        mean / std
    } else {
        f64::INFINITY
    }
}

/// Percentile bootstrap of τ/σ over i.i.d. resamples of the intervals.
/// Resample `b` draws from `derive(seed, [b])`, so the result does not depend
/// on the number of worker threads.
fn bootstrap_ratio(intervals: &[f64], b: &Bootstrap) -> Result<(f64, f64)> {
    if b.resamples < 10 || !(0.0 < b.level && b.level < 1.0) {
        return Err(Error::InvalidParameter("bootstrap needs >= 10 resamples and a level in (0, 1)".into()));
    }
    let n = intervals.len();
    let mut ratios: Vec<f64> = (0..b.resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from(b.seed, &[k as u64]);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let x = intervals[rng.random_range(0..n)];
                s += x;
                s2 += x * x;
            }
            let m = s / n as f64;
            let var = ((s2 - n as f64 * m * m) / (n as f64 - 1.0)).max(0.0);
            ratio(m, var.sqrt())
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - b.level);
    Ok((quantile_sorted(&ratios, alpha), quantile_sorted(&ratios, 1.0 - alpha)))
}

fn quantile_sorted(xs: &[f64], q: f64) -> f64 {
    let pos = q * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    if xs[hi].is_infinite() || xs[lo].is_infinite() {
        return if w < 0.5 { xs[lo] } else { xs[hi] };
    }
    xs[lo] * (1.0 - w) + xs[hi] * w
}
