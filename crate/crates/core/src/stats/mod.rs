//! Estimators for switching-event records.

mod counting;
mod fits;
mod histogram;
mod intervals;
mod ks;

pub use counting::fano_factor;
pub use fits::{fit_exponential, fit_power_law, PowerLawFit, WaitingTimeFit};
pub use histogram::{waiting_time_histogram, Binning, Histogram};
pub use intervals::{interval_stats, interval_stats_with, Bootstrap, IntervalOptions, IntervalStats};
pub use ks::{kolmogorov_survival, ks_exponential, lilliefors_exponential_survival, KsResult};

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
