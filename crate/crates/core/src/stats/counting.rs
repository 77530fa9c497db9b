use crate::error::{Error, Result};
use crate::stream::EventStream;

/// Var/Mean of counts in disjoint windows of length `window` starting at 0.
pub fn fano_factor(stream: &EventStream, window: f64) -> Result<f64> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidParameter(format!("window must be > 0, got {window}")));
    }
    let n_windows = (stream.duration() / window).floor() as usize;
    if n_windows < 20 {
        return Err(Error::InsufficientData(format!("Fano factor needs >= 20 windows, got {n_windows}")));
    }
    let mut counts = vec![0u64; n_windows];
    for &t in stream.times() {
        let k = (t / window) as usize;
        if k < n_windows {
            counts[k] += 1;
        }
    }
    let n = n_windows as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    if mean == 0.0 {
        return Err(Error::InsufficientData("no events inside the counting windows".into()));
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{sample_cox_stream, sample_poisson_stream};
    use crate::stream::EventLabel;

    #[test]
    fn poisson_is_one() {
        let s = sample_poisson_stream(10.0, 1000.0, EventLabel::Dark, 3).unwrap();
        let f = fano_factor(&s, 1.0).unwrap();
        assert!((f - 1.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn cox_long_window() {
        // F(W) = 1 + 2rτ[1 − (τ/W)(1 − e^{-W/τ})] = 1.975 for W = 40τ
        let s = sample_cox_stream(1.0, 0.5, 1e5, EventLabel::Mode(0), 4).unwrap();
        let f = fano_factor(&s, 20.0).unwrap();
        assert!((f - 2.0).abs() < 0.1, "{f}");
    }

    #[test]
    fn short_windows_tend_to_one() {
        let s = sample_cox_stream(1.0, 0.5, 2e4, EventLabel::Mode(0), 5).unwrap();
        let f = fano_factor(&s, 1e-3).unwrap();
        assert!((f - 1.0).abs() < 0.01, "{f}");
    }

    #[test]
    fn needs_twenty_windows() {
        let s = sample_poisson_stream(10.0, 10.0, EventLabel::Dark, 3).unwrap();
        assert!(fano_factor(&s, 1.0).is_err());
    }
}
