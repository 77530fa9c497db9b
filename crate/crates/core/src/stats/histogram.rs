use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::EventStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    Linear,
    Log,
}

/// Density-normalised histogram of waiting times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub binning: Binning,
    /// `n_bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Counts divided by (total · bin width).
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Arithmetic bin centres for linear binning, geometric for log binning.
    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| match self.binning {
                Binning::Linear => 0.5 * (w[0] + w[1]),
                Binning::Log => (w[0] * w[1]).sqrt(),
            })
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Σ density · width.
    pub fn mass(&self) -> f64 {
        self.density.iter().zip(self.widths()).map(|(d, w)| d * w).sum()
    }
}

/// Histogram of the inter-event intervals of `stream`.
///
/// Linear bins span `[0, max]`; log bins span `[min, max]` with geometric
/// edges. The maximum is included in the last bin.
pub fn waiting_time_histogram(stream: &EventStream, binning: Binning, n_bins: usize) -> Result<Histogram> {
    if stream.len() < 2 {
        return Err(Error::InsufficientData(format!("histogram needs >= 2 events, got {}", stream.len())));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be positive".into()));
    }
    let iv = stream.intervals();
    let max = iv.iter().copied().fold(f64::MIN, f64::max);
    let min = iv.iter().copied().fold(f64::MAX, f64::min);
    let edges: Vec<f64> = match binning {
        Binning::Linear => (0..=n_bins).map(|k| max * k as f64 / n_bins as f64).collect(),
        Binning::Log => {
            let (lo, hi) = if max > min * (1.0 + 1e-9) { (min, max) } else { (min * 0.5, max * 2.0) };
            let (a, b) = (lo.ln(), hi.ln());
            (0..=n_bins).map(|k| (a + (b - a) * k as f64 / n_bins as f64).exp()).collect()
        }
    };
    let (lo, hi) = (edges[0], edges[n_bins]);
    let mut counts = vec![0u64; n_bins];
    for &x in &iv {
        let u = match binning {
            Binning::Linear => (x - lo) / (hi - lo),
            Binning::Log => (x / lo).ln() / (hi / lo).ln(),
        };
        let mut k = ((u * n_bins as f64).floor().max(0.0) as usize).min(n_bins - 1);
        // guard rounding at the edges
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < n_bins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    let total = iv.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
        .collect();
    Ok(Histogram { binning, edges, counts, density })
}
