//! Event-level detector: thinning by detection probability, dark counts and a
//! non-paralyzable dead time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};
use crate::source::{sample_poisson_stream, sample_thermal_stream, SourceConfig};
use crate::stream::{merge_streams, EventLabel, EventStream};

/// Default dead time (s); the readout needs a few ms to restore the
/// superconducting state.
pub const DEFAULT_DEAD_TIME: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    /// Switching probability per arriving photon, one entry per cavity mode.
    pub detection_probabilities: Vec<f64>,
    /// Non-paralyzable dead time (s).
    #[serde(default = "default_dead_time")]
    pub dead_time: f64,
    /// Dark count rate (Hz).
    pub dark_rate: f64,
}

fn default_dead_time() -> f64 {
    DEFAULT_DEAD_TIME
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.detection_probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("detection probability {p} outside [0, 1]")));
        }
        if !(self.dead_time.is_finite() && self.dead_time >= 0.0) {
            return Err(Error::InvalidParameter(format!("dead time must be >= 0, got {}", self.dead_time)));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("dark rate must be >= 0, got {}", self.dark_rate)));
        }
        Ok(())
    }
}

/// Drop events closer than `dead_time` to the last recorded one.
pub fn apply_dead_time(stream: &EventStream, dead_time: f64) -> EventStream {
    if dead_time <= 0.0 {
        return stream.clone();
    }
    let mut last = f64::NEG_INFINITY;
    stream.filter(|t, _| {
        if t - last >= dead_time {
            last = t;
            true
        } else {
            false
        }
    })
}

/// Seed path component of the dark-count stream.
const DARK_STREAM: u64 = u32::MAX as u64;
/// Offset of the thinning streams.
const THINNING: u64 = 1 << 32;

/// Recorded switching events for a cavity source seen through `detector`.
///
/// Mode `k` arrivals use seed `derive(seed, [k])`, their thinning uses
/// `derive(seed, [2³² + k])`, and dark counts `derive(seed, [2³² - 1])`.
pub fn simulate_event_level(
    source: &SourceConfig,
    detector: &DetectorModel,
    duration: f64,
    seed: u64,
) -> Result<EventStream> {
    source.validate()?;
    detector.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be > 0, got {duration}")));
    }
    if detector.detection_probabilities.len() != source.modes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} detection probabilities for {} modes",
            detector.detection_probabilities.len(),
            source.modes.len()
        )));
    }
    let mut parts = Vec::with_capacity(source.modes.len() + 1);
    for (k, (mode, &p)) in source.modes.iter().zip(&detector.detection_probabilities).enumerate() {
        let arrivals = sample_thermal_stream(mode, k as u32, source.temperature, duration, derive_seed(seed, &[k as u64]))?;
        let kept = if p >= 1.0 {
            arrivals
        } else {
            let mut rng = rng_from(seed, &[THINNING + k as u64]);
            arrivals.filter(|_, _| rng.random::<f64>() < p)
        };
        parts.push(kept);
    }
    parts.push(sample_poisson_stream(detector.dark_rate, duration, EventLabel::Dark, derive_seed(seed, &[DARK_STREAM]))?);
    let refs: Vec<&EventStream> = parts.iter().collect();
    let merged = merge_streams(&refs)?;
    Ok(apply_dead_time(&merged, detector.dead_time).with_seed(seed))
}
