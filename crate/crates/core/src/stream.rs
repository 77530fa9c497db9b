use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Origin of a recorded event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventLabel {
    /// Photon from cavity mode `n` (zero based).
    Mode(u32),
    Dark,
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventLabel::Mode(n) => write!(f, "mode{n}"),
            EventLabel::Dark => f.write_str("dark"),
        }
    }
}

impl FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "dark" {
            return Ok(EventLabel::Dark);
        }
        s.strip_prefix("mode")
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse().ok())
            .map(EventLabel::Mode)
            .ok_or_else(|| Error::Parse(format!("unknown event label {s:?}")))
    }
}

impl Serialize for EventLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Time-ordered switching or arrival events over `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StreamRepr")]
pub struct EventStream {
    times: Vec<f64>,
    labels: Vec<EventLabel>,
    duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamRepr {
    times: Vec<f64>,
    labels: Vec<EventLabel>,
    duration: f64,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<StreamRepr> for EventStream {
    type Error = Error;

    fn try_from(r: StreamRepr) -> Result<Self> {
        let s = EventStream::new(r.times, r.labels, r.duration)?;
        Ok(match r.seed {
            Some(seed) => s.with_seed(seed),
            None => s,
        })
    }
}

impl EventStream {
    pub fn new(times: Vec<f64>, labels: Vec<EventLabel>, duration: f64) -> Result<Self> {
        let s = EventStream { times, labels, duration, seed: None };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(duration: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), duration)
    }

    /// All events share one label.
    pub fn uniform(times: Vec<f64>, label: EventLabel, duration: f64) -> Result<Self> {
        let labels = vec![label; times.len()];
        Self::new(times, labels, duration)
    }

    /// Builds a stream whose inter-event intervals are exactly `intervals`,
    /// with the first event at t = 0.
    pub fn from_intervals(intervals: &[f64], label: EventLabel) -> Result<Self> {
        let mut t = 0.0;
        let mut times = Vec::with_capacity(intervals.len() + 1);
        times.push(0.0);
        for &dt in intervals {
            t += dt;
            times.push(t);
        }
        Self::uniform(times, label, t)
    }

    pub(crate) fn from_sorted_unchecked(times: Vec<f64>, labels: Vec<EventLabel>, duration: f64) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        EventStream { times, labels, duration, seed: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::InvalidStream(format!("duration must be finite and >= 0, got {}", self.duration)));
        }
        if self.times.len() != self.labels.len() {
            return Err(Error::InvalidStream("times and labels differ in length".into()));
        }
        for (k, &t) in self.times.iter().enumerate() {
            if !(t >= 0.0 && t <= self.duration) {
                return Err(Error::InvalidStream(format!("event {k} at {t} s is outside [0, {}]", self.duration)));
            }
            if k > 0 && !(t > self.times[k - 1]) {
                return Err(Error::InvalidStream(format!("event times not strictly increasing at index {k}")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn labels(&self) -> &[EventLabel] {
        &self.labels
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn rate(&self) -> f64 {
        if self.duration > 0.0 {
            self.times.len() as f64 / self.duration
        } else {
            0.0
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, EventLabel)> + '_ {
        self.times.iter().copied().zip(self.labels.iter().copied())
    }

    /// Successive differences of event times.
    pub fn intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn count_label(&self, label: EventLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Keep only events for which `keep` returns true.
    pub fn filter<F: FnMut(f64, EventLabel) -> bool>(&self, mut keep: F) -> EventStream {
        let (times, labels) = self.iter().filter(|&(t, l)| keep(t, l)).unzip();
        EventStream { times, labels, duration: self.duration, seed: self.seed }
    }
}

/// Time-sorted union of streams with equal durations, preserving labels.
///
/// Coincident timestamps across streams (a measure-zero event for continuous
/// generators) are separated by moving the later copy up by one ulp.
pub fn merge_streams(streams: &[&EventStream]) -> Result<EventStream> {
    let Some(first) = streams.first() else {
        return Err(Error::InvalidParameter("merge needs at least one stream".into()));
    };
    let duration = first.duration;
    for s in streams {
        if s.duration != duration {
            return Err(Error::DurationMismatch(duration, s.duration));
        }
    }
    let mut all: Vec<(f64, usize, EventLabel)> = streams
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.iter().map(move |(t, l)| (t, k, l)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut times = Vec::with_capacity(all.len());
    let mut labels = Vec::with_capacity(all.len());
    for (t, _, l) in all {
        let t = match times.last() {
            Some(&prev) if t <= prev => next_up(prev),
            _ => t,
        };
        if t > duration {
            return Err(Error::InvalidStream("coincident events at the end of the record".into()));
        }
        times.push(t);
        labels.push(l);
    }
    Ok(EventStream { times, labels, duration, seed: None })
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}
