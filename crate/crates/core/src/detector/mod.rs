//! Two-tier detector simulation.
//!
//! The [`sde`] tier integrates the stochastic RCSJ equation for the junction
//! phase at sub-plasma-period resolution. It is used to calibrate a bias
//! point: the probability that a photon pulse switches the junction, and the
//! dark escape rate. The [`event`] tier takes those numbers and produces
//! hours-long click records (thinning, dark counts, dead time). [`sweep`]
//! combines both into switching-rate vs bias tables.

pub mod event;
pub mod sde;
pub mod sweep;

pub use event::{apply_dead_time, simulate_event_level, DetectorModel};
pub use sde::{
    estimate_escape_rate, integrate_rcsj, photon_switch_probability, Drive, PulseKind, PulseShape, SdeConfig,
    SwitchEstimate, TrajectorySummary,
};
pub use sweep::{optimal_bias, sweep_bias, BiasCalibration, CalibrationPoint, SweepRow};
