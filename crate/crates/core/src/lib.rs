#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and analysis toolkit for a current-biased underdamped Josephson
//! junction used as a single microwave photon detector, fed by thermal photons
//! from a resonant cavity.
//!
//! The crate is organised bottom-up:
//!
//! * [`junction`]: washboard potential, inductance, damping and the photon
//!   induced current pulse.
//! * [`escape`]: thermal activation and macroscopic quantum tunneling rates
//!   (dark counts) and switching under a bias ramp.
//! * [`source`]: thermal cavity modes, emission rates and arrival streams
//!   (Poissonian or bunched).
//! * [`detector`]: stochastic RCSJ phase dynamics and the fast event-level
//!   detector model.
//! * [`stats`]: waiting-time estimators, histograms, KS tests and Fano factors.
//! * [`ratefit`]: bounded log-space least-squares fit of rate vs temperature.
//! * [`pat`]: photon-assisted tunneling IV model and the cavity response
//!   reconstruction pipeline.
//! * [`io`]: CSV/JSON readers and writers for the exchanged data.

pub mod constants;
pub mod detector;
pub mod error;
pub mod escape;
pub mod io;
pub mod junction;
pub mod lsq;
pub mod pat;
pub mod ratefit;
pub mod seed;
pub mod source;
pub mod stats;
pub mod stream;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use junction::{BiasPoint, JunctionParams};
pub use stream::{EventLabel, EventStream};
