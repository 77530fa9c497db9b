use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bias ratio {0} leaves no potential barrier (need 0 <= i < 1)")]
    NoBarrier(f64),

    #[error("junction inductance diverges: |I| = {current:e} A >= I_c = {critical:e} A")]
    InductanceDivergence { current: f64, critical: f64 },

    #[error("integrator unstable at tau = {time}: energy blew up without switching; reduce the timestep")]
    UnstableTimestep { time: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("event streams have different durations ({0} s vs {1} s)")]
    DurationMismatch(f64, f64),

    #[error("invalid event stream: {0}")]
    InvalidStream(String),

    #[error("no crossing of mode contributions in the search interval")]
    NoCrossing,

    #[error("mode contributions are identical at every temperature")]
    DegenerateCrossing,

    #[error("input is not monotone: {0}")]
    NonMonotone(String),

    #[error("value {value} is outside the calibrated range [{lo}, {hi}]")]
    OutOfCalibrationRange { value: f64, lo: f64, hi: f64 },

    #[error("dark IV curve does not cover voltage {0:e} V")]
    InsufficientSupport(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
