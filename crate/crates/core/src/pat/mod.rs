//! Photon-assisted tunneling: Tien–Gordon IV model, step-current power
//! calibration and reconstruction of the cavity response from a frequency sweep.

mod bessel;
mod calibration;
mod iv;
mod response;

pub use bessel::{bessel_j, bessel_j_squared_weights};
pub use calibration::{build_calibration, Calibration};
pub use iv::{
    alpha_from_db, default_probe_voltage, extract_step_current, photon_voltage, power_db, tien_gordon_iv, DarkIvModel,
    IvCurve, IvSource, PatDrive,
};
pub use response::{
    fit_lorentzian_db, reconstruct_response, simulate_calibration, simulate_sweep, LorentzianFit, ResponseCurve,
};
