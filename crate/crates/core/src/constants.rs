use std::f64::consts::PI;

/// CODATA 2018 exact SI constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant (J·s).
    pub h: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Elementary charge (C).
    pub e: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Magnetic flux quantum h/2e (Wb).
    pub phi0: f64,
}

pub const H: f64 = 6.626_070_15e-34;
pub const E: f64 = 1.602_176_634e-19;
pub const K_B: f64 = 1.380_649e-23;
pub const HBAR: f64 = H / (2.0 * PI);
pub const PHI0: f64 = H / (2.0 * E);
/// Reduced flux quantum ħ/2e (Wb).
pub const PHI0_REDUCED: f64 = HBAR / (2.0 * E);

impl PhysicalConstants {
    pub const CODATA2018: PhysicalConstants = PhysicalConstants {
        h: H,
        hbar: HBAR,
        e: E,
        k_b: K_B,
        phi0: PHI0,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA2018
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_are_exact() {
        let c = PhysicalConstants::default();
        assert_eq!(c.phi0, c.h / (2.0 * c.e));
        assert_eq!(c.hbar, c.h / (2.0 * PI));
        assert!((c.phi0 - 2.067_833_848e-15).abs() < 1e-23);
    }
}
