//! Distance dependence of the transfer rate, `gamma5 = gamma1 (R0 / r)^6`,
//! and its first-order expansion around a reference distance. Distances are
//! in ångström.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForsterParams {
    /// Förster radius.
    pub r0: f64,
    pub gamma1: f64,
    /// Reference distance `r(0)` about which displacements are measured.
    pub r_ref: f64,
}

impl Default for ForsterParams {
    /// `R0 = 53 Å`, `gamma1 = 1`, and `r(0)` at which the rate equals 0.65.
    fn default() -> Self {
        Self::with_reference_rate(53.0, 1.0, 0.65)
    }
}

impl ForsterParams {
    pub fn with_reference_rate(r0: f64, gamma1: f64, gamma5_ref: f64) -> Self {
        Self {
            r0,
            gamma1,
            r_ref: r0 * (gamma1 / gamma5_ref).powf(1.0 / 6.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::invalid("forster_radius", "must be positive"));
        }
        if !(self.r_ref > 0.0 && self.r_ref.is_finite()) {
            return Err(Error::invalid("reference_distance", "must be positive"));
        }
        if !(self.gamma1 >= 0.0 && self.gamma1.is_finite()) {
            return Err(Error::invalid("gamma1", "must be non-negative"));
        }
        Ok(())
    }

    /// Rate at the reference distance.
    pub fn reference_rate(&self) -> f64 {
        self.gamma1 * (self.r0 / self.r_ref).powi(6)
    }
}

pub fn rate_from_distance(r: f64, params: &ForsterParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("r", format!("distance must be positive, got {r}")));
    }
    Ok(params.gamma1 * (params.r0 / r).powi(6))
}

pub fn distance_from_rate(gamma5: f64, params: &ForsterParams) -> Result<f64> {
    if !(gamma5 > 0.0) {
        return Err(Error::invalid("gamma5", format!("rate must be positive, got {gamma5}")));
    }
    Ok(params.r0 * (params.gamma1 / gamma5).powf(1.0 / 6.0))
}

/// Exact rate change for a displacement `x` from `r_ref`:
/// `gamma5_0 / (1 + x / r_ref)^6 - gamma5_0`.
pub fn exact_delta_gamma(x: f64, params: &ForsterParams, gamma5_0: f64) -> f64 {
    gamma5_0 / (1.0 + x / params.r_ref).powi(6) - gamma5_0
}

/// Leading-order rate change, `-6 gamma5_0 x / r_ref`.
pub fn linearized_delta_gamma(x: f64, params: &ForsterParams, gamma5_0: f64) -> f64 {
    -6.0 * gamma5_0 * x / params.r_ref
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn forster_radius_is_unit_ratio() {
        let p = ForsterParams::default();
        assert_relative_eq!(rate_from_distance(53.0, &p).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(distance_from_rate(1.0, &p).unwrap(), 53.0, max_relative = 1e-15);
        assert!(rate_from_distance(1e12, &p).unwrap() < 1e-60);
    }

    #[test]
    fn invalid_inputs() {
        let p = ForsterParams::default();
        assert!(rate_from_distance(0.0, &p).is_err());
        assert!(rate_from_distance(-2.0, &p).is_err());
        assert!(distance_from_rate(0.0, &p).is_err());
    }

    #[test]
    fn linearization_small_displacement() {
        let p = ForsterParams { r_ref: 50.0, ..ForsterParams::default() };
        assert_eq!(linearized_delta_gamma(0.0, &p, 1.0), 0.0);
        let x = 0.01 * p.r_ref;
        let lin = linearized_delta_gamma(x, &p, 1.0);
        let exact = exact_delta_gamma(x, &p, 1.0);
        assert_abs_diff_eq!(lin, -0.06, epsilon = 1e-15);
        assert!(((lin - exact) / exact).abs() < 0.04);
        assert!(lin < 0.0 && exact < 0.0);
    }

    #[test]
    fn reference_distance_round_trip() {
        let p = ForsterParams::default();
        assert_relative_eq!(p.reference_rate(), 0.65, max_relative = 1e-12);
    }
}
