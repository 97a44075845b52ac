//! Slow-noise limit: the acceptor populations follow the transfer rate
//! instantaneously, and a two-level switching model gives an exponential
//! bunching tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticParams {
    pub gamma1: f64,
    pub gamma3: f64,
    /// Acceptor excitation as a fraction of `gamma3`.
    pub f: f64,
    pub gamma_high: f64,
    pub gamma_low: f64,
    pub tau_c: f64,
}

impl Default for AdiabaticParams {
    fn default() -> Self {
        Self {
            gamma1: 1.0,
            gamma3: 1.0,
            f: 0.1,
            gamma_high: 5.0,
            gamma_low: 0.0,
            tau_c: 7.0,
        }
    }
}

impl AdiabaticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_low >= 0.0 && self.gamma_high >= self.gamma_low) {
            return Err(Error::invalid("gamma_high", "need gamma_high >= gamma_low >= 0"));
        }
        if !(self.tau_c > 0.0) {
            return Err(Error::invalid("tau_c", "must be positive"));
        }
        Ok(())
    }

    /// `(I_high, I_low)` at the two extreme transfer rates.
    pub fn intensities(&self) -> (f64, f64) {
        (
            intensity_adiabatic(self.gamma_high, self),
            intensity_adiabatic(self.gamma_low, self),
        )
    }
}

/// `gamma3 (f + gamma5 / (gamma5 + gamma1))`.
pub fn intensity_adiabatic(gamma5: f64, params: &AdiabaticParams) -> f64 {
    let transferred = if gamma5.is_infinite() {
        1.0
    } else if gamma5 + params.gamma1 > 0.0 {
        gamma5 / (gamma5 + params.gamma1)
    } else {
        0.0
    };
    params.gamma3 * (params.f + transferred)
}

/// `(I_H - I_L)^2 / (I_H + I_L)^2`.
pub fn bunching_amplitude(i_high: f64, i_low: f64) -> f64 {
    let sum = i_high + i_low;
    if sum <= 0.0 {
        return 0.0;
    }
    ((i_high - i_low) / sum).powi(2)
}

/// Dual-rate acceptor autocorrelation from explicit high and low intensities:
/// `1 + C exp(-2 tau / tau_c)`.
pub fn g2_from_intensities(tau: f64, i_high: f64, i_low: f64, tau_c: f64) -> f64 {
    1.0 + bunching_amplitude(i_high, i_low) * (-2.0 * tau / tau_c).exp()
}

pub fn g2_acceptor_adiabatic(tau: f64, params: &AdiabaticParams) -> f64 {
    let (hi, lo) = params.intensities();
    g2_from_intensities(tau, hi, lo, params.tau_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn high_and_low_intensities() {
        let p = AdiabaticParams::default();
        assert_abs_diff_eq!(intensity_adiabatic(5.0, &p), 0.1 + 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(intensity_adiabatic(5.0, &p), 0.933_333_333_333, epsilon = 1e-12);
        assert_eq!(intensity_adiabatic(0.0, &p), 0.1);
        assert_abs_diff_eq!(intensity_adiabatic(f64::INFINITY, &p), 1.1, epsilon = 1e-15);
    }

    #[test]
    fn correlation_limits() {
        let p = AdiabaticParams::default();
        // (0.83 / 1.03)^2 with rounded intensities
        assert_abs_diff_eq!(g2_from_intensities(0.0, 0.93, 0.1, 7.0), 1.649_354_3, epsilon = 1e-7);
        assert_abs_diff_eq!(g2_acceptor_adiabatic(1e6, &p), 1.0, epsilon = 1e-15);
        for tau in [0.0, 1.0, 10.0] {
            assert_eq!(g2_from_intensities(tau, 0.4, 0.4, 7.0), 1.0);
        }
        assert!(p.validate().is_ok());
        assert!(AdiabaticParams { gamma_low: 6.0, ..p }.validate().is_err());
    }
}
