//! Straight-line fits in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y ~ amplitude * exp(-decay_rate * x)`, fitted as a line in `ln y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub decay_rate: f64,
    /// RMS residual of `ln y` about the fitted line.
    pub residual: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `ln y` against `x`. Points with `y <= 0` must be
/// filtered out by the caller.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    if xs.len() != ys.len() {
        return Err(Error::FitFailure("x and y lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::FitFailure(format!("need at least 2 points, got {}", xs.len())));
    }
    if let Some(bad) = ys.iter().find(|&&y| !(y > 0.0 && y.is_finite())) {
        return Err(Error::FitFailure(format!("non-positive value {bad} in log fit")));
    }
    let n = xs.len() as f64;
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = logs.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, ly) in xs.iter().zip(&logs) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (ly - y_mean);
    }
    if sxx <= 0.0 {
        return Err(Error::FitFailure("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&logs)
        .map(|(x, ly)| {
            let r = ly - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(ExponentialFit {
        amplitude: intercept.exp(),
        decay_rate: -slope,
        residual: (ss_res / n).sqrt(),
        n_points: xs.len(),
    })
}
