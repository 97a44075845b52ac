//! Bounded Ornstein-Uhlenbeck fluctuations of the transfer rate.
//!
//! The rate is `gamma5(t) = baseline + xi(t)` where `xi` obeys
//! `d xi/dt = -lambda xi + lambda eta(t)` with white noise of strength `2D`.
//! The stationary law of `xi` is `N(0, D lambda)` and its autocovariance is
//! `D lambda exp(-lambda |tau|)`.

use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::format_sig9;
use crate::rng::SeededRng;

/// Consecutive rejected draws after which `RejectResample` gives up.
pub const MAX_REDRAWS: usize = 10_000;

/// How samples outside `[lower_bound, upper_bound]` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundPolicy {
    /// Redraw the Gaussian increment until the new rate is in range.
    RejectResample,
    /// Saturate the emitted rate at the violated bound. The underlying
    /// fluctuation keeps evolving unbounded.
    Clip,
    /// Mirror the emitted rate back into the interval. The underlying
    /// fluctuation keeps evolving unbounded.
    Reflect,
    /// Ignore the bounds. Only meaningful for noise diagnostics, since the
    /// resulting rate may be negative.
    Unbounded,
}

impl BoundPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundPolicy::RejectResample => "reject_resample",
            BoundPolicy::Clip => "clip",
            BoundPolicy::Reflect => "reflect",
            BoundPolicy::Unbounded => "unbounded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reject_resample" => Some(BoundPolicy::RejectResample),
            "clip" => Some(BoundPolicy::Clip),
            "reflect" => Some(BoundPolicy::Reflect),
            "unbounded" => Some(BoundPolicy::Unbounded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Exact,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euler_maruyama" => Some(Scheme::EulerMaruyama),
            "exact" => Some(Scheme::Exact),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Inverse correlation time.
    pub lambda: f64,
    /// Noise amplitude `D`; the stationary variance is `D * lambda`.
    pub diffusion: f64,
    pub baseline: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub policy: BoundPolicy,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for OuParams {
    /// Correlation time 7, `D = 7`, baseline 0.65, rate confined to `[0, 5]`.
    fn default() -> Self {
        Self {
            lambda: 1.0 / 7.0,
            diffusion: 7.0,
            baseline: 0.65,
            lower_bound: 0.0,
            upper_bound: 5.0,
            policy: BoundPolicy::RejectResample,
            dt: 0.01,
            scheme: Scheme::Exact,
        }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive and finite"));
        }
        if !(self.diffusion.is_finite() && self.diffusion >= 0.0) {
            return Err(Error::invalid("diffusion", "must be non-negative and finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !self.baseline.is_finite() {
            return Err(Error::invalid("gamma5_baseline", "must be finite"));
        }
        if self.scheme == Scheme::EulerMaruyama && self.lambda * self.dt >= 1.0 {
            return Err(Error::invalid(
                "dt",
                format!(
                    "Euler-Maruyama is unstable for dt >= 1/lambda ({} >= {})",
                    self.dt,
                    1.0 / self.lambda
                ),
            ));
        }
        if !self.stationary_variance().is_finite() {
            return Err(Error::invalid("diffusion", "stationary variance overflows"));
        }
        if self.policy != BoundPolicy::Unbounded {
            if !(self.lower_bound >= 0.0) {
                return Err(Error::invalid("gamma5_lower", "must be >= 0"));
            }
            if !(self.baseline >= self.lower_bound) {
                return Err(Error::invalid(
                    "gamma5_baseline",
                    format!("must lie in [{}, {}]", self.lower_bound, self.upper_bound),
                ));
            }
            if !(self.upper_bound >= self.baseline) {
                return Err(Error::invalid(
                    "gamma5_upper",
                    format!("must be >= baseline {}", self.baseline),
                ));
            }
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> f64 {
        self.diffusion * self.lambda
    }

    pub fn stationary_std(&self) -> f64 {
        self.stationary_variance().sqrt()
    }

    pub fn correlation_time(&self) -> f64 {
        1.0 / self.lambda
    }
}

/// Precomputed one-step update `xi' = decay * xi + scale * z`.
#[derive(Debug, Clone, Copy)]
pub struct OuStepper {
    decay: f64,
    scale: f64,
}

impl OuStepper {
    pub fn new(params: &OuParams) -> Result<Self> {
        params.validate()?;
        let (lambda, d, dt) = (params.lambda, params.diffusion, params.dt);
        let (decay, scale) = match params.scheme {
            Scheme::EulerMaruyama => (1.0 - lambda * dt, lambda * (2.0 * d * dt).sqrt()),
            Scheme::Exact => {
                let decay = (-lambda * dt).exp();
                // 1 - exp(-2 lambda dt), accurate for small arguments
                let one_minus = -(-2.0 * lambda * dt).exp_m1();
                (decay, (d * lambda * one_minus).sqrt())
            }
        };
        Ok(Self { decay, scale })
    }

    #[inline]
    pub fn step(&self, xi: f64, z: f64) -> f64 {
        self.decay * xi + self.scale * z
    }
}

/// Single OU update for state `xi` and standard normal deviate `z`.
pub fn ou_step(xi: f64, params: &OuParams, z: f64) -> Result<f64> {
    Ok(OuStepper::new(params)?.step(xi, z))
}

/// `D lambda exp(-lambda lag)`.
pub fn theoretical_autocorrelation(params: &OuParams, lag: f64) -> f64 {
    params.stationary_variance() * (-params.lambda * lag.abs()).exp()
}

/// A rate trajectory sampled on a uniform grid. `values[n]` is the rate at
/// `t0 + n dt` and is held constant over `[t_n, t_n + dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl RatePath {
    pub fn constant(value: f64, dt: f64, len: usize) -> Self {
        Self {
            t0: 0.0,
            dt,
            values: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Writes `t,gamma5` rows with nine significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,gamma5")?;
        for (n, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", format_sig9(self.time(n)), format_sig9(*v))?;
        }
        Ok(())
    }
}

struct Bounder {
    baseline: f64,
    lower: f64,
    upper: f64,
    policy: BoundPolicy,
}

impl Bounder {
    fn new(params: &OuParams) -> Self {
        Self {
            baseline: params.baseline,
            lower: params.lower_bound,
            upper: params.upper_bound,
            policy: params.policy,
        }
    }

    /// Draws a candidate with `propose(z)` and brings the resulting rate into
    /// range. Returns the new state `xi` and the emitted rate; only
    /// `RejectResample` alters the state itself.
    fn draw(
        &self,
        rng: &mut SeededRng,
        propose: impl Fn(f64) -> f64,
    ) -> Result<(f64, f64)> {
        match self.policy {
            BoundPolicy::Unbounded => {
                let xi = propose(rng.standard_gaussian());
                Ok((xi, self.baseline + xi))
            }
            BoundPolicy::RejectResample => {
                for _ in 0..MAX_REDRAWS {
                    let xi = propose(rng.standard_gaussian());
                    let rate = self.baseline + xi;
                    if rate >= self.lower && rate <= self.upper {
                        return Ok((xi, rate));
                    }
                }
                Err(Error::BoundsExhausted {
                    lower: self.lower,
                    upper: self.upper,
                    attempts: MAX_REDRAWS,
                })
            }
            BoundPolicy::Clip => {
                let xi = propose(rng.standard_gaussian());
                Ok((xi, (self.baseline + xi).clamp(self.lower, self.upper)))
            }
            BoundPolicy::Reflect => {
                let xi = propose(rng.standard_gaussian());
                Ok((xi, reflect_into(self.baseline + xi, self.lower, self.upper)))
            }
        }
    }
}

/// Folds `x` into `[lo, hi]` by repeated mirroring at the endpoints.
fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let period = 2.0 * width;
    let mut y = (x - lo).rem_euclid(period);
    if y > width {
        y = period - y;
    }
    (lo + y).clamp(lo, hi)
}

/// Generates `n_steps` bounded rate samples. The initial fluctuation is drawn
/// from the stationary law `N(0, D lambda)`, then bounded like every other
/// sample.
pub fn generate_rate_path(params: &OuParams, rng: &mut SeededRng, n_steps: usize) -> Result<RatePath> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    let stepper = OuStepper::new(params)?;
    let bounder = Bounder::new(params);
    let sigma = params.stationary_std();

    let mut values = Vec::with_capacity(n_steps);
    let (mut xi, rate) = bounder.draw(rng, |z| sigma * z)?;
    values.push(rate);
    for _ in 1..n_steps {
        let prev = xi;
        let (next, rate) = bounder.draw(rng, |z| stepper.step(prev, z))?;
        xi = next;
        values.push(rate);
    }
    Ok(RatePath {
        t0: 0.0,
        dt: params.dt,
        values,
    })
}

/// Ensemble- and time-averaged autocovariance of the fluctuation around the
/// grand mean of all samples, at every grid lag in `[0, max_lag]`.
///
/// Returns `(lag, covariance)` pairs. Lag products are accumulated per path
/// with a zero-padded FFT, so cost is `O(paths * len * log len)`.
pub fn estimate_autocorrelation(paths: &[RatePath], max_lag: f64) -> Result<Vec<(f64, f64)>> {
    if paths.len() < 2 {
        return Err(Error::invalid("paths", "need at least two paths"));
    }
    let first = &paths[0];
    for (k, p) in paths.iter().enumerate().skip(1) {
        if p.dt != first.dt || p.len() != first.len() || p.t0 != first.t0 {
            return Err(Error::GridMismatch(format!(
                "path {k} has (t0, dt, len) = ({}, {}, {}), expected ({}, {}, {})",
                p.t0,
                p.dt,
                p.len(),
                first.t0,
                first.dt,
                first.len()
            )));
        }
    }
    if !(max_lag >= 0.0) {
        return Err(Error::invalid("max_lag", "must be non-negative"));
    }
    let len = first.len();
    let max_k = ((max_lag / first.dt).round() as usize).min(len - 1);

    let total: f64 = paths.iter().flat_map(|p| p.values.iter()).sum();
    let mean = total / (paths.len() * len) as f64;

    let fft_len = (len + max_k + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(fft_len);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(fft_len);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let mut sums = vec![0.0; max_k + 1];

    for path in paths {
        for (slot, v) in buf.iter_mut().zip(path.values.iter()) {
            *slot = Complex::new(v - mean, 0.0);
        }
        for slot in buf[len..].iter_mut() {
            *slot = Complex::new(0.0, 0.0);
        }
        forward.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        inverse.process(&mut buf);
        for (k, s) in sums.iter_mut().enumerate() {
            *s += buf[k].re / fft_len as f64;
        }
    }

    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let count = (paths.len() * (len - k)) as f64;
            (k as f64 * first.dt, s / count)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unbounded() -> OuParams {
        OuParams {
            baseline: 0.0,
            policy: BoundPolicy::Unbounded,
            ..OuParams::default()
        }
    }

    #[test]
    fn fixed_point_at_zero() {
        for scheme in [Scheme::Exact, Scheme::EulerMaruyama] {
            let p = OuParams { scheme, ..OuParams::default() };
            assert_eq!(ou_step(0.0, &p, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn exact_step_decorrelates_for_large_lambda_dt() {
        let p = OuParams { dt: 1e4, ..OuParams::default() };
        let stepper = OuStepper::new(&p).unwrap();
        // the memory of xi is gone and the noise scale is the stationary one
        assert_abs_diff_eq!(stepper.step(123.0, 0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stepper.step(0.0, 1.0), p.stationary_std(), epsilon = 1e-12);
    }

    #[test]
    fn euler_rejects_large_step() {
        let p = OuParams {
            scheme: Scheme::EulerMaruyama,
            dt: 7.0,
            ..OuParams::default()
        };
        assert!(matches!(ou_step(0.0, &p, 0.0), Err(Error::InvalidParameter { name: "dt", .. })));
        let p = OuParams { dt: 6.9, ..p };
        assert!(ou_step(0.0, &p, 0.0).is_ok());
    }

    #[test]
    fn exact_long_run_variance() {
        let p = unbounded();
        let stepper = OuStepper::new(&p).unwrap();
        let mut rng = SeededRng::new(11, 0);
        // thin to near-independent samples: lambda * 0.01 * 700 = 1
        let p_thin = OuParams { dt: 7.0, ..p.clone() };
        let thin = OuStepper::new(&p_thin).unwrap();
        let mut xi = 0.0;
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            xi = thin.step(xi, rng.standard_gaussian());
            s += xi;
            s2 += xi * xi;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
        // and at the fine step the one-step variance matches 1 - e^{-2 lambda dt}
        let z_scale = stepper.step(0.0, 1.0);
        assert_abs_diff_eq!(z_scale * z_scale, 1.0 - (-2.0 * p.lambda * p.dt).exp(), epsilon = 1e-15);
    }

    #[test]
    fn zero_noise_is_constant() {
        let p = OuParams { diffusion: 0.0, ..OuParams::default() };
        let path = generate_rate_path(&p, &mut SeededRng::new(1, 1), 500).unwrap();
        assert!(path.values.iter().all(|&v| v == 0.65));
    }

    #[test]
    fn bounds_hold_for_every_policy() {
        for policy in [BoundPolicy::RejectResample, BoundPolicy::Clip, BoundPolicy::Reflect] {
            let p = OuParams { policy, ..OuParams::default() };
            let path = generate_rate_path(&p, &mut SeededRng::new(5, 2), 50_000).unwrap();
            assert!(
                path.values.iter().all(|&v| (0.0..=5.0).contains(&v)),
                "{policy:?} escaped bounds"
            );
        }
    }

    #[test]
    fn reject_resample_gives_up() {
        // bounds far outside the reachable range for a noiseless step
        let p = OuParams {
            diffusion: 1e-12,
            baseline: 1.0,
            lower_bound: 1.0,
            upper_bound: 1.0 + 1e-300,
            ..OuParams::default()
        };
        let err = generate_rate_path(&p, &mut SeededRng::new(1, 1), 10).unwrap_err();
        assert!(matches!(err, Error::BoundsExhausted { attempts: MAX_REDRAWS, .. }));
    }

    #[test]
    fn reflect_folds() {
        assert_abs_diff_eq!(reflect_into(5.5, 0.0, 5.0), 4.5);
        assert_abs_diff_eq!(reflect_into(-0.25, 0.0, 5.0), 0.25);
        assert_abs_diff_eq!(reflect_into(12.0, 0.0, 5.0), 2.0);
        assert_eq!(reflect_into(3.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn validation_errors_name_the_field() {
        let p = OuParams { baseline: -1.0, ..OuParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "gamma5_baseline", .. })));
        let p = OuParams { lambda: 0.0, ..OuParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "lambda", .. })));
        assert!(generate_rate_path(&OuParams::default(), &mut SeededRng::new(0, 0), 0).is_err());
    }

    #[test]
    fn theoretical_values() {
        let p = OuParams::default();
        assert_abs_diff_eq!(theoretical_autocorrelation(&p, 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            theoretical_autocorrelation(&p, 7.0),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(theoretical_autocorrelation(&p, f64::INFINITY), 0.0);
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let p = unbounded();
        let paths: Vec<RatePath> = (0..4)
            .map(|k| generate_rate_path(&p, &mut SeededRng::new(3, k), 300).unwrap())
            .collect();
        let est = estimate_autocorrelation(&paths, 0.5).unwrap();
        assert_eq!(est.len(), 51);
        let n = (paths.len() * 300) as f64;
        let mean: f64 = paths.iter().flat_map(|p| &p.values).sum::<f64>() / n;
        for (k, &(lag, value)) in est.iter().enumerate() {
            assert_abs_diff_eq!(lag, k as f64 * 0.01, epsilon = 1e-12);
            let mut direct = 0.0;
            for path in &paths {
                for i in 0..300 - k {
                    direct += (path.values[i] - mean) * (path.values[i + k] - mean);
                }
            }
            direct /= (paths.len() * (300 - k)) as f64;
            assert_abs_diff_eq!(value, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn autocorrelation_of_constant_paths_vanishes() {
        let paths = vec![RatePath::constant(0.65, 0.01, 1000); 3];
        for (_, v) in estimate_autocorrelation(&paths, 1.0).unwrap() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn autocorrelation_rejects_bad_input() {
        let a = RatePath::constant(1.0, 0.01, 100);
        let b = RatePath::constant(1.0, 0.02, 100);
        assert!(matches!(
            estimate_autocorrelation(&[a.clone(), b], 0.1),
            Err(Error::GridMismatch(_))
        ));
        assert!(estimate_autocorrelation(&[a], 0.1).is_err());
    }

    #[test]
    fn csv_dump_format() {
        let path = RatePath { t0: 0.0, dt: 0.01, values: vec![0.65, 1.0] };
        let mut out = Vec::new();
        path.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,gamma5\n0.00000000,0.650000000\n0.0100000000,1.00000000\n"
        );
    }
}
