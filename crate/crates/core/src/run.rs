//! Orchestration behind the `simulate`, `check-noise`, `steady-state` and
//! `adiabatic` commands.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use crate::adiabatic::{bunching_amplitude, g2_acceptor_adiabatic, intensity_adiabatic, AdiabaticParams};
use crate::config::RunConfig;
use crate::correlator::{fit_exponential_tail, g2_ensemble, EnsembleResult};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential, ExponentialFit};
use crate::kinetics::{intensity, steady_state_fixed, Channel, PopulationState};
use crate::noise::{
    estimate_autocorrelation, generate_rate_path, theoretical_autocorrelation, BoundPolicy, OuParams,
    RatePath,
};
use crate::output::{write_adiabatic_csv, write_g2_csv, PairSummary, Summary};
use crate::rng::SeededRng;

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Adiabatic parameters matching a run: the noise bounds act as the two
/// switching rates and `f = gamma4 / gamma3`.
pub fn adiabatic_params(cfg: &RunConfig) -> AdiabaticParams {
    AdiabaticParams {
        gamma1: cfg.rates.gamma1,
        gamma3: cfg.rates.gamma3,
        f: cfg.rates.acceptor_fraction().unwrap_or(0.0),
        gamma_high: cfg.ou.upper_bound,
        gamma_low: cfg.ou.lower_bound,
        tau_c: cfg.ou.correlation_time(),
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub ensemble: EnsembleResult,
    /// Tail fit per series, or the reason it failed.
    pub fits: Vec<std::result::Result<ExponentialFit, String>>,
    pub adiabatic_g2: Vec<f64>,
}

/// Computes the ensemble correlations, tail fits and the adiabatic overlay
/// without touching the filesystem.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    cfg.validate()?;
    let mut ensemble = with_workers(cfg.n_workers, || {
        g2_ensemble(&cfg.rates, &cfg.ou, &cfg.ensemble, cfg.master_seed)
    })??;
    let mut fits = Vec::with_capacity(ensemble.series.len());
    for series in ensemble.series.iter_mut() {
        match fit_exponential_tail(series, cfg.fit_window) {
            Ok(fit) => {
                series.fit = Some(fit);
                fits.push(Ok(fit));
            }
            Err(e) => fits.push(Err(e.to_string())),
        }
    }
    let params = adiabatic_params(cfg);
    let adiabatic_g2 = cfg
        .ensemble
        .taus()
        .iter()
        .map(|&t| g2_acceptor_adiabatic(t, &params))
        .collect();
    Ok(Simulation {
        ensemble,
        fits,
        adiabatic_g2,
    })
}

/// `simulate` plus `g2.csv`, `summary.json`, and optionally `adiabatic.csv`
/// and `paths/path_<id>.csv` under the output directory.
pub fn run_simulate(cfg: &RunConfig) -> Result<Simulation> {
    let sim = simulate(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write_g2_csv(&sim.ensemble, BufWriter::new(File::create(dir.join("g2.csv"))?))?;
    if cfg.emit_adiabatic {
        write_adiabatic_csv(
            &cfg.ensemble.taus(),
            &sim.adiabatic_g2,
            BufWriter::new(File::create(dir.join("adiabatic.csv"))?),
        )?;
    }
    let summary = summarize(cfg, &sim);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if cfg.emit_paths {
        write_paths(cfg, &dir.join("paths"))?;
    }
    Ok(sim)
}

/// Regenerates each realization's rate path from its stream and dumps it.
fn write_paths(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let len = cfg.ensemble.required_path_len();
    for id in 0..cfg.ensemble.n_realizations as u64 {
        let path = generate_rate_path(&cfg.ou, &mut SeededRng::new(cfg.master_seed, id), len)?;
        path.write_csv(BufWriter::new(File::create(dir.join(format!("path_{id}.csv")))?))?;
    }
    Ok(())
}

pub fn summarize(cfg: &RunConfig, sim: &Simulation) -> Summary {
    let ens = &sim.ensemble;
    let first = &ens.series[0];
    let donor = ens
        .series
        .iter()
        .find_map(|s| match (s.pair.detected, s.pair.conditioning) {
            (Channel::Donor, _) => Some(s.mean_intensity_i),
            (_, Channel::Donor) => Some(s.mean_intensity_j),
            _ => None,
        })
        .unwrap_or(f64::NAN);
    let acceptor = ens
        .series
        .iter()
        .find_map(|s| match (s.pair.detected, s.pair.conditioning) {
            (Channel::Acceptor, _) => Some(s.mean_intensity_i),
            (_, Channel::Acceptor) => Some(s.mean_intensity_j),
            _ => None,
        })
        .unwrap_or(f64::NAN);
    let pairs = ens
        .series
        .iter()
        .zip(&sim.fits)
        .map(|(s, fit)| {
            let (k, peak) = s.peak();
            PairSummary {
                pair: s.pair.label(),
                mean_intensity_i: s.mean_intensity_i,
                mean_intensity_j: s.mean_intensity_j,
                peak_g2: peak,
                peak_tau: s.taus[k],
                g2_at_tau_max: *s.g2.last().unwrap(),
                fit: fit.as_ref().ok().copied(),
                fit_error: fit.as_ref().err().cloned(),
            }
        })
        .collect();
    let config = cfg
        .to_key_values()
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
        .collect();
    Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.master_seed,
        n_realizations: ens.n_realizations,
        n_samples: first.n_samples,
        mean_gamma5: ens.mean_gamma5,
        mean_intensity_donor: donor,
        mean_intensity_acceptor: acceptor,
        normalization: cfg.ensemble.normalization.as_str().to_string(),
        fit_window: [cfg.fit_window.0, cfg.fit_window.1],
        pairs,
        config,
    }
}

/// Comparison of simulated noise against the analytic autocovariance.
#[derive(Debug, Clone)]
pub struct NoiseReport {
    pub lambda: f64,
    pub diffusion: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    /// `(lag, estimated, theoretical)` for unbounded noise.
    pub rows: Vec<(f64, f64, f64)>,
    /// Log-linear fit of the estimate over `[0, 2 / lambda]`.
    pub decay_fit: Option<ExponentialFit>,
    pub bounded_policy: BoundPolicy,
    /// Time-averaged rate under the configured bounds and policy.
    pub bounded_mean_gamma5: f64,
}

impl NoiseReport {
    pub fn lag0(&self) -> f64 {
        self.rows[0].1
    }

    /// Largest relative deviation from theory over `lag <= max_lag`.
    pub fn max_relative_error(&self, max_lag: f64) -> f64 {
        self.rows
            .iter()
            .filter(|(lag, _, _)| *lag <= max_lag + 1e-9)
            .map(|(_, est, th)| ((est - th) / th).abs())
            .fold(0.0, f64::max)
    }
}

/// Unbounded paths for the autocovariance check plus bounded paths for the
/// mean rate, `n_realizations` of each with `noise_steps` samples.
pub fn run_check_noise(cfg: &RunConfig) -> Result<NoiseReport> {
    cfg.validate()?;
    let unbounded = OuParams {
        policy: BoundPolicy::Unbounded,
        ..cfg.ou.clone()
    };
    let n_paths = cfg.ensemble.n_realizations.max(2);
    let steps = cfg.noise_steps;
    let make = |params: &OuParams| -> Result<Vec<RatePath>> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|id| generate_rate_path(params, &mut SeededRng::new(cfg.master_seed, id), steps))
            .collect()
    };
    let (free, bounded) = with_workers(cfg.n_workers, || -> Result<_> {
        Ok((make(&unbounded)?, make(&cfg.ou)?))
    })??;

    let max_lag = (2.0 * cfg.ou.correlation_time()).min((steps - 1) as f64 * cfg.ou.dt);
    let rows: Vec<(f64, f64, f64)> = estimate_autocorrelation(&free, max_lag)?
        .into_iter()
        .map(|(lag, est)| (lag, est, theoretical_autocorrelation(&cfg.ou, lag)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|(_, est, _)| *est > 0.0)
        .map(|(lag, est, _)| (*lag, *est))
        .unzip();
    let decay_fit = fit_exponential(&xs, &ys).ok();
    let bounded_mean_gamma5 =
        crate::correlator::pairwise_mean(&bounded.iter().map(RatePath::mean).collect::<Vec<_>>());

    Ok(NoiseReport {
        lambda: cfg.ou.lambda,
        diffusion: cfg.ou.diffusion,
        n_paths,
        n_steps: steps,
        rows,
        decay_fit,
        bounded_policy: cfg.ou.policy,
        bounded_mean_gamma5,
    })
}

impl fmt::Display for NoiseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "noise check: lambda = {}, D = {}, {} paths x {} steps",
            self.lambda, self.diffusion, self.n_paths, self.n_steps
        )?;
        writeln!(
            f,
            "lag-0 autocovariance {:.6} (theory {:.6})",
            self.lag0(),
            self.rows[0].2
        )?;
        writeln!(f, "{:>10} {:>12} {:>12} {:>9}", "lag", "estimate", "theory", "rel.err")?;
        let stride = (self.rows.len() / 20).max(1);
        for (lag, est, th) in self.rows.iter().step_by(stride) {
            writeln!(f, "{lag:>10.3} {est:>12.6} {th:>12.6} {:>9.4}", (est - th) / th)?;
        }
        if let Some(fit) = &self.decay_fit {
            writeln!(
                f,
                "fitted decay rate {:.6} (lambda {:.6}), amplitude {:.6}",
                fit.decay_rate, self.lambda, fit.amplitude
            )?;
        }
        write!(
            f,
            "mean gamma5 under {} bounds: {:.6}",
            self.bounded_policy.as_str(),
            self.bounded_mean_gamma5
        )
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub gamma5: f64,
    pub state: PopulationState,
    pub donor_intensity: f64,
    pub acceptor_intensity: f64,
    pub adiabatic_acceptor_intensity: f64,
}

pub fn run_steady_state(cfg: &RunConfig, gamma5: f64) -> Result<SteadyStateReport> {
    let state = steady_state_fixed(&cfg.rates, gamma5)?;
    Ok(SteadyStateReport {
        gamma5,
        state,
        donor_intensity: intensity(&state, Channel::Donor),
        acceptor_intensity: intensity(&state, Channel::Acceptor),
        adiabatic_acceptor_intensity: intensity_adiabatic(gamma5, &adiabatic_params(cfg)),
    })
}

impl fmt::Display for SteadyStateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steady state at gamma5 = {}", self.gamma5)?;
        for (label, p) in ["p00", "p01", "p10", "p11"].iter().zip(self.state.0) {
            writeln!(f, "{label:>22} {p:.8}")?;
        }
        writeln!(f, "{:>22} {:.8}", "donor intensity", self.donor_intensity)?;
        writeln!(f, "{:>22} {:.8}", "acceptor intensity", self.acceptor_intensity)?;
        write!(f, "{:>22} {:.8}", "adiabatic acceptor", self.adiabatic_acceptor_intensity)
    }
}

#[derive(Debug, Clone)]
pub struct AdiabaticReport {
    pub params: AdiabaticParams,
    pub i_high: f64,
    pub i_low: f64,
    pub amplitude: f64,
    pub taus: Vec<f64>,
    pub g2: Vec<f64>,
}

/// Evaluates the adiabatic curve on the run's delay grid and writes
/// `adiabatic.csv`.
pub fn run_adiabatic(cfg: &RunConfig) -> Result<AdiabaticReport> {
    let params = adiabatic_params(cfg);
    params.validate()?;
    let (i_high, i_low) = params.intensities();
    let taus = cfg.ensemble.taus();
    let g2: Vec<f64> = taus.iter().map(|&t| g2_acceptor_adiabatic(t, &params)).collect();
    fs::create_dir_all(&cfg.output_dir)?;
    write_adiabatic_csv(
        &taus,
        &g2,
        BufWriter::new(File::create(cfg.output_dir.join("adiabatic.csv"))?),
    )?;
    Ok(AdiabaticReport {
        params,
        i_high,
        i_low,
        amplitude: bunching_amplitude(i_high, i_low),
        taus,
        g2,
    })
}

impl fmt::Display for AdiabaticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "I_high = {:.6} (gamma5 = {}), I_low = {:.6} (gamma5 = {})",
            self.i_high, self.params.gamma_high, self.i_low, self.params.gamma_low
        )?;
        writeln!(f, "bunching amplitude C = {:.6}, decay rate 2/tau_c = {:.6}", self.amplitude, 2.0 / self.params.tau_c)?;
        write!(f, "g2_aa(0) = {:.6}", self.g2[0])
    }
}
