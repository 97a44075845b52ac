//! Ensemble estimates of normalized photon correlations `g2_ij(tau)`.
//!
//! For every noise realization the populations are carried through a
//! burn-in along the rate path. At each time origin `t_k` the state is
//! collapsed on a photon from channel `j`, then the collapsed state is
//! propagated along the *same* rate path and the intensity of channel `i` is
//! read off at every delay. The numerator `<G_ij(tau)>` and the intensities
//! `<I_i>`, `<I_j>` are averaged over origins and realizations before the
//! ratio is taken; that ordering is what turns slow rate fluctuations into
//! photon bunching.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, ExponentialFit};
use crate::kinetics::{apply_emission_collapse, intensity, Channel, PopulationState, RateSet, Rk4};
use crate::noise::{generate_rate_path, OuParams, RatePath};
use crate::rng::{SeededRng, BOOTSTRAP_STREAM_BASE};

/// An ordered channel pair `(i, j)`: a photon in `conditioning` (channel `j`)
/// at `t`, followed by one in `detected` (channel `i`) at `t + tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelPair {
    pub detected: Channel,
    pub conditioning: Channel,
}

impl ChannelPair {
    pub const DD: ChannelPair = ChannelPair::new(Channel::Donor, Channel::Donor);
    pub const AA: ChannelPair = ChannelPair::new(Channel::Acceptor, Channel::Acceptor);
    pub const DA: ChannelPair = ChannelPair::new(Channel::Donor, Channel::Acceptor);
    pub const AD: ChannelPair = ChannelPair::new(Channel::Acceptor, Channel::Donor);
    /// Column order of `g2.csv`.
    pub const ALL: [ChannelPair; 4] = [Self::DD, Self::AA, Self::DA, Self::AD];

    pub const fn new(detected: Channel, conditioning: Channel) -> Self {
        Self { detected, conditioning }
    }

    /// Two-letter label, `i` then `j`, e.g. `"da"`.
    pub fn label(&self) -> String {
        [self.detected.letter(), self.conditioning.letter()].iter().collect()
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.detected.swapped(), self.conditioning.swapped())
    }
}

/// Denominator of the normalized correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `<G(tau)> / (<I_i> <I_j>)`; tends to 1 for uncorrelated emission.
    #[default]
    IntensityProduct,
    /// `<G(tau)> / <G(0)>`. Undefined (NaN) for autocorrelations, whose
    /// zero-delay numerator vanishes.
    ZeroDelay,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::IntensityProduct => "intensity_product",
            Normalization::ZeroDelay => "zero_delay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "intensity_product" => Some(Normalization::IntensityProduct),
            "zero_delay" => Some(Normalization::ZeroDelay),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    /// Time discarded before the first origin.
    pub burn_in: f64,
    pub n_origins_per_path: usize,
    pub origin_spacing: f64,
    pub tau_max: f64,
    /// Must equal the noise step.
    pub dt: f64,
    pub pairs: Vec<ChannelPair>,
    pub normalization: Normalization,
    /// Realization-level bootstrap resamples used for standard errors.
    pub n_bootstrap: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self::for_model(&OuParams::default(), &RateSet::default())
    }
}

impl EnsembleConfig {
    pub const DEFAULT_REALIZATIONS: usize = 1000;
    pub const DEFAULT_ORIGINS: usize = 10;
    pub const DEFAULT_BOOTSTRAP: usize = 100;

    /// Defaults derived from the model time scales: burn-in
    /// `10 max(tau_c, 1/gamma1)`, origins one correlation time apart, and
    /// delays up to four correlation times.
    pub fn for_model(ou: &OuParams, rates: &RateSet) -> Self {
        let tau_c = ou.correlation_time();
        Self {
            n_realizations: Self::DEFAULT_REALIZATIONS,
            burn_in: default_burn_in(tau_c, rates.gamma1),
            n_origins_per_path: Self::DEFAULT_ORIGINS,
            origin_spacing: tau_c,
            tau_max: 4.0 * tau_c,
            dt: ou.dt,
            pairs: ChannelPair::ALL.to_vec(),
            normalization: Normalization::IntensityProduct,
            n_bootstrap: Self::DEFAULT_BOOTSTRAP,
        }
    }

    /// Minimum burn-in: five times the slower of the noise correlation time
    /// and the slowest single-dye relaxation time.
    pub fn minimum_burn_in(ou: &OuParams, rates: &RateSet) -> f64 {
        5.0 * ou.correlation_time().max(1.0 / rates.slowest_relaxation_rate())
    }

    pub fn validate(&self, ou: &OuParams, rates: &RateSet) -> Result<()> {
        if self.n_realizations == 0 || self.n_realizations as u64 >= BOOTSTRAP_STREAM_BASE {
            return Err(Error::invalid("realizations", "must be at least 1"));
        }
        if self.n_origins_per_path == 0 {
            return Err(Error::invalid("origins_per_path", "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if (self.dt - ou.dt).abs() > 1e-12 * ou.dt {
            return Err(Error::invalid(
                "dt",
                format!("ensemble step {} differs from noise step {}", self.dt, ou.dt),
            ));
        }
        if !(self.tau_max.is_finite() && self.tau_max > 0.0) {
            return Err(Error::invalid("tau_max", "must be positive and finite"));
        }
        if !(self.origin_spacing >= self.dt) || !self.origin_spacing.is_finite() {
            return Err(Error::invalid("origin_spacing", "must be at least dt"));
        }
        let min_burn = Self::minimum_burn_in(ou, rates);
        if !(self.burn_in >= min_burn) || !self.burn_in.is_finite() {
            return Err(Error::invalid(
                "burn_in",
                format!("must be at least {min_burn} (5x the slowest relaxation time)"),
            ));
        }
        if self.pairs.is_empty() {
            return Err(Error::invalid("pairs", "need at least one channel pair"));
        }
        Ok(())
    }

    fn grid(&self) -> Grid {
        let steps = |t: f64| (t / self.dt).round() as usize;
        Grid {
            burn: steps(self.burn_in),
            spacing: steps(self.origin_spacing).max(1),
            n_tau: steps(self.tau_max),
            origins: self.n_origins_per_path,
        }
    }

    /// Number of rate samples one realization needs.
    pub fn required_path_len(&self) -> usize {
        self.grid().required_len()
    }

    /// Delay grid `0, dt, ..., tau_max`.
    pub fn taus(&self) -> Vec<f64> {
        (0..=self.grid().n_tau).map(|m| m as f64 * self.dt).collect()
    }
}

pub fn default_burn_in(tau_c: f64, gamma1: f64) -> f64 {
    10.0 * tau_c.max(1.0 / gamma1)
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    burn: usize,
    spacing: usize,
    n_tau: usize,
    origins: usize,
}

impl Grid {
    fn origin(&self, k: usize) -> usize {
        self.burn + k * self.spacing
    }

    fn required_len(&self) -> usize {
        self.origin(self.origins - 1) + self.n_tau
    }
}

/// Samples recorded at one time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginSample {
    /// Uncollapsed `(I_donor, I_acceptor)` at the origin.
    pub intensities: [f64; 2],
    /// `G_ij(tau)` for each configured pair, on the delay grid.
    pub numerators: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub pairs: Vec<ChannelPair>,
    pub origins: Vec<OriginSample>,
}

fn channel_index(c: Channel) -> usize {
    match c {
        Channel::Donor => 0,
        Channel::Acceptor => 1,
    }
}

/// Collapse-then-propagate samples along a single rate path.
///
/// The populations start uniform and are carried through the burn-in, so
/// at the first origin they have forgotten the start and follow the
/// path-conditional dynamics.
pub fn g2_single_path(rates: &RateSet, path: &RatePath, config: &EnsembleConfig) -> Result<PathSamples> {
    if config.pairs.is_empty() {
        return Err(Error::invalid("pairs", "need at least one channel pair"));
    }
    if config.n_origins_per_path == 0 {
        return Err(Error::invalid("origins_per_path", "must be at least 1"));
    }
    if (path.dt - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::GridMismatch(format!(
            "path step {} differs from ensemble step {}",
            path.dt, config.dt
        )));
    }
    let grid = config.grid();
    let needed = grid.required_len();
    if path.len() < needed {
        return Err(Error::invalid(
            "path",
            format!("needs {needed} samples for burn-in, origins and delays, got {}", path.len()),
        ));
    }

    let mut collapse_on = [false; 2];
    for pair in &config.pairs {
        collapse_on[channel_index(pair.conditioning)] = true;
    }

    let mut rk4 = Rk4::new(rates, config.dt)?;
    let mut state = PopulationState::UNIFORM;
    let mut pos = 0;
    let mut origins = Vec::with_capacity(grid.origins);
    // per conditioning channel: weight-scaled (I_donor, I_acceptor) along the delay grid
    let mut traces = [vec![[0.0; 2]; grid.n_tau + 1], vec![[0.0; 2]; grid.n_tau + 1]];

    for k in 0..grid.origins {
        let origin = grid.origin(k);
        while pos < origin {
            rk4.step(&mut state, path.values[pos])?;
            pos += 1;
        }
        let intensities = [
            intensity(&state, Channel::Donor),
            intensity(&state, Channel::Acceptor),
        ];

        for (slot, channel) in [Channel::Donor, Channel::Acceptor].into_iter().enumerate() {
            if !collapse_on[slot] {
                continue;
            }
            let trace = &mut traces[slot];
            let (collapsed, weight) = apply_emission_collapse(&state, channel);
            match collapsed.normalized() {
                Some(mut q) if weight > 0.0 => {
                    let record = |q: &PopulationState| {
                        [
                            weight * intensity(q, Channel::Donor),
                            weight * intensity(q, Channel::Acceptor),
                        ]
                    };
                    trace[0] = record(&q);
                    for m in 0..grid.n_tau {
                        rk4.step(&mut q, path.values[origin + m])?;
                        trace[m + 1] = record(&q);
                    }
                }
                _ => trace.iter_mut().for_each(|t| *t = [0.0; 2]),
            }
        }

        let numerators = config
            .pairs
            .iter()
            .map(|pair| {
                let trace = &traces[channel_index(pair.conditioning)];
                let i = channel_index(pair.detected);
                trace.iter().map(|t| t[i]).collect()
            })
            .collect();
        origins.push(OriginSample { intensities, numerators });
    }

    Ok(PathSamples {
        pairs: config.pairs.clone(),
        origins,
    })
}

/// Normalized correlation for one channel pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub pair: ChannelPair,
    pub taus: Vec<f64>,
    pub g2: Vec<f64>,
    /// Realization-level bootstrap standard error of each `g2` value.
    pub std_error: Vec<f64>,
    pub mean_intensity_i: f64,
    pub mean_intensity_j: f64,
    /// `n_realizations * n_origins_per_path`.
    pub n_samples: usize,
    pub n_realizations: usize,
    pub normalization: Normalization,
    pub fit: Option<ExponentialFit>,
}

impl CorrelationSeries {
    /// Index and value of the largest finite `g2`.
    pub fn peak(&self) -> (usize, f64) {
        self.g2
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best })
    }

    /// Value on the grid point nearest to `tau`.
    pub fn value_at(&self, tau: f64) -> f64 {
        self.g2[self.index_of(tau)]
    }

    pub fn index_of(&self, tau: f64) -> usize {
        let dt = if self.taus.len() > 1 { self.taus[1] - self.taus[0] } else { 1.0 };
        ((tau / dt).round().max(0.0) as usize).min(self.taus.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// One series per configured pair, in configuration order.
    pub series: Vec<CorrelationSeries>,
    /// Time average of the transfer rate over all realizations.
    pub mean_gamma5: f64,
    pub n_realizations: usize,
}

impl EnsembleResult {
    pub fn get(&self, pair: ChannelPair) -> Option<&CorrelationSeries> {
        self.series.iter().find(|s| s.pair == pair)
    }
}

/// Per-realization averages over origins.
struct RealizationSummary {
    numerators: Vec<Vec<f64>>,
    intensities: [f64; 2],
    mean_gamma5: f64,
}

fn summarize(samples: &PathSamples, mean_gamma5: f64) -> RealizationSummary {
    let n = samples.origins.len() as f64;
    let n_pairs = samples.pairs.len();
    let len = samples.origins[0].numerators[0].len();
    let mut numerators = vec![vec![0.0; len]; n_pairs];
    let mut intensities = [0.0; 2];
    for origin in &samples.origins {
        for (acc, num) in numerators.iter_mut().zip(&origin.numerators) {
            for (a, v) in acc.iter_mut().zip(num) {
                *a += v;
            }
        }
        intensities[0] += origin.intensities[0];
        intensities[1] += origin.intensities[1];
    }
    for acc in numerators.iter_mut() {
        acc.iter_mut().for_each(|a| *a /= n);
    }
    RealizationSummary {
        numerators,
        intensities: intensities.map(|v| v / n),
        mean_gamma5,
    }
}

/// Runs one realization: stream `index` of `master_seed`.
fn run_realization(
    rates: &RateSet,
    ou: &OuParams,
    config: &EnsembleConfig,
    master_seed: u64,
    index: u64,
) -> Result<RealizationSummary> {
    let mut rng = SeededRng::new(master_seed, index);
    let path = generate_rate_path(ou, &mut rng, config.required_path_len())?;
    let samples = g2_single_path(rates, &path, config)?;
    Ok(summarize(&samples, path.mean()))
}

/// Monte-Carlo estimate of `g2_ij(tau)` for every configured pair.
///
/// Realizations run on the current rayon pool. Each owns RNG stream
/// `index`, and partial results are reduced by pairwise summation in index
/// order, so the output is bit-identical for any number of workers.
pub fn g2_ensemble(
    rates: &RateSet,
    ou: &OuParams,
    config: &EnsembleConfig,
    master_seed: u64,
) -> Result<EnsembleResult> {
    rates.validate()?;
    ou.validate()?;
    config.validate(ou, rates)?;

    let outcomes: Vec<Result<RealizationSummary>> = (0..config.n_realizations as u64)
        .into_par_iter()
        .map(|index| run_realization(rates, ou, config, master_seed, index))
        .collect();
    let mut runs = Vec::with_capacity(outcomes.len());
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => runs.push(r),
            Err(source) => {
                return Err(Error::Realization {
                    index: index as u64,
                    source: Box::new(source),
                })
            }
        }
    }

    let n = runs.len();
    let taus = config.taus();
    let intensity_means = [
        pairwise_mean(&runs.iter().map(|r| r.intensities[0]).collect::<Vec<_>>()),
        pairwise_mean(&runs.iter().map(|r| r.intensities[1]).collect::<Vec<_>>()),
    ];
    let mean_gamma5 = pairwise_mean(&runs.iter().map(|r| r.mean_gamma5).collect::<Vec<_>>());

    let mut series = Vec::with_capacity(config.pairs.len());
    for (p, pair) in config.pairs.iter().enumerate() {
        let rows: Vec<&[f64]> = runs.iter().map(|r| r.numerators[p].as_slice()).collect();
        let numerator = pairwise_mean_rows(&rows);
        let ii = intensity_means[channel_index(pair.detected)];
        let ij = intensity_means[channel_index(pair.conditioning)];
        let g2 = normalize(&numerator, ii, ij, config.normalization);
        series.push(CorrelationSeries {
            pair: *pair,
            taus: taus.clone(),
            g2,
            std_error: vec![f64::NAN; taus.len()],
            mean_intensity_i: ii,
            mean_intensity_j: ij,
            n_samples: n * config.n_origins_per_path,
            n_realizations: n,
            normalization: config.normalization,
            fit: None,
        });
    }

    if config.n_bootstrap >= 2 {
        let errors = bootstrap_std_errors(&runs, config, master_seed);
        for (s, e) in series.iter_mut().zip(errors) {
            s.std_error = e;
        }
    }

    Ok(EnsembleResult {
        series,
        mean_gamma5,
        n_realizations: n,
    })
}

fn normalize(numerator: &[f64], ii: f64, ij: f64, normalization: Normalization) -> Vec<f64> {
    let denom = match normalization {
        Normalization::IntensityProduct => ii * ij,
        Normalization::ZeroDelay => numerator[0],
    };
    if denom > 0.0 {
        numerator.iter().map(|v| v / denom).collect()
    } else {
        vec![f64::NAN; numerator.len()]
    }
}

/// Standard deviation of `g2` over bootstrap resamples of whole
/// realizations. Resample `b` draws from RNG stream
/// `BOOTSTRAP_STREAM_BASE + b`.
fn bootstrap_std_errors(
    runs: &[RealizationSummary],
    config: &EnsembleConfig,
    master_seed: u64,
) -> Vec<Vec<f64>> {
    let n = runs.len();
    let n_pairs = config.pairs.len();
    let len = runs[0].numerators[0].len();

    let replicas: Vec<Vec<Vec<f64>>> = (0..config.n_bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = SeededRng::new(master_seed, BOOTSTRAP_STREAM_BASE + b);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.index(n)] += 1;
            }
            let mut intens = [0.0; 2];
            let mut nums = vec![vec![0.0; len]; n_pairs];
            for (run, &c) in runs.iter().zip(&counts) {
                if c == 0 {
                    continue;
                }
                let c = c as f64;
                intens[0] += c * run.intensities[0];
                intens[1] += c * run.intensities[1];
                for (acc, row) in nums.iter_mut().zip(&run.numerators) {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += c * v;
                    }
                }
            }
            let intens = intens.map(|v| v / n as f64);
            config
                .pairs
                .iter()
                .zip(nums)
                .map(|(pair, mut num)| {
                    num.iter_mut().for_each(|v| *v /= n as f64);
                    normalize(
                        &num,
                        intens[channel_index(pair.detected)],
                        intens[channel_index(pair.conditioning)],
                        config.normalization,
                    )
                })
                .collect()
        })
        .collect();

    let b = replicas.len() as f64;
    (0..n_pairs)
        .map(|p| {
            (0..len)
                .map(|m| {
                    let mean = replicas.iter().map(|r| r[p][m]).sum::<f64>() / b;
                    let var = replicas
                        .iter()
                        .map(|r| (r[p][m] - mean).powi(2))
                        .sum::<f64>()
                        / (b - 1.0);
                    var.sqrt()
                })
                .collect()
        })
        .collect()
}

/// Mean of `values` by fixed-order pairwise summation.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    fn sum(v: &[f64]) -> f64 {
        if v.len() <= 8 {
            v.iter().sum()
        } else {
            let (a, b) = v.split_at(v.len() / 2);
            sum(a) + sum(b)
        }
    }
    sum(values) / values.len() as f64
}

/// Elementwise mean of equal-length rows by fixed-order pairwise summation
/// over the row index.
pub fn pairwise_mean_rows(rows: &[&[f64]]) -> Vec<f64> {
    fn sum(rows: &[&[f64]]) -> Vec<f64> {
        if rows.len() <= 8 {
            let mut acc = vec![0.0; rows[0].len()];
            for row in rows {
                for (a, v) in acc.iter_mut().zip(row.iter()) {
                    *a += v;
                }
            }
            acc
        } else {
            let (a, b) = rows.split_at(rows.len() / 2);
            let mut left = sum(a);
            for (l, r) in left.iter_mut().zip(sum(b)) {
                *l += r;
            }
            left
        }
    }
    let n = rows.len() as f64;
    sum(rows).into_iter().map(|v| v / n).collect()
}

/// Fits `g2 = 1 + C exp(-lambda0 tau)` over `window` by least squares on
/// `ln(g2 - 1)`. Grid points with `g2 <= 1` carry no log and are skipped.
pub fn fit_exponential_tail(series: &CorrelationSeries, window: (f64, f64)) -> Result<ExponentialFit> {
    let (lo, hi) = window;
    let eps = 1e-9 * (hi.abs() + 1.0);
    let in_window: Vec<usize> = series
        .taus
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo - eps && t <= hi + eps)
        .map(|(k, _)| k)
        .collect();
    if in_window.len() < 10 {
        return Err(Error::invalid(
            "fit_window",
            format!("window [{lo}, {hi}] holds {} grid points, need 10", in_window.len()),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = in_window
        .iter()
        .filter_map(|&k| {
            let excess = series.g2[k] - 1.0;
            (excess > 0.0 && excess.is_finite()).then(|| (series.taus[k], excess))
        })
        .unzip();
    if xs.is_empty() {
        return Err(Error::NoBunching);
    }
    fit_exponential(&xs, &ys)
}
