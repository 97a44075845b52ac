//! Run configuration: built-in defaults, then a flat `key = value` file,
//! then command-line overrides. Every key must be known; values are typed
//! and the merged result is validated as a whole.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::correlator::{default_burn_in, EnsembleConfig, Normalization};
use crate::error::{Error, Result};
use crate::forster::ForsterParams;
use crate::kinetics::RateSet;
use crate::noise::{BoundPolicy, OuParams, Scheme};

pub const DEFAULT_SEED: u64 = 20_050_101;
pub const DEFAULT_NOISE_STEPS: usize = 10_000;

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "gamma1",
    "gamma2",
    "gamma3",
    "gamma4",
    "acceptor_fraction",
    "gamma5_baseline",
    "gamma5_lower",
    "gamma5_upper",
    "bound_policy",
    "lambda",
    "diffusion",
    "dt",
    "scheme",
    "realizations",
    "burn_in",
    "origins_per_path",
    "origin_spacing",
    "tau_max",
    "bootstrap_resamples",
    "normalization",
    "fit_window_lo",
    "fit_window_hi",
    "forster_radius",
    "reference_distance",
    "seed",
    "workers",
    "output_dir",
    "emit_paths",
    "emit_adiabatic",
    "noise_steps",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rates: RateSet,
    pub ou: OuParams,
    pub ensemble: EnsembleConfig,
    pub forster: ForsterParams,
    pub fit_window: (f64, f64),
    pub master_seed: u64,
    pub n_workers: usize,
    pub output_dir: PathBuf,
    pub emit_paths: bool,
    pub emit_adiabatic: bool,
    /// Path length used by the noise check.
    pub noise_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigSources::new().resolve().expect("built-in defaults are valid")
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    location: String,
}

/// Raw key/value layers awaiting resolution. Later insertions win.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    entries: BTreeMap<String, Entry>,
}

impl ConfigSources {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, location: impl Into<String>) -> Result<()> {
        let location = location.into();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                key: key.to_string(),
                location,
                reason: "unknown configuration key".into(),
            });
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.into(),
                location,
            },
        );
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn add_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let location = format!("{source}:{}", n + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    key: line.to_string(),
                    location,
                    reason: "expected `key = value`".into(),
                });
            };
            let value = value.trim().trim_matches('"');
            self.set(key.trim(), value, location)?;
        }
        Ok(())
    }

    pub fn add_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "config".into(),
            location: path.display().to_string(),
            reason: format!("cannot read file: {e}"),
        })?;
        self.add_text(&text, &path.display().to_string())
    }

    fn location(&self, key: &str) -> String {
        self.entries
            .get(key)
            .map(|e| e.location.clone())
            .unwrap_or_else(|| "default".into())
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| Error::Config {
                key: key.into(),
                location: e.location.clone(),
                reason: format!("expected {what}, got `{}`", e.value),
            }),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.parse(key, "a number")
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.parse(key, "a non-negative integer")
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.parse(key, "`true` or `false`")
    }

    fn choice<T>(&self, key: &str, options: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).ok_or_else(|| Error::Config {
                key: key.into(),
                location: e.location.clone(),
                reason: format!("expected one of {options}, got `{}`", e.value),
            }),
        }
    }

    /// Applies defaults, derives dependent values and validates.
    pub fn resolve(&self) -> Result<RunConfig> {
        let d_ou = OuParams::default();
        let gamma1 = self.float("gamma1")?.unwrap_or(1.0);
        let gamma2 = self.float("gamma2")?.unwrap_or(1.0);
        let gamma3 = self.float("gamma3")?.unwrap_or(1.0);
        let gamma4 = match (self.float("gamma4")?, self.float("acceptor_fraction")?) {
            (Some(g4), Some(f)) => {
                if (g4 - f * gamma3).abs() > 1e-12 * g4.abs().max(1.0) {
                    return Err(Error::Config {
                        key: "gamma4".into(),
                        location: self.location("gamma4"),
                        reason: format!(
                            "conflicts with acceptor_fraction * gamma3 = {} ({})",
                            f * gamma3,
                            self.location("acceptor_fraction")
                        ),
                    });
                }
                g4
            }
            (Some(g4), None) => g4,
            (None, Some(f)) => f * gamma3,
            (None, None) => 0.1 * gamma3,
        };
        let rates = RateSet::new(gamma1, gamma2, gamma3, gamma4);

        let ou = OuParams {
            lambda: self.float("lambda")?.unwrap_or(d_ou.lambda),
            diffusion: self.float("diffusion")?.unwrap_or(d_ou.diffusion),
            baseline: self.float("gamma5_baseline")?.unwrap_or(d_ou.baseline),
            lower_bound: self.float("gamma5_lower")?.unwrap_or(d_ou.lower_bound),
            upper_bound: self.float("gamma5_upper")?.unwrap_or(d_ou.upper_bound),
            policy: self
                .choice("bound_policy", "reject_resample|clip|reflect|unbounded", BoundPolicy::parse)?
                .unwrap_or(d_ou.policy),
            dt: self.float("dt")?.unwrap_or(d_ou.dt),
            scheme: self
                .choice("scheme", "exact|euler_maruyama", Scheme::parse)?
                .unwrap_or(d_ou.scheme),
        };
        let tau_c = 1.0 / ou.lambda;

        let defaults = EnsembleConfig::for_model(&ou, &rates);
        let ensemble = EnsembleConfig {
            n_realizations: self.count("realizations")?.unwrap_or(defaults.n_realizations),
            burn_in: self.float("burn_in")?.unwrap_or(default_burn_in(tau_c, gamma1)),
            n_origins_per_path: self.count("origins_per_path")?.unwrap_or(defaults.n_origins_per_path),
            origin_spacing: self.float("origin_spacing")?.unwrap_or(tau_c),
            tau_max: self.float("tau_max")?.unwrap_or(4.0 * tau_c),
            dt: ou.dt,
            pairs: defaults.pairs,
            normalization: self
                .choice("normalization", "intensity_product|zero_delay", Normalization::parse)?
                .unwrap_or_default(),
            n_bootstrap: self.count("bootstrap_resamples")?.unwrap_or(defaults.n_bootstrap),
        };

        let r0 = self.float("forster_radius")?.unwrap_or(53.0);
        let r_ref = match self.float("reference_distance")? {
            Some(r) => r,
            None if ou.baseline > 0.0 && gamma1 > 0.0 => {
                ForsterParams::with_reference_rate(r0, gamma1, ou.baseline).r_ref
            }
            None => r0,
        };
        let forster = ForsterParams { r0, gamma1, r_ref };

        let fit_window = (
            self.float("fit_window_lo")?.unwrap_or(2.0),
            self.float("fit_window_hi")?.unwrap_or(25.0f64.min(ensemble.tau_max)),
        );

        let seed = self.parse::<u64>("seed", "an unsigned 64-bit integer")?.unwrap_or(DEFAULT_SEED);
        let workers = self
            .count("workers")?
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

        let cfg = RunConfig {
            rates,
            ou,
            ensemble,
            forster,
            fit_window,
            master_seed: seed,
            n_workers: workers,
            output_dir: self
                .raw("output_dir")
                .map(|e| PathBuf::from(&e.value))
                .unwrap_or_else(|| PathBuf::from("out")),
            emit_paths: self.flag("emit_paths")?.unwrap_or(false),
            emit_adiabatic: self.flag("emit_adiabatic")?.unwrap_or(true),
            noise_steps: self.count("noise_steps")?.unwrap_or(DEFAULT_NOISE_STEPS),
        };
        cfg.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::Config {
                key: name.to_string(),
                location: self.location(name),
                reason,
            },
            other => other,
        })?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// Defaults < optional file < overrides `(key, value, location)`.
    pub fn load(file: Option<&Path>, overrides: &[(String, String, String)]) -> Result<Self> {
        let mut sources = ConfigSources::new();
        if let Some(path) = file {
            sources.add_file(path)?;
        }
        for (key, value, location) in overrides {
            sources.set(key, value.clone(), location.clone())?;
        }
        sources.resolve()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sources = ConfigSources::new();
        sources.add_text(text, "<text>")?;
        sources.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.ou.validate()?;
        self.ensemble.validate(&self.ou, &self.rates)?;
        self.forster.validate()?;
        if self.n_workers == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        if self.noise_steps < 2 {
            return Err(Error::invalid("noise_steps", "must be at least 2"));
        }
        if !(self.fit_window.0 < self.fit_window.1) {
            return Err(Error::invalid("fit_window_hi", "must exceed fit_window_lo"));
        }
        Ok(())
    }

    /// Resolved configuration as `(key, value)` text pairs. Feeding these
    /// back through the parser reproduces this configuration.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let r = &self.rates;
        let o = &self.ou;
        let e = &self.ensemble;
        vec![
            ("gamma1", r.gamma1.to_string()),
            ("gamma2", r.gamma2.to_string()),
            ("gamma3", r.gamma3.to_string()),
            ("gamma4", r.gamma4.to_string()),
            ("gamma5_baseline", o.baseline.to_string()),
            ("gamma5_lower", o.lower_bound.to_string()),
            ("gamma5_upper", o.upper_bound.to_string()),
            ("bound_policy", o.policy.as_str().to_string()),
            ("lambda", o.lambda.to_string()),
            ("diffusion", o.diffusion.to_string()),
            ("dt", o.dt.to_string()),
            ("scheme", o.scheme.as_str().to_string()),
            ("realizations", e.n_realizations.to_string()),
            ("burn_in", e.burn_in.to_string()),
            ("origins_per_path", e.n_origins_per_path.to_string()),
            ("origin_spacing", e.origin_spacing.to_string()),
            ("tau_max", e.tau_max.to_string()),
            ("bootstrap_resamples", e.n_bootstrap.to_string()),
            ("normalization", e.normalization.as_str().to_string()),
            ("fit_window_lo", self.fit_window.0.to_string()),
            ("fit_window_hi", self.fit_window.1.to_string()),
            ("forster_radius", self.forster.r0.to_string()),
            ("reference_distance", self.forster.r_ref.to_string()),
            ("seed", self.master_seed.to_string()),
            ("workers", self.n_workers.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("emit_paths", self.emit_paths.to_string()),
            ("emit_adiabatic", self.emit_adiabatic.to_string()),
            ("noise_steps", self.noise_steps.to_string()),
        ]
    }

    pub fn to_config_text(&self) -> String {
        self.to_key_values()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
