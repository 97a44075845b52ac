use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fretsim::config::RunConfig;
use fretsim::run::{run_adiabatic, run_check_noise, run_simulate, run_steady_state};

#[derive(Parser)]
#[command(name = "fretsim", version, about = "Photon correlations of a FRET pair with colored rate noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble g2 for all four channel pairs; writes g2.csv and summary.json.
    Simulate,
    /// Compare simulated noise autocovariance with D*lambda*exp(-lambda*tau).
    CheckNoise {
        /// Samples per noise path.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Stationary populations and intensities at a constant transfer rate.
    SteadyState {
        /// Transfer rate; defaults to the configured baseline.
        #[arg(long)]
        gamma5: Option<f64>,
    },
    /// Slow-noise acceptor correlation; writes adiabatic.csv.
    Adiabatic,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "tau-max", global = true)]
    tau_max: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    diffusion: Option<f64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "emit-paths", global = true)]
    emit_paths: bool,
    /// Normalize by the zero-delay numerator instead of the intensity product.
    #[arg(long = "literal-eq10-normalization", alias = "zero-delay-normalization", global = true)]
    zero_delay: bool,
    /// Any configuration key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        let mut push = |key: &str, value: String, flag: &str| {
            out.push((key.to_string(), value, flag.to_string()));
        };
        if let Some(v) = self.seed {
            push("seed", v.to_string(), "--seed");
        }
        if let Some(v) = self.realizations {
            push("realizations", v.to_string(), "--realizations");
        }
        if let Some(v) = self.dt {
            push("dt", v.to_string(), "--dt");
        }
        if let Some(v) = self.tau_max {
            push("tau_max", v.to_string(), "--tau-max");
        }
        if let Some(v) = self.lambda {
            push("lambda", v.to_string(), "--lambda");
        }
        if let Some(v) = self.diffusion {
            push("diffusion", v.to_string(), "--diffusion");
        }
        if let Some(v) = self.workers {
            push("workers", v.to_string(), "--workers");
        }
        if let Some(v) = &self.out {
            push("output_dir", v.display().to_string(), "--out");
        }
        if self.emit_paths {
            push("emit_paths", "true".into(), "--emit-paths");
        }
        if self.zero_delay {
            push("normalization", "zero_delay".into(), "--literal-eq10-normalization");
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').unwrap_or((kv.as_str(), ""));
            push(k.trim(), v.trim().to_string(), "--set");
        }
        out
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.common.overrides();
    if let Command::CheckNoise { steps: Some(n) } = &cli.command {
        overrides.push(("noise_steps".into(), n.to_string(), "--steps".into()));
    }
    let result = RunConfig::load(cli.common.config.as_deref(), &overrides).and_then(|cfg| {
        match cli.command {
            Command::Simulate => {
                let sim = run_simulate(&cfg)?;
                for s in &sim.ensemble.series {
                    let (k, peak) = s.peak();
                    println!(
                        "g2_{}: g2(0) = {:.6}, peak {:.6} at tau = {:.2}, g2(tau_max) = {:.6}",
                        s.pair.label(),
                        s.g2[0],
                        peak,
                        s.taus[k],
                        s.g2.last().unwrap()
                    );
                }
                println!("wrote {}", cfg.output_dir.display());
            }
            Command::CheckNoise { .. } => println!("{}", run_check_noise(&cfg)?),
            Command::SteadyState { gamma5 } => {
                println!("{}", run_steady_state(&cfg, gamma5.unwrap_or(cfg.ou.baseline))?)
            }
            Command::Adiabatic => println!("{}", run_adiabatic(&cfg)?),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
