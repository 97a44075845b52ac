//! End-to-end acceptance checks at the default parameter set. Each
//! test prints one `PASS`/`FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads 1` to see them.

use std::cell::Cell;
use std::sync::OnceLock;

use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use statrs::distribution::{ContinuousCDF, Normal};

use fretsim::adiabatic::{g2_acceptor_adiabatic, intensity_adiabatic, AdiabaticParams};
use fretsim::config::RunConfig;
use fretsim::correlator::{fit_exponential_tail, ChannelPair};
use fretsim::forster::{exact_delta_gamma, linearized_delta_gamma, ForsterParams};
use fretsim::kinetics::{propagate_constant, steady_state_fixed, PopulationState, RateSet};
use fretsim::noise::BoundPolicy;
use fretsim::rng::SeededRng;
use fretsim::run::{run_check_noise, run_simulate, simulate, Simulation};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn default_run() -> &'static Simulation {
    static RUN: OnceLock<Simulation> = OnceLock::new();
    RUN.get_or_init(|| simulate(&RunConfig::default()).expect("default run succeeds"))
}

#[test]
fn criterion_1_noise_fidelity() {
    let mut cfg = RunConfig::default();
    cfg.ou.diffusion = 7.0;
    cfg.ou.lambda = 1.0 / 7.0;
    cfg.ensemble.n_realizations = 1000;
    cfg.noise_steps = 10_000;
    let report_ = run_check_noise(&cfg).unwrap();
    let err = report_.max_relative_error(14.0);
    report(
        1,
        "noise fidelity",
        err < 0.05,
        format!("max relative error {err:.4} over tau in [0, 14] (limit 0.05)"),
    );
}

#[test]
fn criterion_2_constant_rate_oracle() {
    let mut rng = SeededRng::new(2024, 0);
    let mut draw = || 0.05 + 4.95 * rng.uniform_open_closed();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rates = RateSet::new(draw(), draw(), draw(), draw());
        let gamma5 = draw();
        let slowest = [rates.gamma1, rates.gamma2, rates.gamma3, rates.gamma4, gamma5]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let evolved = propagate_constant(&PopulationState::UNIFORM, &rates, gamma5, 50.0 / slowest, 0.01)
            .unwrap()
            .state;
        let fixed = steady_state_fixed(&rates, gamma5).unwrap();
        for k in 0..4 {
            worst = worst.max((evolved.0[k] - fixed.0[k]).abs());
        }
    }
    let p = steady_state_fixed(&RateSet::default(), 1.0).unwrap();
    let tabulated = [0.42079, 0.20710, 0.25579, 0.11634];
    let table_err = (0..4).map(|k| (p.0[k] - tabulated[k]).abs()).fold(0.0, f64::max);
    report(
        2,
        "constant-rate oracle",
        worst < 1e-5 && table_err < 1e-4,
        format!(
            "max |evolved - analytic| = {worst:.2e} over 100 rate sets (limit 1e-5); \
             default rates at gamma5=1 {:?}, max deviation {table_err:.1e} (limit 1e-4)",
            p.0.map(|v| (v * 1e5).round() / 1e5)
        ),
    );
}

#[test]
fn criterion_3_default_correlations() {
    let sim = default_run();
    let get = |pair| sim.ensemble.get(pair).unwrap();
    let dd0 = get(ChannelPair::DD).g2[0];
    let aa0 = get(ChannelPair::AA).g2[0];
    let aa = get(ChannelPair::AA);
    let (k, peak) = aa.peak();
    let sigma = (peak - 1.0) / aa.std_error[k];
    let decays = k > 0 && k < aa.g2.len() - 1 && aa.g2.last().unwrap() < &peak;
    let tails: Vec<(String, f64)> = sim
        .ensemble
        .series
        .iter()
        .map(|s| (s.pair.label(), s.value_at(28.0)))
        .collect();
    let tails_ok = tails.iter().all(|(_, v)| (v - 1.0).abs() <= 0.05);
    let pass = dd0 == 0.0 && aa0 == 0.0 && peak > 1.05 && sigma >= 3.0 && decays && tails_ok;
    report(
        3,
        "default-parameter correlations",
        pass,
        format!(
            "g2_DD(0) = {dd0}, g2_AA(0) = {aa0}; acceptor peak {peak:.4} at tau = {:.2} \
             ({sigma:.1} sigma, need > 1.05 and >= 3 sigma), decays after peak: {decays}; \
             g2(28): {}",
            aa.taus[k],
            tails
                .iter()
                .map(|(l, v)| format!("{l} {v:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

#[test]
fn criterion_4_bunching_is_noise_induced() {
    let mean_gamma5 = default_run().ensemble.mean_gamma5;
    let mut cfg = RunConfig::default();
    cfg.ou.diffusion = 0.0;
    cfg.ou.baseline = mean_gamma5;
    let sim = simulate(&cfg).unwrap();
    let aa = sim.ensemble.get(ChannelPair::AA).unwrap();
    let (worst, at) = aa
        .g2
        .iter()
        .zip(&aa.std_error)
        .enumerate()
        .map(|(m, (g, se))| (g - 1.0 - 3.0 * se, m))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    report(
        4,
        "bunching is noise-induced",
        worst <= 0.0,
        format!(
            "D = 0 at gamma5 = {mean_gamma5:.4}: acceptor max {:.12} (SE {:.1e}), \
             largest g2 - 1 - 3 SE = {worst:.2e} at tau = {:.2}",
            aa.peak().1,
            aa.std_error[aa.peak().0],
            aa.taus[at]
        ),
    );
}

#[test]
fn criterion_5_adiabatic_anchor() {
    let params = AdiabaticParams::default();
    let high = intensity_adiabatic(5.0, &params);
    let low = intensity_adiabatic(0.0, &params);
    let g0 = g2_acceptor_adiabatic(0.0, &params);
    let pass = (high - (0.1 + 5.0 / 6.0)).abs() < 1e-15 && low == 0.1 && (g0 - 1.6494).abs() <= 1e-3;
    report(
        5,
        "adiabatic anchor",
        pass,
        format!("I_H = {high:.10}, I_L = {low}, g2_AA(0) = {g0:.5} (target 1.6494 +- 1e-3)"),
    );
}

#[test]
fn criterion_6_tail_rate_follows_lambda() {
    let mut fits = Vec::new();
    for lambda in [1.0 / 14.0, 1.0 / 7.0, 2.0 / 7.0] {
        let mut cfg = RunConfig::default();
        cfg.ou.lambda = lambda;
        cfg.ou.diffusion = 1.0 / lambda;
        let tau_c = 1.0 / lambda;
        cfg.ensemble.burn_in = 10.0 * tau_c.max(1.0 / cfg.rates.gamma1);
        cfg.ensemble.origin_spacing = tau_c;
        cfg.ensemble.tau_max = 28.0;
        let sim = if lambda == 1.0 / 7.0 {
            default_run().clone()
        } else {
            simulate(&cfg).unwrap()
        };
        let aa = sim.ensemble.get(ChannelPair::AA).unwrap();
        let fit = fit_exponential_tail(aa, cfg.fit_window).map(|f| f.decay_rate);
        fits.push((lambda, fit));
    }
    let rates: Vec<f64> = fits.iter().map(|(_, f)| *f.as_ref().unwrap_or(&f64::NAN)).collect();
    let monotonic = rates.windows(2).all(|w| w[1] > w[0]);
    let within = fits
        .iter()
        .zip(&rates)
        .all(|((lambda, _), r)| r >= lambda && *r <= 4.0 * lambda);
    report(
        6,
        "tail rate follows lambda",
        monotonic && within,
        format!(
            "fitted lambda0 {} (must increase and lie within a factor 2 of 2*lambda)",
            fits.iter()
                .zip(&rates)
                .map(|((l, _), r)| format!("{r:.4} at lambda {l:.4} [2 lambda = {:.4}]", 2.0 * l))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

#[test]
fn criterion_7_linearization() {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 2000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (20.0..80.0f64, 0.05..5.0f64, 0.2..5.0f64, -0.02..0.02f64);
    let worst = Cell::new(0.0f64);
    let outcome = runner.run(&strategy, |(r0, gamma1, gamma5_0, ratio)| {
        let params = ForsterParams::with_reference_rate(r0, gamma1, gamma5_0);
        let x = ratio * params.r_ref;
        if x == 0.0 {
            return Ok(());
        }
        let exact = exact_delta_gamma(x, &params, gamma5_0);
        let err = ((linearized_delta_gamma(x, &params, gamma5_0) - exact) / exact).abs();
        worst.set(worst.get().max(err));
        if err < 0.10 {
            Ok(())
        } else {
            Err(TestCaseError::fail(format!("relative error {err} at |x|/r = {}", ratio.abs())))
        }
    });
    report(
        7,
        "linearization",
        outcome.is_ok(),
        match outcome {
            Ok(()) => format!("2000 random cases with |x|/r(0) <= 0.02, worst relative error {:.4} (limit 0.10)", worst.get()),
            Err(e) => e.to_string(),
        },
    );
}

#[test]
fn criterion_8_reproducible_across_workers() {
    let mut outputs = Vec::new();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (workers, dir) in [1, 4, 8].into_iter().zip(&dirs) {
        let mut cfg = RunConfig::default();
        cfg.n_workers = workers;
        cfg.output_dir = dir.path().to_path_buf();
        run_simulate(&cfg).unwrap();
        outputs.push(std::fs::read(dir.path().join("g2.csv")).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    report(
        8,
        "reproducible across workers",
        same,
        format!(
            "g2.csv with 1, 4, 8 workers: {} bytes each, identical: {same}",
            outputs[0].len()
        ),
    );
}

#[test]
fn criterion_9_mean_rate() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.ou.policy, BoundPolicy::RejectResample);
    let mean = default_run().ensemble.mean_gamma5;
    let (mu, s) = (cfg.ou.baseline, cfg.ou.stationary_std());
    let n = Normal::standard();
    let (a, b) = ((cfg.ou.lower_bound - mu) / s, (cfg.ou.upper_bound - mu) / s);
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let truncated = mu + s * (pdf(a) - pdf(b)) / (n.cdf(b) - n.cdf(a));
    report(
        9,
        "mean-rate consistency",
        (0.95..=1.15).contains(&mean),
        format!("time-averaged gamma5 = {mean:.4} (range [0.95, 1.15]; truncated-Gaussian reference {truncated:.4})"),
    );
}
