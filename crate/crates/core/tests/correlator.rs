use fretsim::adiabatic::{intensity_adiabatic, AdiabaticParams};
use fretsim::correlator::{
    g2_ensemble, g2_single_path, ChannelPair, EnsembleConfig, EnsembleResult, Normalization,
};
use fretsim::kinetics::{intensity, steady_state_fixed, Channel, RateSet};
use fretsim::noise::{generate_rate_path, OuParams};
use fretsim::rng::SeededRng;
use fretsim::run::with_workers;
use fretsim::Error;

fn small_config(n: usize) -> EnsembleConfig {
    EnsembleConfig {
        n_realizations: n,
        n_origins_per_path: 4,
        tau_max: 14.0,
        n_bootstrap: 20,
        ..EnsembleConfig::default()
    }
}

fn run(rates: &RateSet, ou: &OuParams, config: &EnsembleConfig, seed: u64) -> EnsembleResult {
    g2_ensemble(rates, ou, config, seed).unwrap()
}

#[test]
fn autocorrelations_vanish_at_zero_delay() {
    let result = run(&RateSet::default(), &OuParams::default(), &small_config(8), 1);
    assert_eq!(result.get(ChannelPair::DD).unwrap().g2[0], 0.0);
    assert_eq!(result.get(ChannelPair::AA).unwrap().g2[0], 0.0);
    assert!(result.get(ChannelPair::DA).unwrap().g2[0] > 0.0);
}

#[test]
fn relabeling_dyes_swaps_channels() {
    let rates = RateSet::new(1.0, 0.6, 1.4, 0.2);
    let ou = OuParams::default();
    let config = small_config(4);
    for id in 0..4 {
        let path = generate_rate_path(&ou, &mut SeededRng::new(5, id), config.required_path_len()).unwrap();
        let a = g2_single_path(&rates, &path, &config).unwrap();
        let b = g2_single_path(&rates.swapped(), &path, &config).unwrap();
        for (k, pair) in a.pairs.iter().enumerate() {
            let mirrored = b.pairs.iter().position(|p| *p == pair.swapped()).unwrap();
            for (oa, ob) in a.origins.iter().zip(&b.origins) {
                assert!((oa.intensities[0] - ob.intensities[1]).abs() <= 1e-12 * oa.intensities[0]);
                for (x, y) in oa.numerators[k].iter().zip(&ob.numerators[mirrored]) {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{}: {x} vs {y}", pair.label());
                }
            }
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let rates = RateSet::default();
    let ou = OuParams::default();
    let config = small_config(24);
    let reference = with_workers(1, || run(&rates, &ou, &config, 42)).unwrap();
    for workers in [2, 4, 8] {
        let other = with_workers(workers, || run(&rates, &ou, &config, 42)).unwrap();
        assert_eq!(reference, other, "workers = {workers}");
    }
    let reseeded = run(&rates, &ou, &config, 43);
    assert_ne!(reference.series[1].g2, reseeded.series[1].g2);
}

#[test]
fn constant_rate_shows_no_acceptor_bunching() {
    let ou = OuParams {
        diffusion: 0.0,
        baseline: 1.0,
        ..OuParams::default()
    };
    let result = run(&RateSet::default(), &ou, &small_config(3), 9);
    let aa = result.get(ChannelPair::AA).unwrap();
    assert!(aa.g2.iter().all(|&g| g <= 1.0 + 1e-9), "peak {:?}", aa.peak());
    assert!(aa.std_error.iter().all(|&s| s < 1e-12));
    let p = steady_state_fixed(&RateSet::default(), 1.0).unwrap();
    assert!((aa.mean_intensity_i - intensity(&p, Channel::Acceptor)).abs() < 1e-9);
}

#[test]
fn zero_delay_normalization_divides_by_origin_value() {
    let config = EnsembleConfig {
        normalization: Normalization::ZeroDelay,
        ..small_config(4)
    };
    let result = run(&RateSet::default(), &OuParams::default(), &config, 3);
    assert!(result.get(ChannelPair::AA).unwrap().g2.iter().all(|g| g.is_nan()));
    let da = result.get(ChannelPair::DA).unwrap();
    assert_eq!(da.g2[0], 1.0);
}

#[test]
fn realization_failure_reports_its_index() {
    // a rejection window far narrower than one noise step can never be hit
    let ou = OuParams {
        baseline: 1.0,
        lower_bound: 1.0,
        upper_bound: 1.0 + 1e-9,
        ..OuParams::default()
    };
    let err = g2_ensemble(&RateSet::default(), &ou, &small_config(4), 1).unwrap_err();
    match &err {
        Error::Realization { index, source } => {
            assert_eq!(*index, 0);
            assert!(matches!(**source, Error::BoundsExhausted { .. }));
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn invalid_ensemble_settings_are_rejected() {
    let rates = RateSet::default();
    let ou = OuParams::default();
    let short_burn = EnsembleConfig {
        burn_in: 10.0,
        ..small_config(2)
    };
    assert!(matches!(
        g2_ensemble(&rates, &ou, &short_burn, 1),
        Err(Error::InvalidParameter { name: "burn_in", .. })
    ));
    let wrong_dt = EnsembleConfig {
        dt: 0.02,
        ..small_config(2)
    };
    assert!(g2_ensemble(&rates, &ou, &wrong_dt, 1).is_err());
    let none = EnsembleConfig {
        n_realizations: 0,
        ..small_config(2)
    };
    assert!(g2_ensemble(&rates, &ou, &none, 1).is_err());
}

#[test]
fn adiabatic_intensity_matches_weak_excitation_limit() {
    // the switching formula assumes the acceptor is never saturated, which
    // holds once excitation is slow against both emission rates
    let gamma3 = 1e-3;
    let rates = RateSet::with_acceptor_fraction(1.0, 1.0, gamma3, 0.1);
    let params = AdiabaticParams {
        gamma3,
        ..AdiabaticParams::default()
    };
    for gamma5 in [0.0, 1.0, 5.0] {
        let p = steady_state_fixed(&rates, gamma5).unwrap();
        let simulated = intensity(&p, Channel::Acceptor);
        let adiabatic = intensity_adiabatic(gamma5, &params);
        assert!(((simulated - adiabatic) / adiabatic).abs() < 0.01, "gamma5 = {gamma5}");
    }
}

#[test]
fn adiabatic_intensity_overestimates_at_saturating_excitation() {
    let rates = RateSet::default();
    let params = AdiabaticParams::default();
    let expected = [(0.0, 0.0909090909), (1.0, 0.3234323432), (5.0, 0.5138055222)];
    for (gamma5, acceptor) in expected {
        let p = steady_state_fixed(&rates, gamma5).unwrap();
        assert!((intensity(&p, Channel::Acceptor) - acceptor).abs() < 1e-9, "gamma5 = {gamma5}");
        assert!(intensity_adiabatic(gamma5, &params) >= acceptor);
    }
}
