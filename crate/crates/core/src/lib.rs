//! Monte-Carlo simulation of photon statistics from a FRET-coupled dye pair.
//!
//! The donor-to-acceptor transfer rate fluctuates as a bounded
//! Ornstein-Uhlenbeck process ([`noise`]). Along each noise realization the
//! four donor/acceptor populations obey a rate equation ([`kinetics`]), and
//! normalized intensity correlations `g2_ij(tau)` are estimated by
//! collapse-then-propagate ensemble averaging ([`correlator`]). Analytic
//! cross-checks live in [`adiabatic`] and [`forster`]; [`config`] and [`run`]
//! drive the `fretsim` binary.
//!
//! ```no_run
//! use fretsim::correlator::{g2_ensemble, ChannelPair, EnsembleConfig};
//! use fretsim::kinetics::RateSet;
//! use fretsim::noise::OuParams;
//!
//! let rates = RateSet::default();
//! let ou = OuParams::default();
//! let config = EnsembleConfig::for_model(&ou, &rates);
//! let result = g2_ensemble(&rates, &ou, &config, 7).unwrap();
//! let aa = result.get(ChannelPair::AA).unwrap();
//! println!("acceptor g2 peak: {:?}", aa.peak());
//! ```

pub mod adiabatic;
pub mod config;
pub mod correlator;
pub mod error;
pub mod fit;
pub mod forster;
pub mod kinetics;
pub mod noise;
pub mod output;
pub mod rng;
pub mod run;

pub use error::{Error, Result};
