//! All four photon correlations at the default parameters.
//!
//! `cargo run --release --example default_correlations -- [realizations] [csv]`

use std::fs::File;
use std::io::BufWriter;

use fretsim::config::RunConfig;
use fretsim::output::write_g2_csv;
use fretsim::run::simulate;

fn main() -> fretsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    if let Some(n) = args.next() {
        cfg.ensemble.n_realizations = n.parse().expect("realizations must be an integer");
    }
    let sim = simulate(&cfg)?;

    let series = &sim.ensemble.series;
    print!("{:>6}", "tau");
    for s in series {
        print!(" {:>14}", format!("g2_{}", s.pair.label()));
    }
    println!();
    for tau in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0, 28.0] {
        print!("{tau:>6.1}");
        for s in series {
            let k = s.index_of(tau);
            print!(" {:>8.4}±{:.4}", s.g2[k], s.std_error[k]);
        }
        println!();
    }
    println!("mean gamma5 = {:.4}", sim.ensemble.mean_gamma5);
    for (s, fit) in series.iter().zip(&sim.fits) {
        match fit {
            Ok(f) => println!("g2_{} tail: decay rate {:.4}", s.pair.label(), f.decay_rate),
            Err(e) => println!("g2_{} tail: {e}", s.pair.label()),
        }
    }

    if let Some(path) = args.next() {
        write_g2_csv(&sim.ensemble, BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
