//! Slow-noise limit: acceptor intensity at the two extreme transfer rates
//! and the resulting exponential bunching curve.

use fretsim::adiabatic::{bunching_amplitude, g2_acceptor_adiabatic, AdiabaticParams};

fn main() -> fretsim::Result<()> {
    let params = AdiabaticParams::default();
    params.validate()?;
    let (high, low) = params.intensities();
    println!(
        "I_H = {high:.4} (gamma5 = {}), I_L = {low:.4} (gamma5 = {}), C = {:.4}",
        params.gamma_high,
        params.gamma_low,
        bunching_amplitude(high, low)
    );
    for tau in [0.0, 1.0, 2.0, 3.5, 7.0, 14.0, 28.0] {
        println!("g2_AA({tau:>4.1}) = {:.5}", g2_acceptor_adiabatic(tau, &params));
    }
    Ok(())
}
