//! Stationary populations of the four-state donor/acceptor model across
//! transfer rates, next to the adiabatic acceptor intensity.

use fretsim::adiabatic::{intensity_adiabatic, AdiabaticParams};
use fretsim::kinetics::{intensity, steady_state_fixed, Channel, RateSet};

fn main() -> fretsim::Result<()> {
    let rates = RateSet::default();
    let adiabatic = AdiabaticParams::default();
    println!(
        "{:>7} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9} {:>10}",
        "gamma5", "p00", "p01", "p10", "p11", "I_donor", "I_accept", "adiabatic"
    );
    for gamma5 in [0.0, 0.25, 0.65, 1.0, 2.0, 5.0, 20.0] {
        let p = steady_state_fixed(&rates, gamma5)?;
        println!(
            "{gamma5:>7.2} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {:>9.5} {:>9.5} {:>10.5}",
            p.p00(),
            p.p01(),
            p.p10(),
            p.p11(),
            intensity(&p, Channel::Donor),
            intensity(&p, Channel::Acceptor),
            intensity_adiabatic(gamma5, &adiabatic)
        );
    }

    // the adiabatic formula ignores acceptor saturation; it becomes exact
    // when the laser excitation is weak
    let weak = RateSet::with_acceptor_fraction(1.0, 1.0, 1e-3, 0.1);
    let weak_params = AdiabaticParams { gamma3: 1e-3, ..AdiabaticParams::default() };
    let p = steady_state_fixed(&weak, 5.0)?;
    println!(
        "\nweak excitation, gamma5 = 5: I_acceptor = {:.6e}, adiabatic = {:.6e}",
        intensity(&p, Channel::Acceptor),
        intensity_adiabatic(5.0, &weak_params)
    );
    Ok(())
}
