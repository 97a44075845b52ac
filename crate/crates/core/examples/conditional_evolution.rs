//! What one detected photon does: collapse the stationary state on a donor
//! or acceptor emission and watch the intensities recover at a fixed
//! transfer rate.

use fretsim::kinetics::{
    apply_emission_collapse, intensity, propagate_constant, steady_state_fixed, Channel, RateSet,
};

fn main() -> fretsim::Result<()> {
    let rates = RateSet::default();
    let gamma5 = 1.0;
    let dt = 0.01;
    let p = steady_state_fixed(&rates, gamma5)?;
    for channel in [Channel::Donor, Channel::Acceptor] {
        let (collapsed, weight) = apply_emission_collapse(&p, channel);
        let start = collapsed.normalized().expect("stationary intensity is positive");
        println!("after a photon on the {channel:?} channel (probability weight {weight:.5}):");
        println!("{:>6} {:>10} {:>10}", "tau", "I_donor", "I_accept");
        for tau in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let q = propagate_constant(&start, &rates, gamma5, tau, dt)?.state;
            println!(
                "{tau:>6.2} {:>10.5} {:>10.5}",
                intensity(&q, Channel::Donor),
                intensity(&q, Channel::Acceptor)
            );
        }
        println!();
    }
    Ok(())
}
