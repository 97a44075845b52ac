//! Bounded Ornstein-Uhlenbeck transfer-rate noise: the estimated
//! autocovariance of free paths against `D lambda exp(-lambda tau)`, and the
//! mean rate each bounding policy produces.

use fretsim::noise::{
    estimate_autocorrelation, generate_rate_path, theoretical_autocorrelation, BoundPolicy, OuParams,
};
use fretsim::rng::SeededRng;

fn main() -> fretsim::Result<()> {
    let seed = 1;
    let free = OuParams {
        baseline: 0.0,
        policy: BoundPolicy::Unbounded,
        ..OuParams::default()
    };
    let paths = (0..200)
        .map(|id| generate_rate_path(&free, &mut SeededRng::new(seed, id), 10_000))
        .collect::<fretsim::Result<Vec<_>>>()?;
    let acf = estimate_autocorrelation(&paths, 14.0)?;

    println!("{:>6} {:>10} {:>10}", "lag", "estimate", "theory");
    for (lag, est) in acf.iter().step_by(100) {
        println!("{lag:>6.2} {est:>10.4} {:>10.4}", theoretical_autocorrelation(&free, *lag));
    }

    println!();
    for policy in [BoundPolicy::RejectResample, BoundPolicy::Clip, BoundPolicy::Reflect] {
        let params = OuParams { policy, ..OuParams::default() };
        let mut total = 0.0;
        let n = 100;
        for id in 0..n {
            total += generate_rate_path(&params, &mut SeededRng::new(seed, id), 20_000)?.mean();
        }
        println!("{:>16}: mean gamma5 = {:.3}", policy.as_str(), total / n as f64);
    }
    Ok(())
}
