//! Förster distance/rate conversion and how far the first-order expansion
//! of the rate in the displacement can be trusted.

use fretsim::forster::{
    distance_from_rate, exact_delta_gamma, linearized_delta_gamma, rate_from_distance, ForsterParams,
};

fn main() -> fretsim::Result<()> {
    let params = ForsterParams::default();
    let gamma5_0 = params.reference_rate();
    println!("R0 = {} Å, r(0) = {:.3} Å, gamma5(0) = {:.3}", params.r0, params.r_ref, gamma5_0);
    for r in [40.0, 53.0, 60.0, 80.0] {
        let g = rate_from_distance(r, &params)?;
        println!("r = {r:>5.1} Å -> gamma5 = {g:.4} -> r = {:.4} Å", distance_from_rate(g, &params)?);
    }

    println!("\n{:>8} {:>12} {:>12} {:>9}", "x/r(0)", "exact", "linear", "rel.err");
    for ratio in [-0.05, -0.02, -0.01, -0.005, 0.005, 0.01, 0.02, 0.05] {
        let x = ratio * params.r_ref;
        let exact = exact_delta_gamma(x, &params, gamma5_0);
        let lin = linearized_delta_gamma(x, &params, gamma5_0);
        println!("{ratio:>8.3} {exact:>12.6} {lin:>12.6} {:>9.4}", (lin - exact) / exact);
    }
    Ok(())
}
