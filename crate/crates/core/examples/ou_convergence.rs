//! Renormalized collision processes converge to an Ornstein-Uhlenbeck
//! process: both are driven by one Wiener path and the pathwise gap shrinks
//! as the collision rate grows.
//!
//! cargo run --release --example ou_convergence

use gasrelax::ou::{coupled_experiment, derive_ou_params, RenormalizedParams};
use gasrelax::StreamFamily;

fn main() -> gasrelax::Result<()> {
    let r = RenormalizedParams::new(0.5, vec![10.0, 100.0, 1000.0, 10000.0], 1.0, 1.0)?;
    let ou = derive_ou_params(&r)?;
    println!("theta = {:.4}, eta = {:.4}, stationary variance = {:.4}", ou.theta, ou.eta, ou.stationary_variance());

    let family = StreamFamily::new(3);
    for i in 0..r.lambda_n.len() {
        let res = coupled_experiment(&r, i, &[1.0], 2000, 0.1, family)?;
        let e = &res.exceedance[0];
        println!(
            "lambda_n = {:>7}: c_n = {:.6}, P(|V - Y| > 0.1 at t=1) = {:.3} [{:.3}, {:.3}]",
            res.lambda_n,
            r.c_n(i),
            e.estimate,
            e.ci_lo,
            e.ci_hi
        );
    }
    Ok(())
}
