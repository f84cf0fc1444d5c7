//! Velocity of a test particle after `n` collisions: ensemble variance
//! against the closed form, and the approach to the equilibrium law.
//!
//! cargo run --release --example chain

use gasrelax::chain::sample_chain_at;
use gasrelax::stats::{ks_one_sample, Moments};
use gasrelax::{chain_variance, equilibrium_spec, GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0)?;
    let family = StreamFamily::new(42).derive(1);
    println!("c = {}, equilibrium variance = {:.4}", p.c(), p.equilibrium_variance());
    println!("{:>4} {:>10} {:>10} {:>8}", "n", "sample", "exact", "se");
    for n in [0usize, 1, 2, 5, 10, 50] {
        let m = Moments::from_slice(&sample_chain_at(&p, n, 200_000, family));
        println!("{n:>4} {:>10.4} {:>10.4} {:>8.4}", m.variance(), chain_variance(n as u64, &p), m.variance_std_error());
    }
    let eq = equilibrium_spec(&p);
    let ks = ks_one_sample(&sample_chain_at(&p, 60, 50_000, family.derive(2)), |v| eq.cdf(v));
    println!("KS against N(0, {:.4}) after 60 collisions: D = {:.4}, p = {:.3}", eq.variance, ks.statistic, ks.p_value);
    Ok(())
}
