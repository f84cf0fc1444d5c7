//! First entry into the high-energy state, with censoring at a collision cap.
//!
//! cargo run --release --example hitting_times

use gasrelax::crossing::hitting_time_stats;
use gasrelax::{GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0)?;
    for cap in [100u64, 1_000, 10_000] {
        let (_, s) = hitting_time_stats(&p, cap, 50_000, StreamFamily::new(9))?;
        println!(
            "cap {cap:>6}: censored {:.4}, E[min(N1, cap)] = {:.2} +- {:.2}, median N1 = {}, \
             E[tau1] = {:.3}, Wald ratio {:.4}, bound {:.4}",
            s.censored_fraction,
            s.capped_mean_n1.value,
            s.capped_mean_n1.se,
            s.median_n1,
            s.capped_mean_tau1.value,
            s.wald_ratio,
            s.bound
        );
    }
    Ok(())
}
