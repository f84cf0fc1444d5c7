//! Hotter starts take longer to reach the high-energy state.
//!
//! cargo run --release --example temperature_scaling

use gasrelax::crossing::hitting::{temperature_scaling_experiment, LambdaMode};
use gasrelax::{GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let base = GasParams::new(3.0, 1.0, 1.0, 1.0, 1.0)?;
    let ratios = [0.5, 1.0, 2.0, 4.0, 8.0];
    for mode in [LambdaMode::Fixed, LambdaMode::KineticScaled] {
        println!("{mode:?}");
        for r in temperature_scaling_experiment(&base, &ratios, mode, 10_000, 20_000, StreamFamily::new(11))? {
            println!(
                "  T_p/T_q = {:<4} lambda = {:<6.3} bound {:>8.4}  E[tau1] {:>8.4} [{:.4}, {:.4}]",
                r.ratio, r.lambda, r.bound, r.mean_tau1, r.ci_lo, r.ci_hi
            );
        }
    }
    Ok(())
}
