//! Poisson-clocked velocity process: one trajectory, the ensemble variance at
//! several times, and the exact mixture density.
//!
//! cargo run --release --example time_process

use gasrelax::stats::Moments;
use gasrelax::time_process::{sample_time_at, simulate_time_trajectory, MixtureDensity};
use gasrelax::{time_variance, GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0)?;
    let family = StreamFamily::new(7);

    let tr = simulate_time_trajectory(&p, 2.0, family, 0)?;
    println!("trajectory 0: V(0) = {:.3}, {} collisions by t = 2", tr.v0, tr.jump_times.len());
    for t in [0.5, 1.0, 2.0] {
        println!("  V({t}) = {:.4}", tr.evaluate_at(t)?);
    }

    for t in [0.25, 1.0, 4.0] {
        let vs: Vec<f64> = sample_time_at(&p, t, 200_000, family.derive(1)).into_iter().map(|(v, _)| v).collect();
        let m = Moments::from_slice(&vs);
        println!("t = {t:<5} variance {:.4} (exact {:.4})", m.variance(), time_variance(t, &p));
    }

    let mix = MixtureDensity::new(&p, 1.0, 1e-12)?;
    println!("mixture at t = 1: {} Poisson terms, retained mass {:.3e} short of 1", mix.truncation_n + 1, 1.0 - mix.retained_mass());
    for v in [0.0, 1.0, 2.0, 4.0] {
        println!("  f({v}) = {:.6}", mix.pdf(v));
    }
    Ok(())
}
