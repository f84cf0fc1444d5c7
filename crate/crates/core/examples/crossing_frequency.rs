//! How often a test particle crosses between the low- and high-energy states
//! relative to its starting energy.
//!
//! cargo run --release --example crossing_frequency

use gasrelax::crossing::{crossing_frequency_curve, recurrence_evidence, time_crossing_frequency};
use gasrelax::{GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0)?;
    let family = StreamFamily::new(5);

    let curve = crossing_frequency_curve(&p, 200, 50_000, family.derive(0))?;
    for n in [1usize, 2, 5, 10, 50, 200] {
        println!("E(W_{n:<3}) = {:.4} +- {:.4}", curve.mean_w[n - 1], curve.se[n - 1]);
    }
    println!(
        "simultaneous bands increasing: {} (violation {:.4})",
        curve.is_isotonic(),
        curve.isotonic_violation
    );

    let tc = time_crossing_frequency(&p, &[0.5, 5.0, 50.0], 20_000, family.derive(1))?;
    for ((t, w), z) in tc.times.iter().zip(&tc.mean_w).zip(&tc.zero_fraction) {
        match w {
            Some(w) => println!("E(W(t = {t})) = {w:.4}  (no collision yet: {z:.3})"),
            None => println!("E(W(t = {t})) undefined"),
        }
    }

    for row in recurrence_evidence(&p, &[100, 1000, 10000], 10, 2_000, family.derive(2))? {
        println!("P(>= {} crossings by n = {}) = {:.4}", row.k, row.n_max, row.fraction.estimate);
    }
    Ok(())
}
