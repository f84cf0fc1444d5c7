//! Ensemble kinetic energy relaxes smoothly even though each particle keeps
//! switching between energy states.
//!
//! cargo run --release --example dephasing

use gasrelax::crossing::dephasing::tail_relative_fluctuation;
use gasrelax::crossing::{dephasing_ensemble, fit_decay_rate};
use gasrelax::{GasParams, StreamFamily};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 9.0, 1.0, 1.0)?;
    for m in [10usize, 1_000, 100_000] {
        let s = dephasing_ensemble(&p, m, 20.0, 0.05, 2, StreamFamily::new(13))?;
        let fit = fit_decay_rate(&s, 3.0)
            .map(|f| format!("{:.4} over {} points", f.rate, f.points))
            .unwrap_or_else(|e| format!("unavailable ({e})"));
        println!(
            "M = {m:>6}: fitted rate {fit} (exact {:.4}), tail fluctuation {:.4}",
            p.relaxation_rate(),
            tail_relative_fluctuation(&s, 10.0)
        );
        let trace: String = s.per_molecule_state_traces[0].iter().step_by(10).map(|l| l.as_str()).collect();
        println!("          particle 0: {trace}");
    }
    Ok(())
}
