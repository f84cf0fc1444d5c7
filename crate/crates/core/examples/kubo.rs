//! Kubo oscillator: a sine whose frequency wanders as a Wiener process loses
//! phase coherence with envelope exp(-sigma_w^2 t^3 / 6).
//!
//! cargo run --release --example kubo

use gasrelax::crossing::{kubo_envelope, kubo_trace};
use gasrelax::StreamFamily;

fn main() -> gasrelax::Result<()> {
    let (omega0, sigma_w) = (20.0, 3.0);
    let mut rng = StreamFamily::new(17).stream(0);
    let tr = kubo_trace(omega0, sigma_w, 1.0, 0.001, &mut rng)?;
    for k in (0..tr.times.len()).step_by(100) {
        println!("t = {:.2}  y = {:+.4}", tr.times[k], tr.y[k]);
    }

    let at = [0.25, 0.5, 0.75, 1.0];
    for (t, e) in at.iter().zip(kubo_envelope(0.0, sigma_w, &at, 0.001, 20_000, StreamFamily::new(18))?) {
        let exact = (-sigma_w * sigma_w * t * t * t / 6.0).exp();
        println!("<cos phi({t})> = {:.4} +- {:.4}  (exact {exact:.4})", e.value, e.se);
    }
    Ok(())
}
