//! Kubo oscillator with Wiener-modulated frequency: `y(t) = sin(phi(t))`,
//! `phi' = omega0 + sigma_w W(t)`.
//!
//! The phase is `omega0 * t_k + sigma_w * I_k` where `I_k` is the left-point
//! Euler sum of the Wiener path, so with `sigma_w = 0` the trace is exactly
//! `sin(omega0 * t_k)`.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{par_fold_trials, std_normal, StreamFamily};
use crate::stats::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KuboTrace {
    pub times: Vec<f64>,
    pub phase: Vec<f64>,
    pub y: Vec<f64>,
}

fn check(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon > 0.0) || !dt.is_finite() || !horizon.is_finite() {
        return Err(Error::param("dt", "step and horizon must be positive and finite"));
    }
    Ok((horizon / dt).round().max(1.0) as usize)
}

/// Simulates one trace on `t_k = k * dt`, `k = 0..=round(horizon / dt)`.
pub fn kubo_trace<R: Rng + ?Sized>(
    omega0: f64,
    sigma_w: f64,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<KuboTrace> {
    let n = check(horizon, dt)?;
    let sqrt_dt = dt.sqrt();
    let mut w = 0.0;
    let mut integral = 0.0;
    let mut times = Vec::with_capacity(n + 1);
    let mut phase = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        times.push(t);
        phase.push(omega0 * t + sigma_w * integral);
        integral += w * dt;
        w += sqrt_dt * std_normal(rng);
    }
    let y = phase.iter().map(|p| p.sin()).collect();
    Ok(KuboTrace { times, phase, y })
}

/// Ensemble mean of `cos(phi(t))` at the requested times (`omega0 = 0`
/// isolates the dephasing envelope `exp(-sigma_w^2 t^3 / 6)`).
pub fn kubo_envelope(
    omega0: f64,
    sigma_w: f64,
    at: &[f64],
    dt: f64,
    trials: usize,
    family: StreamFamily,
) -> Result<Vec<Estimate>> {
    let horizon = at.iter().copied().fold(0.0, f64::max);
    let n = check(horizon, dt)?;
    let idx: Vec<usize> = at.iter().map(|t| (t / dt).round() as usize).collect();
    let k = at.len();
    let (s1, s2) = par_fold_trials(
        trials,
        || (vec![0.0; k], vec![0.0; k]),
        |(s1, s2), i| {
            let mut rng = family.stream(i);
            let tr = kubo_trace(omega0, sigma_w, n as f64 * dt, dt, &mut rng)
                .expect("validated horizon");
            for (j, &ix) in idx.iter().enumerate() {
                let c = tr.phase[ix].cos();
                s1[j] += c;
                s2[j] += c * c;
            }
        },
        |(a1, a2), (b1, b2)| {
            a1.iter_mut().zip(b1).for_each(|(a, b)| *a += b);
            a2.iter_mut().zip(b2).for_each(|(a, b)| *a += b);
        },
    );
    let m = trials as f64;
    Ok(s1
        .iter()
        .zip(&s2)
        .map(|(s1, s2)| {
            let mu = s1 / m;
            let var = ((s2 - m * mu * mu) / (m - 1.0)).max(0.0);
            Estimate {
                value: mu,
                se: (var / m).sqrt(),
            }
        })
        .collect())
}

#[derive(Serialize)]
struct Row {
    t: f64,
    y: f64,
    trace_id: usize,
}

/// Writes `t,y,trace_id`.
pub fn write_kubo_csv<W: Write>(traces: &[KuboTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (trace_id, tr) in traces.iter().enumerate() {
        for (&t, &y) in tr.times.iter().zip(&tr.y) {
            w.serialize(Row { t, y, trace_id })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unmodulated_trace_is_a_pure_sinusoid() {
        let mut rng = StreamFamily::new(1).stream(0);
        let tr = kubo_trace(20.0, 0.0, 3.0, 1e-3, &mut rng).unwrap();
        assert_eq!(tr.times.len(), 3001);
        for (&t, &y) in tr.times.iter().zip(&tr.y) {
            assert_eq!(y, (20.0 * t).sin());
        }
    }

    #[test]
    fn pair_traces_start_together() {
        let fam = StreamFamily::new(2);
        let a = kubo_trace(20.0, 3.0, 2.0, 1e-3, &mut fam.stream(0)).unwrap();
        let b = kubo_trace(20.0, 3.0, 2.0, 1e-3, &mut fam.stream(1)).unwrap();
        assert_eq!(a.y[0], b.y[0]);
        assert!((a.y[10] - b.y[10]).abs() < 1e-2);
        let late = a.y.iter().zip(&b.y).skip(1500).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(late > 0.5);
    }
}
