//! Ensemble kinetic energy of `M` independent test particles.
//!
//! Each particle switches between `D` and `F` at its own collision times, so
//! the ensemble-mean kinetic energy shows only the smooth relaxation at rate
//! `lambda (1 - c^2)`; small ensembles keep visible fluctuations.

use std::io::Write;

use serde::Serialize;

use super::{classify_state, StateLabel};
use crate::error::{Error, Result};
use crate::params::GasParams;
use crate::rng::{par_fold_trials, StreamFamily};
use crate::stats::weighted_line_fit;
use crate::time_process::CollisionClock;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DephasingSummary {
    pub ensemble_size: usize,
    pub times: Vec<f64>,
    /// `(m_p / 2) mean_i V_i(t)^2`.
    pub mean_ke_trace: Vec<f64>,
    /// Standard error of each mean-KE value across the ensemble.
    pub se: Vec<f64>,
    pub equilibrium_ke: f64,
    /// `|mean_ke - equilibrium_ke|`.
    pub equilibration_residual: Vec<f64>,
    /// F/D step traces of the first few particles.
    pub per_molecule_state_traces: Vec<Vec<StateLabel>>,
}

/// Simulates `m` particles, sampling on `t = k * dt_sample` up to `horizon`.
pub fn dephasing_ensemble(
    p: &GasParams,
    m: usize,
    horizon: f64,
    dt_sample: f64,
    record_states: usize,
    family: StreamFamily,
) -> Result<DephasingSummary> {
    if m == 0 {
        return Err(Error::param("ensemble_size", "need at least one particle"));
    }
    if !(dt_sample > 0.0) || !(horizon > 0.0) {
        return Err(Error::param("dt_sample", "sampling step and horizon must be positive"));
    }
    let n_t = (horizon / dt_sample + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n_t).map(|k| k as f64 * dt_sample).collect();
    let record = record_states.min(m);
    let (s2, s4, traces) = par_fold_trials(
        m,
        || (vec![0.0; n_t], vec![0.0; n_t], Vec::<(u64, Vec<StateLabel>)>::new()),
        |(s2, s4, traces), i| {
            let mut clock = CollisionClock::new(p, family, i);
            let v0 = clock.v0;
            let keep = (i as usize) < record;
            let mut labels = Vec::with_capacity(if keep { n_t } else { 0 });
            let mut gap = clock.next_gap();
            for (k, &t) in times.iter().enumerate() {
                while clock.time + gap <= t {
                    clock.collide(gap);
                    gap = clock.next_gap();
                }
                let v2 = clock.velocity * clock.velocity;
                s2[k] += v2;
                s4[k] += v2 * v2;
                if keep {
                    labels.push(classify_state(clock.velocity, v0));
                }
            }
            if keep {
                traces.push((i, labels));
            }
        },
        |(a2, a4, at), (b2, b4, bt)| {
            a2.iter_mut().zip(b2).for_each(|(a, b)| *a += b);
            a4.iter_mut().zip(b4).for_each(|(a, b)| *a += b);
            at.extend(bt);
        },
    );
    let half_m = 0.5 * p.m_p();
    let mf = m as f64;
    let mean_ke_trace: Vec<f64> = s2.iter().map(|s| half_m * s / mf).collect();
    let se = s2
        .iter()
        .zip(&s4)
        .map(|(s2, s4)| {
            if m < 2 {
                return f64::NAN;
            }
            let mu = s2 / mf;
            let var = ((s4 - mf * mu * mu) / (mf - 1.0)).max(0.0);
            half_m * (var / mf).sqrt()
        })
        .collect();
    let equilibrium_ke = half_m * p.equilibrium_variance();
    let equilibration_residual = mean_ke_trace.iter().map(|k| (k - equilibrium_ke).abs()).collect();
    let mut traces = traces;
    traces.sort_by_key(|(i, _)| *i);
    Ok(DephasingSummary {
        ensemble_size: m,
        times,
        mean_ke_trace,
        se,
        equilibrium_ke,
        equilibration_residual,
        per_molecule_state_traces: traces.into_iter().map(|(_, l)| l).collect(),
    })
}

/// Exponential fit of the mean-KE residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub points: usize,
    pub window_end: f64,
}

/// Weighted least squares of `ln(residual)` against `t` over the leading
/// window where the signed residual exceeds `snr` standard errors. Weights are
/// `(residual / se)^2`, the inverse delta-method variance of the log.
pub fn fit_decay_rate(s: &DephasingSummary, snr: f64) -> Result<DecayFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for ((&t, &ke), &se) in s.times.iter().zip(&s.mean_ke_trace).zip(&s.se) {
        let r = ke - s.equilibrium_ke;
        if !(se > 0.0) || r <= snr * se {
            break;
        }
        x.push(t);
        y.push(r.ln());
        w.push((r / se).powi(2));
    }
    if x.len() < 3 {
        return Err(Error::param(
            "dephasing",
            "fewer than 3 points above the noise floor; start hotter or enlarge the ensemble",
        ));
    }
    let (a, b) = weighted_line_fit(&x, &y, &w);
    Ok(DecayFit {
        rate: -b,
        amplitude: a.exp(),
        points: x.len(),
        window_end: *x.last().unwrap(),
    })
}

/// Relative fluctuation (std / mean) of the mean-KE trace for `t >= t_from`.
pub fn tail_relative_fluctuation(s: &DephasingSummary, t_from: f64) -> f64 {
    let tail: Vec<f64> = s
        .times
        .iter()
        .zip(&s.mean_ke_trace)
        .filter(|(t, _)| **t >= t_from)
        .map(|(_, k)| *k)
        .collect();
    let m = crate::stats::Moments::from_slice(&tail);
    m.variance().sqrt() / m.mean()
}

#[derive(Serialize)]
struct Row {
    t: f64,
    mean_ke: f64,
    se: f64,
}

/// Writes `t,mean_ke,se`.
pub fn write_dephasing_csv<W: Write>(s: &DephasingSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ((&t, &mean_ke), &se) in s.times.iter().zip(&s.mean_ke_trace).zip(&s.se) {
        w.serialize(Row { t, mean_ke, se })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct StateRow {
    t: f64,
    molecule: usize,
    state: &'static str,
}

/// Writes `t,molecule,state` for the recorded per-particle traces.
pub fn write_state_traces_csv<W: Write>(s: &DephasingSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (molecule, trace) in s.per_molecule_state_traces.iter().enumerate() {
        for (&t, label) in s.times.iter().zip(trace) {
            w.serialize(StateRow {
                t,
                molecule,
                state: label.as_str(),
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
