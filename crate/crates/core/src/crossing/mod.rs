//! Energy-state statistics of single test particles.
//!
//! Each trajectory is labelled against its own starting energy: `D` when
//! `V^2 <= V_0^2` (net energy lost, boundary included) and `F` when
//! `V^2 > V_0^2`. Every trajectory starts in `D`. This module counts the
//! switches between the two states, estimates crossing frequencies and
//! recurrence, and hosts the first-hitting-time, dephasing and Kubo
//! oscillator experiments in submodules.

pub mod dephasing;
pub mod hitting;
pub mod kubo;

use std::io::Write;

use serde::Serialize;

use crate::chain::step_collision;
use crate::error::{Error, Result};
use crate::params::GasParams;
use crate::rng::{par_fold_trials, par_map_trials, std_normal, StreamFamily};
use crate::stats::{bonferroni_z, Proportion};
use crate::time_process::CollisionClock;

pub use dephasing::{dephasing_ensemble, fit_decay_rate, DecayFit, DephasingSummary};
pub use hitting::{
    hitting_time_stats, tau1_lower_bound, temperature_scaling_experiment, HittingRecord, HittingSummary,
    LambdaMode, TemperatureRow,
};
pub use kubo::{kubo_envelope, kubo_trace, KuboTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StateLabel {
    /// Net energy gained, `V^2 > V_0^2`.
    F,
    /// `V^2 <= V_0^2`.
    D,
}

impl StateLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateLabel::F => "F",
            StateLabel::D => "D",
        }
    }
}

#[inline]
pub fn classify_state(v: f64, v0: f64) -> StateLabel {
    if v * v <= v0 * v0 {
        StateLabel::D
    } else {
        StateLabel::F
    }
}

/// Running crossing counts `C_1, ..., C_n` of a label sequence starting in `D`.
pub fn crossing_number(labels: &[StateLabel]) -> Result<Vec<u64>> {
    match labels.first() {
        Some(StateLabel::D) => {}
        Some(StateLabel::F) => {
            return Err(Error::param("labels", "sequences start in state D"));
        }
        None => return Ok(Vec::new()),
    }
    let mut count = 0u64;
    Ok(labels
        .windows(2)
        .map(|w| {
            count += u64::from(w[0] != w[1]);
            count
        })
        .collect())
}

/// Crossing counts and first hitting data of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingRecord {
    pub trajectory_id: u64,
    pub c_n: Vec<u64>,
    /// First collision index in `F`; `None` if censored at `c_n.len()`.
    pub n1: Option<u64>,
}

impl CrossingRecord {
    pub fn from_path(trajectory_id: u64, path: &[f64]) -> Result<Self> {
        let v0 = *path
            .first()
            .ok_or_else(|| Error::param("path", "empty trajectory"))?;
        let labels: Vec<StateLabel> = path.iter().map(|&v| classify_state(v, v0)).collect();
        let n1 = labels.iter().position(|l| *l == StateLabel::F).map(|i| i as u64);
        Ok(CrossingRecord {
            trajectory_id,
            c_n: crossing_number(&labels)?,
            n1,
        })
    }

    /// `W_n = C_n / n` for `n = 1, ..., len`.
    pub fn w_n(&self) -> Vec<f64> {
        self.c_n
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 / (i + 1) as f64)
            .collect()
    }
}

/// Monte Carlo estimate of `E(W_n)` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingCurve {
    pub trials: usize,
    pub mean_w: Vec<f64>,
    pub se: Vec<f64>,
    /// Bonferroni z used for the simultaneous 95% bands.
    pub band_z: f64,
    /// `max_{i<j} (lo_i - hi_j)` over the bands; positive when a later band
    /// lies wholly below an earlier one.
    pub isotonic_violation: f64,
}

impl CrossingCurve {
    pub fn is_isotonic(&self) -> bool {
        self.isotonic_violation <= 0.0
    }
}

fn isotonic_violation(mean: &[f64], se: &[f64], z: f64) -> f64 {
    let mut best_lo = f64::NEG_INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for (m, s) in mean.iter().zip(se) {
        worst = worst.max(best_lo - (m + z * s));
        best_lo = best_lo.max(m - z * s);
    }
    worst
}

/// Estimates `E(W_n)` with standard errors over `trials` collision chains.
pub fn crossing_frequency_curve(
    p: &GasParams,
    n_max: usize,
    trials: usize,
    family: StreamFamily,
) -> Result<CrossingCurve> {
    if n_max == 0 || trials < 2 {
        return Err(Error::param("trials", "need n_max >= 1 and at least 2 trials"));
    }
    let c = p.c();
    let sd0 = p.sigma0_sq().sqrt();
    let sdx = p.sigmax_sq().sqrt();
    let (s1, s2) = par_fold_trials(
        trials,
        || (vec![0.0; n_max], vec![0.0; n_max]),
        |(s1, s2), i| {
            // same draw order as chain::simulate_chain
            let mut rng = family.stream(i);
            let v0 = sd0 * std_normal(&mut rng);
            let e0 = v0 * v0;
            let mut v = v0;
            let mut in_f = false;
            let mut crossings = 0u64;
            for n in 0..n_max {
                v = step_collision(v, sdx * std_normal(&mut rng), c);
                let now_f = v * v > e0;
                crossings += u64::from(now_f != in_f);
                in_f = now_f;
                let w = crossings as f64 / (n + 1) as f64;
                s1[n] += w;
                s2[n] += w * w;
            }
        },
        |(a1, a2), (b1, b2)| {
            a1.iter_mut().zip(b1).for_each(|(a, b)| *a += b);
            a2.iter_mut().zip(b2).for_each(|(a, b)| *a += b);
        },
    );
    let m = trials as f64;
    let mean_w: Vec<f64> = s1.iter().map(|s| s / m).collect();
    let se: Vec<f64> = s2
        .iter()
        .zip(&mean_w)
        .map(|(s2, mu)| (((s2 - m * mu * mu) / (m - 1.0)).max(0.0) / m).sqrt())
        .collect();
    let band_z = bonferroni_z(0.95, n_max);
    let isotonic_violation = isotonic_violation(&mean_w, &se, band_z);
    Ok(CrossingCurve {
        trials,
        mean_w,
        se,
        band_z,
        isotonic_violation,
    })
}

/// Estimates of `E(W(t))` at a sequence of times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeCrossingCurve {
    pub times: Vec<f64>,
    /// `None` when no trial has collided by that time.
    pub mean_w: Vec<Option<f64>>,
    pub se: Vec<Option<f64>>,
    /// Trials with at least one collision, per time.
    pub counted: Vec<u64>,
    /// Fraction of trials with `N(t) = 0`.
    pub zero_fraction: Vec<f64>,
    pub isotonic_violation: f64,
}

/// Estimates `E(W(t))` averaging only trials with `N(t) >= 1`.
pub fn time_crossing_frequency(
    p: &GasParams,
    times: &[f64],
    trials: usize,
    family: StreamFamily,
) -> Result<TimeCrossingCurve> {
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) || times[0] < 0.0 {
        return Err(Error::param("times", "times must be increasing and >= 0"));
    }
    let k = times.len();
    let (count, s1, s2) = par_fold_trials(
        trials,
        || (vec![0u64; k], vec![0.0; k], vec![0.0; k]),
        |(count, s1, s2), i| {
            let mut clock = CollisionClock::new(p, family, i);
            let e0 = clock.v0 * clock.v0;
            let mut in_f = false;
            let mut crossings = 0u64;
            let mut gap = clock.next_gap();
            for (j, &t) in times.iter().enumerate() {
                while clock.time + gap <= t {
                    let v = clock.collide(gap);
                    let now_f = v * v > e0;
                    crossings += u64::from(now_f != in_f);
                    in_f = now_f;
                    gap = clock.next_gap();
                }
                if clock.collisions > 0 {
                    let w = crossings as f64 / clock.collisions as f64;
                    count[j] += 1;
                    s1[j] += w;
                    s2[j] += w * w;
                }
            }
        },
        |(ac, a1, a2), (bc, b1, b2)| {
            ac.iter_mut().zip(bc).for_each(|(a, b)| *a += b);
            a1.iter_mut().zip(b1).for_each(|(a, b)| *a += b);
            a2.iter_mut().zip(b2).for_each(|(a, b)| *a += b);
        },
    );
    let mut mean_w = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    for j in 0..k {
        let m = count[j] as f64;
        if count[j] == 0 {
            mean_w.push(None);
            se.push(None);
        } else {
            let mu = s1[j] / m;
            let var = if count[j] > 1 {
                ((s2[j] - m * mu * mu) / (m - 1.0)).max(0.0)
            } else {
                0.0
            };
            mean_w.push(Some(mu));
            se.push(Some((var / m).sqrt()));
        }
    }
    let defined: Vec<(f64, f64)> = mean_w
        .iter()
        .zip(&se)
        .filter_map(|(m, s)| Some(((*m)?, (*s)?)))
        .collect();
    let (dm, ds): (Vec<f64>, Vec<f64>) = defined.into_iter().unzip();
    let isotonic = if dm.is_empty() {
        f64::NEG_INFINITY
    } else {
        isotonic_violation(&dm, &ds, bonferroni_z(0.95, dm.len()))
    };
    Ok(TimeCrossingCurve {
        times: times.to_vec(),
        mean_w,
        se,
        zero_fraction: count.iter().map(|&c| 1.0 - c as f64 / trials as f64).collect(),
        counted: count,
        isotonic_violation: isotonic,
    })
}

/// Fraction of trajectories with at least `k` crossings by `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceRow {
    pub n_max: u64,
    pub k: u64,
    pub fraction: Proportion,
}

/// Recurrence evidence at each horizon in `n_max` (nested: the same
/// trajectories are extended).
pub fn recurrence_evidence(
    p: &GasParams,
    n_max: &[u64],
    k: u64,
    trials: usize,
    family: StreamFamily,
) -> Result<Vec<RecurrenceRow>> {
    if n_max.is_empty() || n_max.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n_max", "horizons must be increasing"));
    }
    let longest = *n_max.last().unwrap();
    let c = p.c();
    let sd0 = p.sigma0_sq().sqrt();
    let sdx = p.sigmax_sq().sqrt();
    // per trial: collision index at which the k-th crossing happened
    let reached: Vec<Option<u64>> = par_map_trials(trials, |i| {
        if k == 0 {
            return Some(0);
        }
        let mut rng = family.stream(i);
        let v0 = sd0 * std_normal(&mut rng);
        let e0 = v0 * v0;
        let mut v = v0;
        let mut in_f = false;
        let mut crossings = 0u64;
        for n in 1..=longest {
            v = step_collision(v, sdx * std_normal(&mut rng), c);
            let now_f = v * v > e0;
            crossings += u64::from(now_f != in_f);
            in_f = now_f;
            if crossings >= k {
                return Some(n);
            }
        }
        None
    });
    Ok(n_max
        .iter()
        .map(|&nm| {
            let hits = reached.iter().filter(|r| r.is_some_and(|n| n <= nm)).count() as u64;
            RecurrenceRow {
                n_max: nm,
                k,
                fraction: Proportion::new(hits, trials as u64, 0.95),
            }
        })
        .collect())
}

#[derive(Serialize)]
struct CurveRow {
    n: usize,
    mean_w: f64,
    se: f64,
}

/// Writes `n,mean_w,se`.
pub fn write_crossing_curve_csv<W: Write>(curve: &CrossingCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, (&mean_w, &se)) in curve.mean_w.iter().zip(&curve.se).enumerate() {
        w.serialize(CurveRow { n: i + 1, mean_w, se })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct TimeCurveRow {
    t: f64,
    mean_w: Option<f64>,
    se: Option<f64>,
    zero_fraction: f64,
}

/// Writes `t,mean_w,se,zero_fraction`; undefined estimates are empty fields.
pub fn write_time_curve_csv<W: Write>(curve: &TimeCrossingCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for j in 0..curve.times.len() {
        w.serialize(TimeCurveRow {
            t: curve.times[j],
            mean_w: curve.mean_w[j],
            se: curve.se[j],
            zero_fraction: curve.zero_fraction[j],
        })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct RecurrenceCsvRow {
    n_max: u64,
    k: u64,
    fraction: f64,
    ci_lo: f64,
    ci_hi: f64,
}

/// Writes `n_max,k,fraction,ci_lo,ci_hi`.
pub fn write_recurrence_csv<W: Write>(rows: &[RecurrenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(RecurrenceCsvRow {
            n_max: r.n_max,
            k: r.k,
            fraction: r.fraction.estimate,
            ci_lo: r.fraction.ci_lo,
            ci_hi: r.fraction.ci_hi,
        })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use StateLabel::{D, F};

    #[test]
    fn classification_boundary() {
        assert_eq!(classify_state(1.3, 1.3), D);
        assert_eq!(classify_state(1.0, 0.0), F);
        assert_eq!(classify_state(-2.0, 2.0), D);
        assert_eq!(classify_state(-2.5, 2.0), F);
    }

    #[test]
    fn crossing_examples() {
        assert_eq!(crossing_number(&[D, D, D, D]).unwrap(), vec![0, 0, 0]);
        assert_eq!(crossing_number(&[D, F, D]).unwrap(), vec![1, 2]);
        assert!(crossing_number(&[F, D]).is_err());
        assert!(crossing_number(&[]).unwrap().is_empty());
    }

    #[test]
    fn isotonic_score() {
        let z = 2.0;
        assert!(isotonic_violation(&[0.1, 0.2, 0.3], &[0.01; 3], z) <= 0.0);
        assert!(isotonic_violation(&[0.3, 0.25, 0.31], &[0.01; 3], z) > 0.0);
        assert!(isotonic_violation(&[0.3, 0.28, 0.31], &[0.01; 3], z) <= 0.0);
    }

    #[test]
    fn record_from_path() {
        let rec = CrossingRecord::from_path(0, &[1.0, 0.5, -1.5, 0.2, 2.0]).unwrap();
        assert_eq!(rec.c_n, vec![0, 1, 2, 3]);
        assert_eq!(rec.n1, Some(2));
        assert_eq!(rec.w_n(), vec![0.0, 0.5, 2.0 / 3.0, 0.75]);
    }

    #[test]
    fn recurrence_with_zero_threshold_is_certain() {
        let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0).unwrap();
        let rows = recurrence_evidence(&p, &[10], 0, 100, StreamFamily::new(1)).unwrap();
        assert_eq!(rows[0].fraction.estimate, 1.0);
    }

    #[test]
    fn time_curve_at_zero_is_undefined() {
        let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0).unwrap();
        let curve = time_crossing_frequency(&p, &[0.0, 1e-9], 500, StreamFamily::new(2)).unwrap();
        assert_eq!(curve.mean_w[0], None);
        assert_eq!(curve.zero_fraction[0], 1.0);
        assert!(curve.zero_fraction[1] > 0.99);
    }
}
