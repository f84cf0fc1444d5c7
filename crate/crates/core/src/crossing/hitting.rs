//! First hitting of the high-energy state `F`: `N_1` (collision index) and
//! `tau_1` (time), estimated with censoring at a collision cap because
//! `E(N_1)` can be infinite.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GasParams;
use crate::rng::{par_map_trials, StreamFamily};
use crate::stats::{Estimate, Moments};
use crate::time_process::CollisionClock;

/// One trial's first-hitting data; censored trials carry `n1 = cap` and the
/// time of the `cap`-th collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingRecord {
    pub trial: u64,
    pub n1: u64,
    pub tau1: f64,
    pub censored: bool,
}

/// Simulates collisions until the first entry into `F` or the cap.
pub fn first_hitting(p: &GasParams, cap: u64, family: StreamFamily, trial: u64) -> HittingRecord {
    let mut clock = CollisionClock::new(p, family, trial);
    let e0 = clock.v0 * clock.v0;
    while clock.collisions < cap {
        let (_, v) = clock.step();
        if v * v > e0 {
            return HittingRecord {
                trial,
                n1: clock.collisions,
                tau1: clock.time,
                censored: false,
            };
        }
    }
    HittingRecord {
        trial,
        n1: cap,
        tau1: clock.time,
        censored: true,
    }
}

/// Censored summary of `N_1` and `tau_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingSummary {
    pub trials: usize,
    pub cap: u64,
    pub censored_fraction: f64,
    pub capped_mean_n1: Estimate,
    pub capped_mean_tau1: Estimate,
    pub median_n1: f64,
    pub median_tau1: f64,
    pub q90_n1: f64,
    pub q90_tau1: f64,
    /// `lambda * mean(tau_1) / mean(N_1)`, both censored identically.
    pub wald_ratio: f64,
    /// Lower bound `(sigma0^2 / (lambda sigmax^2)) (1 - c^2)` on `E(tau_1)`.
    pub bound: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs `trials` first-hitting simulations capped at `cap` collisions.
pub fn hitting_time_stats(
    p: &GasParams,
    cap: u64,
    trials: usize,
    family: StreamFamily,
) -> Result<(Vec<HittingRecord>, HittingSummary)> {
    if cap == 0 {
        return Err(Error::param("cap", "censoring cap must be at least 1"));
    }
    if trials < 2 {
        return Err(Error::param("trials", "need at least 2 trials"));
    }
    let records = par_map_trials(trials, |i| first_hitting(p, cap, family, i));
    let summary = summarize(p, cap, &records);
    Ok((records, summary))
}

pub fn summarize(p: &GasParams, cap: u64, records: &[HittingRecord]) -> HittingSummary {
    let mut n_mom = Moments::default();
    let mut t_mom = Moments::default();
    for r in records {
        n_mom.push(r.n1 as f64);
        t_mom.push(r.tau1);
    }
    let mut ns: Vec<f64> = records.iter().map(|r| r.n1 as f64).collect();
    let mut ts: Vec<f64> = records.iter().map(|r| r.tau1).collect();
    ns.sort_by(f64::total_cmp);
    ts.sort_by(f64::total_cmp);
    HittingSummary {
        trials: records.len(),
        cap,
        censored_fraction: records.iter().filter(|r| r.censored).count() as f64 / records.len() as f64,
        capped_mean_n1: Estimate {
            value: n_mom.mean(),
            se: n_mom.std_error(),
        },
        capped_mean_tau1: Estimate {
            value: t_mom.mean(),
            se: t_mom.std_error(),
        },
        median_n1: quantile(&ns, 0.5),
        median_tau1: quantile(&ts, 0.5),
        q90_n1: quantile(&ns, 0.9),
        q90_tau1: quantile(&ts, 0.9),
        wald_ratio: p.lambda() * t_mom.mean() / n_mom.mean(),
        bound: tau1_lower_bound(p),
    }
}

/// `(sigma0^2 / (lambda sigmax^2)) (1 - c^2)`.
pub fn tau1_lower_bound(p: &GasParams) -> f64 {
    p.sigma0_sq() / (p.lambda() * p.sigmax_sq()) * (1.0 - p.c() * p.c())
}

/// How the collision rate responds to the initial temperature of `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    Fixed,
    /// `lambda = lambda_base / (T_p / T_q)`.
    KineticScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureRow {
    pub ratio: f64,
    pub lambda: f64,
    pub bound: f64,
    pub mean_tau1: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub censored_fraction: f64,
}

/// Sweeps `T_p / T_q = sigma0^2 / sigmax^2` over `ratios`.
pub fn temperature_scaling_experiment(
    base: &GasParams,
    ratios: &[f64],
    mode: LambdaMode,
    cap: u64,
    trials: usize,
    family: StreamFamily,
) -> Result<Vec<TemperatureRow>> {
    ratios
        .iter()
        .enumerate()
        .map(|(k, &ratio)| {
            if !(ratio > 0.0) {
                return Err(Error::param("ratios", format!("ratios must be positive, got {ratio}")));
            }
            let lambda = match mode {
                LambdaMode::Fixed => base.lambda(),
                LambdaMode::KineticScaled => base.lambda() / ratio,
            };
            let p = base
                .with_sigma0_sq(ratio * base.sigmax_sq())?
                .with_lambda(lambda)?;
            let bound = tau1_lower_bound(&p);
            if trials == 0 {
                // bound-only sweep
                return Ok(TemperatureRow {
                    ratio,
                    lambda,
                    bound,
                    mean_tau1: f64::NAN,
                    ci_lo: f64::NAN,
                    ci_hi: f64::NAN,
                    censored_fraction: f64::NAN,
                });
            }
            let (_, s) = hitting_time_stats(&p, cap, trials, family.derive(k as u64))?;
            let half = 1.96 * s.capped_mean_tau1.se;
            Ok(TemperatureRow {
                ratio,
                lambda,
                bound,
                mean_tau1: s.capped_mean_tau1.value,
                ci_lo: s.capped_mean_tau1.value - half,
                ci_hi: s.capped_mean_tau1.value + half,
                censored_fraction: s.censored_fraction,
            })
        })
        .collect()
}

/// Writes `trial,n1,tau1,censored`.
pub fn write_hitting_csv<W: Write>(records: &[HittingRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes `ratio,lambda,bound,mean_tau1,ci_lo,ci_hi,censored_fraction`.
pub fn write_temperature_csv<W: Write>(rows: &[TemperatureRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
