//! Heavy-particle limit of the collision model and its Ornstein–Uhlenbeck
//! limit.
//!
//! Along a schedule of collision rates `lambda_n`, the restitution coefficient
//! is tied to the rate by `c_n = alpha^(1/lambda_n)` and bath impulses are Wiener
//! increments scaled by `sigma_x0`. As `lambda_n` grows the jump process
//! approaches the OU process `dY = -theta Y dt + eta dW` with
//! `theta = -ln(alpha)` and `eta = sigma_x0`. The coupled-pair experiment
//! drives both processes with one Wiener path and measures `|V^n(t) - Y(t)|`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{restitution_coefficient, GasParams};
use crate::rng::{exponential, par_map_trials, std_normal, StreamFamily};
use crate::stats::Proportion;

/// Renormalized parameter family indexed by the rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormalizedParams {
    pub alpha: f64,
    pub lambda_n: Vec<f64>,
    pub sigma_x0: f64,
    pub sigma0_sq: f64,
}

impl RenormalizedParams {
    pub fn new(alpha: f64, lambda_n: Vec<f64>, sigma_x0: f64, sigma0_sq: f64) -> Result<Self> {
        let r = RenormalizedParams {
            alpha,
            lambda_n,
            sigma_x0,
            sigma0_sq,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.lambda_n.is_empty() {
            return Err(Error::param("lambda_n", "schedule is empty"));
        }
        if self.lambda_n.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::param("lambda_n", "rates must be positive and finite"));
        }
        if self.lambda_n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("lambda_n", "rates must be strictly increasing"));
        }
        if !(self.sigma_x0 >= 0.0) || !(self.sigma0_sq >= 0.0) {
            return Err(Error::param("sigma_x0", "scales must be non-negative"));
        }
        Ok(())
    }

    /// Restitution coefficient at schedule index `i`.
    pub fn c_n(&self, i: usize) -> f64 {
        self.alpha.powf(1.0 / self.lambda_n[i])
    }

    /// Variance of one bath impulse, `sigma_x0^2 / lambda_n`.
    pub fn impulse_variance(&self, i: usize) -> f64 {
        self.sigma_x0 * self.sigma_x0 / self.lambda_n[i]
    }

    /// Collision-model parameters at index `i` (requires positive variances).
    pub fn gas_params(&self, i: usize) -> Result<GasParams> {
        GasParams::with_restitution(
            self.c_n(i),
            self.sigma0_sq,
            self.impulse_variance(i),
            self.lambda_n[i],
        )
    }
}

/// Friction and diffusion coefficients of the limiting OU process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub theta: f64,
    pub eta: f64,
}

impl OUParams {
    pub fn stationary_variance(&self) -> f64 {
        self.eta * self.eta / (2.0 * self.theta)
    }

    /// `Var Y(t)` when `Y(0) ~ N(0, sigma0_sq)`.
    pub fn marginal_variance(&self, t: f64, sigma0_sq: f64) -> f64 {
        let decay = (-2.0 * self.theta * t).exp();
        sigma0_sq * decay + self.stationary_variance() * -(-2.0 * self.theta * t).exp_m1()
    }
}

pub fn derive_ou_params(r: &RenormalizedParams) -> Result<OUParams> {
    r.validate()?;
    Ok(OUParams {
        theta: -r.alpha.ln(),
        eta: r.sigma_x0,
    })
}

/// Friction coefficient `-lambda ln((m_p - m_q)/(m_p + m_q))` of a finite-mass gas.
pub fn friction_interpretation(m_p: f64, m_q: f64, lambda: f64) -> Result<f64> {
    let c = restitution_coefficient(m_p, m_q)?;
    if c == 0.0 {
        return Err(Error::param("m_p", "equal masses give c = 0 and an infinite friction coefficient"));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(-lambda * c.ln())
}

/// Samples `Y` at `times` with the exact Gaussian transition, starting from
/// `Y(0) = v0`.
pub fn simulate_ou_exact<R: Rng + ?Sized>(ou: &OUParams, v0: f64, times: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_times(times)?;
    let mut y = v0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - prev;
        if dt > 0.0 {
            let decay = (-ou.theta * dt).exp();
            let var = ou.stationary_variance() * -(-2.0 * ou.theta * dt).exp_m1();
            y = y * decay + var.sqrt() * std_normal(rng);
        }
        out.push(y);
        prev = t;
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first().is_some_and(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "evaluation times must be non-decreasing and >= 0"));
    }
    Ok(())
}

/// One coupled realization of the jump process and the OU process.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSample {
    pub v0: f64,
    pub first_jump: f64,
    pub jump_values: Vec<f64>,
    pub ou_values: Vec<f64>,
}

impl CoupledSample {
    pub fn abs_errors(&self) -> Vec<f64> {
        self.jump_values
            .iter()
            .zip(&self.ou_values)
            .map(|(v, y)| (v - y).abs())
            .collect()
    }
}

/// Builds one Wiener path and drives both processes with it.
///
/// The merged partition is the union of the Poisson(lambda_n) jump times, a
/// uniform mesh `1/(10 lambda_n)` and the evaluation times. The OU path takes
/// an Euler step over every sub-interval. The jump process applies
/// `c_n V + sigma_x0 (W(U_k) - W(U_{k-1}))` at its `k`-th jump.
pub fn simulate_coupled_pair(
    r: &RenormalizedParams,
    n_index: usize,
    t_eval: &[f64],
    family: StreamFamily,
    trial: u64,
) -> Result<CoupledSample> {
    let ou = derive_ou_params(r)?;
    check_times(t_eval)?;
    if n_index >= r.lambda_n.len() {
        return Err(Error::param("n_index", format!("index {n_index} beyond schedule")));
    }
    let lambda = r.lambda_n[n_index];
    let c = r.c_n(n_index);
    let mesh = 1.0 / (10.0 * lambda);
    let mut rng = family.stream(trial);

    let v0 = r.sigma0_sq.sqrt() * std_normal(&mut rng);
    let mut v = v0;
    let mut y = v0;
    let mut t = 0.0;
    let mut dw_since_jump = 0.0;
    let mut next_jump = exponential(&mut rng, lambda);
    let first_jump = next_jump;
    let mut grid_k = 1u64;
    let mut jump_values = Vec::with_capacity(t_eval.len());
    let mut ou_values = Vec::with_capacity(t_eval.len());

    for &target in t_eval {
        while t < target {
            let next_grid = grid_k as f64 * mesh;
            let next = next_grid.min(next_jump).min(target);
            let dt = next - t;
            let dw = dt.sqrt() * std_normal(&mut rng);
            y += -ou.theta * y * dt + ou.eta * dw;
            dw_since_jump += dw;
            t = next;
            if next == next_grid {
                grid_k += 1;
            }
            if next == next_jump {
                v = c * v + r.sigma_x0 * dw_since_jump;
                dw_since_jump = 0.0;
                next_jump += exponential(&mut rng, lambda);
            }
        }
        jump_values.push(v);
        ou_values.push(y);
    }
    Ok(CoupledSample {
        v0,
        first_jump,
        jump_values,
        ou_values,
    })
}

/// Coupled-path errors at one schedule index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPathResult {
    pub lambda_n: f64,
    pub t_eval: Vec<f64>,
    /// `abs_errors[trial][time]`.
    pub abs_errors: Vec<Vec<f64>>,
    /// Fraction of trials with error above `epsilon`, per time.
    pub exceedance: Vec<Proportion>,
    pub epsilon: f64,
}

pub fn coupled_experiment(
    r: &RenormalizedParams,
    n_index: usize,
    t_eval: &[f64],
    trials: usize,
    epsilon: f64,
    family: StreamFamily,
) -> Result<CoupledPathResult> {
    let fam = family.derive(n_index as u64);
    let samples = par_map_trials(trials, |i| simulate_coupled_pair(r, n_index, t_eval, fam, i));
    let abs_errors = samples
        .into_iter()
        .map(|s| s.map(|s| s.abs_errors()))
        .collect::<Result<Vec<_>>>()?;
    let exceedance = (0..t_eval.len())
        .map(|j| {
            let hits = abs_errors.iter().filter(|e| e[j] > epsilon).count() as u64;
            Proportion::new(hits, trials as u64, 0.95)
        })
        .collect();
    Ok(CoupledPathResult {
        lambda_n: r.lambda_n[n_index],
        t_eval: t_eval.to_vec(),
        abs_errors,
        exceedance,
        epsilon,
    })
}

#[derive(Serialize)]
struct ErrorRow {
    lambda_n: f64,
    t: f64,
    trial: usize,
    abs_error: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    lambda_n: f64,
    t: f64,
    exceedance: f64,
    ci_lo: f64,
    ci_hi: f64,
}

/// Writes `lambda_n,t,trial,abs_error` rows.
pub fn write_errors_csv<W: Write>(results: &[CoupledPathResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        for (trial, errs) in res.abs_errors.iter().enumerate() {
            for (&t, &abs_error) in res.t_eval.iter().zip(errs) {
                w.serialize(ErrorRow {
                    lambda_n: res.lambda_n,
                    t,
                    trial,
                    abs_error,
                })?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes `lambda_n,t,exceedance,ci_lo,ci_hi` rows.
pub fn write_summary_csv<W: Write>(results: &[CoupledPathResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        for (&t, p) in res.t_eval.iter().zip(&res.exceedance) {
            w.serialize(SummaryRow {
                lambda_n: res.lambda_n,
                t,
                exceedance: p.estimate,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
