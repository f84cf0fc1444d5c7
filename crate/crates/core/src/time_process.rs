//! The Poisson-clocked velocity process `V(t) = V_{N(t)}` and its exact
//! Poisson–Gaussian mixture density.

use std::io::Write;

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::chain::step_collision;
use crate::error::{Error, Result};
use crate::params::{chain_variance, normal_cdf, normal_pdf, GasParams};
use crate::rng::{exponential, std_normal, StreamFamily, StreamRng};

/// Sequential generator of collisions: each step draws an exponential gap
/// followed by a bath impulse.
#[derive(Debug, Clone)]
pub struct CollisionClock {
    rng: StreamRng,
    c: f64,
    sdx: f64,
    lambda: f64,
    pub v0: f64,
    pub time: f64,
    pub velocity: f64,
    pub collisions: u64,
}

impl CollisionClock {
    /// Starts a clock on stream `index`; draws `V_0` first.
    pub fn new(p: &GasParams, family: StreamFamily, index: u64) -> Self {
        let mut rng = family.stream(index);
        let v0 = p.sigma0_sq().sqrt() * std_normal(&mut rng);
        CollisionClock {
            rng,
            c: p.c(),
            sdx: p.sigmax_sq().sqrt(),
            lambda: p.lambda(),
            v0,
            time: 0.0,
            velocity: v0,
            collisions: 0,
        }
    }

    /// Draws the next inter-arrival gap without applying it.
    pub fn next_gap(&mut self) -> f64 {
        exponential(&mut self.rng, self.lambda)
    }

    /// Applies a collision after `gap`, returning the new velocity.
    pub fn collide(&mut self, gap: f64) -> f64 {
        let x = self.sdx * std_normal(&mut self.rng);
        self.time += gap;
        self.velocity = step_collision(self.velocity, x, self.c);
        self.collisions += 1;
        self.velocity
    }

    /// One full step: gap then impulse.
    pub fn step(&mut self) -> (f64, f64) {
        let gap = self.next_gap();
        let v = self.collide(gap);
        (gap, v)
    }

    pub fn rng_mut(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Realization of `V(t)` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrajectory {
    pub id: u64,
    pub v0: f64,
    /// Strictly increasing jump times in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// Post-collision velocities aligned with `jump_times`.
    pub velocities: Vec<f64>,
    pub horizon: f64,
}

impl TimeTrajectory {
    /// Number of collisions in `[0, t]`.
    pub fn jumps_by(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&u| u <= t)
    }

    /// Right-continuous value at `t`.
    pub fn evaluate_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(match self.jumps_by(t) {
            0 => self.v0,
            k => self.velocities[k - 1],
        })
    }
}

/// Simulates `V(t)` up to `horizon`. The gap that overshoots the horizon is
/// drawn and discarded.
pub fn simulate_time_trajectory(
    p: &GasParams,
    horizon: f64,
    family: StreamFamily,
    index: u64,
) -> Result<TimeTrajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    let mut clock = CollisionClock::new(p, family, index);
    let mut jump_times = Vec::new();
    let mut velocities = Vec::new();
    loop {
        let gap = clock.next_gap();
        if clock.time + gap > horizon {
            break;
        }
        let v = clock.collide(gap);
        jump_times.push(clock.time);
        velocities.push(v);
    }
    Ok(TimeTrajectory {
        id: index,
        v0: clock.v0,
        jump_times,
        velocities,
        horizon,
    })
}

/// Samples `V(t)` at one time across independent trajectories, together with
/// the jump counts `N(t)`.
pub fn sample_time_at(p: &GasParams, t: f64, trials: usize, family: StreamFamily) -> Vec<(f64, u64)> {
    crate::rng::par_map_trials(trials, |i| {
        let mut clock = CollisionClock::new(p, family, i);
        loop {
            let gap = clock.next_gap();
            if clock.time + gap > t {
                return (clock.velocity, clock.collisions);
            }
            clock.collide(gap);
        }
    })
}

/// Exact law of `V(t)`: `sum_n Poisson(lambda t)(n) N(0, chain_variance(n))`,
/// truncated where the Poisson tail drops below a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDensity {
    pub params: GasParams,
    pub t: f64,
    pub truncation_n: u64,
    /// Upper bound on the discarded Poisson probability.
    pub tail_mass: f64,
    weights: Vec<f64>,
    variances: Vec<f64>,
}

impl MixtureDensity {
    pub fn new(p: &GasParams, t: f64, tol: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::param("t", format!("must be non-negative, got {t}")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::param("tol", format!("must lie in (0, 1), got {tol}")));
        }
        let mu = p.lambda() * t;
        let mut weights = Vec::new();
        let mut variances = Vec::new();
        let log_pmf = |n: u64| {
            if mu == 0.0 {
                if n == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -mu + n as f64 * mu.ln() - ln_gamma(n as f64 + 1.0)
            }
        };
        let mut n = 0u64;
        let tail_mass = loop {
            weights.push(log_pmf(n).exp());
            variances.push(chain_variance(n, p));
            // geometric bound on sum_{k > n} pmf(k), valid once n + 2 > mu
            let next = n + 1;
            if (next + 1) as f64 > mu {
                let ratio = mu / (next + 1) as f64;
                let bound = log_pmf(next).exp() / (1.0 - ratio);
                if bound < tol {
                    break bound;
                }
            }
            n = next;
        };
        Ok(MixtureDensity {
            params: *p,
            t,
            truncation_n: n,
            tail_mass,
            weights,
            variances,
        })
    }

    pub fn pdf(&self, v: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(w, s2)| w * normal_pdf(v, *s2))
            .sum()
    }

    pub fn cdf(&self, v: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.variances)
            .map(|(w, s2)| w * normal_cdf(v, *s2))
            .sum()
    }

    /// Variance of the truncated mixture, computed term by term.
    pub fn variance(&self) -> f64 {
        self.weights.iter().zip(&self.variances).map(|(w, s)| w * s).sum()
    }

    /// Retained probability, `1 - tail`.
    pub fn retained_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Mixture density of `V(t)` at `v`.
pub fn mixture_density(v: f64, t: f64, p: &GasParams, tol: f64) -> Result<f64> {
    Ok(MixtureDensity::new(p, t, tol)?.pdf(v))
}

#[derive(Serialize)]
struct JumpRow {
    trajectory_id: u64,
    jump_index: usize,
    jump_time: f64,
    velocity: f64,
}

/// Writes `trajectory_id,jump_index,jump_time,velocity`; jump 0 is the start.
pub fn write_time_csv<W: Write>(trajectories: &[TimeTrajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for traj in trajectories {
        w.serialize(JumpRow {
            trajectory_id: traj.id,
            jump_index: 0,
            jump_time: 0.0,
            velocity: traj.v0,
        })?;
        for (k, (&jump_time, &velocity)) in traj.jump_times.iter().zip(&traj.velocities).enumerate() {
            w.serialize(JumpRow {
                trajectory_id: traj.id,
                jump_index: k + 1,
                jump_time,
                velocity,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct DensityRow {
    v: f64,
    density: f64,
}

/// Writes `v,density` pairs.
pub fn write_density_csv<W: Write>(points: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for &(v, density) in points {
        w.serialize(DensityRow { v, density })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
