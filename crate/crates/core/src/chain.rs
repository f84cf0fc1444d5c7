//! The collision-indexed velocity chain `V_n = c V_{n-1} + X_n`.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::params::{chain_variance, normal_pdf, GasParams};
use crate::rng::{par_map_trials, std_normal, StreamFamily};

/// Velocity after one collision with a bath particle moving at `x`.
#[inline]
pub fn step_collision(v_prev: f64, x: f64, c: f64) -> f64 {
    c * v_prev + x
}

/// One realization `V_0, V_1, ..., V_n` of the collision chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTrajectory {
    pub id: u64,
    pub v0: f64,
    /// `V_1 ..= V_n`.
    pub velocities: Vec<f64>,
    /// Bath impulses `X_1 ..= X_n`, kept only in recording mode.
    pub impulses: Option<Vec<f64>>,
    pub params: GasParams,
    pub family: StreamFamily,
}

impl CollisionTrajectory {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// `V_k` for `k` in `0..=len()`.
    pub fn velocity(&self, k: usize) -> f64 {
        if k == 0 {
            self.v0
        } else {
            self.velocities[k - 1]
        }
    }

    /// Iterator over `V_0, V_1, ..., V_n`.
    pub fn path(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.v0).chain(self.velocities.iter().copied())
    }

    /// Regenerates the trajectory from its stream with impulses recorded.
    pub fn replay(&self) -> CollisionTrajectory {
        simulate_chain_recorded(&self.params, self.len(), self.family, self.id)
    }
}

fn simulate_inner(
    p: &GasParams,
    n: usize,
    family: StreamFamily,
    index: u64,
    record: bool,
) -> CollisionTrajectory {
    let mut rng = family.stream(index);
    let sd0 = p.sigma0_sq().sqrt();
    let sdx = p.sigmax_sq().sqrt();
    let c = p.c();
    let v0 = sd0 * std_normal(&mut rng);
    let mut velocities = Vec::with_capacity(n);
    let mut impulses = record.then(|| Vec::with_capacity(n));
    let mut v = v0;
    for _ in 0..n {
        let x = sdx * std_normal(&mut rng);
        v = step_collision(v, x, c);
        velocities.push(v);
        if let Some(xs) = impulses.as_mut() {
            xs.push(x);
        }
    }
    CollisionTrajectory {
        id: index,
        v0,
        velocities,
        impulses,
        params: *p,
        family,
    }
}

/// Simulates `n` collisions on stream `index` of `family`.
///
/// Draw order is fixed: `V_0` first, then `X_1, ..., X_n`.
pub fn simulate_chain(p: &GasParams, n: usize, family: StreamFamily, index: u64) -> CollisionTrajectory {
    simulate_inner(p, n, family, index, false)
}

/// As [`simulate_chain`] but also records the impulses.
pub fn simulate_chain_recorded(
    p: &GasParams,
    n: usize,
    family: StreamFamily,
    index: u64,
) -> CollisionTrajectory {
    simulate_inner(p, n, family, index, true)
}

/// Samples of `V_n` from `trials` independent chains.
pub fn sample_chain_at(p: &GasParams, n: usize, trials: usize, family: StreamFamily) -> Vec<f64> {
    par_map_trials(trials, |i| {
        let mut rng = family.stream(i);
        let c = p.c();
        let sdx = p.sigmax_sq().sqrt();
        let mut v = p.sigma0_sq().sqrt() * std_normal(&mut rng);
        for _ in 0..n {
            v = step_collision(v, sdx * std_normal(&mut rng), c);
        }
        v
    })
}

/// Gaussian density of `V_n`.
pub fn marginal_density_chain(v: f64, n: u64, p: &GasParams) -> f64 {
    normal_pdf(v, chain_variance(n, p))
}

#[derive(Debug, Serialize)]
struct ChainRow {
    trajectory_id: u64,
    n: usize,
    velocity: f64,
}

/// Writes trajectories as `trajectory_id,n,velocity` rows (`n = 0` is `V_0`).
pub fn write_chain_csv<W: Write>(trajectories: &[CollisionTrajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for traj in trajectories {
        for (n, velocity) in traj.path().enumerate() {
            w.serialize(ChainRow {
                trajectory_id: traj.id,
                n,
                velocity,
            })?;
        }
    }
    w.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}
