//! Velocity-grid solver for the linear Boltzmann equation of the collision model,
//!
//! ```text
//! df/dt = lambda * [ (1/c) ∫ f((v - x)/c) g(x) dx - f(v) ],   g = N(0, sigmax_sq),
//! ```
//!
//! whose gain term is the density of `c V + X` when `V ~ f`. The `1/c`
//! Jacobian makes loss and gain carry equal mass.
//!
//! Two quadratures of the gain term are provided. [`GainQuadrature::Substitution`]
//! changes variables to `u = (v - x)/c`, giving `∫ f(u) g(v - c u) du`, which is
//! evaluated exactly on the grid nodes; its columns are renormalized so that
//! every node's outgoing mass is returned to the grid. [`GainQuadrature::LinearInterpolation`]
//! integrates over the bath velocity `x` and linearly interpolates `f` at the
//! off-grid argument `(v - x)/c` (zero beyond the grid); it is second order in
//! the grid spacing and is kept for refinement studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{normal_pdf, GasParams};

/// Uniform velocity grid on `[-v_max, v_max]` carrying density values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub v_max: f64,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Samples `f` on `n` points spanning `[-v_max, v_max]`.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, v_max: f64, f: F) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("grid_points", format!("need at least 3 points, got {n}")));
        }
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::param("v_max", format!("must be positive, got {v_max}")));
        }
        let h = 2.0 * v_max / (n - 1) as f64;
        // symmetric construction: points[i] == -points[n-1-i] exactly
        let points: Vec<f64> = (0..n)
            .map(|i| {
                let k = i as f64 - (n - 1) as f64 / 2.0;
                k * h
            })
            .collect();
        let values = points.iter().map(|&v| f(v)).collect::<Vec<_>>();
        if let Some(bad) = values.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("density", format!("values must be finite and >= 0, found {bad}")));
        }
        Ok(DensityGrid {
            v_max,
            points,
            values,
        })
    }

    /// Gaussian `N(0, variance)` on the grid.
    pub fn gaussian(n: usize, v_max: f64, variance: f64) -> Result<Self> {
        Self::from_fn(n, v_max, |v| normal_pdf(v, variance))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.v_max / (self.len() - 1) as f64
    }

    fn trapezoid(&self, integrand: impl Fn(usize) -> f64) -> f64 {
        let n = self.len();
        let h = self.spacing();
        let inner: f64 = (1..n - 1).map(&integrand).sum();
        h * (inner + 0.5 * (integrand(0) + integrand(n - 1)))
    }

    /// Trapezoid integral of the density.
    pub fn mass(&self) -> f64 {
        self.trapezoid(|i| self.values[i])
    }

    /// Second moment about zero (the mean vanishes by symmetry).
    pub fn variance(&self) -> f64 {
        self.trapezoid(|i| self.points[i] * self.points[i] * self.values[i]) / self.mass()
    }

    /// Trapezoid L1 distance to a reference density.
    pub fn l1_distance<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        self.trapezoid(|i| (self.values[i] - reference(self.points[i])).abs())
    }

    /// Largest `|f(v) - f(-v)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    fn interpolate(&self, v: f64) -> f64 {
        let h = self.spacing();
        let s = (v + self.v_max) / h;
        if !(s >= 0.0) || s > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.len() - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Quadrature of the gain integral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainQuadrature {
    #[default]
    Substitution,
    LinearInterpolation,
}

/// Tolerances and scheme choices of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub quadrature: GainQuadrature,
    /// Bath kernel truncated at this many `sigma_x`.
    pub kernel_cutoff: f64,
    /// Largest admissible density at the grid ends, relative to the peak.
    pub boundary_tol: f64,
    pub step_mass_tol: f64,
    pub clip_tol: f64,
    pub max_dt_lambda: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            quadrature: GainQuadrature::Substitution,
            kernel_cutoff: 8.0,
            boundary_tol: 1e-8,
            step_mass_tol: 1e-8,
            clip_tol: 1e-6,
            max_dt_lambda: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
struct KernelRow {
    start: usize,
    weights: Vec<f64>,
}

/// Precomputed linear collision operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    lambda: f64,
    n: usize,
    v_max: f64,
    cfg: SolverConfig,
    kind: OperatorKind,
}

#[derive(Debug, Clone)]
enum OperatorKind {
    /// `c = 0`: the gain is `lambda * mass * g(v)`.
    Memoryless { bath: Vec<f64> },
    Banded { rows: Vec<KernelRow> },
    Interpolated { c: f64, bath_x: Vec<f64>, bath_w: Vec<f64> },
}

impl CollisionOperator {
    pub fn new(grid: &DensityGrid, p: &GasParams, cfg: SolverConfig) -> Result<Self> {
        let n = grid.len();
        let h = grid.spacing();
        let c = p.c();
        let sx2 = p.sigmax_sq();
        let reach = cfg.kernel_cutoff * sx2.sqrt();
        let kind = match cfg.quadrature {
            GainQuadrature::LinearInterpolation => {
                if c == 0.0 {
                    return Err(Error::param(
                        "c",
                        "interpolated gain quadrature needs c > 0; use the substitution scheme for c = 0",
                    ));
                }
                let m = (reach / h).floor() as i64;
                let bath_x: Vec<f64> = (-m..=m).map(|k| k as f64 * h).collect();
                let bath_w = bath_x
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        let end = k == 0 || k == bath_x.len() - 1;
                        normal_pdf(x, sx2) * h * if end { 0.5 } else { 1.0 } / c
                    })
                    .collect();
                OperatorKind::Interpolated { c, bath_x, bath_w }
            }
            GainQuadrature::Substitution if c == 0.0 => {
                let bath = grid.points.iter().map(|&v| normal_pdf(v, sx2)).collect::<Vec<_>>();
                let total = grid.trapezoid(|i| bath[i]);
                OperatorKind::Memoryless {
                    bath: bath.into_iter().map(|b| b / total).collect(),
                }
            }
            GainQuadrature::Substitution => {
                let pts = &grid.points;
                let w = |j: usize| if j == 0 || j == n - 1 { 0.5 * h } else { h };
                // raw[i][j] = g(v_i - c u_j) over the band |v_i - c u_j| <= reach
                let mut rows: Vec<KernelRow> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let v = pts[i];
                        let lo = (v - reach) / c;
                        let hi = (v + reach) / c;
                        let start = (((lo + grid.v_max) / h).ceil().max(0.0)) as usize;
                        let end = ((((hi + grid.v_max) / h).floor()) as i64).min(n as i64 - 1);
                        if (start as i64) > end {
                            // band lies entirely off the grid
                            return KernelRow { start: 0, weights: Vec::new() };
                        }
                        let weights = (start..=end as usize)
                            .map(|j| normal_pdf(v - c * pts[j], sx2))
                            .collect();
                        KernelRow { start, weights }
                    })
                    .collect();
                // column sums under the v-quadrature; renormalize to unit outgoing mass
                let mut col = vec![0.0; n];
                for (i, row) in rows.iter().enumerate() {
                    for (k, &g) in row.weights.iter().enumerate() {
                        col[row.start + k] += w(i) * g;
                    }
                }
                for row in rows.iter_mut() {
                    for (k, g) in row.weights.iter_mut().enumerate() {
                        let j = row.start + k;
                        *g = if col[j] > 0.0 { *g * w(j) / col[j] } else { 0.0 };
                    }
                }
                OperatorKind::Banded { rows }
            }
        };
        Ok(CollisionOperator {
            lambda: p.lambda(),
            n,
            v_max: grid.v_max,
            cfg,
            kind,
        })
    }

    fn check_grid(&self, grid: &DensityGrid) -> Result<()> {
        if grid.len() != self.n || grid.v_max != self.v_max {
            return Err(Error::param("grid", "grid geometry differs from the operator's"));
        }
        let peak = grid.values.iter().copied().fold(0.0, f64::max);
        let boundary = grid.values[0].max(grid.values[self.n - 1]);
        if peak > 0.0 && boundary > self.cfg.boundary_tol * peak {
            return Err(Error::BoundaryMass {
                boundary: boundary / peak,
                tol: self.cfg.boundary_tol,
            });
        }
        Ok(())
    }

    fn gain(&self, values: &[f64], out: &mut [f64]) {
        match &self.kind {
            OperatorKind::Memoryless { bath } => {
                let h = 2.0 * self.v_max / (self.n - 1) as f64;
                let inner: f64 = values[1..self.n - 1].iter().sum();
                let mass = h * (inner + 0.5 * (values[0] + values[self.n - 1]));
                out.iter_mut().zip(bath).for_each(|(o, b)| *o = mass * b);
            }
            OperatorKind::Banded { rows } => {
                out.par_iter_mut().zip(rows.par_iter()).for_each(|(o, row)| {
                    *o = row
                        .weights
                        .iter()
                        .zip(&values[row.start..row.start + row.weights.len()])
                        .map(|(k, f)| k * f)
                        .sum();
                });
            }
            OperatorKind::Interpolated { c, bath_x, bath_w } => {
                let grid = DensityGrid {
                    v_max: self.v_max,
                    points: Vec::new(),
                    values: values.to_vec(),
                };
                let h = 2.0 * self.v_max / (self.n - 1) as f64;
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let v = -self.v_max + i as f64 * h;
                    *o = bath_x
                        .iter()
                        .zip(bath_w)
                        .map(|(x, w)| w * grid.interpolate((v - x) / c))
                        .sum();
                });
            }
        }
    }

    /// `lambda * (gain - f)` on raw grid values.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.gain(values, &mut out);
        out.iter_mut()
            .zip(values)
            .for_each(|(o, f)| *o = self.lambda * (*o - f));
        out
    }

    /// Collision rate at each grid point.
    pub fn rhs(&self, grid: &DensityGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok(self.apply(&grid.values))
    }
}

/// Collision term of the Boltzmann equation on `grid` with default settings.
pub fn collision_rhs(grid: &DensityGrid, p: &GasParams) -> Result<Vec<f64>> {
    CollisionOperator::new(grid, p, SolverConfig::default())?.rhs(grid)
}

/// Max-abs collision rate; zero exactly at a stationary density.
pub fn stationarity_residual(grid: &DensityGrid, p: &GasParams) -> Result<f64> {
    Ok(collision_rhs(grid, p)?.iter().map(|r| r.abs()).fold(0.0, f64::max))
}

/// Diagnostics of one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveReport {
    pub steps: usize,
    pub dt: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub max_step_drift: f64,
    pub clipped_mass: f64,
}

/// Explicit RK4 integrator over a precomputed operator.
#[derive(Debug, Clone)]
pub struct BoltzmannSolver {
    op: CollisionOperator,
    lambda: f64,
    cfg: SolverConfig,
}

impl BoltzmannSolver {
    pub fn new(grid: &DensityGrid, p: &GasParams, cfg: SolverConfig) -> Result<Self> {
        Ok(BoltzmannSolver {
            op: CollisionOperator::new(grid, p, cfg)?,
            lambda: p.lambda(),
            cfg,
        })
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.op
    }

    /// Advances `grid` to `t_end`, calling `observe(t, grid)` after every step.
    pub fn evolve_with<F>(
        &self,
        grid: &DensityGrid,
        t_end: f64,
        dt: f64,
        mut observe: F,
    ) -> Result<(DensityGrid, EvolveReport)>
    where
        F: FnMut(f64, &DensityGrid),
    {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::param("t_end", format!("must be non-negative, got {t_end}")));
        }
        let dt_lambda = dt * self.lambda;
        if dt_lambda > self.cfg.max_dt_lambda {
            return Err(Error::StepSize {
                dt_lambda,
                limit: self.cfg.max_dt_lambda,
            });
        }
        self.op.check_grid(grid)?;
        let initial_mass = grid.mass();
        let mut state = grid.clone();
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
        let mut report = EvolveReport {
            steps,
            dt: h,
            initial_mass,
            final_mass: initial_mass,
            max_step_drift: 0.0,
            clipped_mass: 0.0,
        };
        let n = state.len();
        let axpy = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, k)| b + s * k).collect()
        };
        for step in 0..steps {
            let before = state.mass();
            let f = &state.values;
            let k1 = self.op.apply(f);
            let k2 = self.op.apply(&axpy(f, &k1, 0.5 * h));
            let k3 = self.op.apply(&axpy(f, &k2, 0.5 * h));
            let k4 = self.op.apply(&axpy(f, &k3, h));
            let mut next: Vec<f64> = (0..n)
                .map(|i| f[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect();
            let spacing = state.spacing();
            for (i, x) in next.iter_mut().enumerate() {
                if *x < 0.0 {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    report.clipped_mass += -*x * w * spacing;
                    *x = 0.0;
                }
            }
            if report.clipped_mass > self.cfg.clip_tol {
                return Err(Error::ClippedMass {
                    clipped: report.clipped_mass,
                    tol: self.cfg.clip_tol,
                });
            }
            state.values = next;
            let drift = (state.mass() - before).abs();
            report.max_step_drift = report.max_step_drift.max(drift);
            if drift > self.cfg.step_mass_tol {
                return Err(Error::MassDrift {
                    drift,
                    tol: self.cfg.step_mass_tol,
                });
            }
            observe((step + 1) as f64 * h, &state);
        }
        report.final_mass = state.mass();
        Ok((state, report))
    }

    pub fn evolve(&self, grid: &DensityGrid, t_end: f64, dt: f64) -> Result<(DensityGrid, EvolveReport)> {
        self.evolve_with(grid, t_end, dt, |_, _| {})
    }
}

/// Evolves `grid` to `t_end` with RK4 steps no longer than `dt`.
pub fn evolve_density(grid: &DensityGrid, p: &GasParams, t_end: f64, dt: f64) -> Result<DensityGrid> {
    let solver = BoltzmannSolver::new(grid, p, SolverConfig::default())?;
    let (out, report) = solver.evolve(grid, t_end, dt)?;
    let drift = (report.final_mass - report.initial_mass).abs();
    if drift > 1e-6 {
        return Err(Error::MassDrift { drift, tol: 1e-6 });
    }
    Ok(out)
}

#[derive(Serialize)]
struct SnapshotRow {
    t: f64,
    v: f64,
    f: f64,
}

/// Writes density snapshots as `t,v,f` rows.
pub fn write_snapshot_csv<W: Write>(snapshots: &[(f64, DensityGrid)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (t, grid) in snapshots {
        for (&v, &f) in grid.points.iter().zip(&grid.values) {
            w.serialize(SnapshotRow { t: *t, v, f })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
