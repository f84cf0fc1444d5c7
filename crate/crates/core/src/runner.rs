//! Executes a validated [`RunConfig`]: runs the experiment on a worker pool,
//! writes its CSV outputs and a `manifest.json` with checksums.
//!
//! Output files are written only after the whole experiment has succeeded;
//! if any write fails, the files already written by this run are removed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::boltzmann::{write_snapshot_csv, BoltzmannSolver, DensityGrid};
use crate::chain::{simulate_chain, write_chain_csv};
use crate::config::{
    BoltzmannConfig, ChainConfig, CrossingsConfig, DephasingConfig, Experiment, HittingConfig, KuboConfig,
    OuConfig, RunConfig, TemperatureConfig, TimeConfig, SCHEMA_VERSION,
};
use crate::crossing::dephasing::{write_dephasing_csv, write_state_traces_csv};
use crate::crossing::hitting::{write_hitting_csv, write_temperature_csv};
use crate::crossing::kubo::write_kubo_csv;
use crate::crossing::{
    crossing_frequency_curve, dephasing_ensemble, fit_decay_rate, hitting_time_stats, kubo_trace,
    recurrence_evidence, temperature_scaling_experiment, time_crossing_frequency, write_crossing_curve_csv,
    write_recurrence_csv, write_time_curve_csv,
};
use crate::error::{Error, Result};
use crate::ou::{coupled_experiment, derive_ou_params, write_errors_csv, write_summary_csv, RenormalizedParams};
use crate::params::{chain_variance, time_variance, GasParams};
use crate::rng::{par_map_trials, StreamFamily, RNG_CONSTRUCTION};
use crate::stats::Moments;
use crate::time_process::{sample_time_at, simulate_time_trajectory, write_density_csv, write_time_csv, MixtureDensity};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GASRELAX_OUTPUT_DIR";

/// One file written by a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub experiment: &'static str,
    pub seed: u64,
    pub workers: usize,
    pub rng: &'static str,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

/// In-memory outputs of an experiment, keyed by file name.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }
}

/// Runs `config`, writing into `output_dir`.
pub fn run(config: &RunConfig, output_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::io(output_dir, std::io::Error::other(e)))?;
    let family = StreamFamily::new(config.seed).derive(config.kind.tag());
    let (outputs, summary) = pool.install(|| execute(&config.experiment, family))?;

    let mut manifest = RunManifest {
        tool: "gasrelax",
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        experiment: config.kind.name(),
        seed: config.seed,
        workers: pool.current_num_threads(),
        rng: RNG_CONSTRUCTION,
        config: config.echo(),
        wall_clock_seconds: 0.0,
        outputs: outputs
            .files
            .iter()
            .map(|(name, bytes)| OutputFile {
                file: name.clone(),
                bytes: bytes.len(),
                sha256: hex(&Sha256::digest(bytes)),
            })
            .collect(),
        summary,
    };
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let manifest_bytes = serde_json::to_vec_pretty(&manifest)?;

    let created_dir = !output_dir.exists();
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let all = outputs
        .files
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .chain(std::iter::once(("manifest.json", manifest_bytes.as_slice())));
    for (name, bytes) in all {
        let path = output_dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created_dir {
                let _ = fs::remove_dir(output_dir);
            }
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(manifest)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn execute(exp: &Experiment, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    match exp {
        Experiment::Chain(p, c) => run_chain(p, c, family),
        Experiment::Time(p, c) => run_time(p, c, family),
        Experiment::Boltzmann(p, c) => run_boltzmann(p, c),
        Experiment::OuConverge(r, c) => run_ou(r, c, family),
        Experiment::Crossings(p, c) => run_crossings(p, c, family),
        Experiment::Hitting(p, c) => run_hitting(p, c, family),
        Experiment::Temperature(p, c) => run_temperature(p, c, family),
        Experiment::Dephasing(p, c) => run_dephasing(p, c, family),
        Experiment::Kubo(c) => run_kubo(c, family),
    }
}

#[derive(Serialize)]
struct MomentRow {
    n: usize,
    mean: f64,
    variance: f64,
    variance_se: f64,
    theory_variance: f64,
}

fn run_chain(p: &GasParams, c: &ChainConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let trajectories = par_map_trials(c.trials, |i| simulate_chain(p, c.n, family, i));
    let rows: Vec<MomentRow> = (0..=c.n)
        .map(|k| {
            let m = Moments::from_slice(&trajectories.iter().map(|t| t.velocity(k)).collect::<Vec<_>>());
            MomentRow {
                n: k,
                mean: m.mean(),
                variance: m.variance(),
                variance_se: m.variance_std_error(),
                theory_variance: chain_variance(k as u64, p),
            }
        })
        .collect();
    let mut out = Outputs::default();
    out.add("chain.csv", |w| write_chain_csv(&trajectories, w))?;
    out.add("chain_moments.csv", |w| write_rows(&rows, w))?;
    let last = rows.last().unwrap();
    let summary = json!({
        "c": p.c(),
        "final_variance": last.variance,
        "final_variance_se": last.variance_se,
        "final_theory_variance": last.theory_variance,
    });
    Ok((out, summary))
}

#[derive(Serialize)]
struct TimeMomentRow {
    t: f64,
    mean: f64,
    variance: f64,
    variance_se: f64,
    theory_variance: f64,
    mean_jumps: f64,
}

fn run_time(p: &GasParams, c: &TimeConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let export = c.export_trajectories.min(c.trials);
    let trajectories = par_map_trials(export, |i| simulate_time_trajectory(p, c.horizon, family, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<TimeMomentRow> = c
        .eval_times
        .iter()
        .map(|&t| {
            let samples = sample_time_at(p, t, c.trials, family);
            let v: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let m = Moments::from_slice(&v);
            TimeMomentRow {
                t,
                mean: m.mean(),
                variance: m.variance(),
                variance_se: m.variance_std_error(),
                theory_variance: time_variance(t, p),
                mean_jumps: samples.iter().map(|s| s.1 as f64).sum::<f64>() / samples.len() as f64,
            }
        })
        .collect();
    let t_density = c.density_time.unwrap_or(*c.eval_times.last().unwrap());
    let mix = MixtureDensity::new(p, t_density, c.density_tol)?;
    let half = 6.0 * mix.variance().sqrt();
    let pts = c.density_points;
    let density: Vec<(f64, f64)> = (0..pts)
        .map(|i| {
            let v = -half + 2.0 * half * i as f64 / (pts - 1) as f64;
            (v, mix.pdf(v))
        })
        .collect();
    let mut out = Outputs::default();
    out.add("time.csv", |w| write_time_csv(&trajectories, w))?;
    out.add("time_moments.csv", |w| write_rows(&rows, w))?;
    out.add("density.csv", |w| write_density_csv(&density, w))?;
    let summary = json!({
        "density_time": t_density,
        "density_truncation_n": mix.truncation_n,
        "density_tail_mass": mix.tail_mass,
    });
    Ok((out, summary))
}

#[derive(Serialize)]
struct BoltzmannRow {
    t: f64,
    mass: f64,
    variance: f64,
    theory_variance: f64,
    l1_to_mixture: f64,
    residual: f64,
}

fn run_boltzmann(p: &GasParams, c: &BoltzmannConfig) -> Result<(Outputs, serde_json::Value)> {
    let v_max = c
        .v_max
        .unwrap_or_else(|| 10.0 * p.sigma0_sq().max(p.equilibrium_variance()).sqrt());
    let mut grid = DensityGrid::gaussian(c.grid_points, v_max, p.sigma0_sq())?;
    let solver = BoltzmannSolver::new(&grid, p, c.solver)?;
    let mut snapshots = vec![(0.0, grid.clone())];
    let mut max_drift: f64 = 0.0;
    let mut t = 0.0;
    for &target in &c.snapshot_times {
        if target > t {
            let (next, report) = solver.evolve(&grid, target - t, c.dt)?;
            max_drift = max_drift.max(report.max_step_drift);
            grid = next;
            t = target;
        }
        if target > 0.0 {
            snapshots.push((t, grid.clone()));
        }
    }
    let rows = snapshots
        .iter()
        .map(|(t, g)| {
            let l1 = if *t > 0.0 {
                let mix = MixtureDensity::new(p, *t, 1e-14)?;
                g.l1_distance(|v| mix.pdf(v))
            } else {
                g.l1_distance(|v| crate::params::normal_pdf(v, p.sigma0_sq()))
            };
            let residual = solver.operator().apply(&g.values).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(BoltzmannRow {
                t: *t,
                mass: g.mass(),
                variance: g.variance(),
                theory_variance: time_variance(*t, p),
                l1_to_mixture: l1,
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outputs::default();
    out.add("density_snapshots.csv", |w| write_snapshot_csv(&snapshots, w))?;
    out.add("boltzmann_summary.csv", |w| write_rows(&rows, w))?;
    let summary = json!({
        "v_max": v_max,
        "grid_points": c.grid_points,
        "max_step_mass_drift": max_drift,
        "max_l1_to_mixture": rows.iter().map(|r| r.l1_to_mixture).fold(0.0, f64::max),
    });
    Ok((out, summary))
}

fn run_ou(r: &RenormalizedParams, c: &OuConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let results = (0..r.lambda_n.len())
        .map(|i| coupled_experiment(r, i, &c.t_eval, c.trials, c.epsilon, family))
        .collect::<Result<Vec<_>>>()?;
    let ou = derive_ou_params(r)?;
    let mut out = Outputs::default();
    out.add("ou_errors.csv", |w| write_errors_csv(&results, w))?;
    out.add("ou_summary.csv", |w| write_summary_csv(&results, w))?;
    let summary = json!({
        "theta": ou.theta,
        "eta": ou.eta,
        "exceedance": results.iter().map(|res| json!({
            "lambda_n": res.lambda_n,
            "values": res.exceedance.iter().map(|p| p.estimate).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok((out, summary))
}

fn run_crossings(p: &GasParams, c: &CrossingsConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let curve = crossing_frequency_curve(p, c.n_max, c.trials, family.derive(0))?;
    let mut out = Outputs::default();
    out.add("crossing_curve.csv", |w| write_crossing_curve_csv(&curve, w))?;
    let mut summary = json!({
        "mean_w1": curve.mean_w[0],
        "isotonic_violation": curve.isotonic_violation,
        "band_z": curve.band_z,
    });
    if !c.times.is_empty() {
        let tc = time_crossing_frequency(p, &c.times, c.trials, family.derive(1))?;
        out.add("crossing_time.csv", |w| write_time_curve_csv(&tc, w))?;
        summary["time_isotonic_violation"] = json!(tc.isotonic_violation);
    }
    if let Some(rc) = &c.recurrence {
        let rows = recurrence_evidence(p, &rc.n_max, rc.k, c.trials, family.derive(2))?;
        out.add("recurrence.csv", |w| write_recurrence_csv(&rows, w))?;
        summary["recurrence_fraction"] = json!(rows.last().map(|r| r.fraction.estimate));
    }
    Ok((out, summary))
}

fn run_hitting(p: &GasParams, c: &HittingConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let (records, s) = hitting_time_stats(p, c.cap, c.trials, family)?;
    let mut out = Outputs::default();
    out.add("hitting.csv", |w| write_hitting_csv(&records, w))?;
    out.add("hitting_summary.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "trials",
            "cap",
            "censored_fraction",
            "capped_mean_n1",
            "capped_mean_n1_se",
            "capped_mean_tau1",
            "capped_mean_tau1_se",
            "median_n1",
            "median_tau1",
            "q90_n1",
            "q90_tau1",
            "wald_ratio",
            "bound",
        ])?;
        wr.write_record(
            [
                s.trials as f64,
                s.cap as f64,
                s.censored_fraction,
                s.capped_mean_n1.value,
                s.capped_mean_n1.se,
                s.capped_mean_tau1.value,
                s.capped_mean_tau1.se,
                s.median_n1,
                s.median_tau1,
                s.q90_n1,
                s.q90_tau1,
                s.wald_ratio,
                s.bound,
            ]
            .map(|x| x.to_string()),
        )?;
        wr.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    Ok((out, serde_json::to_value(&s)?))
}

fn run_temperature(
    p: &GasParams,
    c: &TemperatureConfig,
    family: StreamFamily,
) -> Result<(Outputs, serde_json::Value)> {
    let rows = temperature_scaling_experiment(p, &c.ratios, c.mode, c.cap, c.trials, family)?;
    let mut out = Outputs::default();
    out.add("temperature.csv", |w| write_temperature_csv(&rows, w))?;
    let summary = json!({ "mode": c.mode, "rows": rows.len() });
    Ok((out, summary))
}

fn run_dephasing(p: &GasParams, c: &DephasingConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let s = dephasing_ensemble(p, c.ensemble_size, c.horizon, c.dt_sample, c.record_states, family)?;
    let mut out = Outputs::default();
    out.add("dephasing.csv", |w| write_dephasing_csv(&s, w))?;
    if c.record_states > 0 {
        out.add("dephasing_states.csv", |w| write_state_traces_csv(&s, w))?;
    }
    let fit = fit_decay_rate(&s, 10.0).ok();
    let summary = json!({
        "equilibrium_ke": s.equilibrium_ke,
        "fitted_rate": fit.map(|f| f.rate),
        "predicted_rate": p.relaxation_rate(),
        "fit_points": fit.map(|f| f.points),
    });
    Ok((out, summary))
}

fn run_kubo(c: &KuboConfig, family: StreamFamily) -> Result<(Outputs, serde_json::Value)> {
    let traces = (0..c.traces as u64)
        .map(|i| kubo_trace(c.omega0, c.sigma_w, c.horizon, c.dt, &mut family.stream(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outputs::default();
    out.add("kubo.csv", |w| write_kubo_csv(&traces, w))?;
    let summary = json!({ "traces": traces.len(), "points": traces[0].times.len() });
    Ok((out, summary))
}

fn write_rows<T: Serialize>(rows: &[T], out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Resolves the output directory: explicit flag, then config, then the
/// environment variable, then `./gasrelax-out`.
pub fn resolve_output_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gasrelax-out"))
}
