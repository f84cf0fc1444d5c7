//! Experiment configuration: a strict TOML document validated against the
//! preconditions of the module each experiment dispatches to.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::boltzmann::SolverConfig;
use crate::crossing::LambdaMode;
use crate::error::Error;
use crate::ou::RenormalizedParams;
use crate::params::GasParams;

pub const SCHEMA_VERSION: u32 = 1;

/// One field-level validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Chain,
    Time,
    Boltzmann,
    OuConverge,
    Crossings,
    Hitting,
    Temperature,
    Dephasing,
    Kubo,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Chain => "chain",
            ExperimentKind::Time => "time",
            ExperimentKind::Boltzmann => "boltzmann",
            ExperimentKind::OuConverge => "ou-converge",
            ExperimentKind::Crossings => "crossings",
            ExperimentKind::Hitting => "hitting",
            ExperimentKind::Temperature => "temperature",
            ExperimentKind::Dephasing => "dephasing",
            ExperimentKind::Kubo => "kubo",
        }
    }

    /// Stream-family tag; distinct experiments never share streams.
    pub fn tag(&self) -> u64 {
        *self as u64 + 1
    }

    fn needs_gas_params(&self) -> bool {
        !matches!(self, ExperimentKind::OuConverge | ExperimentKind::Kubo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub trials: usize,
    pub eval_times: Vec<f64>,
    #[serde(default = "default_export")]
    pub export_trajectories: usize,
    /// Time of the `density.csv` dump; defaults to the last evaluation time.
    #[serde(default)]
    pub density_time: Option<f64>,
    #[serde(default = "default_density_tol")]
    pub density_tol: f64,
    #[serde(default = "default_density_points")]
    pub density_points: usize,
}

fn default_export() -> usize {
    100
}
fn default_density_tol() -> f64 {
    1e-12
}
fn default_density_points() -> usize {
    401
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoltzmannConfig {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Half-width of the grid; defaults to ten of the larger of the initial
    /// and equilibrium standard deviations.
    #[serde(default)]
    pub v_max: Option<f64>,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_grid_points() -> usize {
    2048
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuConfig {
    pub alpha: f64,
    pub lambda_n: Vec<f64>,
    pub sigma_x0: f64,
    pub sigma0_sq: f64,
    pub t_eval: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceConfig {
    pub n_max: Vec<u64>,
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingsConfig {
    pub n_max: usize,
    pub trials: usize,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub recurrence: Option<RecurrenceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingConfig {
    #[serde(default = "default_cap")]
    pub cap: u64,
    pub trials: usize,
}

fn default_cap() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureConfig {
    pub ratios: Vec<f64>,
    pub mode: LambdaMode,
    #[serde(default = "default_cap")]
    pub cap: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingConfig {
    pub ensemble_size: usize,
    pub horizon: f64,
    pub dt_sample: f64,
    #[serde(default)]
    pub record_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuboConfig {
    pub omega0: f64,
    pub sigma_w: f64,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_traces")]
    pub traces: usize,
}

fn default_traces() -> usize {
    2
}

/// Document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<toml::Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boltzmann: Option<BoltzmannConfig>,
    #[serde(default, rename = "ou-converge", skip_serializing_if = "Option::is_none")]
    pub ou_converge: Option<OuConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossings: Option<CrossingsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hitting: Option<HittingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<DephasingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kubo: Option<KuboConfig>,
}

/// Experiment with its validated parameter block.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Chain(GasParams, ChainConfig),
    Time(GasParams, TimeConfig),
    Boltzmann(GasParams, BoltzmannConfig),
    OuConverge(RenormalizedParams, OuConfig),
    Crossings(GasParams, CrossingsConfig),
    Hitting(GasParams, HittingConfig),
    Temperature(GasParams, TemperatureConfig),
    Dephasing(GasParams, DephasingConfig),
    Kubo(KuboConfig),
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub experiment: Experiment,
    raw: RawConfig,
}

impl RunConfig {
    /// The configuration document as JSON, for manifests.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(&self.raw).expect("config is serializable")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.raw.seed = seed;
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.output_dir = Some(dir.clone());
        self.raw.output_dir = Some(dir);
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.workers = workers;
        self.raw.workers = workers;
    }
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn require(&mut self, ok: bool, field: &str, message: impl Into<String>) {
        if !ok {
            self.errors.push(FieldError::new(field, message));
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        self.require(x > 0.0 && x.is_finite(), field, format!("must be positive and finite, got {x}"));
    }

    fn count(&mut self, field: &str, n: usize, min: usize) {
        self.require(n >= min, field, format!("must be at least {min}, got {n}"));
    }

    fn increasing(&mut self, field: &str, xs: &[f64], allow_zero: bool) {
        let start_ok = xs.first().is_none_or(|x| if allow_zero { *x >= 0.0 } else { *x > 0.0 });
        self.require(
            start_ok && xs.windows(2).all(|w| w[0] < w[1]) && xs.iter().all(|x| x.is_finite()),
            field,
            "values must be finite, strictly increasing and non-negative",
        );
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e
            .span()
            .map(|s| format!(" (bytes {}..{})", s.start, s.end))
            .unwrap_or_default();
        Error::Config(vec![FieldError::new("document", format!("{}{span}", e.message()))])
    })?;
    validate(raw).map_err(Error::Config)
}

fn validate(raw: RawConfig) -> Result<RunConfig, Vec<FieldError>> {
    let mut ck = Checker { errors: Vec::new() };
    if let Some(v) = raw.schema_version {
        ck.require(v == SCHEMA_VERSION, "schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"));
    }
    let kind = raw.experiment;

    let blocks: [(&str, bool); 9] = [
        ("chain", raw.chain.is_some()),
        ("time", raw.time.is_some()),
        ("boltzmann", raw.boltzmann.is_some()),
        ("ou-converge", raw.ou_converge.is_some()),
        ("crossings", raw.crossings.is_some()),
        ("hitting", raw.hitting.is_some()),
        ("temperature", raw.temperature.is_some()),
        ("dephasing", raw.dephasing.is_some()),
        ("kubo", raw.kubo.is_some()),
    ];
    for (name, present) in blocks {
        if present && name != kind.name() {
            ck.errors.push(FieldError::new(
                name,
                format!("block [{name}] does not belong to experiment `{}`", kind.name()),
            ));
        } else if !present && name == kind.name() {
            ck.errors.push(FieldError::new(name, format!("experiment `{name}` requires a [{name}] block")));
        }
    }

    let params = match (&raw.params, kind.needs_gas_params()) {
        (Some(table), true) => match GasParams::deserialize(toml::Value::Table(table.clone())) {
            Ok(p) => Some(p),
            Err(e) => {
                ck.errors.push(FieldError::new("params", e.to_string().trim().to_string()));
                None
            }
        },
        (None, true) => {
            ck.errors.push(FieldError::new("params", "this experiment requires a [params] block"));
            None
        }
        (Some(_), false) => {
            ck.errors.push(FieldError::new(
                "params",
                format!("experiment `{}` takes no [params] block", kind.name()),
            ));
            None
        }
        (None, false) => None,
    };
    if !ck.errors.is_empty() {
        return Err(ck.errors);
    }

    let experiment = match kind {
        ExperimentKind::Chain => {
            let c = raw.chain.clone().unwrap();
            ck.count("chain.trials", c.trials, 1);
            Experiment::Chain(params.unwrap(), c)
        }
        ExperimentKind::Time => {
            let c = raw.time.clone().unwrap();
            ck.positive("time.horizon", c.horizon);
            ck.count("time.trials", c.trials, 2);
            ck.count("time.density_points", c.density_points, 2);
            ck.increasing("time.eval_times", &c.eval_times, true);
            ck.require(!c.eval_times.is_empty(), "time.eval_times", "at least one time required");
            ck.require(
                c.eval_times.iter().all(|t| *t <= c.horizon),
                "time.eval_times",
                "evaluation times must lie within [0, horizon]",
            );
            if let Some(t) = c.density_time {
                ck.require(t >= 0.0 && t.is_finite(), "time.density_time", "must be non-negative");
            }
            ck.require(
                c.density_tol > 0.0 && c.density_tol < 1.0,
                "time.density_tol",
                "must lie in (0, 1)",
            );
            Experiment::Time(params.unwrap(), c)
        }
        ExperimentKind::Boltzmann => {
            let p = params.unwrap();
            let c = raw.boltzmann.clone().unwrap();
            ck.count("boltzmann.grid_points", c.grid_points, 3);
            ck.positive("boltzmann.dt", c.dt);
            if let Some(v) = c.v_max {
                ck.positive("boltzmann.v_max", v);
            }
            ck.increasing("boltzmann.snapshot_times", &c.snapshot_times, true);
            let dl = c.dt * p.lambda();
            ck.require(
                dl <= c.solver.max_dt_lambda,
                "boltzmann.dt",
                format!(
                    "step size rejected: dt*lambda = {dl} exceeds the explicit-stepping limit {}",
                    c.solver.max_dt_lambda
                ),
            );
            ck.require(
                c.solver.quadrature != crate::boltzmann::GainQuadrature::LinearInterpolation || p.c() > 0.0,
                "boltzmann.solver.quadrature",
                "linear-interpolation gain needs c > 0",
            );
            Experiment::Boltzmann(p, c)
        }
        ExperimentKind::OuConverge => {
            let c = raw.ou_converge.clone().unwrap();
            ck.count("ou-converge.trials", c.trials, 1);
            ck.increasing("ou-converge.t_eval", &c.t_eval, true);
            ck.require(!c.t_eval.is_empty(), "ou-converge.t_eval", "at least one time required");
            ck.require(c.epsilon > 0.0, "ou-converge.epsilon", "must be positive");
            match RenormalizedParams::new(c.alpha, c.lambda_n.clone(), c.sigma_x0, c.sigma0_sq) {
                Ok(r) => Experiment::OuConverge(r, c),
                Err(e) => {
                    ck.errors.push(FieldError::new("ou-converge", e.to_string()));
                    return Err(ck.errors);
                }
            }
        }
        ExperimentKind::Crossings => {
            let c = raw.crossings.clone().unwrap();
            ck.count("crossings.n_max", c.n_max, 1);
            ck.count("crossings.trials", c.trials, 2);
            ck.increasing("crossings.times", &c.times, true);
            if let Some(r) = &c.recurrence {
                ck.require(
                    !r.n_max.is_empty() && r.n_max.windows(2).all(|w| w[0] < w[1]),
                    "crossings.recurrence.n_max",
                    "horizons must be non-empty and strictly increasing",
                );
            }
            Experiment::Crossings(params.unwrap(), c)
        }
        ExperimentKind::Hitting => {
            let c = raw.hitting.clone().unwrap();
            ck.require(c.cap >= 1, "hitting.cap", "must be at least 1");
            ck.count("hitting.trials", c.trials, 2);
            Experiment::Hitting(params.unwrap(), c)
        }
        ExperimentKind::Temperature => {
            let c = raw.temperature.clone().unwrap();
            ck.require(
                !c.ratios.is_empty() && c.ratios.iter().all(|r| *r > 0.0 && r.is_finite()),
                "temperature.ratios",
                "ratios must be non-empty and positive",
            );
            ck.require(c.cap >= 1, "temperature.cap", "must be at least 1");
            ck.require(c.trials == 0 || c.trials >= 2, "temperature.trials", "use 0 (bounds only) or at least 2");
            Experiment::Temperature(params.unwrap(), c)
        }
        ExperimentKind::Dephasing => {
            let c = raw.dephasing.clone().unwrap();
            ck.count("dephasing.ensemble_size", c.ensemble_size, 1);
            ck.positive("dephasing.horizon", c.horizon);
            ck.positive("dephasing.dt_sample", c.dt_sample);
            Experiment::Dephasing(params.unwrap(), c)
        }
        ExperimentKind::Kubo => {
            let c = raw.kubo.clone().unwrap();
            ck.positive("kubo.horizon", c.horizon);
            ck.positive("kubo.dt", c.dt);
            ck.require(c.sigma_w >= 0.0 && c.sigma_w.is_finite(), "kubo.sigma_w", "must be non-negative");
            ck.require(c.omega0.is_finite(), "kubo.omega0", "must be finite");
            ck.count("kubo.traces", c.traces, 1);
            if c.omega0 != 0.0 {
                ck.require(
                    c.dt * c.omega0.abs() <= 0.1,
                    "kubo.dt",
                    "dt must be small against 1/omega0 (dt*|omega0| <= 0.1)",
                );
            }
            Experiment::Kubo(c)
        }
    };
    if !ck.errors.is_empty() {
        return Err(ck.errors);
    }
    Ok(RunConfig {
        kind,
        seed: raw.seed,
        output_dir: raw.output_dir.clone(),
        workers: raw.workers,
        experiment,
        raw,
    })
}

/// Human-readable schema printed by `gasrelax schema`.
pub const SCHEMA_TEXT: &str = r#"# gasrelax run configuration, schema_version = 1 (TOML)
#
# Unknown keys and duplicate keys are rejected. Exactly one experiment block,
# named after `experiment`, must be present.

schema_version = 1            # optional; must be 1
experiment = "chain"          # chain | time | boltzmann | ou-converge | crossings
                              # | hitting | temperature | dephasing | kubo
seed = 42                     # u64 master seed
output_dir = "out"            # optional; --output-dir overrides, $GASRELAX_OUTPUT_DIR is the fallback
workers = 0                   # optional; worker threads, 0 = all cores

[params]                      # required except for ou-converge and kubo
m_p = 3.0                     # mass of P, m_p >= m_q > 0
m_q = 1.0                     # mass of Q
sigma0_sq = 4.0               # initial velocity variance of P, > 0
sigmax_sq = 1.0               # velocity variance of Q, > 0
lambda = 2.0                  # collision rate, > 0

[chain]                       # -> chain.csv (trajectory_id,n,velocity)
n = 100                       #    chain_moments.csv (n,mean,variance,variance_se,theory_variance)
trials = 1000

[time]                        # -> time.csv (trajectory_id,jump_index,jump_time,velocity)
horizon = 4.0                 #    time_moments.csv (t,mean,variance,variance_se,theory_variance,mean_jumps)
trials = 100000               #    density.csv (v,density)
eval_times = [0.25, 1.0, 4.0]
export_trajectories = 100     # optional
density_time = 1.0            # optional; default last eval time
density_tol = 1e-12           # optional; Poisson tail tolerance
density_points = 401          # optional

[boltzmann]                   # -> density_snapshots.csv (t,v,f)
grid_points = 2048            #    boltzmann_summary.csv (t,mass,variance,theory_variance,l1_to_mixture,residual)
v_max = 20.0                  # optional
dt = 0.05                     # dt*lambda <= solver.max_dt_lambda
snapshot_times = [0.5, 1.0, 2.0]
[boltzmann.solver]            # optional
quadrature = "substitution"   # substitution | linear-interpolation
kernel_cutoff = 8.0
boundary_tol = 1e-8
step_mass_tol = 1e-8
clip_tol = 1e-6
max_dt_lambda = 0.1

[ou-converge]                 # -> ou_errors.csv (lambda_n,t,trial,abs_error)
alpha = 0.5                   #    ou_summary.csv (lambda_n,t,exceedance,ci_lo,ci_hi)
lambda_n = [10.0, 100.0, 1000.0, 10000.0]
sigma_x0 = 1.0
sigma0_sq = 1.0
t_eval = [1.0]
trials = 1000
epsilon = 0.1                 # optional

[crossings]                   # -> crossing_curve.csv (n,mean_w,se)
n_max = 200                   #    crossing_time.csv (t,mean_w,se,zero_fraction) if times given
trials = 10000                #    recurrence.csv (n_max,k,fraction,ci_lo,ci_hi) if recurrence given
times = [1.0, 10.0, 100.0]    # optional
[crossings.recurrence]        # optional
n_max = [100, 1000, 10000]
k = 10

[hitting]                     # -> hitting.csv (trial,n1,tau1,censored)
cap = 10000                   #    hitting_summary.csv (one row of summary fields)
trials = 100000

[temperature]                 # -> temperature.csv (ratio,lambda,bound,mean_tau1,ci_lo,ci_hi,censored_fraction)
ratios = [1.0, 2.0, 4.0]      #    sigma0_sq is set to ratio * sigmax_sq
mode = "fixed"                # fixed | kinetic-scaled (lambda = lambda / ratio)
cap = 10000
trials = 10000                # 0 = bounds only

[dephasing]                   # -> dephasing.csv (t,mean_ke,se)
ensemble_size = 10000         #    dephasing_states.csv (t,molecule,state) if record_states > 0
horizon = 20.0
dt_sample = 0.05
record_states = 4             # optional

[kubo]                        # -> kubo.csv (t,y,trace_id)
omega0 = 20.0
sigma_w = 3.0
horizon = 5.0
dt = 0.001                    # dt*|omega0| <= 0.1
traces = 2                    # optional
"#;
