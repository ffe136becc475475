//! Run configuration and the file-emitting drivers behind the CLI.
//!
//! A run is described by one JSON document (see [`RunConfig`]); the drivers
//! resolve it, run the requested mode, and write a self-contained artifact
//! directory:
//!
//! - `config.json` — the resolved configuration actually executed
//! - `trajectory.csv` — `t,i_0,...` rows of the true state
//! - `events.csv` — `node,kind,time` switching events (control modes)
//! - `estimates.csv` — `t,ihat_0,...` estimate rows (sampled mode)
//! - `samples.rle` — run-length-encoded observation bits (sampled mode)
//! - `report.json` — headline metrics, recomputable via [`cmd_metrics`]

use std::fs;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{compute_scaling, run_control, EventLog, ScalingVector, SwitchingConfig};
use crate::dynamics::{simulate, Integrator, ModelParams, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::estimation::{run_control_sampled, EstimatorConfig, EstimatorMode};
use crate::graph::{load_edge_list, AttackDefenseGraph};
use crate::metrics::{build_report, EstimatorSummary, RunReport, SpeedConfig};

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Free-running dynamics with fixed parameters.
    Simulate,
    /// Event-switched control on the exact probability state.
    Control,
    /// Event-switched control on sample-state estimates.
    ControlSampled,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::Control => "control",
            RunMode::ControlSampled => "control_sampled",
        }
    }
}

/// How the initial state is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Per-node uniform draw from [0, 1], seeded.
    UniformRandom,
    /// Every node starts at `i0_value`.
    Constant,
    /// Whitespace-separated values read from `i0_path`.
    File,
}

fn default_stride() -> usize {
    1
}

fn default_i0_value() -> f64 {
    0.5
}

fn default_window() -> f64 {
    30.0
}

fn default_c0() -> f64 {
    3.0
}

fn default_estimator() -> EstimatorMode {
    EstimatorMode::AdaptiveWindow
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_speed_dt() -> f64 {
    1.0
}

fn default_speed_burn_in() -> f64 {
    5.0
}

/// One self-contained run description, loaded from JSON and echoed next to
/// the outputs after resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Filled with the executed mode in the echoed snapshot; the subcommand
    /// wins over whatever the input file says.
    #[serde(default)]
    pub mode: Option<RunMode>,
    pub graph_path: PathBuf,
    pub directed: bool,
    pub seed: u64,
    /// Upper bound for the per-edge attack probabilities drawn at load time.
    pub gamma_max: f64,
    /// Uniform pull-attack probability; must be 0 for control runs.
    #[serde(default)]
    pub alpha: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    /// Fixed recovery probability for `simulate`; defaults to `beta_plus`
    /// (the classical always-strict policy).
    #[serde(default)]
    pub beta: Option<f64>,
    pub iota: f64,
    #[serde(rename = "L")]
    pub envelope_ratio: f64,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub i0_mode: InitMode,
    #[serde(default = "default_i0_value")]
    pub i0_value: f64,
    #[serde(default)]
    pub i0_path: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Restrict trajectory/estimate columns to these nodes.
    #[serde(default)]
    pub record_nodes: Option<Vec<usize>>,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorMode,
    #[serde(rename = "W", default = "default_window")]
    pub window: f64,
    #[serde(rename = "C0", default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_speed_dt")]
    pub speed_dt: f64,
    #[serde(default = "default_speed_burn_in")]
    pub speed_burn_in: f64,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn switching(&self) -> SwitchingConfig {
        SwitchingConfig {
            beta_plus: self.beta_plus,
            beta_minus: self.beta_minus,
            iota: self.iota,
            envelope_ratio: self.envelope_ratio,
            h: self.h,
            horizon: self.horizon,
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            window: self.window,
            c0: self.c0,
            mode: self.estimator,
        }
    }

    fn speed_config(&self) -> SpeedConfig {
        SpeedConfig {
            dt: self.speed_dt,
            burn_in: self.speed_burn_in,
            ..SpeedConfig::default()
        }
    }

    /// Range and cross-field checks that do not need the graph.
    pub fn validate(&self, mode: RunMode) -> Result<()> {
        if !(self.gamma_max > 0.0 && self.gamma_max <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma_max must lie in (0, 1], got {}",
                self.gamma_max
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.speed_dt > 0.0) || self.speed_burn_in < 0.0 {
            return Err(Error::InvalidConfig(
                "speed_dt must be positive and speed_burn_in nonnegative".into(),
            ));
        }
        if self.i0_mode == InitMode::Constant && !(0.0..=1.0).contains(&self.i0_value) {
            return Err(Error::InvalidConfig(format!(
                "i0_value must lie in [0, 1], got {}",
                self.i0_value
            )));
        }
        if self.i0_mode == InitMode::File && self.i0_path.is_none() {
            return Err(Error::InvalidConfig(
                "i0_mode = file requires i0_path".into(),
            ));
        }
        match mode {
            RunMode::Simulate => {
                let beta = self.beta.unwrap_or(self.beta_plus);
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "beta must lie in (0, 1], got {beta}"
                    )));
                }
            }
            RunMode::Control | RunMode::ControlSampled => {
                if self.alpha != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "control runs require alpha = 0 (pull attacks eliminated), got {}",
                        self.alpha
                    )));
                }
                self.switching().validate()?;
                if mode == RunMode::ControlSampled {
                    self.estimator_config().validate()?;
                }
            }
        }
        Ok(())
    }
}

// Stream labels for deriving independent sub-seeds from the config seed.
const SEED_GAMMA: u64 = 1;
const SEED_I0: u64 = 2;
const SEED_SAMPLES: u64 = 3;

fn sub_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 round over (seed, label)
    let mut z = seed ^ label.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Prepared {
    graph: AttackDefenseGraph,
    i0: StateVector,
    scaling: Option<ScalingVector>,
}

fn prepare(config: &RunConfig, mode: RunMode) -> Result<Prepared> {
    config.validate(mode)?;
    let text = fs::read_to_string(&config.graph_path).map_err(|e| Error::Artifact {
        path: config.graph_path.display().to_string(),
        msg: e.to_string(),
    })?;
    let graph = load_edge_list(&text, config.directed)?;
    let graph = graph.assign_gammas(config.gamma_max, sub_seed(config.seed, SEED_GAMMA))?;
    let n = graph.node_count();

    if let Some(nodes) = &config.record_nodes {
        if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidConfig(format!(
                "record_nodes entry {bad} out of range for a {n}-node graph"
            )));
        }
    }

    let i0 = match config.i0_mode {
        InitMode::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, SEED_I0));
            StateVector::new((0..n).map(|_| rng.random::<f64>()).collect(), 0.0)?
        }
        InitMode::Constant => StateVector::new(vec![config.i0_value; n], 0.0)?,
        InitMode::File => {
            let path = config.i0_path.as_ref().expect("validated");
            let text = fs::read_to_string(path).map_err(|e| Error::Artifact {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            let values: Vec<f64> = text
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Artifact {
                        path: path.display().to_string(),
                        msg: format!("bad initial value {s:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != n {
                return Err(Error::Artifact {
                    path: path.display().to_string(),
                    msg: format!("{} initial values for a {n}-node graph", values.len()),
                });
            }
            StateVector::new(values, 0.0)?
        }
    };

    let scaling = match mode {
        RunMode::Simulate => None,
        RunMode::Control | RunMode::ControlSampled => {
            // fail on the first violated check, in the documented order
            crate::controller::validate_feasibility(&graph, &config.switching())?;
            Some(compute_scaling(&graph, config.beta_plus, config.iota)?)
        }
    };
    Ok(Prepared { graph, i0, scaling })
}

/// Report plus everything the caller may want to surface.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub warnings: Vec<String>,
    pub out_dir: PathBuf,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// report.json plus the one-row report.csv used for sweep aggregation.
fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("report.csv"))?);
    writeln!(w, "{}", RunReport::CSV_HEADER)?;
    writeln!(w, "{}", report.to_csv_row())?;
    Ok(())
}

fn write_artifacts(
    out_dir: &Path,
    config: &RunConfig,
    mode: RunMode,
    trajectory: &Trajectory,
    events: Option<&EventLog>,
    estimates: Option<&Trajectory>,
    trace: Option<&crate::estimation::SampleTrace>,
    report: &RunReport,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut echoed = config.clone();
    echoed.mode = Some(mode);
    echoed.out_dir = out_dir.to_path_buf();
    write_json(&out_dir.join("config.json"), &echoed)?;

    let subset = config.record_nodes.as_deref();
    let mut w = BufWriter::new(fs::File::create(out_dir.join("trajectory.csv"))?);
    trajectory.write_csv(&mut w, subset)?;
    if let Some(log) = events {
        let mut w = BufWriter::new(fs::File::create(out_dir.join("events.csv"))?);
        log.write_csv(&mut w)?;
    }
    if let Some(est) = estimates {
        let mut w = BufWriter::new(fs::File::create(out_dir.join("estimates.csv"))?);
        est.write_csv_with_prefix(&mut w, subset, "ihat")?;
    }
    if let Some(trace) = trace {
        let mut w = BufWriter::new(fs::File::create(out_dir.join("samples.rle"))?);
        trace.write_rle(&mut w)?;
    }
    write_report(out_dir, report)?;
    Ok(())
}

/// Free-running dynamics with fixed parameters; writes trajectory and report.
pub fn cmd_simulate(config: &RunConfig) -> Result<RunOutput> {
    let prepared = prepare(config, RunMode::Simulate)?;
    let beta = config.beta.unwrap_or(config.beta_plus);
    let n = prepared.graph.node_count();
    let params = ModelParams {
        alpha: vec![config.alpha; n],
        beta: vec![beta; n],
    };
    let trajectory = simulate(
        &prepared.graph,
        &params,
        &prepared.i0,
        config.h,
        config.horizon,
        config.record_stride,
        Integrator::Euler,
    )?;
    let report = build_report(
        RunMode::Simulate.as_str(),
        Some(config.seed),
        config.horizon,
        config.iota,
        &trajectory,
        None,
        None,
        &config.speed_config(),
        None,
    );
    write_artifacts(
        &config.out_dir,
        config,
        RunMode::Simulate,
        &trajectory,
        None,
        None,
        None,
        &report,
    )?;
    Ok(RunOutput {
        report,
        warnings: clamp_warnings(&trajectory),
        out_dir: config.out_dir.clone(),
    })
}

/// Event-switched control on the exact state; writes trajectory, events, and
/// report.
pub fn cmd_control(config: &RunConfig) -> Result<RunOutput> {
    let prepared = prepare(config, RunMode::Control)?;
    let scaling = prepared
        .scaling
        .as_ref()
        .expect("control mode computes scaling");
    let switching = config.switching();
    let run = run_control(
        &prepared.graph,
        &switching,
        &prepared.i0,
        scaling,
        config.record_stride,
    )?;
    let report = build_report(
        RunMode::Control.as_str(),
        Some(config.seed),
        config.horizon,
        config.iota,
        &run.trajectory,
        Some(&run.events),
        Some(switching.zeno_floor()),
        &config.speed_config(),
        None,
    );
    write_artifacts(
        &config.out_dir,
        config,
        RunMode::Control,
        &run.trajectory,
        Some(&run.events),
        None,
        None,
        &report,
    )?;
    Ok(RunOutput {
        report,
        warnings: clamp_warnings(&run.trajectory),
        out_dir: config.out_dir.clone(),
    })
}

/// Event-switched control on sample-state estimates; writes trajectory,
/// events, estimates, observation bits, and report.
pub fn cmd_control_sampled(config: &RunConfig) -> Result<RunOutput> {
    let prepared = prepare(config, RunMode::ControlSampled)?;
    let scaling = prepared
        .scaling
        .as_ref()
        .expect("control mode computes scaling");
    let switching = config.switching();
    let estimator = config.estimator_config();
    let mut warnings = Vec::new();
    let (steps, rounded) = estimator.steps_per_window(config.h);
    if rounded {
        warnings.push(format!(
            "window {} is not a multiple of h = {}; rounded up to {} ({} steps)",
            estimator.window,
            config.h,
            estimator.effective_window(config.h),
            steps
        ));
    }
    let run = run_control_sampled(
        &prepared.graph,
        &switching,
        &estimator,
        &prepared.i0,
        scaling,
        sub_seed(config.seed, SEED_SAMPLES),
        config.record_stride,
    )?;
    let summary = EstimatorSummary {
        mode: estimator.mode.as_str().to_string(),
        window: estimator.window,
        effective_window: estimator.effective_window(config.h),
        window_rounded: rounded,
        c0: estimator.c0,
        partial_estimates: run.partial_estimates,
    };
    let report = build_report(
        RunMode::ControlSampled.as_str(),
        Some(config.seed),
        config.horizon,
        config.iota,
        &run.control.trajectory,
        Some(&run.control.events),
        Some(switching.zeno_floor()),
        &config.speed_config(),
        Some(summary),
    );
    write_artifacts(
        &config.out_dir,
        config,
        RunMode::ControlSampled,
        &run.control.trajectory,
        Some(&run.control.events),
        Some(&run.estimates),
        Some(&run.trace),
        &report,
    )?;
    warnings.extend(clamp_warnings(&run.control.trajectory));
    Ok(RunOutput {
        report,
        warnings,
        out_dir: config.out_dir.clone(),
    })
}

fn clamp_warnings(trajectory: &Trajectory) -> Vec<String> {
    if trajectory.clamp_events > 0 {
        vec![format!(
            "{} state components were clamped beyond tolerance; consider a smaller h",
            trajectory.clamp_events
        )]
    } else {
        Vec::new()
    }
}

/// Recompute `report.json` for a finished run directory from its stored
/// artifacts.
///
/// Uses `config.json` for parameters and `trajectory.csv`/`events.csv` for
/// data. Estimator usage counters are not recoverable from artifacts and are
/// reported as zero. When the run recorded a `record_nodes` column subset,
/// the speed index (and the report's `n`) reflect the recorded columns;
/// event-derived quantities always cover every node.
pub fn cmd_metrics(dir: &Path) -> Result<RunOutput> {
    let config = RunConfig::from_file(&dir.join("config.json"))?;
    let mode = config.mode.ok_or_else(|| Error::Artifact {
        path: dir.join("config.json").display().to_string(),
        msg: "stored config has no mode".into(),
    })?;
    let mut r = BufReader::new(fs::File::open(dir.join("trajectory.csv"))?);
    let trajectory = Trajectory::read_csv(&mut r)?;

    let events = if mode == RunMode::Simulate {
        None
    } else {
        // the event log covers every node even when the trajectory was
        // recorded for a column subset
        let mut r = BufReader::new(fs::File::open(dir.join("events.csv"))?);
        Some(EventLog::read_csv_infer(&mut r)?)
    };
    let estimator = (mode == RunMode::ControlSampled).then(|| {
        let est = config.estimator_config();
        let (_, rounded) = est.steps_per_window(config.h);
        EstimatorSummary {
            mode: est.mode.as_str().to_string(),
            window: est.window,
            effective_window: est.effective_window(config.h),
            window_rounded: rounded,
            c0: est.c0,
            partial_estimates: 0,
        }
    });
    let zeno_floor = events.is_some().then(|| config.switching().zeno_floor());
    let report = build_report(
        mode.as_str(),
        Some(config.seed),
        config.horizon,
        config.iota,
        &trajectory,
        events.as_ref(),
        zeno_floor,
        &config.speed_config(),
        estimator,
    );
    write_report(dir, &report)?;
    Ok(RunOutput {
        report,
        warnings: Vec::new(),
        out_dir: dir.to_path_buf(),
    })
}
