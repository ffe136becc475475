//! Simulation and event-switched control of compromise/recovery dynamics on
//! attack-defense graphs.
//!
//! The toolkit covers the full loop from topology to evaluation:
//!
//! - [`graph`]: SNAP-format edge-list loading, per-edge attack probabilities,
//!   power-iteration spectral analysis, and the pre-control feasibility check.
//! - [`dynamics`]: the continuous compromise dynamics, integrated with
//!   explicit Euler on the control grid (RK4 kept as a verification oracle).
//! - [`controller`]: the diagonal scaling construction, the two-envelope
//!   trigger rule, and the event-switched closed loop with per-node event
//!   logs.
//! - [`estimation`]: 0/1 observation fabrication, full-history and windowed
//!   occupancy estimators (fixed or adaptive window), and the closed loop
//!   driven by estimates instead of exact states.
//! - [`metrics`]: exponential speed index, high-cost duty ratio, inter-event
//!   gap statistics, and the consolidated run report.
//! - [`run`]: configuration loading, validation, and the file-emitting run
//!   drivers behind the `defdyn` binary.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example graph_spectrum      # load, weight, and analyze a graph
//! cargo run --example free_dynamics      # uncontrolled trajectories, Euler vs RK4
//! cargo run --example scaling_vector     # feasibility check and scaling weights
//! cargo run --example switched_control   # the event-switched closed loop
//! cargo run --example window_estimators  # occupancy estimation from 0/1 samples
//! cargo run --example sampled_control    # the closed loop driven by estimates
//! ```
//!
//! The `defdyn` binary wires the same pieces behind `simulate`, `control`,
//! `control-sampled`, and `metrics` subcommands; see the README.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod metrics;
pub mod run;

pub use controller::{
    check_m_matrix, compute_scaling, initial_mode, lemma_margins, run_control, trigger,
    validate_feasibility, ControlRun, Event, EventLog, MMatrixReport, Mode, ScalingVector,
    SwitchingConfig,
};
pub use dynamics::{
    derivative, grid_steps, simulate, step_euler, step_rk4, theta_penetration, Integrator,
    ModelParams, StateVector, Trajectory,
};
pub use error::{Error, Result};
pub use estimation::{
    adaptive_window, adaptive_window_steps, full_history_estimate, run_control_sampled,
    sample_state, window_estimate, EstimatorConfig, EstimatorMode, SampleStream, SampleTrace,
    SampledRun,
};
pub use graph::{
    erdos_renyi_edge_list, load_edge_list, precontrol_check, precontrol_holds, spectral_radius,
    AttackDefenseGraph, LinearOperator, PrecontrolReport, SpectralReport,
};
pub use metrics::{
    build_report, cost_ratio, gap_stats, speed_index, speed_index_series, EstimatorSummary,
    GapStats, RunReport, SpeedConfig, SpeedStats,
};
pub use run::{cmd_control, cmd_control_sampled, cmd_metrics, cmd_simulate, RunConfig, RunMode};
