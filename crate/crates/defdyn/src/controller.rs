//! Event-based switching of the per-node recovery probability.
//!
//! Each node runs in one of two defense modes: high-cost (`beta_plus`,
//! fast recovery) or low-cost (`beta_minus`, slow recovery). The scaled state
//! `m_v(t) = i_v(t) / p_v` is compared against two exponential envelopes
//!
//! ```text
//! phi_up(t)  = e^{-iota t}
//! phi_low(t) = L e^{-iota t},    0 < L < 1
//! ```
//!
//! A node in high-cost mode drops to low-cost as soon as `m_v <= phi_low`;
//! a node in low-cost mode returns to high-cost as soon as `m_v >= phi_up`.
//! Both comparisons are inclusive. The positive weights `p_v` come from a
//! diagonal scaling that certifies the high-cost dynamics outpace the target
//! rate `iota` (see [`compute_scaling`]); with them, the controlled state
//! decays like `phi_up` while spending a bounded share of time in the
//! expensive mode, and consecutive switching events per node stay separated
//! by at least `-ln L / iota` minus one grid step.

use serde::{Deserialize, Serialize};

use crate::dynamics::{grid_steps, step_euler, ModelParams, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{precontrol_check, spectral_radius, AttackDefenseGraph, SpectralReport};

/// Defense mode of a node; also the kind of the event that entered it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Strict reactive defense, recovery probability `beta_plus`.
    High,
    /// Relaxed reactive defense, recovery probability `beta_minus`.
    Low,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::High => "high",
            Mode::Low => "low",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "high" => Some(Mode::High),
            "low" => Some(Mode::Low),
            _ => None,
        }
    }

    fn opposite(self) -> Mode {
        match self {
            Mode::High => Mode::Low,
            Mode::Low => Mode::High,
        }
    }
}

/// Parameters of the switching controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingConfig {
    /// High-cost recovery probability.
    pub beta_plus: f64,
    /// Low-cost recovery probability.
    pub beta_minus: f64,
    /// Target exponential decay rate of the controlled state.
    pub iota: f64,
    /// Envelope ratio `L` in (0, 1); the switching corridor is
    /// `[L e^{-iota t}, e^{-iota t}]`.
    pub envelope_ratio: f64,
    /// Observation/control grid step.
    pub h: f64,
    /// End of the control horizon.
    pub horizon: f64,
}

impl SwitchingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_minus > 0.0 && self.beta_minus < self.beta_plus && self.beta_plus <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < beta_minus < beta_plus <= 1, got beta_minus = {}, beta_plus = {}",
                self.beta_minus, self.beta_plus
            )));
        }
        if !(self.iota > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "iota must be positive, got {}",
                self.iota
            )));
        }
        if !(self.envelope_ratio > 0.0 && self.envelope_ratio < 1.0) {
            // also rules out phi_low >= phi_up, the tie/chatter case
            return Err(Error::InvalidConfig(format!(
                "L must lie in (0, 1), got {}",
                self.envelope_ratio
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
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Upper envelope `e^{-iota t}`.
    pub fn phi_up(&self, t: f64) -> f64 {
        (-self.iota * t).exp()
    }

    /// Lower envelope `L e^{-iota t}`.
    pub fn phi_low(&self, t: f64) -> f64 {
        self.envelope_ratio * (-self.iota * t).exp()
    }

    /// Lower bound on the continuous low-to-high inter-event time,
    /// `-ln L / iota`. Grid realizations may undershoot by up to `h`.
    pub fn zeno_floor(&self) -> f64 {
        -self.envelope_ratio.ln() / self.iota
    }
}

/// Positive per-node weights certifying the feasibility condition; the
/// controller compares `i_v / p_v` against the envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector {
    p: Vec<f64>,
}

impl ScalingVector {
    /// Wrap explicit weights (all positive). Mostly useful in tests; prefer
    /// [`compute_scaling`].
    pub fn from_weights(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter(
                "scaling weights must be positive".into(),
            ));
        }
        Ok(ScalingVector { p })
    }

    pub fn weights(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Feasibility report for the scaled-decay condition: the weighted in-edge
/// operator must have spectral radius below `beta_plus - iota`.
#[derive(Debug, Clone)]
pub struct MMatrixReport {
    pub feasible: bool,
    /// `(beta_plus - iota) - lambda(K')`; positive iff feasible. When the
    /// diagonal itself is nonpositive the spectral part is skipped and this
    /// holds just `beta_plus - iota`.
    pub margin: f64,
    pub lambda_gamma: Option<f64>,
    pub spectral: Option<SpectralReport>,
}

/// Check that `(beta_plus - iota) I - K'` is a nonsingular M-matrix, where
/// `K'` is the gamma-weighted in-edge operator.
pub fn check_m_matrix(graph: &AttackDefenseGraph, beta_plus: f64, iota: f64) -> MMatrixReport {
    let diag = beta_plus - iota;
    if diag <= 0.0 {
        return MMatrixReport {
            feasible: false,
            margin: diag,
            lambda_gamma: None,
            spectral: None,
        };
    }
    let spectral = spectral_radius(&graph.gamma_in_operator(), 1e-10, 50_000)
        .expect("gamma operator with positive tolerance cannot fail");
    let lambda = spectral.lambda_max;
    MMatrixReport {
        feasible: lambda < diag,
        margin: diag - lambda,
        lambda_gamma: Some(lambda),
        spectral: Some(spectral),
    }
}

/// Componentwise value of the feasibility inequality for given weights:
/// `sum_u gamma_uv p_u + (iota - beta_plus) p_v`, which must be strictly
/// negative for every node.
pub fn lemma_margins(
    graph: &AttackDefenseGraph,
    scaling: &ScalingVector,
    beta_plus: f64,
    iota: f64,
) -> Vec<f64> {
    let p = scaling.weights();
    (0..graph.node_count())
        .map(|v| {
            let mut acc = (iota - beta_plus) * p[v];
            for &(u, g) in graph.in_edges(v) {
                acc += g * p[u as usize];
            }
            acc
        })
        .collect()
}

/// Construct the positive scaling weights by solving
/// `((beta_plus - iota) I - K') p = 1` with Jacobi iteration, then rescaling
/// so that `min_v p_v = 1`.
///
/// The iteration converges exactly when [`check_m_matrix`] passes; the
/// result is certified by re-checking the componentwise inequality.
pub fn compute_scaling(
    graph: &AttackDefenseGraph,
    beta_plus: f64,
    iota: f64,
) -> Result<ScalingVector> {
    const RESIDUAL_TOL: f64 = 1e-10;
    const MAX_ITER: usize = 500_000;

    let report = check_m_matrix(graph, beta_plus, iota);
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "scaled-decay condition fails: margin {} (lambda {:?}); \
             raise beta_plus or lower iota",
            report.margin, report.lambda_gamma
        )));
    }
    let n = graph.node_count();
    let diag = beta_plus - iota;
    let mut p = vec![1.0 / diag; n];
    let mut kp = vec![0.0; n];
    let op = graph.gamma_in_operator();
    let mut converged = false;
    for _ in 0..MAX_ITER {
        use crate::graph::LinearOperator;
        op.apply(&p, &mut kp);
        let residual = p
            .iter()
            .zip(&kp)
            .map(|(&pv, &kv)| (diag * pv - kv - 1.0).abs())
            .fold(0.0, f64::max);
        if residual <= RESIDUAL_TOL {
            converged = true;
            break;
        }
        for (pv, &kv) in p.iter_mut().zip(&kp) {
            *pv = (1.0 + kv) / diag;
        }
    }
    if !converged {
        return Err(Error::Infeasible(format!(
            "scaling iteration did not reach residual {RESIDUAL_TOL} within {MAX_ITER} sweeps; \
             spectral margin too thin; raise beta_plus or lower iota"
        )));
    }
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    for pv in p.iter_mut() {
        *pv /= min;
    }
    let scaling = ScalingVector { p };
    let worst = lemma_margins(graph, &scaling, beta_plus, iota)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        return Err(Error::Infeasible(format!(
            "scaling weights fail the componentwise inequality (worst {worst}); \
             margin too thin"
        )));
    }
    Ok(scaling)
}

/// Switch decision returned by [`trigger`]: `None` keeps the current mode.
pub fn trigger(mode: Mode, m: f64, t: f64, config: &SwitchingConfig) -> Option<Mode> {
    match mode {
        Mode::High if m <= config.phi_low(t) => Some(Mode::Low),
        Mode::Low if m >= config.phi_up(t) => Some(Mode::High),
        _ => None,
    }
}

/// Initial mode of a node from its scaled state at t = 0: at or above the
/// upper envelope starts high-cost, otherwise low-cost.
pub fn initial_mode(m0: f64) -> Mode {
    if m0 >= 1.0 {
        Mode::High
    } else {
        Mode::Low
    }
}

/// One switching event: at `time`, the node entered `kind`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: Mode,
}

/// Per-node switching histories. Every node logs its initial mode as an
/// event at t = 0; afterwards kinds strictly alternate.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Vec<Event>>,
    initial_mode: Vec<Mode>,
}

impl EventLog {
    pub fn new(n: usize) -> Self {
        EventLog {
            events: vec![Vec::new(); n],
            initial_mode: vec![Mode::Low; n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self, v: usize) -> &[Event] {
        &self.events[v]
    }

    pub fn initial_mode(&self, v: usize) -> Mode {
        self.initial_mode[v]
    }

    pub fn push(&mut self, v: usize, event: Event) {
        if self.events[v].is_empty() {
            self.initial_mode[v] = if event.time == 0.0 {
                event.kind
            } else {
                event.kind.opposite()
            };
        }
        self.events[v].push(event);
    }

    /// Times of high-cost events for a node.
    pub fn high_times(&self, v: usize) -> Vec<f64> {
        self.events[v]
            .iter()
            .filter(|e| e.kind == Mode::High)
            .map(|e| e.time)
            .collect()
    }

    /// Times of low-cost events for a node.
    pub fn low_times(&self, v: usize) -> Vec<f64> {
        self.events[v]
            .iter()
            .filter(|e| e.kind == Mode::Low)
            .map(|e| e.time)
            .collect()
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    /// Check that per-node event times strictly increase and kinds
    /// alternate.
    pub fn validate_alternation(&self) -> Result<()> {
        for (v, evs) in self.events.iter().enumerate() {
            for pair in evs.windows(2) {
                if pair[1].time <= pair[0].time {
                    return Err(Error::Artifact {
                        path: "<event log>".into(),
                        msg: format!("node {v}: event times not increasing"),
                    });
                }
                if pair[1].kind == pair[0].kind {
                    return Err(Error::Artifact {
                        path: "<event log>".into(),
                        msg: format!("node {v}: two adjacent {} events", pair[0].kind.as_str()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Write CSV rows `node,kind,time`, nodes ascending, times ascending.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "node,kind,time")?;
        for (v, evs) in self.events.iter().enumerate() {
            for e in evs {
                writeln!(w, "{v},{},{}", e.kind.as_str(), e.time)?;
            }
        }
        Ok(())
    }

    /// Read a CSV produced by [`write_csv`](Self::write_csv). Nodes absent
    /// from the file keep an empty history with low-cost initial mode; a
    /// node whose first event happens after t = 0 is assumed to have started
    /// in the opposite mode.
    pub fn read_csv(r: impl std::io::BufRead, n: usize) -> Result<Self> {
        let rows = Self::parse_rows(r)?;
        let mut log = EventLog::new(n);
        for (v, event) in rows {
            if v >= n {
                return Err(Error::Artifact {
                    path: "<event csv>".into(),
                    msg: format!("node {v} out of range for n = {n}"),
                });
            }
            log.push(v, event);
        }
        log.validate_alternation()?;
        Ok(log)
    }

    /// Read a CSV as [`read_csv`](Self::read_csv), inferring the node count
    /// from the largest node id. Controlled runs log every node at t = 0, so
    /// the inference is exact for this tool's own artifacts. Errors on an
    /// eventless file, where no count can be inferred.
    pub fn read_csv_infer(r: impl std::io::BufRead) -> Result<Self> {
        let rows = Self::parse_rows(r)?;
        let n = rows
            .iter()
            .map(|&(v, _)| v + 1)
            .max()
            .ok_or_else(|| Error::Artifact {
                path: "<event csv>".into(),
                msg: "no events; node count cannot be inferred".into(),
            })?;
        let mut log = EventLog::new(n);
        for (v, event) in rows {
            log.push(v, event);
        }
        log.validate_alternation()?;
        Ok(log)
    }

    fn parse_rows(r: impl std::io::BufRead) -> Result<Vec<(usize, Event)>> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "node,kind,time" {
            return Err(Error::Artifact {
                path: "<event csv>".into(),
                msg: format!("unexpected header {header:?}"),
            });
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let bad = |msg: &str| Error::Artifact {
                path: "<event csv>".into(),
                msg: format!("row {}: {msg}", idx + 1),
            };
            let v: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad node id"))?;
            let kind = fields
                .next()
                .and_then(Mode::parse)
                .ok_or_else(|| bad("bad kind"))?;
            let time: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad time"))?;
            rows.push((v, Event { time, kind }));
        }
        Ok(rows)
    }
}

/// Output of a controlled run.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRun {
    pub trajectory: Trajectory,
    pub events: EventLog,
}

/// Validate all feasibility preconditions for a controlled run.
///
/// Checks, in order: config ranges, the pre-control convergence condition
/// under `beta_minus`, and the M-matrix condition under `beta_plus`.
pub fn validate_feasibility(graph: &AttackDefenseGraph, config: &SwitchingConfig) -> Result<()> {
    config.validate()?;
    let pre = precontrol_check(graph, config.beta_minus)?;
    if !pre.ok {
        return Err(Error::Infeasible(format!(
            "pre-control check failed: beta_minus/gamma_max = {:.6} < lambda = {:.6} \
             (margin {:.6})",
            pre.ratio, pre.lambda_adjacency, pre.margin
        )));
    }
    let mm = check_m_matrix(graph, config.beta_plus, config.iota);
    if !mm.feasible {
        return Err(Error::Infeasible(format!(
            "M-matrix check failed: beta_plus - iota = {:.6}, lambda(K') = {:?} \
             (margin {:.6})",
            config.beta_plus - config.iota,
            mm.lambda_gamma,
            mm.margin
        )));
    }
    Ok(())
}

/// Run the event-switched closed loop with exact knowledge of the
/// probability state.
///
/// At every grid time the trigger is evaluated per node on
/// `m_v = i_v / p_v`, modes and the event log are updated, and one Euler
/// step of the push-only dynamics advances the state under the current
/// per-node recovery probabilities. Deterministic in its inputs.
pub fn run_control(
    graph: &AttackDefenseGraph,
    config: &SwitchingConfig,
    i0: &StateVector,
    scaling: &ScalingVector,
    record_stride: usize,
) -> Result<ControlRun> {
    run_switched_loop(
        graph,
        config,
        i0,
        scaling,
        record_stride,
        |_, state, m_out| {
            // exact loop: the controller sees the true probability state
            for (m, &iv) in m_out.iter_mut().zip(&state.i) {
                *m = iv;
            }
        },
    )
    .map(|(run, _)| run)
}

/// Shared grid loop for the exact and sampled controllers. The
/// `observe` callback fills the raw (unscaled) state estimate for the
/// current step; the loop divides by the weights, applies the trigger, and
/// advances the dynamics. Returns the run plus every recorded estimate row.
pub(crate) fn run_switched_loop(
    graph: &AttackDefenseGraph,
    config: &SwitchingConfig,
    i0: &StateVector,
    scaling: &ScalingVector,
    record_stride: usize,
    mut observe: impl FnMut(usize, &StateVector, &mut [f64]),
) -> Result<(ControlRun, Trajectory)> {
    let n = graph.node_count();
    if i0.i.len() != n {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} components for a {n}-node graph",
            i0.i.len()
        )));
    }
    if scaling.len() != n {
        return Err(Error::InvalidParameter(format!(
            "scaling vector has {} components for a {n}-node graph",
            scaling.len()
        )));
    }
    if record_stride == 0 {
        return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
    }
    validate_feasibility(graph, config)?;
    let margins = lemma_margins(graph, scaling, config.beta_plus, config.iota);
    if margins.iter().any(|&m| m >= 0.0) {
        return Err(Error::Infeasible(
            "scaling weights do not satisfy the componentwise inequality".into(),
        ));
    }

    let steps = grid_steps(config.horizon, config.h);
    let mut params = ModelParams {
        alpha: vec![0.0; n],
        beta: vec![config.beta_minus; n],
    };
    let mut modes = vec![Mode::Low; n];
    let mut events = EventLog::new(n);
    let mut trajectory = Trajectory::new();
    let mut estimates = Trajectory::new();
    let mut state = StateVector {
        i: i0.i.clone(),
        t: 0.0,
    };
    let p = scaling.weights();
    let mut observed = vec![0.0; n];

    for j in 0..=steps {
        let t = j as f64 * config.h;
        observe(j, &state, &mut observed);
        if j == 0 {
            for v in 0..n {
                let m0 = observed[v] / p[v];
                let mode = initial_mode(m0);
                modes[v] = mode;
                params.beta[v] = match mode {
                    Mode::High => config.beta_plus,
                    Mode::Low => config.beta_minus,
                };
                events.push(
                    v,
                    Event {
                        time: 0.0,
                        kind: mode,
                    },
                );
            }
        } else {
            for v in 0..n {
                let m = observed[v] / p[v];
                if let Some(next) = trigger(modes[v], m, t, config) {
                    modes[v] = next;
                    params.beta[v] = match next {
                        Mode::High => config.beta_plus,
                        Mode::Low => config.beta_minus,
                    };
                    events.push(
                        v,
                        Event {
                            time: t,
                            kind: next,
                        },
                    );
                }
            }
        }
        if j % record_stride == 0 || j == steps {
            trajectory.push(t, state.i.clone());
            estimates.push(t, observed.clone());
        }
        if j < steps {
            let (next, clamps) = step_euler(&state, &params, graph, config.h);
            state = next;
            state.t = (j + 1) as f64 * config.h;
            trajectory.clamp_events += clamps;
        }
    }
    Ok((ControlRun { trajectory, events }, estimates))
}
