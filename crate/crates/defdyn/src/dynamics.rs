//! Continuous-time compromise/recovery dynamics on a graph, integrated on a
//! fixed grid.
//!
//! Each node carries a compromise probability `i_v(t)`. The per-node rate is
//!
//! ```text
//! f_v(i) = -beta_v i_v + theta_v(i) (1 - i_v)
//! theta_v(i) = 1 - (1 - alpha_v) prod_{u in N_v} (1 - gamma_uv i_u)
//! ```
//!
//! where `alpha_v` is the pull-attack probability, `beta_v` the recovery
//! probability, and the product runs over in-neighbors. The primary
//! integrator is explicit Euler on the control grid `h`; a classical RK4
//! step of the same field is kept as a verification oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AttackDefenseGraph;

/// Excursions beyond [0, 1] larger than this count as real clamp events;
/// smaller ones are float dust.
pub const CLAMP_TOL: f64 = 1e-12;

/// Node count below which stepping stays single-threaded.
const PAR_THRESHOLD: usize = 1024;

/// Per-node compromise probabilities at a point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub i: Vec<f64>,
    pub t: f64,
}

impl StateVector {
    pub fn new(i: Vec<f64>, t: f64) -> Result<Self> {
        for (v, &x) in i.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "state component {v} = {x} outside [0, 1]"
                )));
            }
        }
        Ok(StateVector { i, t })
    }

    pub fn zeros(n: usize) -> Self {
        StateVector {
            i: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.i.iter().map(|x| x.abs()).sum()
    }
}

/// Per-node model parameters. After pre-control, `alpha` is all zeros and
/// `beta` is whatever the controller currently maintains.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ModelParams {
    pub fn uniform(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(ModelParams {
            alpha: vec![alpha; n],
            beta: vec![beta; n],
        })
    }

    /// All pull attacks eliminated (`alpha = 0`), uniform recovery `beta`.
    pub fn push_only(n: usize, beta: f64) -> Result<Self> {
        Self::uniform(n, 0.0, beta)
    }
}

/// Probability that at least one attack penetrates node `v`'s preventive
/// defenses given the current state: pull attack with probability
/// `alpha_v`, plus one independent push attempt per compromised in-neighbor.
pub fn theta_penetration(
    v: usize,
    state: &StateVector,
    params: &ModelParams,
    graph: &AttackDefenseGraph,
) -> f64 {
    let mut survive = 1.0 - params.alpha[v];
    for &(u, g) in graph.in_edges(v) {
        survive *= 1.0 - g * state.i[u as usize];
    }
    1.0 - survive
}

fn rate(v: usize, i: &[f64], params: &ModelParams, graph: &AttackDefenseGraph) -> f64 {
    let iv = i[v];
    let mut survive = 1.0 - params.alpha[v];
    for &(u, g) in graph.in_edges(v) {
        survive *= 1.0 - g * i[u as usize];
    }
    let theta = 1.0 - survive;
    -params.beta[v] * iv + theta * (1.0 - iv)
}

fn derivative_at(i: &[f64], params: &ModelParams, graph: &AttackDefenseGraph, out: &mut [f64]) {
    let n = i.len();
    if n >= PAR_THRESHOLD {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(v, o)| *o = rate(v, i, params, graph));
    } else {
        for (v, o) in out.iter_mut().enumerate() {
            *o = rate(v, i, params, graph);
        }
    }
}

/// Per-node rate vector of the dynamics at the given state.
pub fn derivative(
    state: &StateVector,
    params: &ModelParams,
    graph: &AttackDefenseGraph,
) -> Vec<f64> {
    let mut out = vec![0.0; state.i.len()];
    derivative_at(&state.i, params, graph, &mut out);
    out
}

fn clamp_into(raw: &[f64], out: &mut [f64]) -> usize {
    let mut clamps = 0;
    for (o, &x) in out.iter_mut().zip(raw) {
        if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&x) {
            clamps += 1;
        }
        *o = x.clamp(0.0, 1.0);
    }
    clamps
}

/// One explicit Euler step of length `h`, clamped to `[0, 1]^n`.
///
/// Returns the advanced state and the number of components clamped beyond
/// [`CLAMP_TOL`].
pub fn step_euler(
    state: &StateVector,
    params: &ModelParams,
    graph: &AttackDefenseGraph,
    h: f64,
) -> (StateVector, usize) {
    let n = state.i.len();
    let mut f = vec![0.0; n];
    derivative_at(&state.i, params, graph, &mut f);
    let raw: Vec<f64> = state
        .i
        .iter()
        .zip(&f)
        .map(|(&iv, &fv)| iv + h * fv)
        .collect();
    let mut i = vec![0.0; n];
    let clamps = clamp_into(&raw, &mut i);
    (StateVector { i, t: state.t + h }, clamps)
}

/// One classical fourth-order Runge-Kutta step of the same field, clamped to
/// `[0, 1]^n`. Verification oracle for [`step_euler`].
pub fn step_rk4(
    state: &StateVector,
    params: &ModelParams,
    graph: &AttackDefenseGraph,
    h: f64,
) -> (StateVector, usize) {
    let n = state.i.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];

    derivative_at(&state.i, params, graph, &mut k1);
    for v in 0..n {
        stage[v] = state.i[v] + 0.5 * h * k1[v];
    }
    derivative_at(&stage, params, graph, &mut k2);
    for v in 0..n {
        stage[v] = state.i[v] + 0.5 * h * k2[v];
    }
    derivative_at(&stage, params, graph, &mut k3);
    for v in 0..n {
        stage[v] = state.i[v] + h * k3[v];
    }
    derivative_at(&stage, params, graph, &mut k4);

    let raw: Vec<f64> = (0..n)
        .map(|v| state.i[v] + h / 6.0 * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]))
        .collect();
    let mut i = vec![0.0; n];
    let clamps = clamp_into(&raw, &mut i);
    (StateVector { i, t: state.t + h }, clamps)
}

/// Which one-step integrator a simulation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Number of grid steps covering `[0, horizon]` with step `h`.
///
/// Near-integer step counts (within 1e-6 steps) round instead of ceiling so
/// that horizons like 100 with h = 0.025 land on exactly 4000 steps.
pub fn grid_steps(horizon: f64, h: f64) -> usize {
    let steps = horizon / h;
    let rounded = steps.round();
    if (steps - rounded).abs() < 1e-6 {
        rounded as usize
    } else {
        steps.ceil() as usize
    }
}

/// A recorded trajectory: one row per recorded grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Total clamp events over the whole run (all steps, recorded or not).
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory {
            times: Vec::new(),
            rows: Vec::new(),
            clamp_events: 0,
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        self.times.push(t);
        self.rows.push(row);
    }

    /// l1 norm of every recorded row.
    pub fn l1_norms(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum())
            .collect()
    }

    /// Write CSV with header `t,i_0,...`; `subset` restricts the node
    /// columns, `None` writes all nodes.
    pub fn write_csv(&self, w: &mut impl std::io::Write, subset: Option<&[usize]>) -> Result<()> {
        self.write_csv_with_prefix(w, subset, "i")
    }

    pub(crate) fn write_csv_with_prefix(
        &self,
        w: &mut impl std::io::Write,
        subset: Option<&[usize]>,
        prefix: &str,
    ) -> Result<()> {
        let n = self.rows.first().map_or(0, Vec::len);
        let columns: Vec<usize> = match subset {
            Some(s) => s.to_vec(),
            None => (0..n).collect(),
        };
        let mut header = String::from("t");
        for &c in &columns {
            header.push_str(&format!(",{prefix}_{c}"));
        }
        writeln!(w, "{header}")?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let mut line = format!("{t}");
            for &c in &columns {
                line.push_str(&format!(",{}", row[c]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Read a CSV produced by [`write_csv`](Self::write_csv).
    pub fn read_csv(r: impl std::io::BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Artifact {
            path: "<trajectory csv>".into(),
            msg: "missing header".into(),
        })?;
        let cols = header.split(',').count();
        let mut traj = Trajectory::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|x| x.parse::<f64>().ok())
                    .ok_or_else(|| Error::Artifact {
                        path: "<trajectory csv>".into(),
                        msg: format!("bad numeric field on data row {}", idx + 1),
                    })
            };
            let t = parse(fields.next())?;
            let mut row = Vec::with_capacity(cols - 1);
            for f in fields {
                row.push(parse(Some(f))?);
            }
            if row.len() != cols - 1 {
                return Err(Error::Artifact {
                    path: "<trajectory csv>".into(),
                    msg: format!(
                        "row {} has {} fields, expected {}",
                        idx + 1,
                        row.len(),
                        cols - 1
                    ),
                });
            }
            traj.push(t, row);
        }
        Ok(traj)
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

/// Integrate the free-running dynamics (fixed parameters) over
/// `[0, horizon]`, recording every `record_stride`-th grid point plus the
/// final one.
pub fn simulate(
    graph: &AttackDefenseGraph,
    params: &ModelParams,
    i0: &StateVector,
    h: f64,
    horizon: f64,
    record_stride: usize,
    integrator: Integrator,
) -> Result<Trajectory> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step length must be positive, got {h}"
        )));
    }
    if record_stride == 0 {
        return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
    }
    let steps = grid_steps(horizon, h);
    let mut traj = Trajectory::new();
    let mut state = StateVector {
        i: i0.i.clone(),
        t: 0.0,
    };
    for j in 0..=steps {
        let t = j as f64 * h;
        if j % record_stride == 0 || j == steps {
            traj.push(t, state.i.clone());
        }
        if j < steps {
            let (next, clamps) = match integrator {
                Integrator::Euler => step_euler(&state, params, graph, h),
                Integrator::Rk4 => step_rk4(&state, params, graph, h),
            };
            state = next;
            state.t = (j + 1) as f64 * h; // grid times stay exact multiples
            traj.clamp_events += clamps;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;

    fn single_node_graph() -> AttackDefenseGraph {
        // One isolated node needs an edge to exist in the loader, so build a
        // two-node graph and look at node 1 (no in-edges).
        load_edge_list("1 0\n", true).unwrap()
    }

    #[test]
    fn theta_empty_neighborhood_is_zero() {
        let g = single_node_graph();
        let state = StateVector::new(vec![1.0, 1.0], 0.0).unwrap();
        let params = ModelParams::push_only(2, 0.5).unwrap();
        // node 1 has no in-edges
        assert_eq!(theta_penetration(1, &state, &params, &g), 0.0);
    }

    #[test]
    fn theta_hand_value() {
        // alpha = 0.5, one neighbor with gamma = 0.5 fully compromised:
        // 1 - 0.5 * 0.5 = 0.75
        let g = AttackDefenseGraph::from_weighted_edges(2, &[(0, 1, 0.5)], true).unwrap();
        let state = StateVector::new(vec![1.0, 0.0], 0.0).unwrap();
        let params = ModelParams::uniform(2, 0.5, 0.5).unwrap();
        assert!((theta_penetration(1, &state, &params, &g) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn theta_no_compromised_neighbors() {
        let g =
            AttackDefenseGraph::from_weighted_edges(3, &[(0, 2, 0.1), (1, 2, 0.1)], true).unwrap();
        let state = StateVector::new(vec![0.0, 0.0, 0.3], 0.0).unwrap();
        let params = ModelParams::push_only(3, 0.5).unwrap();
        assert_eq!(theta_penetration(2, &state, &params, &g), 0.0);
    }

    #[test]
    fn derivative_zero_state_is_equilibrium() {
        let g = load_edge_list("0 1\n1 2\n2 0\n", true).unwrap();
        let params = ModelParams::push_only(3, 0.7).unwrap();
        let state = StateVector::zeros(3);
        assert_eq!(derivative(&state, &params, &g), vec![0.0; 3]);
    }

    #[test]
    fn derivative_fully_compromised() {
        let g = load_edge_list("0 1\n1 0\n", true).unwrap();
        let params = ModelParams::push_only(2, 0.4).unwrap();
        let state = StateVector::new(vec![1.0, 1.0], 0.0).unwrap();
        let f = derivative(&state, &params, &g);
        for fv in f {
            assert!((fv + 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_single_node_hand_value() {
        // alpha = 0.2, beta = 0.5, i = 0.5: f = -0.25 + 0.2 * 0.5 = -0.15
        let g = single_node_graph();
        let params = ModelParams::uniform(2, 0.2, 0.5).unwrap();
        let state = StateVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let f = derivative(&state, &params, &g);
        assert!((f[1] + 0.15).abs() < 1e-15, "f = {f:?}");
    }

    #[test]
    fn euler_step_hand_value() {
        // beta = 0.5, i = 1, h = 0.025: i' = 1 - 0.0125 = 0.9875
        let g = single_node_graph();
        let params = ModelParams::push_only(2, 0.5).unwrap();
        let state = StateVector::new(vec![0.0, 1.0], 0.0).unwrap();
        let (next, clamps) = step_euler(&state, &params, &g, 0.025);
        assert_eq!(clamps, 0);
        assert!((next.i[1] - 0.9875).abs() < 1e-15);
    }

    #[test]
    fn euler_zero_step_is_identity() {
        let g = load_edge_list("0 1\n", true).unwrap();
        let params = ModelParams::push_only(2, 0.5).unwrap();
        let state = StateVector::new(vec![0.3, 0.8], 1.5).unwrap();
        let (next, _) = step_euler(&state, &params, &g, 0.0);
        assert_eq!(next.i, state.i);
    }

    #[test]
    fn derivative_bitwise_identical_across_worker_counts() {
        // n above PAR_THRESHOLD so the parallel path actually runs
        use rand::Rng;
        use rand::SeedableRng;
        let n = 2000;
        let text = crate::graph::erdos_renyi_edge_list(n, 6.0, 99);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(0.002, 99).unwrap();
        let n = g.node_count();
        assert!(n >= PAR_THRESHOLD);
        let params = ModelParams::push_only(n, 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let state = StateVector::new((0..n).map(|_| rng.random::<f64>()).collect(), 0.0).unwrap();

        let under_pool = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| derivative(&state, &params, &g))
        };
        let one = under_pool(1);
        let many = under_pool(8);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&many));
    }

    // slow-path smoke at the spec's upper graph scale; run with --ignored
    #[test]
    #[ignore]
    fn large_graph_control_smoke() {
        use rand::Rng;
        use rand::SeedableRng;
        let text = crate::graph::erdos_renyi_edge_list(10_000, 6.0, 5);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(0.002, 5).unwrap();
        let n = g.node_count();
        let config = crate::controller::SwitchingConfig {
            beta_plus: 0.8,
            beta_minus: 0.1,
            iota: 0.5,
            envelope_ratio: 0.5,
            h: 0.025,
            horizon: 10.0,
        };
        let scaling = crate::controller::compute_scaling(&g, 0.8, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let i0 = StateVector::new((0..n).map(|_| rng.random::<f64>()).collect(), 0.0).unwrap();
        let run = crate::controller::run_control(&g, &config, &i0, &scaling, 40).unwrap();
        run.events.validate_alternation().unwrap();
        assert_eq!(run.trajectory.clamp_events, 0);
    }

    #[test]
    fn rk4_matches_exponential_on_isolated_node() {
        // Node with no in-edges and alpha = 0 decays exactly as e^{-beta t}.
        let g = single_node_graph();
        let beta = 0.5;
        let params = ModelParams::push_only(2, beta).unwrap();
        let h = 0.025;
        let mut state = StateVector::new(vec![0.0, 1.0], 0.0).unwrap();
        for _ in 0..400 {
            state = step_rk4(&state, &params, &g, h).0;
        }
        let exact = (-beta * 10.0f64).exp();
        // local error O(h^5) accumulates to O(h^4) over T/h steps
        assert!(
            (state.i[1] - exact).abs() < 1e-9,
            "rk4 {} vs exact {exact}",
            state.i[1]
        );
    }

    #[test]
    fn euler_matches_exponential_within_first_order() {
        let g = single_node_graph();
        let beta = 0.1;
        let params = ModelParams::push_only(2, beta).unwrap();
        let i0 = StateVector::new(vec![0.0, 1.0], 0.0).unwrap();
        let traj = simulate(&g, &params, &i0, 0.025, 10.0, 400, Integrator::Euler).unwrap();
        let last = traj.rows.last().unwrap()[1];
        let exact = (-beta * 10.0f64).exp();
        let rel = (last - exact).abs() / exact;
        assert!(rel < 2e-2, "relative error {rel}");
    }

    #[test]
    fn euler_rk4_richardson_consistency() {
        // One Euler step at h vs two at h/2: difference O(h^2); against RK4
        // the single-step gap is also O(h^2). Halving h divides both by ~4.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let text = crate::graph::erdos_renyi_edge_list(12, 3.0, 3);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(0.3, 9).unwrap();
        let n = g.node_count();
        let params = ModelParams::push_only(n, 0.6).unwrap();
        let i: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let state = StateVector::new(i, 0.0).unwrap();

        let gap = |h: f64| {
            let e = step_euler(&state, &params, &g, h).0;
            let r = step_rk4(&state, &params, &g, h).0;
            e.i.iter()
                .zip(&r.i)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let g1 = gap(0.1);
        let g2 = gap(0.05);
        assert!(g2 < g1 / 2.5, "no O(h^2) shrink: {g1} -> {g2}");
    }

    #[test]
    fn forward_invariance_no_clamps_on_valid_grid() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let text = crate::graph::erdos_renyi_edge_list(30, 4.0, 5);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(1.0, 2).unwrap();
        let n = g.node_count();
        let params = ModelParams::push_only(n, 1.0).unwrap();
        let i: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let i0 = StateVector::new(i, 0.0).unwrap();
        let traj = simulate(&g, &params, &i0, 0.025, 20.0, 1, Integrator::Euler).unwrap();
        assert_eq!(traj.clamp_events, 0);
        for row in &traj.rows {
            for &x in row {
                assert!((0.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn l1_decay_under_precontrol_condition() {
        let text = crate::graph::erdos_renyi_edge_list(40, 4.0, 8);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(0.002, 3).unwrap();
        let n = g.node_count();
        let rep = crate::graph::precontrol_check(&g, 0.1).unwrap();
        assert!(rep.ok, "fixture must satisfy the pre-control condition");
        let params = ModelParams::push_only(n, 0.1).unwrap();
        let i0 = StateVector::new(vec![0.9; n], 0.0).unwrap();
        let traj = simulate(&g, &params, &i0, 0.025, 500.0, 200, Integrator::Euler).unwrap();
        let norms = traj.l1_norms();
        assert!(
            norms.last().unwrap() / (n as f64) < 1e-6,
            "{:?}",
            norms.last()
        );
        // strictly decreasing once small
        let mut below = false;
        for w in norms.windows(2) {
            if w[0] / (n as f64) < 1e-2 {
                below = true;
            }
            if below && w[1] > 0.0 {
                assert!(w[1] < w[0], "l1 norm rose from {} to {}", w[0], w[1]);
            }
        }
        assert!(below);
    }

    #[test]
    fn grid_steps_rounds_cleanly() {
        assert_eq!(grid_steps(100.0, 0.025), 4000);
        assert_eq!(grid_steps(500.0, 0.025), 20000);
        assert_eq!(grid_steps(1.0, 0.3), 4); // 3.33 -> ceil
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let mut traj = Trajectory::new();
        traj.push(0.0, vec![0.25, 0.5]);
        traj.push(0.025, vec![0.2499999999999999, 0.1]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, None).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,i_0,i_1\n"));
        let back = Trajectory::read_csv(&mut &buf[..]).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.rows, traj.rows);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_model() -> impl Strategy<Value = (AttackDefenseGraph, Vec<f64>, Vec<f64>)> {
            // up to 12 nodes, random edges, gammas, betas, and a state
            (2usize..12).prop_flat_map(|n| {
                let edges =
                    proptest::collection::vec((0..n as u32, 0..n as u32, 1e-6..=1.0f64), 1..n * 3);
                let state = proptest::collection::vec(0.0..=1.0f64, n);
                let betas = proptest::collection::vec(0.01..=1.0f64, n);
                (Just(n), edges, state, betas).prop_filter_map(
                    "needs one non-loop edge",
                    |(n, edges, state, betas)| {
                        let edges: Vec<_> = edges.into_iter().filter(|(u, v, _)| u != v).collect();
                        let graph =
                            AttackDefenseGraph::from_weighted_edges(n, &edges, true).ok()?;
                        Some((graph, state, betas))
                    },
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // push-only rates never exceed the linear comparison system
            // -beta_v i_v + sum_u gamma_uv i_u
            #[test]
            fn derivative_below_linear_bound((graph, state, betas) in arbitrary_model()) {
                let n = graph.node_count();
                let params = ModelParams { alpha: vec![0.0; n], beta: betas };
                let state = StateVector::new(state, 0.0).unwrap();
                let f = derivative(&state, &params, &graph);
                for v in 0..n {
                    let mut bound = -params.beta[v] * state.i[v];
                    for &(u, g) in graph.in_edges(v) {
                        bound += g * state.i[u as usize];
                    }
                    prop_assert!(
                        f[v] <= bound + 1e-12,
                        "node {}: rate {} above bound {}",
                        v, f[v], bound
                    );
                }
            }

            // grid steps with h <= 0.025 never clamp and stay in [0, 1]^n
            #[test]
            fn euler_forward_invariance(
                (graph, state, betas) in arbitrary_model(),
                h in 1e-4..=0.025f64,
            ) {
                let n = graph.node_count();
                let params = ModelParams { alpha: vec![0.0; n], beta: betas };
                let mut state = StateVector::new(state, 0.0).unwrap();
                for _ in 0..50 {
                    let (next, clamps) = step_euler(&state, &params, &graph, h);
                    prop_assert_eq!(clamps, 0);
                    prop_assert!(next.i.iter().all(|&x| (0.0..=1.0).contains(&x)));
                    state = next;
                }
            }
        }
    }
}
