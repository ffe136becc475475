//! Evaluation quantities for a run: exponential speed index, high-cost duty
//! ratio, and inter-event gap statistics.

use serde::{Deserialize, Serialize};

use crate::controller::{EventLog, Mode};
use crate::dynamics::Trajectory;

/// Exponential decay rate of a positive series between two samples `dt`
/// apart: `-(1/dt) ln(x(t+dt)/x(t))`.
pub fn speed_index(x_t: f64, x_t_dt: f64, dt: f64) -> f64 {
    -(x_t_dt / x_t).ln() / dt
}

/// How the time-averaged speed index is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    /// Window length for each speed sample.
    pub dt: f64,
    /// Skip the initial transient before averaging.
    pub burn_in: f64,
    /// Values at or below this are treated as converged-to-zero and the
    /// window is excluded (counted) instead of producing -inf.
    pub floor: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        SpeedConfig {
            dt: 1.0,
            burn_in: 5.0,
            floor: 1e-14,
        }
    }
}

/// Aggregate of windowed speed-index samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedStats {
    /// Arithmetic mean over usable windows; `None` when no window was usable.
    pub mean: Option<f64>,
    pub windows_used: usize,
    /// Windows dropped because an endpoint was at or below the floor.
    pub windows_floored: usize,
}

/// Time-averaged speed index of a scalar series sampled at `times`.
///
/// Windows start at `burn_in` and advance by `dt`; each window needs both
/// endpoints present in `times` (within half a sample spacing) and above the
/// floor.
pub fn speed_index_series(times: &[f64], values: &[f64], config: &SpeedConfig) -> SpeedStats {
    assert_eq!(times.len(), values.len());
    let mut stats = SpeedStats {
        mean: None,
        windows_used: 0,
        windows_floored: 0,
    };
    if times.len() < 2 {
        return stats;
    }
    let spacing = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let tol = (spacing * 0.5).max(1e-12);
    let last = *times.last().unwrap();
    let lookup = |target: f64| -> Option<usize> {
        let idx = times.partition_point(|&t| t < target - tol);
        (idx < times.len() && (times[idx] - target).abs() <= tol).then_some(idx)
    };
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let t0 = config.burn_in + k as f64 * config.dt;
        let t1 = t0 + config.dt;
        if t1 > last + tol {
            break;
        }
        k += 1;
        let (Some(i0), Some(i1)) = (lookup(t0), lookup(t1)) else {
            continue;
        };
        let (v0, v1) = (values[i0], values[i1]);
        if v0 <= config.floor || v1 <= config.floor {
            stats.windows_floored += 1;
            continue;
        }
        sum += speed_index(v0, v1, times[i1] - times[i0]);
        stats.windows_used += 1;
    }
    if stats.windows_used > 0 {
        stats.mean = Some(sum / stats.windows_used as f64);
    }
    stats
}

/// Mean speed index of one node's series restricted to the intervals it
/// spent in `mode`, from adjacent recorded samples fully inside one
/// interval. This is the empirical per-mode decay rate; under switching
/// control the high-cost rate sits above the target and the low-cost rate
/// below it.
pub fn mode_restricted_speed(
    times: &[f64],
    series: &[f64],
    log: &EventLog,
    v: usize,
    mode: Mode,
    floor: f64,
) -> Option<f64> {
    assert_eq!(times.len(), series.len());
    let horizon = *times.last()?;
    // mode intervals [start, end)
    let mut intervals = Vec::new();
    let mut current = log.initial_mode(v);
    let mut start = 0.0;
    for e in log.events(v) {
        if e.time <= 0.0 {
            continue;
        }
        if current == mode {
            intervals.push((start, e.time));
        }
        current = e.kind;
        start = e.time;
    }
    if current == mode && start < horizon {
        intervals.push((start, horizon));
    }

    let mut sum = 0.0;
    let mut count = 0usize;
    for (tw, vw) in times.windows(2).zip(series.windows(2)) {
        let inside = intervals.iter().any(|&(lo, hi)| tw[0] >= lo && tw[1] <= hi);
        if inside && vw[0] > floor && vw[1] > floor {
            sum += speed_index(vw[0], vw[1], tw[1] - tw[0]);
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Fraction of `[0, horizon]` a node spent in high-cost mode.
pub fn per_node_high_ratio(log: &EventLog, v: usize, horizon: f64) -> f64 {
    let mut high_time = 0.0;
    let mut mode = log.initial_mode(v);
    let mut start = 0.0;
    for e in log.events(v) {
        if e.time <= 0.0 {
            // the t = 0 entry only establishes the initial mode
            continue;
        }
        let t = e.time.min(horizon);
        if t > start {
            if mode == Mode::High {
                high_time += t - start;
            }
            start = t;
        }
        mode = e.kind;
        if e.time >= horizon {
            break;
        }
    }
    if start < horizon && mode == Mode::High {
        high_time += horizon - start;
    }
    high_time / horizon
}

/// Mean over nodes of the high-cost time share; the classical always-strict
/// policy scores 1, an untouched network 0.
pub fn cost_ratio(log: &EventLog, horizon: f64) -> f64 {
    let n = log.node_count();
    let total: f64 = (0..n).map(|v| per_node_high_ratio(log, v, horizon)).sum();
    total / n as f64
}

/// Inter-event gaps across all nodes, split by transition direction.
///
/// The t = 0 log entries record initial modes, not envelope crossings, so
/// pairs anchored at t = 0 are excluded: the initial ramp from a node's
/// starting state to its first trigger obeys no lower bound, while gaps
/// between genuine crossings do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub min_low_to_high: Option<f64>,
    pub min_high_to_low: Option<f64>,
    pub low_to_high: Vec<f64>,
    pub high_to_low: Vec<f64>,
}

pub fn gap_stats(log: &EventLog) -> GapStats {
    let mut low_to_high = Vec::new();
    let mut high_to_low = Vec::new();
    for v in 0..log.node_count() {
        for pair in log.events(v).windows(2) {
            if pair[0].time == 0.0 {
                continue;
            }
            let gap = pair[1].time - pair[0].time;
            match (pair[0].kind, pair[1].kind) {
                (Mode::Low, Mode::High) => low_to_high.push(gap),
                (Mode::High, Mode::Low) => high_to_low.push(gap),
                _ => {}
            }
        }
    }
    let min = |v: &[f64]| v.iter().copied().reduce(f64::min);
    GapStats {
        min_low_to_high: min(&low_to_high),
        min_high_to_low: min(&high_to_low),
        low_to_high,
        high_to_low,
    }
}

/// Equal-width histogram over `[0, max(values)]`; returns (lo, hi, count)
/// per bin. Empty input gives no bins.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = ((v / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 * width, (i + 1) as f64 * width, c))
        .collect()
}

/// Estimator settings echoed into a report for sampled runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub mode: String,
    pub window: f64,
    pub effective_window: f64,
    pub window_rounded: bool,
    pub c0: f64,
    pub partial_estimates: usize,
}

/// Headline quantities of one run, emitted as JSON and as a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub horizon: f64,
    /// Target exponential rate the controller aims for.
    pub target_rate: f64,
    /// Time-averaged speed index of the l1-norm trajectory.
    pub s_mean: Option<f64>,
    /// `|s_mean - target| / target`.
    pub effectiveness: Option<f64>,
    pub cost_ratio: Option<f64>,
    /// Complement of `cost_ratio`.
    pub low_mode_ratio: Option<f64>,
    pub min_low_to_high_gap: Option<f64>,
    pub min_high_to_low_gap: Option<f64>,
    /// Theoretical low-to-high gap floor `-ln L / iota`.
    pub zeno_floor: Option<f64>,
    pub total_events: usize,
    pub max_events_per_node: usize,
    pub mean_events_per_node: f64,
    pub event_counts: Vec<usize>,
    pub speed_windows_used: usize,
    pub speed_windows_floored: usize,
    pub speed_dt: f64,
    pub speed_burn_in: f64,
    pub clamp_events: usize,
    pub estimator: Option<EstimatorSummary>,
}

impl RunReport {
    pub const CSV_HEADER: &'static str = "mode,seed,n,horizon,target_rate,s_mean,effectiveness,\
         cost_ratio,min_low_to_high_gap,total_events,clamp_events";

    /// One CSV row matching [`CSV_HEADER`](Self::CSV_HEADER); `None` fields
    /// stay empty.
    pub fn to_csv_row(&self) -> String {
        fn opt(x: Option<f64>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.n,
            self.horizon,
            self.target_rate,
            opt(self.s_mean),
            opt(self.effectiveness),
            opt(self.cost_ratio),
            opt(self.min_low_to_high_gap),
            self.total_events,
            self.clamp_events
        )
    }
}

/// Assemble the report for a finished run.
pub fn build_report(
    mode: &str,
    seed: Option<u64>,
    horizon: f64,
    target_rate: f64,
    trajectory: &Trajectory,
    events: Option<&EventLog>,
    zeno_floor: Option<f64>,
    speed: &SpeedConfig,
    estimator: Option<EstimatorSummary>,
) -> RunReport {
    let n = trajectory.rows.first().map_or(0, Vec::len);
    let norms = trajectory.l1_norms();
    let stats = speed_index_series(&trajectory.times, &norms, speed);
    let s_mean = stats.mean;
    let effectiveness = s_mean.map(|s| (s - target_rate).abs() / target_rate);

    let (cost, gaps, counts) = match events {
        Some(log) => {
            let cost = cost_ratio(log, horizon);
            let gaps = gap_stats(log);
            let counts: Vec<usize> = (0..log.node_count()).map(|v| log.events(v).len()).collect();
            (Some(cost), Some(gaps), counts)
        }
        None => (None, None, Vec::new()),
    };
    let total_events: usize = counts.iter().sum();
    let max_events = counts.iter().copied().max().unwrap_or(0);
    let mean_events = if counts.is_empty() {
        0.0
    } else {
        total_events as f64 / counts.len() as f64
    };

    RunReport {
        mode: mode.to_string(),
        seed,
        n,
        horizon,
        target_rate,
        s_mean,
        effectiveness,
        cost_ratio: cost,
        low_mode_ratio: cost.map(|c| 1.0 - c),
        min_low_to_high_gap: gaps.as_ref().and_then(|g| g.min_low_to_high),
        min_high_to_low_gap: gaps.as_ref().and_then(|g| g.min_high_to_low),
        zeno_floor,
        total_events,
        max_events_per_node: max_events,
        mean_events_per_node: mean_events,
        event_counts: counts,
        speed_windows_used: stats.windows_used,
        speed_windows_floored: stats.windows_floored,
        speed_dt: speed.dt,
        speed_burn_in: speed.burn_in,
        clamp_events: trajectory.clamp_events,
        estimator,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Event;

    #[test]
    fn speed_index_of_pure_exponential() {
        for &dt in &[0.1, 0.5, 1.0, 2.5] {
            let t = 3.0f64;
            let x0 = (-0.5 * t).exp();
            let x1 = (-0.5 * (t + dt)).exp();
            assert!((speed_index(x0, x1, dt) - 0.5).abs() < 1e-12, "dt = {dt}");
        }
    }

    #[test]
    fn speed_index_scale_invariance() {
        let c = 37.5;
        let x0 = c * (-0.5f64 * 2.0).exp();
        let x1 = c * (-0.5f64 * 3.0).exp();
        assert!((speed_index(x0, x1, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn speed_series_on_sampled_exponential() {
        let times: Vec<f64> = (0..=4000).map(|j| j as f64 * 0.025).collect();
        let values: Vec<f64> = times.iter().map(|&t| 200.0 * (-0.5 * t).exp()).collect();
        let stats = speed_index_series(&times, &values, &SpeedConfig::default());
        let mean = stats.mean.unwrap();
        assert!((mean - 0.5).abs() < 1e-9, "mean {mean}");
        // values cross the 1e-14 floor near t = 75; later windows are
        // excluded, not averaged in
        assert_eq!(stats.windows_used + stats.windows_floored, 95);
        assert!(stats.windows_used >= 60, "used {}", stats.windows_used);
        assert!(
            stats.windows_floored >= 15,
            "floored {}",
            stats.windows_floored
        );
    }

    #[test]
    fn speed_series_floors_converged_tail() {
        let times: Vec<f64> = (0..=100).map(|j| j as f64).collect();
        let mut values: Vec<f64> = times.iter().map(|&t| (-0.5 * t).exp()).collect();
        for v in values.iter_mut().skip(80) {
            *v = 0.0;
        }
        let cfg = SpeedConfig::default();
        let stats = speed_index_series(&times, &values, &cfg);
        assert!(stats.windows_floored > 0);
        let mean = stats.mean.unwrap();
        assert!(
            (mean - 0.5).abs() < 1e-9,
            "floored points must not poison the mean"
        );
    }

    fn log_single(events: &[(f64, Mode)]) -> EventLog {
        let mut log = EventLog::new(1);
        for &(time, kind) in events {
            log.push(0, Event { time, kind });
        }
        log
    }

    #[test]
    fn cost_ratio_always_high_is_one() {
        let log = log_single(&[(0.0, Mode::High)]);
        assert_eq!(cost_ratio(&log, 10.0), 1.0);
    }

    #[test]
    fn cost_ratio_always_low_is_zero() {
        let log = log_single(&[(0.0, Mode::Low)]);
        assert_eq!(cost_ratio(&log, 10.0), 0.0);
    }

    #[test]
    fn cost_ratio_interval_arithmetic() {
        // high on [0, 2), low on [2, 10), T = 10 -> 0.2
        let log = log_single(&[(0.0, Mode::High), (2.0, Mode::Low)]);
        assert!((cost_ratio(&log, 10.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn cost_ratio_empty_log_uses_initial_mode() {
        let log = EventLog::new(2);
        assert_eq!(cost_ratio(&log, 5.0), 0.0); // defaults to low
    }

    #[test]
    fn cost_and_low_ratios_are_complements() {
        let log = log_single(&[(0.0, Mode::Low), (1.0, Mode::High), (3.5, Mode::Low)]);
        let c = cost_ratio(&log, 10.0);
        let report_low = 1.0 - c;
        assert_eq!(c + report_low, 1.0);
    }

    #[test]
    fn gap_stats_directions() {
        let log = log_single(&[
            (0.0, Mode::Low),
            (2.0, Mode::High),
            (3.0, Mode::Low),
            (6.0, Mode::High),
            (6.5, Mode::Low),
        ]);
        let g = gap_stats(&log);
        // the (0, low) -> (2, high) pair is initialization, not a crossing
        assert_eq!(g.low_to_high, vec![3.0]);
        assert_eq!(g.high_to_low, vec![1.0, 0.5]);
        assert_eq!(g.min_low_to_high, Some(3.0));
        assert_eq!(g.min_high_to_low, Some(0.5));
    }

    #[test]
    fn gap_stats_single_event_is_empty() {
        let log = log_single(&[(0.0, Mode::Low)]);
        let g = gap_stats(&log);
        assert!(g.low_to_high.is_empty());
        assert!(g.high_to_low.is_empty());
        assert_eq!(g.min_low_to_high, None);
    }

    #[test]
    fn mode_restricted_speeds_bracket_target() {
        use crate::controller::{compute_scaling, run_control, SwitchingConfig};
        use crate::dynamics::StateVector;
        use crate::graph::load_edge_list;
        use rand::Rng;
        use rand::SeedableRng;

        let text = crate::graph::erdos_renyi_edge_list(60, 5.0, 12);
        let g = load_edge_list(&text, true).unwrap();
        let g = g.assign_gammas(0.002, 12).unwrap();
        let n = g.node_count();
        let config = SwitchingConfig {
            beta_plus: 0.8,
            beta_minus: 0.1,
            iota: 0.5,
            envelope_ratio: 0.5,
            h: 0.025,
            horizon: 40.0,
        };
        let scaling = compute_scaling(&g, 0.8, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let i0 = StateVector::new((0..n).map(|_| rng.random::<f64>()).collect(), 0.0).unwrap();
        let run = run_control(&g, &config, &i0, &scaling, 1).unwrap();

        let mut checked = 0;
        for v in 0..n {
            let series: Vec<f64> = run.trajectory.rows.iter().map(|r| r[v]).collect();
            let high = mode_restricted_speed(
                &run.trajectory.times,
                &series,
                &run.events,
                v,
                Mode::High,
                1e-14,
            );
            let low = mode_restricted_speed(
                &run.trajectory.times,
                &series,
                &run.events,
                v,
                Mode::Low,
                1e-14,
            );
            if let (Some(high), Some(low)) = (high, low) {
                assert!(
                    high > 0.5,
                    "node {v}: high-cost rate {high} not above target"
                );
                assert!(low < 0.5, "node {v}: low-cost rate {low} not below target");
                checked += 1;
            }
        }
        assert!(checked > n / 2, "only {checked} nodes had both modes");
    }

    #[test]
    fn histogram_bins_cover_range() {
        let h = histogram(&[0.5, 1.5, 2.5, 2.6], 3);
        assert_eq!(h.len(), 3);
        let total: usize = h.iter().map(|&(_, _, c)| c).sum();
        assert_eq!(total, 4);
        assert_eq!(h[2].2, 2);
    }

    #[test]
    fn report_csv_row_shape() {
        let mut traj = Trajectory::new();
        for j in 0..=10 {
            let t = j as f64;
            traj.push(t, vec![(-0.5 * t).exp()]);
        }
        let report = build_report(
            "simulate",
            Some(7),
            10.0,
            0.5,
            &traj,
            None,
            None,
            &SpeedConfig {
                dt: 1.0,
                burn_in: 0.0,
                floor: 1e-14,
            },
            None,
        );
        assert_eq!(
            report.to_csv_row().split(',').count(),
            RunReport::CSV_HEADER.split(',').count()
        );
        assert!(report.cost_ratio.is_none());
        assert!((report.s_mean.unwrap() - 0.5).abs() < 1e-9);
    }
}
