//! Bridging probability states and 0/1 observations.
//!
//! In practice a node's compromise state is observed as a Boolean, not a
//! probability. This module fabricates such observations from the model
//! state (`chi_v = 1` iff `i_v - U >= 0` for a fresh uniform draw `U`),
//! estimates `i_v` back from the bit stream with full-history, fixed-window,
//! or adaptive-window occupancy averages, and runs the switching controller
//! against those estimates instead of the exact state.
//!
//! Windows are measured on the observation grid: the estimate at time
//! `t = j h` averages the most recent `min(K, j)` bits (indices
//! `j - cnt + 1 ..= j`), where `K` is the window length in grid steps. At
//! `j = 0` the single available bit is used. Shorter-than-nominal windows are
//! flagged as partial.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{run_switched_loop, ControlRun, ScalingVector, SwitchingConfig};
use crate::dynamics::{grid_steps, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::graph::AttackDefenseGraph;

/// Observed 0/1 state: 1 iff the compromise probability is at or above the
/// uniform draw (Heaviside with H(0) = 1).
pub fn sample_state(i_v: f64, draw: f64) -> u8 {
    debug_assert!((0.0..=1.0).contains(&i_v));
    u8::from(i_v - draw >= 0.0)
}

/// splitmix64 round, used to derive independent per-node stream seeds.
fn mix_seed(seed: u64, node: u64) -> u64 {
    let mut z = seed ^ node.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One independent uniform stream per node, advanced once per grid step.
///
/// Streams are seeded from `(seed, node)` only, so any parallel schedule
/// over nodes reproduces the same draws.
pub struct SampleStream {
    rngs: Vec<ChaCha8Rng>,
}

impl SampleStream {
    pub fn new(seed: u64, n: usize) -> Self {
        SampleStream {
            rngs: (0..n)
                .map(|v| ChaCha8Rng::seed_from_u64(mix_seed(seed, v as u64)))
                .collect(),
        }
    }

    /// Next uniform draw in [0, 1) for a node.
    pub fn draw(&mut self, v: usize) -> f64 {
        self.rngs[v].random::<f64>()
    }
}

/// Recorded 0/1 observations on the grid, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    bits: Vec<Vec<u8>>,
    h: f64,
    seed: u64,
}

impl SampleTrace {
    pub fn new(n: usize, h: f64, seed: u64) -> Self {
        SampleTrace {
            bits: vec![Vec::new(); n],
            h,
            seed,
        }
    }

    /// Fabricate a full trace from a state trajectory sampled at every grid
    /// step (used for offline experiments; the closed loop builds its trace
    /// incrementally).
    pub fn fabricate(states: &[Vec<f64>], h: f64, seed: u64) -> Self {
        let n = states.first().map_or(0, Vec::len);
        let mut stream = SampleStream::new(seed, n);
        let mut trace = SampleTrace::new(n, h, seed);
        for row in states {
            for (v, &p) in row.iter().enumerate() {
                let draw = stream.draw(v);
                trace.bits[v].push(sample_state(p, draw));
            }
        }
        trace
    }

    pub fn node_count(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bit(&self, v: usize, j: usize) -> u8 {
        self.bits[v][j]
    }

    pub fn push_bit(&mut self, v: usize, bit: u8) {
        self.bits[v].push(bit & 1);
    }

    /// Write the trace as run-length-encoded text: one line per node,
    /// `node,first_bit,run1,run2,...` with runs alternating from the first
    /// bit's value.
    pub fn write_rle(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(
            w,
            "# node,first_bit,run_lengths... (h={}, seed={})",
            self.h, self.seed
        )?;
        for (v, bits) in self.bits.iter().enumerate() {
            let first = bits.first().copied().unwrap_or(0);
            let mut line = format!("{v},{first}");
            let mut run = 0usize;
            let mut current = first;
            for &b in bits {
                if b == current {
                    run += 1;
                } else {
                    line.push_str(&format!(",{run}"));
                    current = b;
                    run = 1;
                }
            }
            if run > 0 {
                line.push_str(&format!(",{run}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Read a trace written by [`write_rle`](Self::write_rle).
    pub fn read_rle(r: impl std::io::BufRead, h: f64, seed: u64) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<u8>)> = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Artifact {
                path: "<rle trace>".into(),
                msg: format!("line {}: {msg}", idx + 1),
            };
            let mut fields = line.split(',');
            let v: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad node id"))?;
            let first: u8 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|b| *b <= 1)
                .ok_or_else(|| bad("bad first bit"))?;
            let mut bits = Vec::new();
            let mut current = first;
            for f in fields {
                let run: usize = f.parse().map_err(|_| bad("bad run length"))?;
                bits.extend(std::iter::repeat_n(current, run));
                current ^= 1;
            }
            rows.push((v, bits));
        }
        let n = rows.iter().map(|(v, _)| v + 1).max().unwrap_or(0);
        let mut trace = SampleTrace::new(n, h, seed);
        for (v, bits) in rows {
            trace.bits[v] = bits;
        }
        Ok(trace)
    }
}

/// Which estimate of the compromise probability feeds the trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Occupancy fraction over the whole history (0, t].
    FullHistory,
    /// Occupancy fraction over a fixed trailing window.
    FixedWindow,
    /// Occupancy fraction over `max(W, t / C0)`, growing with the horizon.
    AdaptiveWindow,
    /// The exact probability state; reduces the sampled loop to the exact
    /// one for validation.
    Oracle,
}

impl EstimatorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorMode::FullHistory => "full_history",
            EstimatorMode::FixedWindow => "fixed_window",
            EstimatorMode::AdaptiveWindow => "adaptive_window",
            EstimatorMode::Oracle => "oracle",
        }
    }
}

/// Window parameters for the sample-state estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Nominal window length in time units.
    pub window: f64,
    /// Adaptive divisor: the effective window grows like `t / c0`.
    pub c0: f64,
    pub mode: EstimatorMode,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window must be positive, got {}",
                self.window
            )));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        Ok(())
    }

    /// Window length in grid steps, rounded up to a whole step. The flag
    /// reports whether rounding changed the requested length.
    pub fn steps_per_window(&self, h: f64) -> (usize, bool) {
        round_up_steps(self.window, h)
    }

    /// Effective window length after grid rounding.
    pub fn effective_window(&self, h: f64) -> f64 {
        let (k, _) = self.steps_per_window(h);
        k as f64 * h
    }
}

fn round_up_steps(span: f64, h: f64) -> (usize, bool) {
    let raw = span / h;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 * raw.max(1.0) {
        (rounded as usize, false)
    } else {
        (raw.ceil() as usize, true)
    }
}

/// Adaptive window length at time `t`: `max(W, t / C0)`, rounded up to the
/// grid. Nondecreasing in `t` and equal to the nominal window while
/// `t <= C0 W`.
pub fn adaptive_window(t: f64, config: &EstimatorConfig, h: f64) -> f64 {
    adaptive_window_steps(t, config, h) as f64 * h
}

/// Same as [`adaptive_window`], in grid steps.
pub fn adaptive_window_steps(t: f64, config: &EstimatorConfig, h: f64) -> usize {
    let span = config.effective_window(h).max(t / config.c0);
    round_up_steps(span, h).0
}

fn ones_in(trace: &SampleTrace, v: usize, lo: usize, hi: usize) -> usize {
    // inclusive index range [lo, hi]
    trace.bits[v][lo..=hi].iter().map(|&b| b as usize).sum()
}

/// Occupancy estimate over the trailing `window` (time units) ending at `t`.
///
/// Averages the bits with grid times in `(t - window, t]`. Before the window
/// fills, the available prefix is used and the estimate is flagged partial
/// (second component `true`). At `t = 0` the single bit at the origin is
/// used.
pub fn window_estimate(trace: &SampleTrace, v: usize, t: f64, window: f64) -> (f64, bool) {
    let h = trace.h;
    let j = (t / h).round() as usize;
    debug_assert!((t - j as f64 * h).abs() < h * 0.5, "t off the grid");
    if j == 0 {
        return (trace.bits[v][0] as f64, true);
    }
    let (k, _) = round_up_steps(window, h);
    let cnt = k.min(j).max(1);
    let ones = ones_in(trace, v, j - cnt + 1, j);
    (ones as f64 / cnt as f64, cnt < k)
}

/// Whole-history occupancy estimates `(s_hat, i_hat)` at `t = j h > 0`:
/// the fraction of secure/compromised bits over `(0, t]`. The two components
/// sum to 1 exactly.
pub fn full_history_estimate(trace: &SampleTrace, v: usize, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(
            "full-history estimate undefined at t = 0".into(),
        ));
    }
    let h = trace.h;
    let j = (t / h).round() as usize;
    let ones = ones_in(trace, v, 1, j);
    let i_hat = ones as f64 / j as f64;
    let s_hat = 1.0 - i_hat;
    Ok((s_hat, i_hat))
}

/// Incremental estimator state for the closed loop. Keeps per-node one-bit
/// counts over the active window using a sliding range, so each step costs
/// O(window shift) and matches a from-scratch recount exactly.
struct WindowCounter {
    /// First included bit index (window is [start, j]).
    start: usize,
    ones: usize,
}

/// Everything the sampled closed loop produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRun {
    pub control: ControlRun,
    /// Estimate rows recorded at the same stride as the trajectory.
    pub estimates: Trajectory,
    pub trace: SampleTrace,
    /// Node-steps where the estimator ran on a shorter-than-nominal window.
    pub partial_estimates: usize,
}

/// Run the switching controller against sample-state estimates.
///
/// The true state still evolves by the push-only dynamics and is recorded
/// for evaluation; only the trigger input changes: at every grid step each
/// node draws one observation bit from its seeded stream, the configured
/// estimator turns the bit history into `i_hat`, and the trigger compares
/// `i_hat / p_v` against the envelopes. Deterministic in `seed`.
pub fn run_control_sampled(
    graph: &AttackDefenseGraph,
    config: &SwitchingConfig,
    estimator: &EstimatorConfig,
    i0: &StateVector,
    scaling: &ScalingVector,
    seed: u64,
    record_stride: usize,
) -> Result<SampledRun> {
    estimator.validate()?;
    let n = graph.node_count();
    let h = config.h;
    let steps = grid_steps(config.horizon, h);
    let (window_steps, _) = estimator.steps_per_window(h);

    let mut stream = SampleStream::new(seed, n);
    let mut trace = SampleTrace::new(n, h, seed);
    trace.bits.iter_mut().for_each(|b| b.reserve(steps + 1));
    let mut counters: Vec<WindowCounter> = (0..n)
        .map(|_| WindowCounter { start: 1, ones: 0 })
        .collect();
    let mut partial_estimates = 0usize;
    let mode = estimator.mode;

    let (control, estimates) = run_switched_loop(
        graph,
        config,
        i0,
        scaling,
        record_stride,
        |j, state, out| {
            let t = j as f64 * h;
            for v in 0..n {
                let draw = stream.draw(v);
                let bit = sample_state(state.i[v], draw);
                trace.bits[v].push(bit);
            }
            if mode == EstimatorMode::Oracle {
                out.copy_from_slice(&state.i);
                return;
            }
            if j == 0 {
                for (o, bits) in out.iter_mut().zip(&trace.bits) {
                    *o = bits[0] as f64;
                }
                partial_estimates += n;
                return;
            }
            let nominal = match mode {
                EstimatorMode::FullHistory => j,
                EstimatorMode::FixedWindow => window_steps,
                EstimatorMode::AdaptiveWindow => adaptive_window_steps(t, estimator, h),
                EstimatorMode::Oracle => unreachable!(),
            };
            let cnt = nominal.min(j);
            for v in 0..n {
                let c = &mut counters[v];
                c.ones += trace.bits[v][j] as usize;
                let new_start = j - cnt + 1;
                while c.start > new_start {
                    c.start -= 1;
                    c.ones += trace.bits[v][c.start] as usize;
                }
                while c.start < new_start {
                    c.ones -= trace.bits[v][c.start] as usize;
                    c.start += 1;
                }
                out[v] = c.ones as f64 / cnt as f64;
            }
            if cnt < nominal {
                partial_estimates += n;
            }
        },
    )?;

    Ok(SampledRun {
        control,
        estimates,
        trace,
        partial_estimates,
    })
}
