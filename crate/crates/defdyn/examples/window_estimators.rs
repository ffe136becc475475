//! Estimating a compromise probability from 0/1 observations: full-history
//! averages against fixed and adaptive trailing windows.
//!
//! ```bash
//! cargo run --example window_estimators
//! ```

use defdyn::estimation::{
    adaptive_window, full_history_estimate, sample_state, window_estimate, EstimatorConfig,
    EstimatorMode, SampleStream, SampleTrace,
};

fn main() {
    let h = 0.025;
    let config = EstimatorConfig {
        window: 30.0,
        c0: 3.0,
        mode: EstimatorMode::AdaptiveWindow,
    };
    let (steps, _) = config.steps_per_window(h);
    println!(
        "window of {} time units on an h = {h} grid: {steps} samples",
        config.window
    );

    // A probability that holds at 0.3 for a while, then drops to 0.05:
    // the windowed estimator reacts, the full-history average lags.
    let mut stream = SampleStream::new(99, 1);
    let mut trace = SampleTrace::new(1, h, 99);
    let change_at = 2400; // t = 60
    for j in 0..=4000 {
        let p = if j < change_at { 0.3 } else { 0.05 };
        trace.push_bit(0, sample_state(p, stream.draw(0)));
    }

    println!();
    println!("   t     true p   full-history   fixed window");
    for &j in &[1200usize, 2399, 2800, 3200, 4000] {
        let t = j as f64 * h;
        let p = if j < change_at { 0.3 } else { 0.05 };
        let (_, full) = full_history_estimate(&trace, 0, t).unwrap();
        let (windowed, partial) = window_estimate(&trace, 0, t, config.window);
        println!(
            "{t:6.1}   {p:6.2}   {full:12.4}   {windowed:12.4}{}",
            if partial { " (partial)" } else { "" }
        );
    }

    // The adaptive window equals the nominal one early and grows like t/C0
    // afterwards, trading reaction speed for counting resolution.
    println!();
    println!("adaptive window growth (W = 30, C0 = 3):");
    for &t in &[0.0, 60.0, 90.0, 150.0, 300.0, 500.0] {
        println!("  W'({t:5.0}) = {:6.1}", adaptive_window(t, &config, h));
    }

    // Concentration at the nominal window length: 1200 draws at p = 0.3.
    let p = 0.3;
    let sigma = (p * (1.0 - p) / steps as f64).sqrt();
    let frozen = vec![vec![p]; steps + 1];
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let trace = SampleTrace::fabricate(&frozen, h, 1000 + trial);
        let (est, _) = window_estimate(&trace, 0, steps as f64 * h, config.window);
        worst = worst.max((est - p).abs());
    }
    println!();
    println!(
        "20 frozen-probability trials at p = {p}: worst error {worst:.4} \
         (one sigma = {sigma:.4})"
    );
}
