//! Integrate the uncontrolled compromise dynamics and compare the grid
//! integrator against the RK4 oracle.
//!
//! ```bash
//! cargo run --example free_dynamics
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use defdyn::dynamics::{simulate, Integrator, ModelParams, StateVector};
use defdyn::graph::{erdos_renyi_edge_list, load_edge_list};

fn main() {
    let text = erdos_renyi_edge_list(200, 6.0, 7);
    let graph = load_edge_list(&text, true).unwrap();
    let graph = graph.assign_gammas(0.002, 7).unwrap();
    let n = graph.node_count();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let i0 = StateVector::new((0..n).map(|_| rng.random::<f64>()).collect(), 0.0).unwrap();

    // Weak recovery everywhere; pre-control still guarantees extinction.
    let params = ModelParams::push_only(n, 0.1).unwrap();
    let h = 0.025;
    let euler = simulate(&graph, &params, &i0, h, 100.0, 40, Integrator::Euler).unwrap();
    let rk4 = simulate(&graph, &params, &i0, h, 100.0, 40, Integrator::Rk4).unwrap();

    println!("free-running dynamics, beta = 0.1 everywhere, h = {h}");
    println!("   t      |i|_1 (euler)   |i|_1 (rk4)");
    for idx in (0..euler.times.len()).step_by(25) {
        let l1e: f64 = euler.rows[idx].iter().sum();
        let l1r: f64 = rk4.rows[idx].iter().sum();
        println!("{:6.1}   {l1e:12.6}   {l1r:12.6}", euler.times[idx]);
    }

    let mut max_gap = 0.0f64;
    for (a, b) in euler.rows.iter().zip(&rk4.rows) {
        for (x, y) in a.iter().zip(b) {
            max_gap = max_gap.max((x - y).abs());
        }
    }
    println!("max |euler - rk4| over the horizon: {max_gap:.2e}");
    println!(
        "clamp events: euler {}, rk4 {} (the flow is forward invariant on [0,1]^n)",
        euler.clamp_events, rk4.clamp_events
    );

    // An isolated node with no pull attacks decays exactly exponentially;
    // one Euler run against the closed form.
    let two = load_edge_list("1 0\n", true).unwrap();
    let params = ModelParams::push_only(2, 0.5).unwrap();
    let start = StateVector::new(vec![0.0, 1.0], 0.0).unwrap();
    let traj = simulate(&two, &params, &start, h, 10.0, 400, Integrator::Euler).unwrap();
    let numeric = traj.rows.last().unwrap()[1];
    let exact = (-0.5f64 * 10.0).exp();
    println!(
        "isolated node at T = 10: euler {numeric:.6} vs closed form {exact:.6} \
         (relative error {:.2e})",
        (numeric - exact).abs() / exact
    );
}
