//! Load an attack-defense graph, weight its edges, and run the spectral
//! feasibility checks that gate every control run.
//!
//! ```bash
//! cargo run --example graph_spectrum
//! ```

use defdyn::controller::check_m_matrix;
use defdyn::graph::{erdos_renyi_edge_list, load_edge_list, precontrol_check, spectral_radius};

fn main() {
    // A small SNAP-format edge list, the same shape as the public datasets.
    let inline = "# tiny demo graph\n0 1\n1 2\n2 0\n2 3\n3 3\n";
    let tiny = load_edge_list(inline, true).unwrap();
    println!(
        "inline graph: {} nodes, {} edges (self-loop dropped)",
        tiny.node_count(),
        tiny.edge_count()
    );

    // Synthetic directed Erdos-Renyi stand-in for a real topology.
    let text = erdos_renyi_edge_list(500, 6.0, 42);
    let graph = load_edge_list(&text, true).unwrap();
    let graph = graph.assign_gammas(0.002, 42).unwrap();
    println!(
        "synthetic graph: {} nodes, {} edges, gamma_max {:.4}",
        graph.node_count(),
        graph.edge_count(),
        graph.gamma_max()
    );

    // Dominant adjacency eigenvalue via per-component power iteration.
    let adjacency = spectral_radius(&graph.adjacency_operator(), 1e-8, 10_000).unwrap();
    println!(
        "lambda(A) = {:.4} ({} iterations, residual {:.1e}, converged: {})",
        adjacency.lambda_max, adjacency.iterations, adjacency.residual, adjacency.converged
    );

    // Pre-control condition: the weak recovery probability must dominate
    // gamma_max * lambda(A) for the uncontrolled dynamics to die out.
    let pre = precontrol_check(&graph, 0.1).unwrap();
    println!(
        "pre-control: beta_minus/gamma_max = {:.1} vs lambda = {:.4} -> {} (margin {:.1})",
        pre.ratio,
        pre.lambda_adjacency,
        if pre.ok { "feasible" } else { "infeasible" },
        pre.margin
    );

    // M-matrix condition for the switching controller.
    let mm = check_m_matrix(&graph, 0.8, 0.5);
    println!(
        "m-matrix: beta_plus - iota = 0.3 vs lambda(K') = {:.4} -> {} (margin {:.4})",
        mm.lambda_gamma.unwrap(),
        if mm.feasible {
            "feasible"
        } else {
            "infeasible"
        },
        mm.margin
    );

    // Round trip: the serializer emits the same SNAP format the loader reads.
    let serialized = graph.to_edge_list();
    let reloaded = load_edge_list(&serialized, true).unwrap();
    assert_eq!(reloaded.edges(), graph.edges());
    println!("edge-list round trip: identical structure");
}
