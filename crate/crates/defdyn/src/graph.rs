//! Attack-defense graphs: loading, per-edge attack probabilities, and
//! dominant-eigenvalue analysis.
//!
//! A graph is a directed structure where an edge `(u, v)` means `u` can
//! push-attack `v`, with a success probability `gamma` in `(0, 1]` per edge.
//! Undirected inputs are stored as two directed edges carrying the same
//! `gamma`. Graphs are immutable after construction; operations that change
//! edge weights return a new graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Directed attack-defense graph with per-edge push-attack probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackDefenseGraph {
    n: usize,
    directed: bool,
    /// Sorted, deduplicated directed edges (tail, head), self-loop free.
    edges: Vec<(u32, u32)>,
    /// Per-edge success probability, parallel to `edges`.
    gamma: Vec<f64>,
    /// For each node v, the in-neighborhood: (u, gamma_uv) for every (u, v).
    in_neighbors: Vec<Vec<(u32, f64)>>,
    /// Internal index -> original node id from the input file.
    node_ids: Vec<u64>,
}

impl AttackDefenseGraph {
    /// Build a graph from explicit directed edges with weights.
    ///
    /// Self-loops are rejected, duplicate edges keep the first gamma.
    /// For `directed = false` the edge list must already contain both
    /// orientations with equal gamma (as produced by [`load_edge_list`]).
    pub fn from_weighted_edges(
        n: usize,
        weighted: &[(u32, u32, f64)],
        directed: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(u, v, g) in weighted {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                continue;
            }
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma for edge ({u}, {v}) must lie in (0, 1], got {g}"
                )));
            }
            seen.entry((u, v)).or_insert(g);
        }
        if seen.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let edges: Vec<(u32, u32)> = seen.keys().copied().collect();
        let gamma: Vec<f64> = seen.values().copied().collect();
        let node_ids = (0..n as u64).collect();
        Ok(Self::assemble(n, directed, edges, gamma, node_ids))
    }

    fn assemble(
        n: usize,
        directed: bool,
        edges: Vec<(u32, u32)>,
        gamma: Vec<f64>,
        node_ids: Vec<u64>,
    ) -> Self {
        let mut in_neighbors = vec![Vec::new(); n];
        for (&(u, v), &g) in edges.iter().zip(&gamma) {
            in_neighbors[v as usize].push((u, g));
        }
        AttackDefenseGraph {
            n,
            directed,
            edges,
            gamma,
            in_neighbors,
            node_ids,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Directed edges (tail, head) in sorted order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Per-edge gamma, parallel to [`edges`](Self::edges).
    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    /// In-neighborhood of `v`: every `(u, gamma_uv)` with an edge `(u, v)`.
    pub fn in_edges(&self, v: usize) -> &[(u32, f64)] {
        &self.in_neighbors[v]
    }

    /// Original node id for an internal index.
    pub fn original_id(&self, v: usize) -> u64 {
        self.node_ids[v]
    }

    /// Largest per-edge gamma.
    pub fn gamma_max(&self) -> f64 {
        self.gamma.iter().copied().fold(0.0, f64::max)
    }

    /// Serialize back to SNAP-style edge-list text.
    ///
    /// Undirected graphs emit each pair once (`u < v`); directed graphs emit
    /// every edge. Node ids are the internal contiguous indices, so loading
    /// the output reproduces the same structure.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            if !self.directed && u > v {
                continue;
            }
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Replace every edge's gamma with a fresh uniform draw from
    /// `(0, gamma_max]`, deterministic in `seed`.
    ///
    /// On undirected graphs the two orientations of a pair receive the same
    /// draw. The draw order is the sorted canonical edge order, so the
    /// assignment is independent of how the graph was built.
    pub fn assign_gammas(&self, gamma_max: f64, seed: u64) -> Result<AttackDefenseGraph> {
        if !(gamma_max > 0.0 && gamma_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_max must lie in (0, 1], got {gamma_max}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gamma = self.gamma.clone();
        if self.directed {
            for g in gamma.iter_mut() {
                *g = draw_gamma(&mut rng, gamma_max);
            }
        } else {
            // One draw per canonical pair (u < v), mirrored onto (v, u).
            let mut by_pair: BTreeMap<(u32, u32), f64> = BTreeMap::new();
            for &(u, v) in &self.edges {
                if u < v {
                    by_pair.insert((u, v), 0.0);
                }
            }
            for g in by_pair.values_mut() {
                *g = draw_gamma(&mut rng, gamma_max);
            }
            for (idx, &(u, v)) in self.edges.iter().enumerate() {
                let key = if u < v { (u, v) } else { (v, u) };
                gamma[idx] = by_pair[&key];
            }
        }
        Ok(Self::assemble(
            self.n,
            self.directed,
            self.edges.clone(),
            gamma,
            self.node_ids.clone(),
        ))
    }

    /// Adjacency operator `(A x)_v = sum_{u in N_v} x_u` (entries 0/1).
    pub fn adjacency_operator(&self) -> AdjacencyOperator<'_> {
        AdjacencyOperator { graph: self }
    }

    /// Weighted in-edge operator `(K' x)_v = sum_{u in N_v} gamma_uv x_u`,
    /// i.e. the transpose of the gamma matrix `K[u][v] = gamma_uv`.
    pub fn gamma_in_operator(&self) -> GammaInOperator<'_> {
        GammaInOperator { graph: self }
    }
}

fn draw_gamma(rng: &mut ChaCha8Rng, gamma_max: f64) -> f64 {
    // random::<f64>() is uniform on [0, 1); 1 - u maps it onto (0, 1].
    gamma_max * (1.0 - rng.random::<f64>())
}

/// Parse SNAP-style edge-list text into a graph.
///
/// Lines starting with `#` are comments; every other non-empty line holds two
/// whitespace-separated nonnegative integer node ids. Node ids are remapped
/// to contiguous 0-based indices (sorted by original id, mapping retained),
/// self-loops are dropped, duplicates collapse to one edge. When
/// `directed = false` each pair is stored in both orientations.
///
/// Every edge starts with gamma = 1.0; call
/// [`AttackDefenseGraph::assign_gammas`] to randomize weights.
pub fn load_edge_list(text: &str, directed: bool) -> Result<AttackDefenseGraph> {
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>, lineno: usize| -> Result<u64> {
            let field = field.ok_or_else(|| Error::EdgeListParse {
                line: lineno + 1,
                msg: "expected two node ids".into(),
            })?;
            field.parse::<u64>().map_err(|_| Error::EdgeListParse {
                line: lineno + 1,
                msg: format!("invalid node id {field:?}"),
            })
        };
        let u = parse(fields.next(), lineno)?;
        let v = parse(fields.next(), lineno)?;
        if fields.next().is_some() {
            return Err(Error::EdgeListParse {
                line: lineno + 1,
                msg: "expected exactly two node ids".into(),
            });
        }
        if u == v {
            continue; // self-loops are excluded from the model
        }
        raw_edges.push((u, v));
    }
    if raw_edges.is_empty() {
        return Err(Error::EmptyGraph);
    }

    // Remap sparse ids to dense indices in sorted order.
    let mut id_map: BTreeMap<u64, u32> = BTreeMap::new();
    for &(u, v) in &raw_edges {
        id_map.entry(u).or_insert(0);
        id_map.entry(v).or_insert(0);
    }
    for (next, idx) in id_map.values_mut().enumerate() {
        *idx = next as u32;
    }
    let node_ids: Vec<u64> = id_map.keys().copied().collect();
    let n = node_ids.len();

    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(raw_edges.len());
    for &(u, v) in &raw_edges {
        let (iu, iv) = (id_map[&u], id_map[&v]);
        edges.push((iu, iv));
        if !directed {
            edges.push((iv, iu));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let gamma = vec![1.0; edges.len()];
    Ok(AttackDefenseGraph::assemble(
        n, directed, edges, gamma, node_ids,
    ))
}

/// Emit SNAP-format text for a seeded directed Erdos-Renyi graph.
///
/// Each ordered pair (u, v), u != v, is included independently with
/// probability `expected_out_degree / (n - 1)`. Useful for synthetic
/// experiments when no real topology is at hand.
pub fn erdos_renyi_edge_list(n: usize, expected_out_degree: f64, seed: u64) -> String {
    assert!(n >= 2, "need at least two nodes");
    let p = (expected_out_degree / (n as f64 - 1.0)).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < p {
                let _ = writeln!(out, "{u} {v}");
            }
        }
    }
    out
}

/// A square nonnegative sparse operator usable by [`spectral_radius`].
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Visit every nonzero `(column, weight)` of row `v`.
    fn for_each_in_row(&self, v: usize, visit: &mut dyn FnMut(usize, f64));

    /// out = M x
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (v, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            self.for_each_in_row(v, &mut |u, w| acc += w * x[u]);
            *o = acc;
        }
    }
}

/// Unweighted adjacency action of a graph: `(A x)_v = sum_{u in N_v} x_u`.
pub struct AdjacencyOperator<'g> {
    graph: &'g AttackDefenseGraph,
}

impl LinearOperator for AdjacencyOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n
    }

    fn for_each_in_row(&self, v: usize, visit: &mut dyn FnMut(usize, f64)) {
        for &(u, _) in &self.graph.in_neighbors[v] {
            visit(u as usize, 1.0);
        }
    }
}

/// Gamma-weighted in-edge action of a graph:
/// `(K' x)_v = sum_{u in N_v} gamma_uv x_u`.
pub struct GammaInOperator<'g> {
    graph: &'g AttackDefenseGraph,
}

impl LinearOperator for GammaInOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n
    }

    fn for_each_in_row(&self, v: usize, visit: &mut dyn FnMut(usize, f64)) {
        for &(u, g) in &self.graph.in_neighbors[v] {
            visit(u as usize, g);
        }
    }
}

/// Outcome of a dominant-eigenvalue estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub lambda_max: f64,
    pub iterations: usize,
    /// l1 residual of the eigenpair, `||M x - lambda x||_1 / ||x||_1`.
    pub residual: f64,
    pub converged: bool,
}

/// Estimate the dominant eigenvalue of a nonnegative sparse operator.
///
/// The spectral radius of a nonnegative matrix is the maximum over its
/// strongly connected components, so the operator is first decomposed
/// (iterative Tarjan) and each nontrivial component is handled by power
/// iteration on its induced block. Within an irreducible block the dominant
/// eigenvalue is simple, and iterating on the shifted block `M + cI` (same
/// eigenvectors, spectrum moved off the unit circle) makes convergence
/// geometric even for periodic structures such as directed cycles.
/// Trivial components contribute their diagonal weight exactly, so zero and
/// nilpotent operators return 0 without iterating.
///
/// The reported residual is the l1 eigenpair residual within the winning
/// block; the start vector is a fixed seeded positive vector, so reports are
/// reproducible. Non-convergence within `max_iter` (per block) is flagged,
/// not fatal.
pub fn spectral_radius(
    op: &impl LinearOperator,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    let mut pattern: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (v, row) in pattern.iter_mut().enumerate() {
        op.for_each_in_row(v, &mut |u, w| {
            if w != 0.0 {
                row.push(u as u32);
            }
        });
    }

    let mut best = SpectralReport {
        lambda_max: 0.0,
        iterations: 0,
        residual: 0.0,
        converged: true,
    };
    let mut total_iterations = 0;
    let mut all_converged = true;
    for component in strongly_connected_components(&pattern) {
        let report = if component.len() == 1 {
            let v = component[0] as usize;
            let mut diagonal = 0.0;
            op.for_each_in_row(v, &mut |u, w| {
                if u == v {
                    diagonal += w;
                }
            });
            SpectralReport {
                lambda_max: diagonal,
                iterations: 0,
                residual: 0.0,
                converged: true,
            }
        } else {
            power_iterate_block(op, &component, tol, max_iter)
        };
        total_iterations += report.iterations;
        all_converged &= report.converged;
        if report.lambda_max > best.lambda_max {
            best = report;
        }
    }
    best.iterations = total_iterations;
    best.converged = all_converged;
    Ok(best)
}

/// Fixed start-vector seed; any positive start works, a fixed one keeps
/// reports reproducible.
const POWER_ITERATION_SEED: u64 = 0x51_0e_c7;

/// Power iteration on the submatrix induced by one strongly connected
/// component, under a diagonal shift of half the largest row sum.
fn power_iterate_block(
    op: &impl LinearOperator,
    component: &[u32],
    tol: f64,
    max_iter: usize,
) -> SpectralReport {
    let k = component.len();
    let mut local_of = BTreeMap::new();
    for (idx, &v) in component.iter().enumerate() {
        local_of.insert(v as usize, idx);
    }
    // induced block rows in local indices
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); k];
    let mut max_row_sum = 0.0f64;
    for (idx, &v) in component.iter().enumerate() {
        let mut sum = 0.0;
        let row = &mut rows[idx];
        op.for_each_in_row(v as usize, &mut |u, w| {
            if let Some(&lu) = local_of.get(&u) {
                row.push((lu as u32, w));
                sum += w;
            }
        });
        max_row_sum = max_row_sum.max(sum);
    }
    let shift = 0.5 * max_row_sum;

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
    normalize_l1(&mut x);
    let mut mx = vec![0.0; k];

    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        for (o, row) in mx.iter_mut().zip(&rows) {
            *o = row.iter().map(|&(u, w)| w * x[u as usize]).sum();
        }
        // Nonnegative block and positive unit-l1 x: the l1 mass of M x
        // estimates the dominant eigenvalue directly.
        lambda = mx.iter().sum();
        residual = mx
            .iter()
            .zip(&x)
            .map(|(&m, &xv)| (m - lambda * xv).abs())
            .sum();
        if residual <= tol {
            return SpectralReport {
                lambda_max: lambda,
                iterations: it,
                residual,
                converged: true,
            };
        }
        for (xv, &m) in x.iter_mut().zip(&mx) {
            *xv = m + shift * *xv;
        }
        normalize_l1(&mut x);
    }
    SpectralReport {
        lambda_max: lambda,
        iterations,
        residual,
        converged: false,
    }
}

/// Iterative Tarjan over a sparsity pattern; returns components in reverse
/// topological order.
fn strongly_connected_components(adjacency: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = adjacency.len();
    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut components = Vec::new();
    let mut frames: Vec<(u32, usize)> = Vec::new();

    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        frames.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            let vu = v as usize;
            if *pos == 0 {
                index[vu] = next_index;
                low[vu] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[vu] = true;
            }
            if let Some(&w) = adjacency[vu].get(*pos) {
                *pos += 1;
                let wu = w as usize;
                if index[wu] == UNSET {
                    frames.push((w, 0));
                } else if on_stack[wu] {
                    low[vu] = low[vu].min(index[wu]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    let pu = parent as usize;
                    low[pu] = low[pu].min(low[vu]);
                }
                if low[vu] == index[vu] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(component);
                }
            }
        }
    }
    components
}

fn normalize_l1(x: &mut [f64]) {
    let norm: f64 = x.iter().map(|v| v.abs()).sum();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

/// Result of the pre-control convergence condition.
#[derive(Debug, Clone)]
pub struct PrecontrolReport {
    pub ok: bool,
    /// beta / gamma_max, the left side of the condition.
    pub ratio: f64,
    /// Dominant adjacency eigenvalue estimate.
    pub lambda_adjacency: f64,
    /// ratio - lambda; nonnegative iff the condition holds.
    pub margin: f64,
    pub spectral: SpectralReport,
}

/// Core comparison of the pre-control condition: `beta / gamma_max >= lambda`.
pub fn precontrol_holds(beta: f64, gamma_max: f64, lambda: f64) -> bool {
    beta / gamma_max >= lambda
}

/// Check the spectral sufficient condition for convergence to the zero
/// equilibrium under the weaker (low-cost) recovery probability.
///
/// Evaluates `beta_minus / gamma_max >= lambda_A1` on the unweighted
/// adjacency spectrum; passing with `beta_minus` implies passing with any
/// larger beta.
pub fn precontrol_check(graph: &AttackDefenseGraph, beta_minus: f64) -> Result<PrecontrolReport> {
    if !(beta_minus > 0.0 && beta_minus <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_minus must lie in (0, 1], got {beta_minus}"
        )));
    }
    let gamma_max = graph.gamma_max();
    let spectral = spectral_radius(&graph.adjacency_operator(), 1e-8, 10_000)?;
    let ratio = beta_minus / gamma_max;
    let lambda = spectral.lambda_max;
    Ok(PrecontrolReport {
        ok: precontrol_holds(beta_minus, gamma_max, lambda),
        ratio,
        lambda_adjacency: lambda,
        margin: ratio - lambda,
        spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_directed_basic() {
        let g = load_edge_list("0 1\n1 2\n", true).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(g.is_directed());
    }

    #[test]
    fn load_undirected_symmetrizes() {
        let g = load_edge_list("0 1\n", false).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1), (1, 0)]);
    }

    #[test]
    fn load_drops_self_loops_and_duplicates() {
        let g = load_edge_list("0 0\n0 1\n0 1\n", true).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn load_remaps_sparse_ids() {
        let g = load_edge_list("# comment\n10 42\n42 7\n", true).unwrap();
        assert_eq!(g.node_count(), 3);
        // sorted original ids: 7 -> 0, 10 -> 1, 42 -> 2
        assert_eq!(g.original_id(0), 7);
        assert_eq!(g.original_id(1), 10);
        assert_eq!(g.original_id(2), 42);
        assert_eq!(g.edges(), &[(1, 2), (2, 0)]);
    }

    #[test]
    fn load_rejects_malformed_lines() {
        let err = load_edge_list("0 1\nnot numbers\n", true).unwrap_err();
        match err {
            Error::EdgeListParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let err = load_edge_list("0\n", true).unwrap_err();
        assert!(matches!(err, Error::EdgeListParse { line: 1, .. }));
        let err = load_edge_list("0 1 2\n", true).unwrap_err();
        assert!(matches!(err, Error::EdgeListParse { line: 1, .. }));
    }

    #[test]
    fn load_rejects_empty() {
        assert!(matches!(
            load_edge_list("# nothing\n", true),
            Err(Error::EmptyGraph)
        ));
        assert!(matches!(
            load_edge_list("3 3\n", true),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = load_edge_list("5 1\n1 9\n9 5\n", true).unwrap();
        let text = g.to_edge_list();
        let g2 = load_edge_list(&text, true).unwrap();
        assert_eq!(g.edges(), g2.edges());
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(text, g2.to_edge_list());
    }

    #[test]
    fn edge_list_round_trip_undirected() {
        let g = load_edge_list("0 3\n3 2\n", false).unwrap();
        let text = g.to_edge_list();
        let g2 = load_edge_list(&text, false).unwrap();
        assert_eq!(g.edges(), g2.edges());
    }

    #[test]
    fn gamma_assignment_in_range_and_reproducible() {
        let g = load_edge_list("0 1\n1 2\n2 0\n0 2\n", true).unwrap();
        let a = g.assign_gammas(0.002, 77).unwrap();
        for &gv in a.gammas() {
            assert!(gv > 0.0 && gv <= 0.002, "gamma {gv} out of range");
        }
        let b = g.assign_gammas(0.002, 77).unwrap();
        assert_eq!(a.gammas(), b.gammas());
        let c = g.assign_gammas(0.002, 78).unwrap();
        assert_ne!(a.gammas(), c.gammas());
    }

    #[test]
    fn gamma_assignment_single_edge_full_range() {
        let g = load_edge_list("0 1\n", true).unwrap();
        let a = g.assign_gammas(1.0, 5).unwrap();
        assert_eq!(a.gammas().len(), 1);
        assert!(a.gammas()[0] > 0.0 && a.gammas()[0] <= 1.0);
    }

    #[test]
    fn gamma_assignment_symmetric_on_undirected() {
        let g = load_edge_list("0 1\n1 2\n0 2\n", false).unwrap();
        let a = g.assign_gammas(0.5, 9).unwrap();
        for (idx, &(u, v)) in a.edges().iter().enumerate() {
            let rev = a
                .edges()
                .iter()
                .position(|&(x, y)| (x, y) == (v, u))
                .unwrap();
            assert_eq!(a.gammas()[idx], a.gammas()[rev]);
        }
    }

    #[test]
    fn gamma_assignment_rejects_bad_bound() {
        let g = load_edge_list("0 1\n", true).unwrap();
        assert!(g.assign_gammas(0.0, 1).is_err());
        assert!(g.assign_gammas(1.5, 1).is_err());
    }

    #[test]
    fn spectral_radius_of_cycle_is_one() {
        let n = 7;
        let mut lines = String::new();
        for v in 0..n {
            lines.push_str(&format!("{} {}\n", v, (v + 1) % n));
        }
        let g = load_edge_list(&lines, true).unwrap();
        let rep = spectral_radius(&g.adjacency_operator(), 1e-8, 10_000).unwrap();
        assert!(rep.converged, "cycle should converge: {rep:?}");
        assert!((rep.lambda_max - 1.0).abs() <= 1e-8, "{rep:?}");
    }

    #[test]
    fn spectral_radius_of_k5_is_four() {
        let mut lines = String::new();
        for u in 0..5 {
            for v in 0..5 {
                if u != v {
                    lines.push_str(&format!("{u} {v}\n"));
                }
            }
        }
        let g = load_edge_list(&lines, true).unwrap();
        let rep = spectral_radius(&g.adjacency_operator(), 1e-10, 10_000).unwrap();
        assert!(rep.converged);
        assert!((rep.lambda_max - 4.0).abs() <= 1e-8, "{rep:?}");
    }

    struct DenseOp(Vec<Vec<f64>>);

    impl LinearOperator for DenseOp {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn for_each_in_row(&self, v: usize, visit: &mut dyn FnMut(usize, f64)) {
            for (u, &w) in self.0[v].iter().enumerate() {
                if w != 0.0 {
                    visit(u, w);
                }
            }
        }
    }

    #[test]
    fn spectral_radius_zero_matrix_exact() {
        let rep = spectral_radius(&DenseOp(vec![vec![0.0; 4]; 4]), 1e-8, 100).unwrap();
        assert_eq!(rep.lambda_max, 0.0);
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn spectral_radius_nilpotent_is_zero() {
        // single edge: strictly triangular, spectrum {0}
        let mut m = vec![vec![0.0; 2]; 2];
        m[1][0] = 0.4;
        let rep = spectral_radius(&DenseOp(m), 1e-8, 10_000).unwrap();
        assert!(rep.lambda_max.abs() <= 1e-7, "{rep:?}");
    }

    #[test]
    fn spectral_radius_matches_dense_eigen_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..12 {
            let n = 2 + (trial * 4) % 49;
            let mut m = vec![vec![0.0; n]; n];
            for r in 0..n {
                for c in 0..n {
                    if r != c && rng.random::<f64>() < 0.2 {
                        m[r][c] = rng.random::<f64>();
                    }
                }
            }
            let rep = spectral_radius(&DenseOp(m.clone()), 1e-10, 50_000).unwrap();

            let flat: Vec<f64> = m.iter().flatten().copied().collect();
            let dm = nalgebra::DMatrix::from_row_slice(n, n, &flat);
            let oracle = dm
                .complex_eigenvalues()
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(
                (rep.lambda_max - oracle).abs() <= 1e-6,
                "n={n} power={} oracle={oracle} report={rep:?}",
                rep.lambda_max
            );
        }
    }

    #[test]
    fn spectral_radius_rejects_bad_tolerance() {
        let g = load_edge_list("0 1\n", true).unwrap();
        assert!(spectral_radius(&g.adjacency_operator(), 0.0, 10).is_err());
    }

    #[test]
    fn precontrol_predicate_reference_parameter_sets() {
        // beta 0.1, gamma_max 0.002, lambda 45.6167: 50 >= 45.6167
        assert!(precontrol_holds(0.1, 0.002, 45.6167));
        // beta 0.1, gamma_max 0.013, lambda 4.7395: 7.69 >= 4.7395
        assert!(precontrol_holds(0.1, 0.013, 4.7395));
        // 0.01 / 0.5 = 0.02 < 4
        assert!(!precontrol_holds(0.01, 0.5, 4.0));
    }

    #[test]
    fn precontrol_check_on_graph() {
        // K5 (lambda = 4) with gamma = 0.013: 0.1 / 0.013 = 7.69 >= 4
        let mut lines = String::new();
        for u in 0..5 {
            for v in 0..5 {
                if u != v {
                    lines.push_str(&format!("{u} {v}\n"));
                }
            }
        }
        let g = load_edge_list(&lines, true).unwrap();
        let mut weighted: Vec<(u32, u32, f64)> =
            g.edges().iter().map(|&(u, v)| (u, v, 0.013)).collect();
        let g = AttackDefenseGraph::from_weighted_edges(5, &weighted, true).unwrap();
        let rep = precontrol_check(&g, 0.1).unwrap();
        assert!(rep.ok);
        assert!((rep.ratio - 0.1 / 0.013).abs() < 1e-12);
        assert!((rep.lambda_adjacency - 4.0).abs() < 1e-6);

        // gamma = 0.5 makes the ratio 0.02 < 4: fails
        for w in weighted.iter_mut() {
            w.2 = 0.5;
        }
        let g = AttackDefenseGraph::from_weighted_edges(5, &weighted, true).unwrap();
        let rep = precontrol_check(&g, 0.01).unwrap();
        assert!(!rep.ok);
        assert!(rep.margin < 0.0);
    }

    #[test]
    fn erdos_renyi_is_seeded_and_parses() {
        let text = erdos_renyi_edge_list(50, 4.0, 11);
        let text2 = erdos_renyi_edge_list(50, 4.0, 11);
        assert_eq!(text, text2);
        let g = load_edge_list(&text, true).unwrap();
        assert!(g.node_count() <= 50);
        let mean_deg = g.edge_count() as f64 / g.node_count() as f64;
        assert!(mean_deg > 2.0 && mean_deg < 6.0, "mean degree {mean_deg}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // serialize -> load is the identity on the stored structure
            #[test]
            fn edge_list_round_trip_any_graph(
                pairs in proptest::collection::vec((0u64..40, 0u64..40), 1..120),
                directed in proptest::bool::ANY,
            ) {
                let mut text = String::new();
                for (u, v) in &pairs {
                    text.push_str(&format!("{u} {v}\n"));
                }
                let Ok(g) = load_edge_list(&text, directed) else {
                    // only self-loops; nothing to check
                    return Ok(());
                };
                let serialized = g.to_edge_list();
                let g2 = load_edge_list(&serialized, directed).unwrap();
                prop_assert_eq!(g.node_count(), g2.node_count());
                prop_assert_eq!(g.edges(), g2.edges());
                prop_assert_eq!(serialized, g2.to_edge_list());
            }
        }
    }
}
