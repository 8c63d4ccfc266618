//! The default contagion process on a realized graph.
//!
//! Starting from the vertices with zero capital, defaults propagate in
//! rounds: a solvent vertex defaults once the accumulated impact weight of
//! its defaulted debtors reaches its capital, and defaulted debtors never
//! repay. The process is monotone, so the final default set is a pure
//! function of the graph.
//!
//! [`run_cascade`] computes the final set with a breadth-layered work queue
//! in O(n + edges); [`run_cascade_rounds`] is the literal round-by-round
//! rescan of the defining recursion, kept as a slow oracle for testing.

use crate::graph::Graph;
use crate::model::Capital;

// ============================================================================
// Result
// ============================================================================

/// Final state of one cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    /// Final default indicator per vertex.
    pub defaulted: Vec<bool>,
    /// Number of defaulted vertices.
    pub default_count: usize,
    /// Defaulted share of all vertices.
    pub fraction: f64,
    /// Defaulted vertices of each type as a share of all n vertices (the
    /// entries sum to `fraction`).
    pub per_type_fraction: Vec<f64>,
    /// Average systemic importance lost: sum of defaulted vertices'
    /// importance divided by n.
    pub importance_mass: f64,
    /// Breadth rounds until stabilization (0 when nothing spreads).
    pub rounds: usize,
}

fn summarize(graph: &Graph, defaulted: Vec<bool>, rounds: usize) -> CascadeResult {
    let pop = graph.population();
    let n = pop.n();
    let mut default_count = 0usize;
    let mut per_type = vec![0usize; pop.t_types()];
    let mut importance = 0.0f64;
    for v in 0..n {
        if defaulted[v] {
            default_count += 1;
            per_type[pop.vtype()[v] as usize] += 1;
            importance += pop.importance()[v];
        }
    }
    CascadeResult {
        defaulted,
        default_count,
        fraction: default_count as f64 / n as f64,
        per_type_fraction: per_type.iter().map(|&c| c as f64 / n as f64).collect(),
        importance_mass: importance / n as f64,
        rounds,
    }
}

// ============================================================================
// Work-queue cascade
// ============================================================================

/// Runs the cascade to its final state with a layered work queue.
///
/// Every defaulted vertex's out-edges are traversed exactly once, adding
/// their impact to each solvent creditor's received-loss tally; a creditor
/// whose tally reaches its capital defaults and joins the next layer.
/// Rounds count the non-seed breadth layers, matching the round-based
/// recursion exactly.
pub fn run_cascade(graph: &Graph) -> CascadeResult {
    let pop = graph.population();
    let n = pop.n();
    let mut defaulted = vec![false; n];
    let mut tally = vec![0u64; n];
    let mut frontier: Vec<usize> = (0..n)
        .filter(|&v| pop.capital()[v].is_zero())
        .collect();
    for &v in &frontier {
        defaulted[v] = true;
    }

    let mut rounds = 0usize;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for (target, impact) in graph.out_neighbors(v) {
                if defaulted[target] {
                    continue;
                }
                tally[target] = tally[target].saturating_add(impact as u64);
                if let Capital::Finite(c) = pop.capital()[target] {
                    if tally[target] >= c {
                        defaulted[target] = true;
                        next.push(target);
                    }
                }
            }
        }
        if !next.is_empty() {
            rounds += 1;
        }
        frontier = next;
    }
    summarize(graph, defaulted, rounds)
}

// ============================================================================
// Round-rescan oracle
// ============================================================================

/// Literal transcription of the round recursion: each round rescans every
/// defaulted vertex's edges from scratch and recomputes the default set,
/// stopping at the first repeat. O(rounds * edges); testing oracle only.
pub fn run_cascade_rounds(graph: &Graph) -> CascadeResult {
    let pop = graph.population();
    let n = pop.n();
    let mut current: Vec<bool> = pop.capital().iter().map(|c| c.is_zero()).collect();
    let mut rounds = 0usize;
    loop {
        let mut loss = vec![0u64; n];
        for v in 0..n {
            if current[v] {
                for (target, impact) in graph.out_neighbors(v) {
                    loss[target] = loss[target].saturating_add(impact as u64);
                }
            }
        }
        let next: Vec<bool> = (0..n)
            .map(|v| match pop.capital()[v] {
                Capital::Finite(c) => loss[v] >= c,
                Capital::Infinite => false,
            })
            .collect();
        if next == current {
            break;
        }
        current = next;
        rounds += 1;
    }
    summarize(graph, current, rounds)
}
