//! Finite networks: vertex populations realized from a spec and random
//! weighted directed edges sampled per the model's edge law.
//!
//! An edge `i -> j` with impact weight `r` means debtor i's default sends a
//! loss of size r to creditor j. For an ordered vertex pair (i, j) with atom
//! classes (a, b) the edge carries weight r with probability
//! `p_r = min(1/R, out_a(r, type_b) * in_b(r, type_a) / n)`, and at most one
//! weight is present per pair (the weights partition one uniform draw).
//!
//! Because probabilities depend on vertices only through their atom classes,
//! sampling walks each ordered class pair's vertex lattice with geometric
//! skips at total rate `q = sum_r p_r`, then draws the weight categorically
//! — expected O(n + edges) time. Every class pair gets its own
//! counter-derived RNG stream, so parallel sampling is reproducible
//! regardless of thread count.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{Capital, ModelSpec};

// ============================================================================
// Seed derivation
// ============================================================================

/// SplitMix64 finalizer: bijective mixing with full avalanche.
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Derives an independent child seed from a base seed and two stream
/// indices. Used for per-(class pair) edge streams and per-trial seeds so
/// that concurrent work never shares or races a generator.
pub fn derive_seed(base: u64, lane: u64, index: u64) -> u64 {
    let mut h = mix64(base ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ lane.wrapping_mul(0xff51_afd7_ed55_8ccd));
    h = mix64(h ^ index.wrapping_mul(0xc4ce_b9fe_1a85_ec53));
    h
}

// ============================================================================
// Population
// ============================================================================

/// How vertex atom classes are assigned for finite n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationMode {
    /// Largest-remainder apportionment: each atom receives floor(n*prob) or
    /// ceil(n*prob) vertices. The default; finite systems then converge to
    /// the spec's distribution deterministically.
    DeterministicRounding,
    /// Each vertex draws its atom independently from the atom distribution.
    IidSample,
}

/// A realized set of n vertices: per-vertex atom class, type, post-shock
/// capital, and systemic importance.
#[derive(Debug, Clone)]
pub struct Population {
    n: usize,
    r_levels: usize,
    t_types: usize,
    assignment: Vec<u32>,
    vtype: Vec<u32>,
    capital: Vec<Capital>,
    importance: Vec<f64>,
}

impl Population {
    /// Builds a population from explicit per-vertex data, for hand-crafted
    /// graphs. Panics when slice lengths disagree or a type index is out of
    /// range; sampled populations come from [`realize_population`].
    pub fn from_parts(
        r_levels: usize,
        t_types: usize,
        assignment: Vec<u32>,
        vtype: Vec<u32>,
        capital: Vec<Capital>,
        importance: Vec<f64>,
    ) -> Self {
        let n = assignment.len();
        assert!(n >= 1, "a population needs at least one vertex");
        assert!(r_levels >= 1 && t_types >= 1, "dimensions must be positive");
        assert_eq!(vtype.len(), n, "vtype length must match assignment");
        assert_eq!(capital.len(), n, "capital length must match assignment");
        assert_eq!(importance.len(), n, "importance length must match assignment");
        assert!(
            vtype.iter().all(|&t| (t as usize) < t_types),
            "vertex type out of range"
        );
        Self {
            n,
            r_levels,
            t_types,
            assignment,
            vtype,
            capital,
            importance,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_levels(&self) -> usize {
        self.r_levels
    }

    pub fn t_types(&self) -> usize {
        self.t_types
    }

    /// Atom class of each vertex (0-based index into the spec's atom list).
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Vertex type of each vertex, 0-based.
    pub fn vtype(&self) -> &[u32] {
        &self.vtype
    }

    /// Post-shock capital of each vertex.
    pub fn capital(&self) -> &[Capital] {
        &self.capital
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    /// Number of vertices assigned to each atom class.
    pub fn class_counts(&self, atoms: usize) -> Vec<usize> {
        let mut counts = vec![0usize; atoms];
        for &a in &self.assignment {
            counts[a as usize] += 1;
        }
        counts
    }

    /// Vertex ids grouped by atom class, each group in ascending id order.
    pub fn class_members(&self, atoms: usize) -> Vec<Vec<u32>> {
        let mut members = vec![Vec::new(); atoms];
        for (v, &a) in self.assignment.iter().enumerate() {
            members[a as usize].push(v as u32);
        }
        members
    }
}

/// Apportions n vertices to atoms by largest remainder: every atom gets
/// floor(n*prob), and the leftover vertices go to the largest fractional
/// remainders (ties broken toward the lower atom index).
fn apportion(probs: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(probs.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(probs.len());
    for (idx, &p) in probs.iter().enumerate() {
        let exact = p * n as f64;
        let base = exact.floor();
        counts.push(base as usize);
        remainders.push((idx, exact - base));
    }
    let mut assigned: usize = counts.iter().sum();
    // Float round-off can only leave a shortfall of a few slots; a surplus
    // would need sum(floor(n*p)) > n, which renormalized probabilities
    // cannot produce except at the last ulp — trim defensively anyway.
    while assigned > n {
        let widest = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
        counts[widest] -= 1;
        assigned -= 1;
    }
    remainders.sort_by(|(ia, ra), (ib, rb)| rb.partial_cmp(ra).unwrap().then(ia.cmp(ib)));
    for (idx, _) in remainders.iter().cycle().take(n - assigned) {
        counts[*idx] += 1;
    }
    counts
}

/// Realizes a population of n vertices from the spec, including per-vertex
/// shock outcomes (capital wiped to 0 with the atom's shock probability).
///
/// Assignment draws and shock draws use separate streams derived from the
/// seed, so the two randomizations never interleave.
pub fn realize_population(
    spec: &ModelSpec,
    n: usize,
    mode: PopulationMode,
    seed: u64,
) -> Population {
    assert!(n >= 1, "a population needs at least one vertex");
    let atoms = spec.atoms();
    let assignment: Vec<u32> = match mode {
        PopulationMode::DeterministicRounding => {
            let probs: Vec<f64> = atoms.iter().map(|a| a.prob).collect();
            apportion(&probs, n)
                .iter()
                .enumerate()
                .flat_map(|(idx, &count)| std::iter::repeat(idx as u32).take(count))
                .collect()
        }
        PopulationMode::IidSample => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (idx, atom) in atoms.iter().enumerate() {
                        acc += atom.prob;
                        if u < acc {
                            return idx as u32;
                        }
                    }
                    (atoms.len() - 1) as u32
                })
                .collect()
        }
    };

    let mut shock_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let mut vtype = Vec::with_capacity(n);
    let mut capital = Vec::with_capacity(n);
    let mut importance = Vec::with_capacity(n);
    for &a in &assignment {
        let atom = &atoms[a as usize];
        vtype.push(atom.vtype as u32);
        let shocked = atom.shock_prob > 0.0 && shock_rng.random::<f64>() < atom.shock_prob;
        capital.push(if shocked {
            Capital::Finite(0)
        } else {
            atom.capital
        });
        importance.push(atom.importance);
    }

    Population {
        n,
        r_levels: spec.r_levels(),
        t_types: spec.t_types(),
        assignment,
        vtype,
        capital,
        importance,
    }
}

// ============================================================================
// Edge sampling
// ============================================================================

/// Per-impact edge probabilities for an ordered (debtor class, creditor
/// class) pair at system size n: `p_r = min(1/R, out_a(r, type_b) *
/// in_b(r, type_a) / n)`.
pub fn pair_edge_probabilities(
    spec: &ModelSpec,
    n: usize,
    debtor_atom: usize,
    creditor_atom: usize,
) -> Vec<f64> {
    let a = &spec.atoms()[debtor_atom];
    let b = &spec.atoms()[creditor_atom];
    let cap = 1.0 / spec.r_levels() as f64;
    (0..spec.r_levels())
        .map(|r| {
            let raw = a.out_weights.get(r, b.vtype) * b.in_weights.get(r, a.vtype) / n as f64;
            raw.min(cap)
        })
        .collect()
}

/// Samples the hit positions and impact weights on one ordered class pair's
/// vertex lattice. Lattice position k maps to the ordered vertex pair
/// `(debtors[k / creditors.len()], creditors[k % creditors.len()])`; each
/// position is an independent Bernoulli(q) trial realized by geometric
/// skips, and a hit draws its impact proportionally to the per-weight
/// probabilities. Same-class diagonal hits (self-pairs) are discarded.
fn sample_class_pair(
    debtors: &[u32],
    creditors: &[u32],
    probs: &[f64],
    same_class: bool,
    seed: u64,
) -> Vec<(u32, u32, u32)> {
    let q: f64 = probs.iter().sum();
    let total = debtors.len() * creditors.len();
    if q <= 0.0 || total == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log1m_q = (-q).ln_1p();
    let mut edges = Vec::new();
    let mut pos: usize = 0;
    loop {
        // u in (0, 1] keeps ln(u) finite; skip ~ Geometric(q) counts the
        // misses before the next hit.
        let u: f64 = 1.0 - rng.random::<f64>();
        if log1m_q.is_finite() {
            let skip = (u.ln() / log1m_q).floor();
            if skip >= (total - pos) as f64 {
                break;
            }
            pos += skip as usize;
        } // q == 1: every position is a hit, skip stays 0.
        if pos >= total {
            break;
        }
        let i = debtors[pos / creditors.len()];
        let j = creditors[pos % creditors.len()];
        pos += 1;
        if same_class && i == j {
            // Diagonal lattice point: no self-loops; the draw still counts
            // as consumed so off-diagonal pairs stay independent.
            rng.random::<f64>();
            continue;
        }
        let mut v: f64 = rng.random::<f64>() * q;
        let mut impact = probs.len();
        for (idx, &p) in probs.iter().enumerate() {
            if v < p {
                impact = idx;
                break;
            }
            v -= p;
        }
        // Guard against the cumulative walk slipping past the end by one ulp.
        let impact = impact.min(probs.len() - 1) as u32 + 1;
        edges.push((i, j, impact));
    }
    edges
}

/// A sampled network in compressed out-adjacency form over its population.
#[derive(Debug, Clone)]
pub struct Graph {
    population: Population,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    impacts: Vec<u32>,
}

impl Graph {
    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn vertex_count(&self) -> usize {
        self.population.n
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Out-edges of a debtor vertex as (creditor vertex, impact weight r in
    /// 1..=R).
    pub fn out_neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let lo = self.offsets[v];
        let hi = self.offsets[v + 1];
        self.targets[lo..hi]
            .iter()
            .zip(&self.impacts[lo..hi])
            .map(|(&t, &r)| (t as usize, r))
    }

    /// All edges as (debtor, creditor, impact weight).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.vertex_count()).flat_map(move |v| {
            self.out_neighbors(v).map(move |(t, r)| (v, t, r))
        })
    }

    /// Builds a graph from an explicit (debtor, creditor, impact) edge list,
    /// e.g. for hand-crafted cascade scenarios. Edge order within a debtor is
    /// preserved; debtors are grouped by a stable counting sort.
    pub fn from_edge_list(population: Population, edges: &[(u32, u32, u32)]) -> Self {
        for &(src, dst, r) in edges {
            assert!(
                (src as usize) < population.n && (dst as usize) < population.n,
                "edge ({src}, {dst}) out of range for n = {}",
                population.n
            );
            assert!(
                r >= 1 && (r as usize) <= population.r_levels,
                "impact {r} outside 1..={}",
                population.r_levels
            );
        }
        let n = population.n;
        let mut counts = vec![0usize; n + 1];
        for &(src, _, _) in edges {
            counts[src as usize + 1] += 1;
        }
        for v in 0..n {
            counts[v + 1] += counts[v];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut targets = vec![0u32; edges.len()];
        let mut impacts = vec![0u32; edges.len()];
        for &(src, dst, r) in edges {
            let slot = cursor[src as usize];
            targets[slot] = dst;
            impacts[slot] = r;
            cursor[src as usize] += 1;
        }
        Graph {
            population,
            offsets,
            targets,
            impacts,
        }
    }
}

/// Samples the random edge set over a realized population.
///
/// Ordered class pairs are sampled independently (in parallel) on RNG
/// streams derived from the seed and the pair indices, then merged in fixed
/// pair order — the result is bit-for-bit reproducible for identical
/// (population, spec, seed) regardless of thread count.
pub fn sample_graph(population: Population, spec: &ModelSpec, seed: u64) -> Graph {
    let atoms = spec.atoms().len();
    assert_eq!(
        (population.r_levels, population.t_types),
        (spec.r_levels(), spec.t_types()),
        "population and spec dimensions must agree"
    );
    assert!(
        population.assignment.iter().all(|&a| (a as usize) < atoms),
        "population references atoms outside the spec"
    );
    let members = population.class_members(atoms);
    let n = population.n;

    let pairs: Vec<(usize, usize)> = (0..atoms)
        .flat_map(|a| (0..atoms).map(move |b| (a, b)))
        .collect();
    let per_pair: Vec<Vec<(u32, u32, u32)>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let probs = pair_edge_probabilities(spec, n, a, b);
            sample_class_pair(
                &members[a],
                &members[b],
                &probs,
                a == b,
                derive_seed(seed, a as u64, b as u64),
            )
        })
        .collect();
    let merged: Vec<(u32, u32, u32)> = per_pair.into_iter().flatten().collect();
    Graph::from_edge_list(population, &merged)
}

// ============================================================================
// Degree summaries
// ============================================================================

/// Empirical in/out degree histograms split by (impact r, counterparty type
/// alpha, own type beta), for comparison against the Poisson limits.
#[derive(Debug, Clone)]
pub struct DegreeSummary {
    r_levels: usize,
    t_types: usize,
    out_hists: Vec<Vec<u64>>,
    in_hists: Vec<Vec<u64>>,
    type_counts: Vec<u64>,
}

impl DegreeSummary {
    fn offset(&self, r: usize, alpha: usize, beta: usize) -> usize {
        (r * self.t_types + alpha) * self.t_types + beta
    }

    pub fn r_levels(&self) -> usize {
        self.r_levels
    }

    pub fn t_types(&self) -> usize {
        self.t_types
    }

    /// Vertices of each type.
    pub fn type_counts(&self) -> &[u64] {
        &self.type_counts
    }

    /// Histogram of r-out-degree toward type-alpha creditors over vertices
    /// of type beta: entry k counts vertices with exactly k such edges.
    pub fn out_histogram(&self, r: usize, alpha: usize, beta: usize) -> &[u64] {
        &self.out_hists[self.offset(r, alpha, beta)]
    }

    /// Histogram of r-in-degree from type-alpha debtors over vertices of
    /// type beta.
    pub fn in_histogram(&self, r: usize, alpha: usize, beta: usize) -> &[u64] {
        &self.in_hists[self.offset(r, alpha, beta)]
    }

    pub fn mean_out_degree(&self, r: usize, alpha: usize, beta: usize) -> f64 {
        Self::mean(self.out_histogram(r, alpha, beta), self.type_counts[beta])
    }

    pub fn mean_in_degree(&self, r: usize, alpha: usize, beta: usize) -> f64 {
        Self::mean(self.in_histogram(r, alpha, beta), self.type_counts[beta])
    }

    fn mean(hist: &[u64], count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let total: u64 = hist.iter().enumerate().map(|(k, &h)| k as u64 * h).sum();
        total as f64 / count as f64
    }
}

/// Tallies the per-type degree histograms of a sampled graph.
pub fn degree_summary(graph: &Graph) -> DegreeSummary {
    let pop = graph.population();
    let (n, r_levels, t_types) = (pop.n, pop.r_levels, pop.t_types);
    let cells = r_levels * t_types * t_types;
    let lane = |r: usize, alpha: usize| r * t_types + alpha;

    // Per-vertex degree counts in each (r, counterparty type) lane.
    let mut out_counts = vec![0u32; n * r_levels * t_types];
    let mut in_counts = vec![0u32; n * r_levels * t_types];
    let lanes = r_levels * t_types;
    for (src, dst, r) in graph.edges() {
        let r0 = r as usize - 1;
        out_counts[src * lanes + lane(r0, pop.vtype[dst] as usize)] += 1;
        in_counts[dst * lanes + lane(r0, pop.vtype[src] as usize)] += 1;
    }

    let mut summary = DegreeSummary {
        r_levels,
        t_types,
        out_hists: vec![vec![0u64; 1]; cells],
        in_hists: vec![vec![0u64; 1]; cells],
        type_counts: vec![0u64; t_types],
    };
    let bump = |hists: &mut Vec<Vec<u64>>, cell: usize, degree: usize| {
        let h = &mut hists[cell];
        if h.len() <= degree {
            h.resize(degree + 1, 0);
        }
        h[degree] += 1;
    };
    for v in 0..n {
        let beta = pop.vtype[v] as usize;
        summary.type_counts[beta] += 1;
        for r in 0..r_levels {
            for alpha in 0..t_types {
                let cell = (r * t_types + alpha) * t_types + beta;
                let ln = lane(r, alpha);
                bump(&mut summary.out_hists, cell, out_counts[v * lanes + ln] as usize);
                bump(&mut summary.in_hists, cell, in_counts[v * lanes + ln] as usize);
            }
        }
    }
    summary
}

// ============================================================================
// Debug dumps
// ============================================================================

/// Writes the vertex table as `id,atom,capital,importance` (1-based ids and
/// atom numbers, `inf` for unbounded capital).
pub fn write_vertex_table<W: Write>(mut w: W, graph: &Graph) -> std::io::Result<()> {
    writeln!(w, "id,atom,capital,importance")?;
    let pop = graph.population();
    for v in 0..pop.n {
        writeln!(
            w,
            "{},{},{},{}",
            v + 1,
            pop.assignment[v] + 1,
            pop.capital[v],
            pop.importance[v]
        )?;
    }
    Ok(())
}

/// Writes the edge list as `src,dst,r` with 1-based vertex ids.
pub fn write_edge_list<W: Write>(mut w: W, graph: &Graph) -> std::io::Result<()> {
    writeln!(w, "src,dst,r")?;
    for (src, dst, r) in graph.edges() {
        writeln!(w, "{},{},{}", src + 1, dst + 1, r)?;
    }
    Ok(())
}

/// Checks the structural edge-law invariants: no self-loops, impacts within
/// 1..=R, targets in range, and at most one edge per ordered pair. Used by
/// tests; cheap enough to run on any sampled graph.
pub fn check_graph_invariants(graph: &Graph) -> Result<(), String> {
    let n = graph.vertex_count();
    let r_levels = graph.population().r_levels as u32;
    let mut seen: HashMap<(u32, u32), u32> = HashMap::new();
    for (src, dst, r) in graph.edges() {
        if src == dst {
            return Err(format!("self-loop at vertex {src}"));
        }
        if dst >= n {
            return Err(format!("edge target {dst} out of range"));
        }
        if r == 0 || r > r_levels {
            return Err(format!("impact {r} outside 1..={r_levels}"));
        }
        if let Some(prev) = seen.insert((src as u32, dst as u32), r) {
            return Err(format!(
                "ordered pair ({src}, {dst}) carries two impacts ({prev} and {r})"
            ));
        }
    }
    Ok(())
}
