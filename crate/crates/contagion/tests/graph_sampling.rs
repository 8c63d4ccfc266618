//! Statistical and structural checks of the finite-network sampler: the
//! edge law, apportionment, shock realization, determinism, and agreement
//! of empirical degrees with the Poisson limit.

mod common;

use common::load;
use contagion::{
    check_graph_invariants, degree_summary, derive_seed, pair_edge_probabilities,
    realize_population, sample_graph, validate_spec, Capital, ModelSpec, PopulationMode,
    RawAtom, RawSpec,
};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn single_type(in_w: Vec<Vec<f64>>, out_w: Vec<Vec<f64>>, capital: u64) -> ModelSpec {
    let r_levels = in_w.len();
    validate_spec(RawSpec {
        description: None,
        r_levels,
        t_types: 1,
        atoms: vec![RawAtom {
            prob: 1.0,
            vtype: 1,
            in_weights: in_w,
            out_weights: out_w,
            capital: Capital::Finite(capital),
            shock_prob: 0.0,
            importance: 1.0,
        }],
    })
    .unwrap()
}

// ============================================================================
// Edge law
// ============================================================================

#[test]
fn no_out_weight_means_no_edges() {
    let spec = single_type(vec![vec![2.0]], vec![vec![0.0]], 2);
    let pop = realize_population(&spec, 500, PopulationMode::DeterministicRounding, 7);
    let graph = sample_graph(pop, &spec, 7);
    assert_eq!(graph.edge_count(), 0);
}

#[test]
fn pair_probabilities_follow_weights_and_cap() {
    let spec = load("counterparty_dependent.json");
    // Weights are arranged so every ordered class pair carries total edge
    // probability 4/n, split across impact levels by the pair's types.
    assert_eq!(pair_edge_probabilities(&spec, 100, 0, 0), vec![0.0, 0.04]);
    assert_eq!(pair_edge_probabilities(&spec, 100, 0, 1), vec![0.04, 0.0]);
    assert_eq!(pair_edge_probabilities(&spec, 100, 1, 0), vec![0.04, 0.0]);
    assert_eq!(pair_edge_probabilities(&spec, 100, 1, 1), vec![0.04, 0.0]);
    // Small systems hit the 1/R ceiling: 2*2/4 = 1.0 caps at 0.5.
    assert_eq!(pair_edge_probabilities(&spec, 4, 0, 0), vec![0.0, 0.5]);
}

#[test]
fn mean_edge_count_matches_the_exact_expectation() {
    // Every ordered pair of distinct vertices carries probability 4/n, so
    // the edge count is a sum of n^2 - n independent Bernoulli draws.
    let spec = load("counterparty_dependent.json");
    let n = 120usize;
    let q = 4.0 / n as f64;
    let positions = (n * n - n) as f64;
    let expected = q * positions;
    let sd_per_graph = (positions * q * (1.0 - q)).sqrt();

    let seeds = 200u64;
    let mut total = 0usize;
    for seed in 0..seeds {
        // Unshocked population: realize then overwrite shocked capital is
        // unnecessary — shocks do not affect edges, only capitals.
        let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, seed);
        total += sample_graph(pop, &spec, derive_seed(seed, 2, 0)).edge_count();
    }
    let mean = total as f64 / seeds as f64;
    let tolerance = 4.0 * sd_per_graph / (seeds as f64).sqrt();
    assert!(
        (mean - expected).abs() <= tolerance,
        "mean {mean:.2} vs expected {expected:.2} (4 SE = {tolerance:.2})"
    );
}

#[test]
fn edge_count_variance_matches_the_bernoulli_law() {
    let spec = load("counterparty_dependent.json");
    let n = 120usize;
    let q = 4.0 / n as f64;
    let positions = (n * n - n) as f64;
    let expected_var = positions * q * (1.0 - q);

    let seeds = 400;
    let counts: Vec<f64> = (0..seeds)
        .map(|seed| {
            let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, seed);
            sample_graph(pop, &spec, derive_seed(seed, 2, 0)).edge_count() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    // The sample variance of m draws concentrates around the truth with
    // relative error ~ sqrt(2/m) ~ 7%; a 25% band is a safe four-sigma.
    assert!(
        (var - expected_var).abs() <= 0.25 * expected_var,
        "sample variance {var:.1} vs Bernoulli variance {expected_var:.1}"
    );
}

#[test]
fn impact_levels_split_proportionally_to_their_probabilities() {
    // Levels weighted 1:3 — each sampled edge carries impact 1 with
    // probability 1/4.
    let spec = single_type(vec![vec![1.0], vec![3.0]], vec![vec![1.0], vec![1.0]], 2);
    let n = 400;
    let mut level_one = 0u64;
    let mut total = 0u64;
    for seed in 0..100 {
        let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, seed);
        let graph = sample_graph(pop, &spec, derive_seed(seed, 2, 0));
        for (_, _, r) in graph.edges() {
            total += 1;
            if r == 1 {
                level_one += 1;
            }
        }
    }
    let p = 0.25f64;
    let mean = total as f64 * p;
    let sigma = (total as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (level_one as f64 - mean).abs() <= 4.0 * sigma,
        "{level_one} of {total} edges at level 1 (expected {mean:.0} +- {:.0})",
        4.0 * sigma
    );
}

// ============================================================================
// Determinism and invariants
// ============================================================================

#[test]
fn sampling_is_reproducible_and_seed_sensitive() {
    let spec = load("counterparty_dependent.json");
    let pop = realize_population(&spec, 300, PopulationMode::DeterministicRounding, 11);
    let a = sample_graph(pop.clone(), &spec, 99);
    let b = sample_graph(pop.clone(), &spec, 99);
    assert_eq!(
        a.edges().collect::<Vec<_>>(),
        b.edges().collect::<Vec<_>>()
    );
    let c = sample_graph(pop, &spec, 100);
    assert_ne!(
        a.edges().collect::<Vec<_>>(),
        c.edges().collect::<Vec<_>>()
    );
}

#[test]
fn structural_invariants_hold_across_seeds_and_fixtures() {
    for name in ["counterparty_dependent.json", "two_impact_unique_root.json"] {
        let spec = load(name);
        for seed in 0..20 {
            let pop =
                realize_population(&spec, 197, PopulationMode::DeterministicRounding, seed);
            let graph = sample_graph(pop, &spec, derive_seed(seed, 2, 0));
            check_graph_invariants(&graph).unwrap_or_else(|e| panic!("{name} seed {seed}: {e}"));
        }
    }
}

#[test]
fn iid_population_mode_draws_the_atom_distribution() {
    let spec = load("counterparty_dependent.json");
    let n = 30_000;
    let pop = realize_population(&spec, n, PopulationMode::IidSample, 5);
    let counts = pop.class_counts(2);
    assert_eq!(counts[0] + counts[1], n);
    let mean = n as f64 / 3.0;
    let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    assert!(
        (counts[0] as f64 - mean).abs() <= 4.0 * sigma,
        "type-1 count {} (expected {mean:.0} +- {:.0})",
        counts[0],
        4.0 * sigma
    );
    // Unlike deterministic rounding, iid draws differ across seeds.
    let other = realize_population(&spec, n, PopulationMode::IidSample, 6);
    assert_ne!(pop.assignment(), other.assignment());
}

// ============================================================================
// Apportionment and shock realization
// ============================================================================

#[test]
fn deterministic_rounding_uses_largest_remainders() {
    let spec = load("counterparty_dependent.json");
    for (n, want) in [(9usize, vec![3usize, 6]), (10_000, vec![3333, 6667])] {
        let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, 0);
        assert_eq!(pop.class_counts(2), want, "n = {n}");
        // Rounding ignores the seed entirely.
        let again = realize_population(&spec, n, PopulationMode::DeterministicRounding, 77);
        assert_eq!(pop.assignment(), again.assignment());
    }
}

#[test]
fn shock_realization_matches_the_binomial_law() {
    let spec = load("two_impact_unique_root.json");
    let n = 2000usize;
    let seeds = 50u64;
    let mut shocked = 0u64;
    for seed in 0..seeds {
        let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, seed);
        shocked += pop
            .capital()
            .iter()
            .filter(|c| matches!(c, Capital::Finite(0)))
            .count() as u64;
    }
    let draws = (n as u64 * seeds) as f64;
    let mean = draws * 0.2;
    let sigma = (draws * 0.2 * 0.8).sqrt();
    assert!(
        (shocked as f64 - mean).abs() <= 4.0 * sigma,
        "{shocked} shocked of {draws} (expected {mean:.0} +- {:.0})",
        4.0 * sigma
    );
}

// ============================================================================
// Degree distribution
// ============================================================================

#[test]
fn degrees_match_the_poisson_limit() {
    // Single type, one impact level, weight 2: in- and out-degrees both
    // converge to Poisson(4).
    let spec = single_type(vec![vec![2.0]], vec![vec![2.0]], 2);
    let n = 100_000usize;
    let lambda = 4.0_f64;
    let pop = realize_population(&spec, n, PopulationMode::DeterministicRounding, 3);
    let graph = sample_graph(pop, &spec, derive_seed(3, 2, 0));
    let summary = degree_summary(&graph);

    let mean_out = summary.mean_out_degree(0, 0, 0);
    let exact_mean = lambda * (n as f64 - 1.0) / n as f64;
    assert!(
        (mean_out - exact_mean).abs() <= 0.01 * exact_mean,
        "mean out-degree {mean_out:.4} vs {exact_mean:.4}"
    );

    // Chi-square against the Poisson pmf with the tail lumped into the last
    // bin, at significance 1e-3.
    let poisson = Poisson::new(lambda).unwrap();
    for hist in [summary.out_histogram(0, 0, 0), summary.in_histogram(0, 0, 0)] {
        let k_max = 14usize; // Expected tail count n * P(X > 14) ~ 0.7.
        let mut observed = vec![0.0f64; k_max + 2];
        for (k, &count) in hist.iter().enumerate() {
            observed[k.min(k_max + 1)] += count as f64;
        }
        observed[k_max + 1] += (n - hist.iter().sum::<u64>() as usize).max(0) as f64;

        let mut chi2 = 0.0;
        let mut tail_prob = 1.0;
        for (k, &obs) in observed.iter().enumerate().take(k_max + 1) {
            let p = poisson.pmf(k as u64);
            tail_prob -= p;
            let expect = n as f64 * p;
            chi2 += (obs - expect).powi(2) / expect;
        }
        let expect_tail = n as f64 * tail_prob;
        chi2 += (observed[k_max + 1] - expect_tail).powi(2) / expect_tail;

        let critical = ChiSquared::new((k_max + 1) as f64)
            .unwrap()
            .inverse_cdf(1.0 - 1e-3);
        assert!(
            chi2 <= critical,
            "chi-square {chi2:.2} exceeds the 1e-3 critical value {critical:.2}"
        );
    }
}
