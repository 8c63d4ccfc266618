//! Repeated graph-sampling + cascade experiments across network sizes.
//!
//! Every trial is a pure function of a child seed derived from (base seed,
//! n, trial index), so runs are reproducible bit-for-bit no matter how many
//! workers execute them or in what order. Shocks are realized per vertex
//! i.i.d. with the atom's shock probability (this adds binomial variance at
//! small n relative to an exact-count realization).
//!
//! For systems with several analytic roots the empirical outcomes split
//! into clusters; [`split_clusters`] assigns each trial to the nearest
//! analytic candidate fraction, which is exactly a midpoint split between
//! neighboring candidates.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::run_cascade;
use crate::graph::{derive_seed, realize_population, sample_graph, PopulationMode};
use crate::model::ModelSpec;

// ============================================================================
// Configuration and records
// ============================================================================

/// Parameters of one experiment sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Network sizes to sweep.
    pub n_grid: Vec<usize>,
    /// Trials per size.
    pub trials: usize,
    /// Base seed; every trial derives an independent child seed from it.
    pub base_seed: u64,
    /// How vertex classes are assigned.
    pub mode: PopulationMode,
    /// Final fractions strictly below this count as resilient outcomes in
    /// the per-size summary.
    pub resilient_threshold: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults: one size of 10^4 vertices, 100 trials.
    pub fn desk_scale(base_seed: u64) -> Self {
        ExperimentConfig {
            n_grid: vec![10_000],
            trials: 100,
            base_seed,
            mode: PopulationMode::DeterministicRounding,
            resilient_threshold: 0.02,
        }
    }
}

/// Outcome of a single (size, trial) cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub fraction: f64,
    pub per_type_fraction: Vec<f64>,
    pub importance_mass: f64,
    pub rounds: usize,
    /// Wall time of the trial in milliseconds — the one field excluded from
    /// reproducibility comparisons.
    pub ms: f64,
}

/// Per-size aggregate over all trials.
#[derive(Debug, Clone, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
    /// Share of trials with final fraction below the configured resilient
    /// threshold.
    pub frac_below_threshold: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SizeSummary>,
}

// ============================================================================
// Trial execution
// ============================================================================

/// Seed of trial `trial` at size `n` under base seed `base`.
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    derive_seed(base, n as u64, trial as u64)
}

fn run_one_trial(spec: &ModelSpec, n: usize, trial: usize, config: &ExperimentConfig) -> TrialRecord {
    let start = Instant::now();
    let seed = trial_seed(config.base_seed, n, trial);
    // Population and edge randomness ride separate child streams.
    let population = realize_population(spec, n, config.mode, derive_seed(seed, 1, 0));
    let graph = sample_graph(population, spec, derive_seed(seed, 2, 0));
    let result = run_cascade(&graph);
    TrialRecord {
        n,
        trial,
        seed,
        fraction: result.fraction,
        per_type_fraction: result.per_type_fraction,
        importance_mass: result.importance_mass,
        rounds: result.rounds,
        ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn summarize_size(n: usize, records: &[&TrialRecord], threshold: f64) -> SizeSummary {
    let fractions: Vec<f64> = records.iter().map(|r| r.fraction).collect();
    let trials = fractions.len();
    let mean = fractions.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    SizeSummary {
        n,
        trials,
        mean,
        min: fractions.iter().copied().fold(f64::INFINITY, f64::min),
        max: fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std_dev: var.sqrt(),
        frac_below_threshold: fractions.iter().filter(|f| **f < threshold).count() as f64
            / trials as f64,
    }
}

/// Runs the full sweep: all sizes, all trials, in parallel, with records
/// returned in (size, trial) order regardless of scheduling.
pub fn run_trials(spec: &ModelSpec, config: &ExperimentConfig) -> ExperimentOutput {
    assert!(!config.n_grid.is_empty(), "the size grid must be nonempty");
    assert!(
        config.n_grid.iter().all(|&n| n >= 1) && config.trials >= 1,
        "sizes and trial count must be at least 1"
    );
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(n, trial)| run_one_trial(spec, n, trial, config))
        .collect();
    let summaries = config
        .n_grid
        .iter()
        .map(|&n| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            summarize_size(n, &rows, config.resilient_threshold)
        })
        .collect();
    ExperimentOutput { records, summaries }
}

// ============================================================================
// Cluster splitting and convergence reports
// ============================================================================

/// Assigns each fraction to the index of the nearest candidate value
/// (ties to the lower index) — equivalently, splits at midpoints between
/// neighboring candidates.
pub fn split_clusters(fractions: &[f64], candidates: &[f64]) -> Vec<usize> {
    assert!(!candidates.is_empty(), "need at least one candidate");
    fractions
        .iter()
        .map(|&f| {
            let mut best = 0usize;
            let mut best_d = (f - candidates[0]).abs();
            for (idx, &c) in candidates.iter().enumerate().skip(1) {
                let d = (f - c).abs();
                if d < best_d {
                    best = idx;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Per-size view of how trials distribute around the analytic candidates.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Trials in each candidate's cluster (index-aligned with the
    /// candidate list; candidate 0 is the theory value).
    pub cluster_counts: Vec<usize>,
    /// Index of the largest cluster (ties to the theory cluster).
    pub majority_cluster: usize,
    pub majority_mean: f64,
    pub majority_std_dev: f64,
    /// max |fraction − theory| over the majority cluster.
    pub majority_max_abs_dev: f64,
}

/// Figure-style convergence dataset: every trial plus a per-size deviation
/// summary against the theory value.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub theory: f64,
    pub candidates: Vec<f64>,
    pub records: Vec<TrialRecord>,
    pub per_size: Vec<ConvergenceRow>,
}

/// Sweeps the config and summarizes each size's majority cluster against
/// the analytic prediction `theory` (computed on the initial-default form
/// of the spec). `other_candidates` lists further root fractions — e.g. the
/// value at the largest root when it differs — so bimodal outcomes split
/// into the right clusters.
pub fn convergence_experiment(
    spec: &ModelSpec,
    config: &ExperimentConfig,
    theory: f64,
    other_candidates: &[f64],
) -> ConvergenceReport {
    let mut candidates = vec![theory];
    candidates.extend_from_slice(other_candidates);
    let output = run_trials(spec, config);
    let per_size = config
        .n_grid
        .iter()
        .map(|&n| {
            let fractions: Vec<f64> = output
                .records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.fraction)
                .collect();
            let assignment = split_clusters(&fractions, &candidates);
            let mut cluster_counts = vec![0usize; candidates.len()];
            for &c in &assignment {
                cluster_counts[c] += 1;
            }
            let majority_cluster = (0..candidates.len())
                .max_by(|&a, &b| {
                    cluster_counts[a]
                        .cmp(&cluster_counts[b])
                        .then(b.cmp(&a)) // tie -> lower index wins
                })
                .unwrap();
            let members: Vec<f64> = fractions
                .iter()
                .zip(&assignment)
                .filter(|(_, &c)| c == majority_cluster)
                .map(|(&f, _)| f)
                .collect();
            let count = members.len().max(1);
            let mean = members.iter().sum::<f64>() / count as f64;
            let var = if members.len() > 1 {
                members.iter().map(|f| (f - mean).powi(2)).sum::<f64>()
                    / (members.len() - 1) as f64
            } else {
                0.0
            };
            ConvergenceRow {
                n,
                cluster_counts,
                majority_cluster,
                majority_mean: mean,
                majority_std_dev: var.sqrt(),
                majority_max_abs_dev: members
                    .iter()
                    .map(|f| (f - theory).abs())
                    .fold(0.0, f64::max),
            }
        })
        .collect();
    ConvergenceReport {
        theory,
        candidates,
        records: output.records,
        per_size,
    }
}

// ============================================================================
// CSV output
// ============================================================================

/// Writes trial records as CSV with `#`-prefixed provenance comment lines
/// before the header. Columns: n, trial, seed, fraction, one frac_type_k
/// column per type, importance_mass, rounds, ms.
pub fn write_trials_csv<W: Write>(
    mut writer: W,
    records: &[TrialRecord],
    t_types: usize,
    provenance: &[String],
) -> std::io::Result<()> {
    for line in provenance {
        writeln!(writer, "# {line}")?;
    }
    let mut header = String::from("n,trial,seed,fraction");
    for t in 1..=t_types {
        header.push_str(&format!(",frac_type_{t}"));
    }
    header.push_str(",importance_mass,rounds,ms");
    writeln!(writer, "{header}")?;
    for r in records {
        let mut row = format!("{},{},{},{}", r.n, r.trial, r.seed, r.fraction);
        for t in 0..t_types {
            let v = r.per_type_fraction.get(t).copied().unwrap_or(0.0);
            row.push_str(&format!(",{v}"));
        }
        row.push_str(&format!(",{},{},{}", r.importance_mass, r.rounds, r.ms));
        writeln!(writer, "{row}")?;
    }
    Ok(())
}
