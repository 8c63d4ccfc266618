//! Asymptotic analysis and finite-network simulation of default contagion
//! on weighted, multi-type random financial networks.
//!
//! A [`model::ModelSpec`] describes an infinite family of random networks
//! by a finite list of institution classes ("atoms"): each class has a
//! probability mass, a vertex type, integer-or-infinite capital, systemic
//! importance, and per-impact in/out weight matrices that drive the edge
//! law. Two complementary toolsets operate on a spec:
//!
//! * **Analytic** ([`analytic`]): the asymptotic final default fraction is
//!   governed by the joint roots of a coupled system of compound-Poisson
//!   fixed-point equations. Monotone iteration locates the smallest root ẑ
//!   and (via a vanishing upward shift) the largest root z* of the
//!   component containing the origin; the functional g evaluates the final
//!   default fraction at a root; directional-derivative criteria certify
//!   which root the contagion process selects and whether the system is
//!   resilient to vanishing shocks.
//! * **Simulation** ([`graph`], [`cascade`], [`montecarlo`]): finite
//!   n-vertex networks are realized and their default cascades executed
//!   exactly, reproducibly, and in parallel, to validate the analytic
//!   predictions at desk scale.
//!
//! Everything is deterministic given its seed; see the module docs for the
//! seeding discipline.

pub mod analytic;
pub mod cascade;
pub mod coord;
pub mod error;
pub mod graph;
pub mod model;
pub mod montecarlo;

pub use analytic::derivative::{
    check_root_is_zstar, default_delta_grid, directional_derivative, RootCheck, RootCheckMode,
};
pub use analytic::poisson::{compound_poisson_pmf, poisson_pmf, psi};
pub use analytic::resilience::{
    classify_resilience, classify_resilience_with_sets, combined_margin_threshold,
    cross_weight_bound, subsystem_margin, Certificate, ResilienceReport, ShockSetBound, Verdict,
};
pub use analytic::rootset::{
    rootset_scan, write_contours_csv, AxisFunction, AxisMap, GridRect, LabeledPolyline,
};
pub use analytic::solver::{
    greatest_fixed_point, least_fixed_point, schedule_solve, z_star, z_zero, FixedPointSolve,
    ScheduleDiagnostics, ScheduleSolve, ScheduleStage, SolverParams,
};
pub use analytic::{f_eval, g_eval, phi_eval, Weighting};
pub use cascade::{run_cascade, run_cascade_rounds, CascadeResult};
pub use coord::{CoordArray, CoordSet};
pub use error::{AnalyticError, SpecError};
pub use graph::{
    check_graph_invariants, degree_summary, derive_seed, pair_edge_probabilities,
    realize_population, sample_graph, write_edge_list, write_vertex_table, DegreeSummary, Graph,
    Population, PopulationMode,
};
pub use model::{
    embed_subsystem, validate_spec, Atom, Capital, ModelSpec, RawAtom, RawSpec, WeightMatrix,
};
pub use montecarlo::{
    convergence_experiment, run_trials, split_clusters, trial_seed, write_trials_csv,
    ConvergenceReport, ConvergenceRow, ExperimentConfig, ExperimentOutput, SizeSummary,
    TrialRecord,
};
