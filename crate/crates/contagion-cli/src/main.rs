//! Command-line front end: spec validation, asymptotic root analysis and
//! resilience classification, finite-network Monte Carlo, and root-curve
//! contour extraction.
//!
//! Exit codes: 0 on success; 1 on validation, flag, or I/O errors; 2 from
//! `analyze` when the vanishing-shift schedule fails to resolve or when the
//! smallest and limiting roots of an initial-default system disagree beyond
//! the bracketing tolerance (ambiguous root selection) — the report is
//! still written.

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use contagion::{
    classify_resilience_with_sets, combined_margin_threshold, convergence_experiment,
    cross_weight_bound, g_eval, greatest_fixed_point, least_fixed_point, rootset_scan,
    run_trials, schedule_solve, write_contours_csv, write_trials_csv, AxisFunction, AxisMap,
    Capital, CoordArray, CoordSet, ExperimentConfig, GridRect, ModelSpec, PopulationMode,
    ResilienceReport, ScheduleDiagnostics, ShockSetBound, SolverParams, Verdict, Weighting,
};

/// Roots further apart than this (sup norm) count as distinct for the
/// ambiguity exit code.
const BRACKET_TOL: f64 = 1e-4;

// ============================================================================
// Argument surface
// ============================================================================

#[derive(Parser)]
#[command(
    name = "contagion",
    version,
    about = "Default-contagion analysis and simulation on weighted multi-type random networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArg {
    /// Spec file (JSON).
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    /// Per-stage iteration tolerance of the fixed-point solvers.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Smallest shift of the vanishing-shift schedule.
    #[arg(long = "eps-floor", default_value_t = 1e-10)]
    eps_floor: f64,
}

#[derive(Args)]
struct OutArg {
    /// Directory for output artifacts.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Base seed; every trial derives an independent child seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per network size.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated network sizes.
    #[arg(long = "n-grid", value_name = "LIST")]
    n_grid: Option<String>,
    /// Final fractions below this count as resilient outcomes.
    #[arg(long)]
    threshold: Option<f64>,
    /// Sample vertex classes i.i.d. instead of deterministic rounding.
    #[arg(long)]
    iid: bool,
    /// Experiment config file (JSON); explicit flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Root analysis and resilience classification; writes analysis.json.
    Analyze {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArg,
        /// Shock coordinate set "r,alpha,beta;r,alpha,beta" (1-based);
        /// repeatable. Each set gets a stabilized-root lower bound.
        #[arg(long = "shock-set", value_name = "SET")]
        shock_set: Vec<String>,
    },
    /// Monte Carlo sweep; writes trials.csv and summary.json.
    Simulate {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Sweep plus analytic-theory comparison; writes convergence.csv and
    /// convergence_summary.json.
    Convergence {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Contour scan of root curves in a 2-coordinate reduction; writes
    /// contours.csv.
    Rootset {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArg,
        /// Axes file: coefficient embedding, carriers, functions, grid.
        #[arg(long, value_name = "PATH")]
        axes: PathBuf,
    },
    /// Validate a spec file and print diagnostics.
    Validate {
        #[command(flatten)]
        spec: SpecArg,
    },
}

// ============================================================================
// Entry point
// ============================================================================

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// CONTAGION_THREADS caps the worker pool; 0 or unset means automatic.
fn configure_threads() {
    if let Ok(value) = std::env::var("CONTAGION_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Analyze {
            spec,
            solver,
            out,
            shock_set,
        } => cmd_analyze(&spec.spec, &solver, &out.out, &shock_set),
        Command::Simulate {
            spec,
            out,
            experiment,
        } => cmd_simulate(&spec.spec, &out.out, &experiment),
        Command::Convergence {
            spec,
            solver,
            out,
            experiment,
        } => cmd_convergence(&spec.spec, &solver, &out.out, &experiment),
        Command::Rootset {
            spec,
            solver,
            out,
            axes,
        } => cmd_rootset(&spec.spec, &solver, &out.out, &axes),
        Command::Validate { spec } => cmd_validate(&spec.spec),
    }
}

// ============================================================================
// Shared plumbing
// ============================================================================

struct LoadedSpec {
    spec: ModelSpec,
    path: String,
    sha256: String,
}

fn load_spec(path: &Path) -> Result<LoadedSpec, String> {
    let bytes = fs::read(path)
        .map_err(|e| format!("MissingSpec: cannot read {}: {e}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let sha256 = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    let text = String::from_utf8(bytes)
        .map_err(|_| format!("spec file {} is not UTF-8", path.display()))?;
    let spec = ModelSpec::from_json_str(&text).map_err(|e| e.to_string())?;
    Ok(LoadedSpec {
        spec,
        path: path.display().to_string(),
        sha256,
    })
}

fn solver_params(args: &SolverArgs) -> SolverParams {
    SolverParams {
        iter_tol: args.tol,
        eps_floor: args.eps_floor,
        ..SolverParams::default()
    }
}

#[derive(Serialize)]
struct Provenance {
    tool_version: String,
    spec_path: String,
    spec_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    base_seed: Option<u64>,
    iter_tol: f64,
    eps_floor: f64,
    resolve_tol: f64,
}

fn provenance(loaded: &LoadedSpec, params: &SolverParams, seed: Option<u64>) -> Provenance {
    Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec_path: loaded.path.clone(),
        spec_sha256: loaded.sha256.clone(),
        base_seed: seed,
        iter_tol: params.iter_tol,
        eps_floor: params.eps_floor,
        resolve_tol: params.resolve_tol,
    }
}

/// Comment lines shared by every CSV artifact. The base seed is left to the
/// experiment block so it appears exactly once.
fn provenance_lines(p: &Provenance) -> Vec<String> {
    vec![
        format!("tool_version={}", p.tool_version),
        format!("spec_path={}", p.spec_path),
        format!("spec_sha256={}", p.spec_sha256),
        format!("iter_tol={}", p.iter_tol),
        format!("eps_floor={}", p.eps_floor),
        format!("resolve_tol={}", p.resolve_tol),
    ]
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("cannot serialize {name}: {e}"))?;
    fs::write(&path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn parse_n_grid(text: &str) -> Result<Vec<usize>, String> {
    let grid: Result<Vec<usize>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect();
    let grid = grid.map_err(|e| format!("InvalidFlag: bad --n-grid entry: {e}"))?;
    if grid.is_empty() || grid.iter().any(|&n| n == 0) {
        return Err("InvalidFlag: --n-grid needs positive sizes".into());
    }
    Ok(grid)
}

/// 1-based "r,alpha,beta;r,alpha,beta" selections into a coordinate set.
fn parse_shock_set(text: &str, r_levels: usize, t_types: usize) -> Result<CoordSet, String> {
    let mut triples = Vec::new();
    for part in text.split(';').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(format!(
                "InvalidFlag: shock-set entry '{part}' is not r,alpha,beta"
            ));
        }
        let parse = |s: &str| -> Result<usize, String> {
            let v: usize = s
                .parse()
                .map_err(|e| format!("InvalidFlag: shock-set index '{s}': {e}"))?;
            if v == 0 {
                return Err("InvalidFlag: shock-set indices are 1-based".into());
            }
            Ok(v - 1)
        };
        triples.push((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
    }
    if triples.is_empty() {
        return Err("InvalidFlag: empty shock set".into());
    }
    CoordSet::from_triples(r_levels, t_types, &triples)
        .ok_or_else(|| format!("InvalidFlag: shock-set '{text}' out of range"))
}

// ============================================================================
// analyze
// ============================================================================

#[derive(Serialize)]
struct GValues {
    count: f64,
    per_type: Vec<f64>,
    importance: f64,
}

fn g_values(spec: &ModelSpec, z: &CoordArray) -> GValues {
    GValues {
        count: g_eval(spec, z, Weighting::Count),
        per_type: (0..spec.t_types())
            .map(|t| g_eval(spec, z, Weighting::PerType(t)))
            .collect(),
        importance: g_eval(spec, z, Weighting::Importance),
    }
}

#[derive(Serialize)]
struct RootSummary {
    z: Vec<f64>,
    sup: f64,
}

fn root_summary(z: &CoordArray) -> RootSummary {
    RootSummary {
        z: z.as_slice().to_vec(),
        sup: z.sup_norm(),
    }
}

#[derive(Serialize)]
struct RootAnalysis {
    /// Which system the roots belong to: the initial-default form when the
    /// spec carries shocks, otherwise the spec as given.
    system: String,
    initial_default_mass: f64,
    z_hat: RootSummary,
    z_hat_iterations: u64,
    z_hat_residual: f64,
    z_star: RootSummary,
    schedule: ScheduleDiagnostics,
    greatest: RootSummary,
    /// Sup distance between z_hat and z_star; beyond `bracket_tol` on an
    /// initial-default system the root selection is ambiguous (exit 2).
    bracket_gap: f64,
    bracket_tol: f64,
    g_at_z_hat: GValues,
    g_at_z_star: GValues,
    g_at_greatest: GValues,
}

#[derive(Serialize)]
struct AnalyzeReport {
    provenance: Provenance,
    root_analysis: RootAnalysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<ResilienceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification_skipped: Option<String>,
    /// Shock-set bounds computed outside classification (only when
    /// classification was skipped).
    extra_shock_sets: Vec<ShockSetBound>,
    exit_code: u8,
}

fn cmd_analyze(
    spec_path: &Path,
    solver: &SolverArgs,
    out_dir: &Path,
    shock_sets: &[String],
) -> Result<ExitCode, String> {
    let loaded = load_spec(spec_path)?;
    let spec = &loaded.spec;
    let params = solver_params(solver);
    let sets: Vec<(String, CoordSet)> = shock_sets
        .iter()
        .map(|s| {
            parse_shock_set(s, spec.r_levels(), spec.t_types()).map(|set| (s.clone(), set))
        })
        .collect::<Result<_, _>>()?;

    // Root analysis runs on the initial-default form when shocks are
    // declared; the solvers themselves never look at shock probabilities.
    let has_shocks = spec.has_shocks();
    let analysis = if has_shocks {
        spec.apply_shock()
    } else {
        spec.clone()
    };
    let empty = CoordSet::empty(spec.r_levels(), spec.t_types());
    let full = CoordSet::full(spec.r_levels(), spec.t_types());
    let z_hat = least_fixed_point(&analysis, 0.0, &empty, &params).map_err(|e| e.to_string())?;
    let schedule = schedule_solve(&analysis, &full, &params).map_err(|e| e.to_string())?;
    let greatest = greatest_fixed_point(&analysis, &params).map_err(|e| e.to_string())?;
    let bracket_gap = schedule.z.sup_distance(&z_hat.z);
    let analysis_mass = analysis.initial_default_mass();

    // Classification concerns the base system's response to vanishing
    // shocks; it needs a fully solvent start.
    let base_mass = spec.initial_default_mass();
    let (classification, classification_skipped, extra_shock_sets) = if base_mass == 0.0 {
        let report =
            classify_resilience_with_sets(spec, &params, &sets).map_err(|e| e.to_string())?;
        (Some(report), None, Vec::new())
    } else {
        let mut bounds = Vec::new();
        for (label, set) in &sets {
            let solve = schedule_solve(spec, set, &params).map_err(|e| e.to_string())?;
            bounds.push(ShockSetBound {
                label: label.clone(),
                coords: set.iter().collect(),
                bound: g_eval(spec, &solve.z, Weighting::Count),
                converged: solve.diagnostics.converged,
            });
        }
        (
            None,
            Some(format!(
                "base system has initial default mass {base_mass}; resilience \
                 classification needs a fully solvent start"
            )),
            bounds,
        )
    };

    let mut exit: u8 = 0;
    if analysis_mass > 0.0 && (!schedule.diagnostics.converged || bracket_gap > BRACKET_TOL) {
        exit = 2;
    }
    if let Some(report) = &classification {
        if report.verdict == Verdict::Inconclusive {
            exit = 2;
        }
    }

    let report = AnalyzeReport {
        provenance: provenance(&loaded, &params, None),
        root_analysis: RootAnalysis {
            system: if has_shocks {
                "initial-default form (shocks applied)".into()
            } else {
                "as given".into()
            },
            initial_default_mass: analysis_mass,
            z_hat: root_summary(&z_hat.z),
            z_hat_iterations: z_hat.iterations,
            z_hat_residual: z_hat.residual,
            z_star: root_summary(&schedule.z),
            schedule: schedule.diagnostics.clone(),
            greatest: root_summary(&greatest.z),
            bracket_gap,
            bracket_tol: BRACKET_TOL,
            g_at_z_hat: g_values(&analysis, &z_hat.z),
            g_at_z_star: g_values(&analysis, &schedule.z),
            g_at_greatest: g_values(&analysis, &greatest.z),
        },
        classification,
        classification_skipped,
        extra_shock_sets,
        exit_code: exit,
    };
    let path = write_json(out_dir, "analysis.json", &report)?;

    println!(
        "analyze: system={} z_hat_sup={:.9} z_star_sup={:.9} bracket_gap={:.3e}",
        report.root_analysis.system,
        report.root_analysis.z_hat.sup,
        report.root_analysis.z_star.sup,
        bracket_gap
    );
    if let Some(c) = &report.classification {
        println!(
            "analyze: verdict={:?} g(z*)={:.9} certificate={}",
            c.verdict,
            c.g_z_star,
            if c.certificate.is_some() { "yes" } else { "no" }
        );
    }
    println!("analyze: report written to {}", path.display());
    Ok(ExitCode::from(exit))
}

// ============================================================================
// simulate / convergence
// ============================================================================

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    n_grid: Option<Vec<usize>>,
    trials: Option<usize>,
    base_seed: Option<u64>,
    /// "deterministic" (default) or "iid".
    mode: Option<String>,
    resilient_threshold: Option<f64>,
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig, String> {
    let file: ConfigFile = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("config {}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let mode = if args.iid {
        PopulationMode::IidSample
    } else {
        match file.mode.as_deref() {
            None | Some("deterministic") => PopulationMode::DeterministicRounding,
            Some("iid") => PopulationMode::IidSample,
            Some(other) => {
                return Err(format!(
                    "InvalidFlag: config mode '{other}' is not deterministic|iid"
                ))
            }
        }
    };
    let n_grid = match &args.n_grid {
        Some(text) => parse_n_grid(text)?,
        None => file.n_grid.unwrap_or_else(|| vec![10_000]),
    };
    let config = ExperimentConfig {
        n_grid,
        trials: args.trials.or(file.trials).unwrap_or(100),
        base_seed: args.seed.or(file.base_seed).unwrap_or(0),
        mode,
        resilient_threshold: args.threshold.or(file.resilient_threshold).unwrap_or(0.02),
    };
    if config.trials == 0 || config.n_grid.iter().any(|&n| n == 0) {
        return Err("InvalidFlag: trials and sizes must be positive".into());
    }
    Ok(config)
}

fn experiment_lines(config: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("base_seed={}", config.base_seed),
        format!(
            "n_grid={}",
            config
                .n_grid
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("trials={}", config.trials),
        format!(
            "mode={}",
            match config.mode {
                PopulationMode::DeterministicRounding => "deterministic",
                PopulationMode::IidSample => "iid",
            }
        ),
        format!("resilient_threshold={}", config.resilient_threshold),
    ]
}

#[derive(Serialize)]
struct SimulateSummaryFile {
    provenance: Provenance,
    trials: usize,
    n_grid: Vec<usize>,
    resilient_threshold: f64,
    summaries: Vec<contagion::SizeSummary>,
}

fn cmd_simulate(
    spec_path: &Path,
    out_dir: &Path,
    experiment: &ExperimentArgs,
) -> Result<ExitCode, String> {
    let loaded = load_spec(spec_path)?;
    let config = experiment_config(experiment)?;
    let output = run_trials(&loaded.spec, &config);

    let params = SolverParams::default();
    let prov = provenance(&loaded, &params, Some(config.base_seed));
    let mut lines = provenance_lines(&prov);
    lines.extend(experiment_lines(&config));

    fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("trials.csv");
    let file = File::create(&csv_path)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    write_trials_csv(file, &output.records, loaded.spec.t_types(), &lines)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;

    let summary = SimulateSummaryFile {
        provenance: prov,
        trials: config.trials,
        n_grid: config.n_grid.clone(),
        resilient_threshold: config.resilient_threshold,
        summaries: output.summaries,
    };
    write_json(out_dir, "summary.json", &summary)?;

    for s in &summary.summaries {
        println!(
            "simulate: n={} trials={} mean={:.6} min={:.6} max={:.6} below_threshold={:.3}",
            s.n, s.trials, s.mean, s.min, s.max, s.frac_below_threshold
        );
    }
    println!("simulate: wrote {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConvergenceSummaryFile {
    provenance: Provenance,
    theory: f64,
    candidates: Vec<f64>,
    per_size: Vec<contagion::ConvergenceRow>,
}

fn cmd_convergence(
    spec_path: &Path,
    solver: &SolverArgs,
    out_dir: &Path,
    experiment: &ExperimentArgs,
) -> Result<ExitCode, String> {
    let loaded = load_spec(spec_path)?;
    let spec = &loaded.spec;
    let config = experiment_config(experiment)?;
    let params = solver_params(solver);

    // Theory: g at the smallest root of the initial-default form; other
    // located roots become cluster candidates for bimodal outcomes.
    let analysis = if spec.has_shocks() {
        spec.apply_shock()
    } else {
        spec.clone()
    };
    let empty = CoordSet::empty(spec.r_levels(), spec.t_types());
    let full = CoordSet::full(spec.r_levels(), spec.t_types());
    let z_hat = least_fixed_point(&analysis, 0.0, &empty, &params).map_err(|e| e.to_string())?;
    let theory = g_eval(&analysis, &z_hat.z, Weighting::Count);
    let mut candidates = Vec::new();
    let schedule = schedule_solve(&analysis, &full, &params).map_err(|e| e.to_string())?;
    let greatest = greatest_fixed_point(&analysis, &params).map_err(|e| e.to_string())?;
    for z in [&schedule.z, &greatest.z] {
        let value = g_eval(&analysis, z, Weighting::Count);
        let fresh = (value - theory).abs() > 1e-6
            && candidates
                .iter()
                .all(|c: &f64| (c - value).abs() > 1e-6);
        if fresh {
            candidates.push(value);
        }
    }

    let report = convergence_experiment(spec, &config, theory, &candidates);

    let prov = provenance(&loaded, &params, Some(config.base_seed));
    let mut lines = provenance_lines(&prov);
    lines.extend(experiment_lines(&config));
    lines.push(format!("theory={theory}"));

    fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("convergence.csv");
    let file = File::create(&csv_path)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    write_trials_csv(file, &report.records, spec.t_types(), &lines)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;

    let summary = ConvergenceSummaryFile {
        provenance: prov,
        theory: report.theory,
        candidates: report.candidates.clone(),
        per_size: report.per_size.clone(),
    };
    write_json(out_dir, "convergence_summary.json", &summary)?;

    for row in &summary.per_size {
        println!(
            "convergence: n={} clusters={:?} majority_mean={:.6} max_abs_dev={:.6}",
            row.n, row.cluster_counts, row.majority_mean, row.majority_max_abs_dev
        );
    }
    println!("convergence: theory={theory:.9}; wrote {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

// ============================================================================
// rootset
// ============================================================================

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxesFile {
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    x: AxisSpec,
    y: AxisSpec,
    functions: Vec<FunctionSpec>,
    grid: GridSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisSpec {
    /// Nested coefficients indexed [r][alpha][beta].
    coeffs: Vec<Vec<Vec<f64>>>,
    /// Coordinate that equals this free value under the embedding (1-based
    /// r, alpha, beta).
    #[serde(default)]
    carrier: Option<[usize; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionSpec {
    label: String,
    /// 1-based (r, alpha, beta).
    coord: [usize; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
}

fn nested_to_coords(
    nested: &[Vec<Vec<f64>>],
    r_levels: usize,
    t_types: usize,
    what: &str,
) -> Result<CoordArray, String> {
    let shape_ok = nested.len() == r_levels
        && nested
            .iter()
            .all(|a| a.len() == t_types && a.iter().all(|b| b.len() == t_types));
    if !shape_ok {
        return Err(format!(
            "axes file: {what} coefficients must be nested [R][T][T] = [{r_levels}][{t_types}][{t_types}]"
        ));
    }
    let mut array = CoordArray::zeros(r_levels, t_types);
    for (r, per_alpha) in nested.iter().enumerate() {
        for (alpha, per_beta) in per_alpha.iter().enumerate() {
            for (beta, &value) in per_beta.iter().enumerate() {
                array.set(r, alpha, beta, value);
            }
        }
    }
    Ok(array)
}

fn one_based_triple(raw: [usize; 3], what: &str) -> Result<(usize, usize, usize), String> {
    if raw.iter().any(|&v| v == 0) {
        return Err(format!("axes file: {what} coordinates are 1-based"));
    }
    Ok((raw[0] - 1, raw[1] - 1, raw[2] - 1))
}

fn cmd_rootset(
    spec_path: &Path,
    solver: &SolverArgs,
    out_dir: &Path,
    axes_path: &Path,
) -> Result<ExitCode, String> {
    let loaded = load_spec(spec_path)?;
    let spec = &loaded.spec;
    let params = solver_params(solver);
    let axes_text = fs::read_to_string(axes_path)
        .map_err(|e| format!("cannot read axes file {}: {e}", axes_path.display()))?;
    let axes: AxesFile = serde_json::from_str(&axes_text)
        .map_err(|e| format!("axes file {}: {e}", axes_path.display()))?;

    let axis_map = AxisMap {
        x_coeffs: nested_to_coords(&axes.x.coeffs, spec.r_levels(), spec.t_types(), "x")?,
        y_coeffs: nested_to_coords(&axes.y.coeffs, spec.r_levels(), spec.t_types(), "y")?,
        x_carrier: axes
            .x
            .carrier
            .map(|c| one_based_triple(c, "x carrier"))
            .transpose()?,
        y_carrier: axes
            .y
            .carrier
            .map(|c| one_based_triple(c, "y carrier"))
            .transpose()?,
        functions: axes
            .functions
            .iter()
            .map(|f| {
                one_based_triple(f.coord, "function").map(|coord| AxisFunction {
                    label: f.label.clone(),
                    coord,
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let grid = GridRect {
        x0: axes.grid.x0,
        x1: axes.grid.x1,
        y0: axes.grid.y0,
        y1: axes.grid.y1,
        nx: axes.grid.nx,
        ny: axes.grid.ny,
    };

    let polylines = rootset_scan(spec, &axis_map, &grid, &params).map_err(|e| e.to_string())?;

    let prov = provenance(&loaded, &params, None);
    fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("contours.csv");
    let mut file = File::create(&csv_path)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    for line in provenance_lines(&prov) {
        writeln!(file, "# {line}")
            .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    }
    writeln!(
        file,
        "# grid=[{},{}]x[{},{}] cells={}x{}",
        grid.x0, grid.x1, grid.y0, grid.y1, grid.nx, grid.ny
    )
    .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    write_contours_csv(&mut file, &polylines)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;

    println!(
        "rootset: {} polylines over {} functions; wrote {}",
        polylines.len(),
        axis_map.functions.len(),
        csv_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

// ============================================================================
// validate
// ============================================================================

fn cmd_validate(spec_path: &Path) -> Result<ExitCode, String> {
    let loaded = load_spec(spec_path)?;
    let spec = &loaded.spec;
    println!("spec: {}", loaded.path);
    println!("sha256: {}", loaded.sha256);
    println!(
        "dimensions: R={} T={} atoms={}",
        spec.r_levels(),
        spec.t_types(),
        spec.atoms().len()
    );
    println!(
        "max finite capital: {}",
        spec.max_finite_capital()
            .map(|c| c.to_string())
            .unwrap_or_else(|| "none (all infinite)".into())
    );
    println!("initial default mass: {}", spec.initial_default_mass());
    println!("declared shocks: {}", spec.has_shocks());
    let zeta = spec.zeta();
    println!(
        "mean out-weight array: sup={:.6} live coordinates={}/{}",
        zeta.sup_norm(),
        spec.live_set().len(),
        zeta.len()
    );
    let k = cross_weight_bound(spec);
    println!("cross-weight bound K: {k:.6}");
    println!(
        "single-subsystem margin threshold 1/(1+K^2(T-1)): {:.6}",
        combined_margin_threshold(spec)
    );
    for (idx, atom) in spec.atoms().iter().enumerate() {
        let capital = match atom.capital {
            Capital::Finite(c) => c.to_string(),
            Capital::Infinite => "inf".into(),
        };
        println!(
            "atom {}: prob={:.6} type={} capital={} shock_prob={} importance={}",
            idx + 1,
            atom.prob,
            atom.vtype + 1,
            capital,
            atom.shock_prob,
            atom.importance
        );
    }
    println!("valid: probabilities sum to 1 within tolerance; all shapes agree");
    Ok(ExitCode::SUCCESS)
}
