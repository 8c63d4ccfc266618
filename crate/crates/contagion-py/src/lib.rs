//! Python extension module over the contagion crate.
//!
//! Exposes the spec type plus the main analytic and simulation entry points.
//! Coordinate arrays cross the boundary as flat lists in
//! `((r * T) + alpha) * T + beta` order, matching `CoordArray::as_slice`;
//! all indices on this surface are 0-based.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use contagion::{
    check_root_is_zstar, classify_resilience, compound_poisson_pmf, default_delta_grid,
    directional_derivative, f_eval, g_eval, greatest_fixed_point, least_fixed_point, psi,
    run_trials, schedule_solve, Capital, CoordArray, CoordSet, ExperimentConfig, ModelSpec,
    PopulationMode, RootCheckMode, ScheduleSolve, SolverParams, Verdict, Weighting,
};

// ============================================================================
// Conversions
// ============================================================================

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn coords_from_list(spec: &ModelSpec, values: Vec<f64>, what: &str) -> PyResult<CoordArray> {
    let want = spec.r_levels() * spec.t_types() * spec.t_types();
    CoordArray::from_flat(spec.r_levels(), spec.t_types(), values).ok_or_else(|| {
        value_err(format!(
            "{what} must be a flat list of length R*T*T = {want}"
        ))
    })
}

fn capital_from_option(ell: Option<u64>) -> Capital {
    match ell {
        Some(c) => Capital::Finite(c),
        None => Capital::Infinite,
    }
}

fn weighting_from_str(text: &str) -> PyResult<Weighting> {
    if text == "count" {
        return Ok(Weighting::Count);
    }
    if text == "importance" {
        return Ok(Weighting::Importance);
    }
    if let Some(idx) = text.strip_prefix("type:") {
        let t: usize = idx
            .parse()
            .map_err(|e| value_err(format!("bad type index in weighting '{text}': {e}")))?;
        return Ok(Weighting::PerType(t));
    }
    Err(value_err(format!(
        "weighting '{text}' is not 'count', 'importance', or 'type:<index>'"
    )))
}

fn params_from_tol(tol: Option<f64>) -> SolverParams {
    match tol {
        Some(t) => SolverParams {
            iter_tol: t,
            ..SolverParams::default()
        },
        None => SolverParams::default(),
    }
}

fn schedule_dict<'py>(py: Python<'py>, solve: &ScheduleSolve) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("z", solve.z.as_slice().to_vec())?;
    out.set_item("sup", solve.z.sup_norm())?;
    out.set_item("converged", solve.diagnostics.converged)?;
    out.set_item("cauchy_gap", solve.diagnostics.cauchy_gap)?;
    out.set_item("total_iterations", solve.diagnostics.total_iterations)?;
    let stages = PyList::empty(py);
    for stage in &solve.diagnostics.stages {
        let s = PyDict::new(py);
        s.set_item("eps", stage.eps)?;
        s.set_item("iterations", stage.iterations)?;
        s.set_item("z_sup", stage.z_sup)?;
        stages.append(s)?;
    }
    out.set_item("stages", stages)?;
    Ok(out)
}

// ============================================================================
// Spec class
// ============================================================================

/// A validated model of the network: atom mixture, weights, capitals,
/// shock probabilities.
#[pyclass(name = "Spec", frozen)]
struct PySpec {
    inner: ModelSpec,
}

#[pymethods]
impl PySpec {
    /// Parses and validates a spec from JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ModelSpec::from_json_str(text).map_err(value_err)?,
        })
    }

    /// Loads and validates a spec from a JSON file.
    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ModelSpec::from_path(std::path::Path::new(path)).map_err(value_err)?,
        })
    }

    #[getter]
    fn r_levels(&self) -> usize {
        self.inner.r_levels()
    }

    #[getter]
    fn t_types(&self) -> usize {
        self.inner.t_types()
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atoms().len()
    }

    #[getter]
    fn has_shocks(&self) -> bool {
        self.inner.has_shocks()
    }

    #[getter]
    fn initial_default_mass(&self) -> f64 {
        self.inner.initial_default_mass()
    }

    /// Largest finite capital, or None when every atom is infinitely
    /// capitalized.
    #[getter]
    fn max_finite_capital(&self) -> Option<u64> {
        self.inner.max_finite_capital()
    }

    /// Mean out-weight array zeta as a flat list.
    fn zeta(&self) -> Vec<f64> {
        self.inner.zeta().as_slice().to_vec()
    }

    /// The initial-default form: each shocked atom split into a zero-capital
    /// part (its shock mass) and an unshocked remainder.
    fn apply_shock(&self) -> Self {
        Self {
            inner: self.inner.apply_shock(),
        }
    }

    /// Serializes back to (normalized) JSON text.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner.to_raw()).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Spec(R={}, T={}, atoms={}, shocks={})",
            self.inner.r_levels(),
            self.inner.t_types(),
            self.inner.atoms().len(),
            self.inner.has_shocks()
        )
    }
}

// ============================================================================
// Analytic functions
// ============================================================================

/// P(sum of s * N_s >= ell) for independent N_s ~ Poisson(rates[s-1]);
/// ell=None means infinite capital (probability 0).
#[pyfunction]
#[pyo3(name = "psi", signature = (ell, rates))]
fn py_psi(ell: Option<u64>, rates: Vec<f64>) -> PyResult<f64> {
    psi(capital_from_option(ell), &rates).map_err(value_err)
}

/// PMF of the integer-weighted Poisson sum on 0..=kmax.
#[pyfunction]
#[pyo3(name = "compound_pmf")]
fn py_compound_pmf(rates: Vec<f64>, kmax: usize) -> PyResult<Vec<f64>> {
    compound_poisson_pmf(&rates, kmax).map_err(value_err)
}

/// f(z) as a flat list.
#[pyfunction]
#[pyo3(name = "f_eval")]
fn py_f_eval(spec: &PySpec, z: Vec<f64>) -> PyResult<Vec<f64>> {
    let z = coords_from_list(&spec.inner, z, "z")?;
    Ok(f_eval(&spec.inner, &z).as_slice().to_vec())
}

/// Asymptotic default fraction functional g(z) under a weighting of
/// "count", "importance", or "type:<index>".
#[pyfunction]
#[pyo3(name = "g_eval", signature = (spec, z, weighting = "count"))]
fn py_g_eval(spec: &PySpec, z: Vec<f64>, weighting: &str) -> PyResult<f64> {
    let z = coords_from_list(&spec.inner, z, "z")?;
    let w = weighting_from_str(weighting)?;
    if let Weighting::PerType(t) = w {
        if t >= spec.inner.t_types() {
            return Err(value_err(format!(
                "type index {t} out of range for T={}",
                spec.inner.t_types()
            )));
        }
    }
    Ok(g_eval(&spec.inner, &z, w))
}

/// D_v f(z) along direction v, as a flat list.
#[pyfunction]
#[pyo3(name = "directional_derivative")]
fn py_directional_derivative(spec: &PySpec, z: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
    let z = coords_from_list(&spec.inner, z, "z")?;
    let v = coords_from_list(&spec.inner, v, "v")?;
    Ok(directional_derivative(&spec.inner, &z, &v)
        .map_err(value_err)?
        .as_slice()
        .to_vec())
}

/// Smallest root: plain fixed-point iteration from zero. Returns a dict
/// with keys z, sup, iterations, residual.
#[pyfunction]
#[pyo3(name = "z_hat", signature = (spec, tol = None))]
fn py_z_hat<'py>(py: Python<'py>, spec: &PySpec, tol: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let params = params_from_tol(tol);
    let empty = CoordSet::empty(spec.inner.r_levels(), spec.inner.t_types());
    let solve = least_fixed_point(&spec.inner, 0.0, &empty, &params).map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("z", solve.z.as_slice().to_vec())?;
    out.set_item("sup", solve.z.sup_norm())?;
    out.set_item("iterations", solve.iterations)?;
    out.set_item("residual", solve.residual)?;
    Ok(out)
}

/// Limiting root under vanishing shifts on the full coordinate space.
/// Returns a dict with keys z, sup, converged, cauchy_gap,
/// total_iterations, stages.
#[pyfunction]
#[pyo3(name = "z_star", signature = (spec, tol = None))]
fn py_z_star<'py>(
    py: Python<'py>,
    spec: &PySpec,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_from_tol(tol);
    let full = CoordSet::full(spec.inner.r_levels(), spec.inner.t_types());
    let solve = schedule_solve(&spec.inner, &full, &params).map_err(runtime_err)?;
    schedule_dict(py, &solve)
}

/// Largest root: monotone descent from the mean out-weight bound.
#[pyfunction]
#[pyo3(name = "greatest_root", signature = (spec, tol = None))]
fn py_greatest_root<'py>(
    py: Python<'py>,
    spec: &PySpec,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_from_tol(tol);
    let solve = greatest_fixed_point(&spec.inner, &params).map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("z", solve.z.as_slice().to_vec())?;
    out.set_item("sup", solve.z.sup_norm())?;
    out.set_item("iterations", solve.iterations)?;
    out.set_item("residual", solve.residual)?;
    Ok(out)
}

/// Resilience classification of a spec without initial defaults. Returns a
/// dict with keys verdict ("resilient" | "non_resilient" | "inconclusive"),
/// z_star, z_star_sup, g_z_star, certificate, lower_bounds, converged.
#[pyfunction]
#[pyo3(name = "classify", signature = (spec, tol = None))]
fn py_classify<'py>(
    py: Python<'py>,
    spec: &PySpec,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_from_tol(tol);
    let report = classify_resilience(&spec.inner, &params).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item(
        "verdict",
        match report.verdict {
            Verdict::Resilient => "resilient",
            Verdict::NonResilient => "non_resilient",
            Verdict::Inconclusive => "inconclusive",
        },
    )?;
    out.set_item("z_star", report.z_star.as_slice().to_vec())?;
    out.set_item("z_star_sup", report.z_star_sup)?;
    out.set_item("g_z_star", report.g_z_star)?;
    out.set_item("converged", report.schedule.converged)?;
    match &report.certificate {
        Some(cert) => {
            let c = PyDict::new(py);
            c.set_item("direction", cert.direction.clone())?;
            c.set_item("derivatives", cert.derivatives.clone())?;
            out.set_item("certificate", c)?;
        }
        None => out.set_item("certificate", py.None())?,
    }
    let bounds = PyList::empty(py);
    for bound in &report.lower_bounds {
        let b = PyDict::new(py);
        b.set_item("label", bound.label.clone())?;
        b.set_item("coords", bound.coords.clone())?;
        b.set_item("bound", bound.bound)?;
        b.set_item("converged", bound.converged)?;
        bounds.append(b)?;
    }
    out.set_item("lower_bounds", bounds)?;
    Ok(out)
}

/// Checks whether a joint root is the largest root of its component, by
/// the derivative criterion ("derivative") or ray contraction ("integral").
#[pyfunction]
#[pyo3(name = "check_root", signature = (spec, root, v, mode = "derivative"))]
fn py_check_root<'py>(
    py: Python<'py>,
    spec: &PySpec,
    root: Vec<f64>,
    v: Vec<f64>,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let root = coords_from_list(&spec.inner, root, "root")?;
    let v = coords_from_list(&spec.inner, v, "v")?;
    let mode = match mode {
        "derivative" => RootCheckMode::Derivative,
        "integral" => RootCheckMode::Integral,
        other => {
            return Err(value_err(format!(
                "mode '{other}' is not 'derivative' or 'integral'"
            )))
        }
    };
    let grid = default_delta_grid(&spec.inner);
    let check = check_root_is_zstar(&spec.inner, &root, &v, mode, &grid, &SolverParams::default())
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("holds", check.holds)?;
    out.set_item("worst", check.worst)?;
    out.set_item("kappa", check.kappa)?;
    Ok(out)
}

// ============================================================================
// Simulation
// ============================================================================

/// Monte Carlo cascades on sampled networks. Returns a dict with "records"
/// (one dict per trial) and "summaries" (one dict per size).
#[pyfunction]
#[pyo3(name = "simulate", signature = (spec, n_grid, trials, seed = 0, iid = false, threshold = 0.02))]
fn py_simulate<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n_grid: Vec<usize>,
    trials: usize,
    seed: u64,
    iid: bool,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n == 0) || trials == 0 {
        return Err(value_err("n_grid entries and trials must be positive"));
    }
    let config = ExperimentConfig {
        n_grid,
        trials,
        base_seed: seed,
        mode: if iid {
            PopulationMode::IidSample
        } else {
            PopulationMode::DeterministicRounding
        },
        resilient_threshold: threshold,
    };
    let output = run_trials(&spec.inner, &config);
    let records = PyList::empty(py);
    for r in &output.records {
        let d = PyDict::new(py);
        d.set_item("n", r.n)?;
        d.set_item("trial", r.trial)?;
        d.set_item("seed", r.seed)?;
        d.set_item("fraction", r.fraction)?;
        d.set_item("per_type_fraction", r.per_type_fraction.clone())?;
        d.set_item("importance_mass", r.importance_mass)?;
        d.set_item("rounds", r.rounds)?;
        records.append(d)?;
    }
    let summaries = PyList::empty(py);
    for s in &output.summaries {
        let d = PyDict::new(py);
        d.set_item("n", s.n)?;
        d.set_item("trials", s.trials)?;
        d.set_item("mean", s.mean)?;
        d.set_item("min", s.min)?;
        d.set_item("max", s.max)?;
        d.set_item("std_dev", s.std_dev)?;
        d.set_item("frac_below_threshold", s.frac_below_threshold)?;
        summaries.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("records", records)?;
    out.set_item("summaries", summaries)?;
    Ok(out)
}

// ============================================================================
// Module
// ============================================================================

#[pymodule]
fn contagion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_function(wrap_pyfunction!(py_psi, m)?)?;
    m.add_function(wrap_pyfunction!(py_compound_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(py_f_eval, m)?)?;
    m.add_function(wrap_pyfunction!(py_g_eval, m)?)?;
    m.add_function(wrap_pyfunction!(py_directional_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(py_z_hat, m)?)?;
    m.add_function(wrap_pyfunction!(py_z_star, m)?)?;
    m.add_function(wrap_pyfunction!(py_greatest_root, m)?)?;
    m.add_function(wrap_pyfunction!(py_classify, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_root, m)?)?;
    m.add_function(wrap_pyfunction!(py_simulate, m)?)?;
    Ok(())
}
