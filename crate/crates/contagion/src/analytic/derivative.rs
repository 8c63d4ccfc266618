//! Directional derivatives of f and certificates that a joint root is the
//! largest root of the origin's component.
//!
//! For finitary specs the directional derivative of every coordinate of f
//! exists in closed form: differentiating the compound-Poisson tail turns
//! into window probabilities `P(S in {C - r', ..., C - 1})` of the same
//! compound law. Two sufficient criteria certify that a joint root `root`
//! equals the component's largest root `z*`: strictly negative directional
//! derivatives at the root, or a contraction inequality along a ray
//! `root + delta * v` checked over a grid of delta values. Both are
//! implemented here; a `true` answer is a proof, a `false` answer decides
//! nothing.

use serde::Serialize;

use crate::coord::CoordArray;
use crate::error::AnalyticError;
use crate::model::ModelSpec;

use super::poisson::compound_poisson_pmf;
use super::solver::SolverParams;
use super::{atom_rates, f_eval};

fn check_direction(spec: &ModelSpec, v: &CoordArray) -> Result<(), AnalyticError> {
    if (v.r_levels(), v.t_types()) != (spec.r_levels(), spec.t_types()) {
        return Err(AnalyticError::DimensionMismatch(format!(
            "direction is {}x{}x{}, spec coordinates are {}x{}x{}",
            v.r_levels(),
            v.t_types(),
            v.t_types(),
            spec.r_levels(),
            spec.t_types(),
            spec.t_types()
        )));
    }
    if v.as_slice().iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(AnalyticError::NonPositiveDirection(
            "direction coordinates must be finite and >= 0".into(),
        ));
    }
    if v.as_slice().iter().all(|x| *x == 0.0) {
        return Err(AnalyticError::NonPositiveDirection(
            "direction must be nonzero".into(),
        ));
    }
    Ok(())
}

/// The increasing part of the directional derivative: for each coordinate
/// (r, alpha, beta),
/// `sum_{r'} sum_{atoms a of type beta} prob * out[r, alpha]
///    * (sum_{beta'} v[r', beta, beta'] * in[r', beta'])
///    * P(S_a(z) in {capital - r', ..., capital - 1})`.
///
/// This is a nonnegative linear operator in v; the full derivative is this
/// minus v.
fn gain_operator(spec: &ModelSpec, z: &CoordArray, v: &CoordArray) -> CoordArray {
    let (r_levels, t_types) = (spec.r_levels(), spec.t_types());
    let mut out = CoordArray::zeros(r_levels, t_types);
    for atom in spec.atoms() {
        let Some(cap) = atom.capital.finite() else {
            continue; // infinite capital: the tail never moves
        };
        if cap == 0 {
            continue; // psi_0 is constant 1
        }
        let rates = atom_rates(atom, z);
        let pmf = compound_poisson_pmf(&rates, (cap - 1) as usize)
            .expect("rates are nonnegative for z in the nonnegative orthant");
        // sum over r' of (rate sensitivity along v) x (window probability)
        let mut sensitivity = 0.0;
        for rp in 0..r_levels {
            let inner: f64 = (0..t_types)
                .map(|bp| atom.in_weights.get(rp, bp) * v.get(rp, atom.vtype, bp))
                .sum();
            if inner == 0.0 {
                continue;
            }
            let lo = cap.saturating_sub(rp as u64 + 1) as usize;
            let window: f64 = pmf[lo..cap as usize].iter().sum();
            sensitivity += inner * window;
        }
        if sensitivity == 0.0 {
            continue;
        }
        let scaled = atom.prob * sensitivity;
        for r in 0..r_levels {
            for alpha in 0..t_types {
                let cur = out.get(r, alpha, atom.vtype);
                out.set(r, alpha, atom.vtype, cur + scaled * atom.out_weights.get(r, alpha));
            }
        }
    }
    out
}

/// Directional derivative `D_v f(z)` of every coordinate of f at z along a
/// nonnegative, nonzero direction v, as an exact atom sum.
///
/// Infinite and zero capitals contribute nothing (their default probability
/// is constant in z).
pub fn directional_derivative(
    spec: &ModelSpec,
    z: &CoordArray,
    v: &CoordArray,
) -> Result<CoordArray, AnalyticError> {
    check_direction(spec, v)?;
    Ok(gain_operator(spec, z, v).add_scaled(v, -1.0))
}

// ============================================================================
// Root certificates
// ============================================================================

/// Which sufficient criterion to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootCheckMode {
    /// Strictly negative directional derivatives at the root.
    Derivative,
    /// Contraction along the ray `root + delta * v` on a delta grid.
    Integral,
}

/// Outcome of a root certificate check. `holds = true` proves the root is
/// the component's largest root; `false` proves nothing.
#[derive(Debug, Clone, Serialize)]
pub struct RootCheck {
    pub mode: RootCheckMode,
    pub holds: bool,
    /// Integral mode: the smallest feasible contraction factor over the
    /// grid (must be < 1 to hold). Absent in derivative mode.
    pub kappa: Option<f64>,
    /// Derivative mode: the largest derivative coordinate (must be < 0 to
    /// hold). Integral mode: the same value as `kappa`.
    pub worst: f64,
}

/// Default delta grid for the integral criterion: 16 log-spaced values in
/// `(0, 0.1 * sup(zeta)]`, spanning three decades.
pub fn default_delta_grid(spec: &ModelSpec) -> Vec<f64> {
    let upper = 0.1 * spec.zeta().sup_norm();
    let ratio = 1000f64.powf(1.0 / 15.0);
    (0..16)
        .map(|i| upper * 1e-3 * ratio.powi(i))
        .collect()
}

/// Checks whether `root` is the largest joint root of the origin's component
/// of `{f >= 0}` via one of the two sufficient criteria.
///
/// `root` must actually be a joint root: its sup-norm residual is checked
/// against `params.residual_tol()`. In integral mode the criterion asks for
/// `kappa < 1` with `kappa * v >= gain(root + delta * v, v)` coordinatewise
/// at every delta in the grid; the reported kappa is the smallest feasible
/// one (infinite when a zero direction coordinate faces positive gain,
/// which is why strictly positive directions are the useful choice there).
pub fn check_root_is_zstar(
    spec: &ModelSpec,
    root: &CoordArray,
    v: &CoordArray,
    mode: RootCheckMode,
    delta_grid: &[f64],
    params: &SolverParams,
) -> Result<RootCheck, AnalyticError> {
    check_direction(spec, v)?;
    let residual = f_eval(spec, root).sup_norm();
    if residual > params.residual_tol() {
        return Err(AnalyticError::NotARoot {
            residual,
            tol: params.residual_tol(),
        });
    }

    match mode {
        RootCheckMode::Derivative => {
            let d = directional_derivative(spec, root, v)?;
            let worst = d.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(RootCheck {
                mode,
                holds: worst < 0.0,
                kappa: None,
                worst,
            })
        }
        RootCheckMode::Integral => {
            if delta_grid.is_empty() {
                return Err(AnalyticError::InvalidTolerance(
                    "delta grid must be nonempty".into(),
                ));
            }
            if delta_grid.iter().any(|d| !d.is_finite() || *d <= 0.0) {
                return Err(AnalyticError::InvalidTolerance(
                    "delta grid entries must be finite and positive".into(),
                ));
            }
            let mut kappa = f64::NEG_INFINITY;
            for &delta in delta_grid {
                let point = root.add_scaled(v, delta);
                let gain = gain_operator(spec, &point, v);
                for (g, dir) in gain.as_slice().iter().zip(v.as_slice()) {
                    let ratio = if *dir > 0.0 {
                        g / dir
                    } else if *g > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    kappa = kappa.max(ratio);
                }
            }
            Ok(RootCheck {
                mode,
                holds: kappa < 1.0,
                kappa: Some(kappa),
                worst: kappa,
            })
        }
    }
}
