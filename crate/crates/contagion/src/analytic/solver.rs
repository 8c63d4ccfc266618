//! Monotone fixed-point solvers for the smallest and largest joint roots.
//!
//! All solvers iterate the transfer map `Phi(z) = f(z) + z`, which is
//! monotone and maps the box `[0, zeta]` into itself. Iterating from 0 gives
//! the smallest joint root; iterating `z <- min(z, Phi(z))` down from `zeta`
//! gives the largest. The stabilized variants add a constant shift
//! `eps * 1_I` on a coordinate set I and drive eps to 0 along a geometric
//! schedule — the construction that defines the shock-stable roots `z_0(I)`
//! and, with I the whole space, the largest root `z*` of the component of
//! `{f >= 0}` containing the origin.
//!
//! A subtlety of the shifted stages is the stopping rule. Near a tangency of
//! the root curves the lifted map can move by roughly `eps` per iteration
//! while crossing the pinch; stopping on `increment < tol` alone would
//! mistake that crawl for convergence whenever `eps` is close to `tol`.
//! Shifted stages therefore stop only when the increment falls below
//! `min(tol, eps / 4)`, which is unreachable while the crawl is still
//! eps-paced.

use serde::Serialize;

use crate::coord::{CoordArray, CoordSet};
use crate::error::AnalyticError;
use crate::model::ModelSpec;

use super::{f_eval, phi_eval};

// ============================================================================
// Parameters
// ============================================================================

/// Tolerances and budgets shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverParams {
    /// Per-stage stopping tolerance on the sup-norm increment.
    pub iter_tol: f64,
    /// Iteration budget per fixed-point stage.
    pub max_iter: u64,
    /// First shift of the shrinking schedule.
    pub eps0: f64,
    /// Final (smallest) shift of the schedule.
    pub eps_floor: f64,
    /// Resolution tolerance: the schedule's last two stages must agree to
    /// this in sup norm, and roots within this of 0 count as 0.
    pub resolve_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            iter_tol: 1e-10,
            max_iter: 5_000_000,
            eps0: 1e-2,
            eps_floor: 1e-10,
            resolve_tol: 1e-6,
        }
    }
}

impl SolverParams {
    /// Residual bound certified for returned roots: `10 * iter_tol`.
    pub fn residual_tol(&self) -> f64 {
        10.0 * self.iter_tol
    }

    fn validate(&self) -> Result<(), AnalyticError> {
        for (name, value) in [
            ("iter_tol", self.iter_tol),
            ("eps0", self.eps0),
            ("eps_floor", self.eps_floor),
            ("resolve_tol", self.resolve_tol),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(AnalyticError::InvalidTolerance(format!(
                    "{name} = {value} must be finite and positive"
                )));
            }
        }
        if self.eps_floor > self.eps0 {
            return Err(AnalyticError::InvalidTolerance(format!(
                "eps_floor = {} exceeds eps0 = {}",
                self.eps_floor, self.eps0
            )));
        }
        if self.max_iter == 0 {
            return Err(AnalyticError::InvalidTolerance(
                "max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

// ============================================================================
// Single-stage fixed points
// ============================================================================

/// Outcome of one fixed-point stage.
#[derive(Debug, Clone)]
pub struct FixedPointSolve {
    pub z: CoordArray,
    pub iterations: u64,
    /// Sup-norm increment of the final step.
    pub increment: f64,
    /// Sup-norm residual of the solved equation (`|f(z) + shift|` for
    /// upward solves, `|f(z)|` for the downward solve).
    pub residual: f64,
}

/// Least fixed point of `z -> Phi(z) + eps * 1_{shift_set}`, iterated from 0.
///
/// With `eps = 0` this is the smallest joint root of f. With `eps > 0` it is
/// the eps-stabilized root: f equals `-eps` on the shift set and 0 elsewhere
/// at convergence. Iterates are clamped to be componentwise nondecreasing
/// (the map is monotone; the clamp only absorbs float rounding) and stay
/// bounded by `zeta + eps`.
pub fn least_fixed_point(
    spec: &ModelSpec,
    eps: f64,
    shift_set: &CoordSet,
    params: &SolverParams,
) -> Result<FixedPointSolve, AnalyticError> {
    params.validate()?;
    if !eps.is_finite() || eps < 0.0 {
        return Err(AnalyticError::InvalidTolerance(format!(
            "eps = {eps} must be finite and nonnegative"
        )));
    }
    let shift = if eps > 0.0 {
        let mut s = shift_set.indicator();
        s.as_mut_slice().iter_mut().for_each(|v| *v *= eps);
        s
    } else {
        CoordArray::zeros(spec.r_levels(), spec.t_types())
    };

    // Shifted stages may crawl eps-per-step across a tangency pinch; see the
    // module docs for why the stop threshold tightens with eps.
    let stop = if eps == 0.0 {
        params.iter_tol
    } else {
        params.iter_tol.min(eps / 4.0)
    };

    let mut z = CoordArray::zeros(spec.r_levels(), spec.t_types());
    for iteration in 1..=params.max_iter {
        let next = phi_eval(spec, &z).add_scaled(&shift, 1.0).max_with(&z);
        let increment = next.sup_distance(&z);
        z = next;
        if increment < stop {
            let residual = f_eval(spec, &z).add_scaled(&shift, 1.0).sup_norm();
            return Ok(FixedPointSolve {
                z,
                iterations: iteration,
                increment,
                residual,
            });
        }
    }
    let residual = f_eval(spec, &z).add_scaled(&shift, 1.0).sup_norm();
    Err(AnalyticError::MaxIterations {
        iterations: params.max_iter,
        increment: f64::NAN,
        residual,
        last_iterate: z.as_slice().to_vec(),
    })
}

/// Greatest fixed point of Phi inside `[0, zeta]`, iterated downward from
/// `zeta` via `z <- min(z, Phi(z))`.
///
/// This is the largest joint root of f overall — an upper envelope for every
/// root the other solvers can return, and the natural candidate for the
/// high-default outcome when several roots coexist.
pub fn greatest_fixed_point(
    spec: &ModelSpec,
    params: &SolverParams,
) -> Result<FixedPointSolve, AnalyticError> {
    params.validate()?;
    let mut z = spec.zeta();
    for iteration in 1..=params.max_iter {
        let next = phi_eval(spec, &z).min_with(&z);
        let increment = next.sup_distance(&z);
        z = next;
        if increment < params.iter_tol {
            let residual = f_eval(spec, &z).sup_norm();
            return Ok(FixedPointSolve {
                z,
                iterations: iteration,
                increment,
                residual,
            });
        }
    }
    let residual = f_eval(spec, &z).sup_norm();
    Err(AnalyticError::MaxIterations {
        iterations: params.max_iter,
        increment: f64::NAN,
        residual,
        last_iterate: z.as_slice().to_vec(),
    })
}

// ============================================================================
// Shrinking-shift schedules
// ============================================================================

/// One stage of the shrinking-shift schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleStage {
    pub eps: f64,
    pub iterations: u64,
    /// Sup norm of the stage's root.
    pub z_sup: f64,
}

/// Serializable trace of a whole schedule run.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleDiagnostics {
    pub stages: Vec<ScheduleStage>,
    /// Sup-norm gap between the last two stages' roots.
    pub cauchy_gap: f64,
    pub total_iterations: u64,
    /// Whether the gap fell below the resolution tolerance.
    pub converged: bool,
}

/// A resolved shift-schedule limit.
#[derive(Debug, Clone)]
pub struct ScheduleSolve {
    pub z: CoordArray,
    pub diagnostics: ScheduleDiagnostics,
}

/// Runs the geometric shift schedule `eps0, eps0/2, ..., eps_floor` with the
/// shift on `shift_set`, reporting the floor stage's root and the observed
/// Cauchy gap. Does not decide convergence — callers inspect
/// `diagnostics.converged`.
pub(crate) fn schedule_limit(
    spec: &ModelSpec,
    shift_set: &CoordSet,
    params: &SolverParams,
) -> Result<ScheduleSolve, AnalyticError> {
    params.validate()?;
    let mut stages = Vec::new();
    let mut total_iterations = 0;
    let mut cauchy_gap = f64::INFINITY;
    let mut eps = params.eps0;
    let mut current: Option<CoordArray> = None;
    loop {
        let solve = least_fixed_point(spec, eps, shift_set, params)?;
        total_iterations += solve.iterations;
        stages.push(ScheduleStage {
            eps,
            iterations: solve.iterations,
            z_sup: solve.z.sup_norm(),
        });
        if let Some(p) = &current {
            cauchy_gap = p.sup_distance(&solve.z);
        }
        current = Some(solve.z);
        if eps <= params.eps_floor {
            break;
        }
        eps = (eps / 2.0).max(params.eps_floor);
    }
    let z = current.expect("the schedule runs at least one stage");
    let converged = cauchy_gap <= params.resolve_tol;
    Ok(ScheduleSolve {
        z,
        diagnostics: ScheduleDiagnostics {
            stages,
            cauchy_gap,
            total_iterations,
            converged,
        },
    })
}

/// Runs the shift schedule and reports the floor-stage root with its
/// diagnostics whether or not the limit resolved — callers inspect
/// `diagnostics.converged`. [`z_star`] and [`z_zero`] wrap this with a
/// convergence requirement.
pub fn schedule_solve(
    spec: &ModelSpec,
    shift_set: &CoordSet,
    params: &SolverParams,
) -> Result<ScheduleSolve, AnalyticError> {
    schedule_limit(spec, shift_set, params)
}

fn require_converged(solve: ScheduleSolve, params: &SolverParams) -> Result<ScheduleSolve, AnalyticError> {
    if solve.diagnostics.converged {
        Ok(solve)
    } else {
        Err(AnalyticError::ScheduleNotConverged {
            cauchy_gap: solve.diagnostics.cauchy_gap,
            eps_floor: params.eps_floor,
            last_iterate: solve.z.as_slice().to_vec(),
        })
    }
}

/// The largest joint root of the origin's component of `{f >= 0}`: the limit
/// of the all-coordinate shifted roots as the shift vanishes.
///
/// Smaller shifts give componentwise smaller stage roots, so the schedule is
/// monotone; the limit is reported once the final two stages agree within
/// the resolution tolerance, otherwise the unresolved iterate travels in the
/// error.
pub fn z_star(spec: &ModelSpec, params: &SolverParams) -> Result<ScheduleSolve, AnalyticError> {
    let full = CoordSet::full(spec.r_levels(), spec.t_types());
    require_converged(schedule_limit(spec, &full, params)?, params)
}

/// The smallest root stable under vanishing shocks on the coordinate set I:
/// the same schedule as [`z_star`] with the shift restricted to I.
///
/// With I the live set (all coordinates of positive mean out-weight) this
/// equals `z_star`.
pub fn z_zero(
    spec: &ModelSpec,
    shock_set: &CoordSet,
    params: &SolverParams,
) -> Result<ScheduleSolve, AnalyticError> {
    if shock_set.is_empty() {
        return Err(AnalyticError::EmptyShockSet);
    }
    require_converged(schedule_limit(spec, shock_set, params)?, params)
}
