//! Resilience classification and the supporting sufficient criteria.
//!
//! A system is resilient when an arbitrarily small ex-post shock causes an
//! asymptotically vanishing default fraction. The decisive object is the
//! largest root `z*` of the origin's component of `{f >= 0}`: the system is
//! resilient exactly when that component is `{0}`, and non-resilient with a
//! guaranteed default fraction of at least `g(z*)` otherwise. Classification
//! therefore runs the vanishing-shift schedule, inspects the resolved limit,
//! and — for resilient verdicts — tries to strengthen the numeric answer
//! into an exact certificate via a direction with strictly negative
//! derivatives at 0.
//!
//! The module also carries the 1-impact subsystem margin and the cross-type
//! weight bound, which together give a closed sufficient condition for the
//! resilience of coupled multi-type systems built from resilient parts.

use serde::Serialize;

use crate::coord::{CoordArray, CoordSet};
use crate::error::AnalyticError;
use crate::model::ModelSpec;

use super::derivative::directional_derivative;
use super::poisson::poisson_pmf;
use super::solver::{schedule_limit, ScheduleDiagnostics, SolverParams};
use super::{g_eval, Weighting};

// ============================================================================
// Report types
// ============================================================================

/// Classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Resilient,
    NonResilient,
    Inconclusive,
}

/// A direction with strictly negative directional derivatives of f at 0 —
/// an exact proof that `z* = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// The certifying direction (strictly positive).
    pub direction: Vec<f64>,
    /// The directional derivatives at 0 (all strictly negative).
    pub derivatives: Vec<f64>,
}

/// Lower bound on the asymptotic default fraction induced by vanishing
/// shocks on one coordinate set.
#[derive(Debug, Clone, Serialize)]
pub struct ShockSetBound {
    pub label: String,
    /// Member coordinates (r, alpha, beta), 0-based.
    pub coords: Vec<(usize, usize, usize)>,
    /// `g(z_0(I))`: the guaranteed default fraction under vanishing shocks
    /// on this set.
    pub bound: f64,
    /// Whether the stabilizing schedule for this set resolved.
    pub converged: bool,
}

/// Everything the classification concluded, with the evidence used.
#[derive(Debug, Clone, Serialize)]
pub struct ResilienceReport {
    pub verdict: Verdict,
    /// The resolved (or best-effort) largest root of the origin's component.
    pub z_star: CoordArray,
    pub z_star_sup: f64,
    /// `g(z*)`: the asymptotic default fraction at that root.
    pub g_z_star: f64,
    pub schedule: ScheduleDiagnostics,
    /// Present when a derivative certificate at 0 was found (resilient
    /// verdicts only).
    pub certificate: Option<Certificate>,
    /// Per-set lower bounds `g(z_0(I))`; the live set is always evaluated
    /// for non-resilient verdicts.
    pub lower_bounds: Vec<ShockSetBound>,
    pub params: SolverParams,
}

// ============================================================================
// Classification
// ============================================================================

/// Classifies the spec's base system (shock probabilities ignored — they
/// describe the perturbation, not the system).
///
/// Precondition: the base system has no initial defaults; classification is
/// about the response to *vanishing* shocks, which is only meaningful from a
/// fully solvent start.
pub fn classify_resilience(
    spec: &ModelSpec,
    params: &SolverParams,
) -> Result<ResilienceReport, AnalyticError> {
    classify_resilience_with_sets(spec, params, &[])
}

/// [`classify_resilience`] plus caller-chosen shock sets, each reported with
/// its guaranteed default fraction `g(z_0(I))`.
pub fn classify_resilience_with_sets(
    spec: &ModelSpec,
    params: &SolverParams,
    extra_sets: &[(String, CoordSet)],
) -> Result<ResilienceReport, AnalyticError> {
    let mass = spec.initial_default_mass();
    if mass > 0.0 {
        return Err(AnalyticError::InitialDefaults { mass });
    }

    let full = CoordSet::full(spec.r_levels(), spec.t_types());
    let solve = schedule_limit(spec, &full, params)?;
    let z_star_sup = solve.z.sup_norm();
    let g_z_star = g_eval(spec, &solve.z, Weighting::Count);

    let verdict = if !solve.diagnostics.converged {
        Verdict::Inconclusive
    } else if z_star_sup < params.resolve_tol {
        Verdict::Resilient
    } else {
        Verdict::NonResilient
    };

    let certificate = match verdict {
        Verdict::Resilient => certificate_direction(spec),
        _ => None,
    };

    let mut lower_bounds = Vec::new();
    if verdict == Verdict::NonResilient {
        // The live set's stabilized root is z* itself; report the bound it
        // guarantees under vanishing shocks.
        let live = spec.live_set();
        lower_bounds.push(ShockSetBound {
            label: "live_set".into(),
            coords: live.iter().collect(),
            bound: g_z_star,
            converged: solve.diagnostics.converged,
        });
    }
    for (label, set) in extra_sets {
        if set.is_empty() {
            return Err(AnalyticError::EmptyShockSet);
        }
        let sub = schedule_limit(spec, set, params)?;
        lower_bounds.push(ShockSetBound {
            label: label.clone(),
            coords: set.iter().collect(),
            bound: g_eval(spec, &sub.z, Weighting::Count),
            converged: sub.diagnostics.converged,
        });
    }

    Ok(ResilienceReport {
        verdict,
        z_star: solve.z,
        z_star_sup,
        g_z_star,
        schedule: solve.diagnostics,
        certificate,
        lower_bounds,
        params: *params,
    })
}

// ============================================================================
// Derivative certificate search
// ============================================================================

/// Searches for a strictly positive direction v with `D_v f(0) < 0` in every
/// coordinate — an exact certificate that the origin's component is `{0}`.
///
/// The derivative splits as `D_v f(0) = A v - v` with A a nonnegative linear
/// operator, so a certifying v exists exactly when the spectral radius of A
/// is below 1, and in that case `v = (I - A)^{-1} 1` works and satisfies
/// `D_v f(0) = -1` in every coordinate. That v is computed by iterating the
/// monotone affine map `v <- A v + 1` from 1 (a Neumann series); divergence
/// means no certificate exists along this route and `None` is returned.
pub fn certificate_direction(spec: &ModelSpec) -> Option<Certificate> {
    let zero = CoordArray::zeros(spec.r_levels(), spec.t_types());
    let ones = CoordArray::constant(spec.r_levels(), spec.t_types(), 1.0);
    let mut v = ones.clone();
    for _ in 0..10_000 {
        // A v = D_v f(0) + v
        let av = directional_derivative(spec, &zero, &v)
            .expect("v stays strictly positive")
            .add_scaled(&v, 1.0);
        let next = av.add_scaled(&ones, 1.0);
        let gap = next.sup_distance(&v);
        let scale = next.sup_norm();
        v = next;
        if scale > 1e12 {
            return None; // Neumann series diverges: spectral radius >= 1
        }
        if gap <= 1e-12 * (1.0 + scale) {
            let derivatives = directional_derivative(spec, &zero, &v)
                .expect("v stays strictly positive");
            if derivatives.as_slice().iter().all(|d| *d < 0.0) {
                return Some(Certificate {
                    direction: v.as_slice().to_vec(),
                    derivatives: derivatives.as_slice().to_vec(),
                });
            }
            return None;
        }
    }
    None
}

// ============================================================================
// Subsystem margin and cross-weight bound
// ============================================================================

/// The 1-impact resilience margin of type `alpha` (0-based) at probe level
/// `z > 0`:
/// `E[W_out * W_in * P(Poisson(W_in * z) = C - 1) ; A = alpha]`
/// over the type's own weight column, as an exact atom sum.
///
/// A 1-type subsystem is resilient at slack `eps` when this margin stays
/// below `eps` for all small `z`; see [`combined_margin_threshold`] for how
/// much slack a coupled system affords.
pub fn subsystem_margin(
    spec: &ModelSpec,
    alpha: usize,
    z: f64,
) -> Result<f64, AnalyticError> {
    if spec.r_levels() != 1 {
        return Err(AnalyticError::MultiImpactUnsupported {
            r: spec.r_levels(),
        });
    }
    if alpha >= spec.t_types() {
        return Err(AnalyticError::DimensionMismatch(format!(
            "type index {alpha} out of range 0..{}",
            spec.t_types()
        )));
    }
    if !z.is_finite() || z < 0.0 {
        return Err(AnalyticError::NegativeRate { index: 0, value: z });
    }
    let mut total = 0.0;
    for atom in spec.atoms() {
        if atom.vtype != alpha {
            continue;
        }
        let Some(cap) = atom.capital.finite() else {
            continue; // infinite capital: never at the default boundary
        };
        if cap == 0 {
            continue; // P(Poisson = -1) = 0
        }
        let w_in = atom.in_weights.get(0, alpha);
        let w_out = atom.out_weights.get(0, alpha);
        if w_in == 0.0 || w_out == 0.0 {
            continue;
        }
        let at_boundary = *poisson_pmf(w_in * z, (cap - 1) as usize)
            .last()
            .expect("pmf has cap entries");
        total += atom.prob * w_out * w_in * at_boundary;
    }
    Ok(total)
}

/// Smallest K such that every atom's cross-type weights are bounded by K
/// times its own-type weight, entrywise over impact levels and both weight
/// matrices; infinite when some own-type weight is 0 while a cross-type
/// weight is positive.
pub fn cross_weight_bound(spec: &ModelSpec) -> f64 {
    let mut k: f64 = 0.0;
    for atom in spec.atoms() {
        for matrix in [&atom.in_weights, &atom.out_weights] {
            for r in 0..spec.r_levels() {
                let own = matrix.get(r, atom.vtype);
                for beta in 0..spec.t_types() {
                    if beta == atom.vtype {
                        continue;
                    }
                    let cross = matrix.get(r, beta);
                    if cross == 0.0 {
                        continue;
                    }
                    if own == 0.0 {
                        return f64::INFINITY;
                    }
                    k = k.max(cross / own);
                }
            }
        }
    }
    k
}

/// Margin budget for coupled systems: if every type's subsystem margin stays
/// below `1 / (1 + K^2 (T - 1))` with K the cross-weight bound, the coupled
/// system is resilient. Returns 0 when K is infinite (no budget).
pub fn combined_margin_threshold(spec: &ModelSpec) -> f64 {
    let k = cross_weight_bound(spec);
    if k.is_infinite() {
        return 0.0;
    }
    1.0 / (1.0 + k * k * (spec.t_types() as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_spec, Capital, RawAtom, RawSpec};

    fn unit_raw(weight: f64, capital: Capital) -> RawSpec {
        RawSpec {
            description: None,
            r_levels: 1,
            t_types: 1,
            atoms: vec![RawAtom {
                prob: 1.0,
                vtype: 1,
                in_weights: vec![vec![weight]],
                out_weights: vec![vec![weight]],
                capital,
                shock_prob: 0.0,
                importance: 1.0,
            }],
        }
    }

    #[test]
    fn margin_matches_closed_form() {
        // W = w, C = 2: margin = w^2 P(Poi(wz) = 1) = w^3 z exp(-w z).
        let w = 2.0;
        let spec = validate_spec(unit_raw(w, Capital::Finite(2))).unwrap();
        for &z in &[0.01, 0.3, 1.5] {
            let got = subsystem_margin(&spec, 0, z).unwrap();
            let want = w.powi(3) * z * (-w * z).exp();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn margin_is_zero_for_infinite_capital() {
        let spec = validate_spec(unit_raw(3.0, Capital::Infinite)).unwrap();
        assert_eq!(subsystem_margin(&spec, 0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn margin_requires_single_impact() {
        let raw = RawSpec {
            description: None,
            r_levels: 2,
            t_types: 1,
            atoms: vec![RawAtom {
                prob: 1.0,
                vtype: 1,
                in_weights: vec![vec![1.0], vec![1.0]],
                out_weights: vec![vec![1.0], vec![1.0]],
                capital: Capital::Finite(1),
                shock_prob: 0.0,
                importance: 1.0,
            }],
        };
        let spec = validate_spec(raw).unwrap();
        assert!(matches!(
            subsystem_margin(&spec, 0, 0.5),
            Err(AnalyticError::MultiImpactUnsupported { r: 2 })
        ));
    }

    #[test]
    fn cross_weight_bound_cases() {
        // Block-diagonal two-type system: no cross weights at all.
        let block = RawSpec {
            description: None,
            r_levels: 1,
            t_types: 2,
            atoms: vec![
                RawAtom {
                    prob: 0.5,
                    vtype: 1,
                    in_weights: vec![vec![2.0, 0.0]],
                    out_weights: vec![vec![2.0, 0.0]],
                    capital: Capital::Finite(1),
                    shock_prob: 0.0,
                    importance: 1.0,
                },
                RawAtom {
                    prob: 0.5,
                    vtype: 2,
                    in_weights: vec![vec![0.0, 1.0]],
                    out_weights: vec![vec![0.0, 1.0]],
                    capital: Capital::Finite(1),
                    shock_prob: 0.0,
                    importance: 1.0,
                },
            ],
        };
        let spec = validate_spec(block.clone()).unwrap();
        assert_eq!(cross_weight_bound(&spec), 0.0);
        assert_eq!(combined_margin_threshold(&spec), 1.0);

        // Internal 2, external 3 -> ratio 1.5.
        let mut ratio = block.clone();
        ratio.atoms[0].in_weights = vec![vec![2.0, 3.0]];
        let spec = validate_spec(ratio).unwrap();
        assert_eq!(cross_weight_bound(&spec), 1.5);

        // Internal 0 with positive external -> infinite.
        let mut forced = block;
        forced.atoms[1].out_weights = vec![vec![1.0, 0.0]];
        let spec = validate_spec(forced).unwrap();
        assert_eq!(cross_weight_bound(&spec), f64::INFINITY);
        assert_eq!(combined_margin_threshold(&spec), 0.0);
    }
}
