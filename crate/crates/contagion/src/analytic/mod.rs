//! Exact asymptotic analysis: the fixed-point functions f and g, their
//! root solvers, directional derivatives, resilience classification, and
//! root-set contour extraction.
//!
//! For a validated spec, the asymptotic state of the cascade is encoded by a
//! coordinate array z over (impact r, counterparty type alpha, own type
//! beta). The map [`f_eval`] measures the self-consistency gap of z; joint
//! roots of f are the candidate limits. [`g_eval`] converts any such root
//! into a final default fraction (by count, per type, or weighted by
//! systemic importance). Everything is an exact finite sum over the spec's
//! atoms — no sampling, no quadrature.

pub mod derivative;
pub mod poisson;
pub mod resilience;
pub mod rootset;
pub mod solver;

use crate::coord::CoordArray;
use crate::model::{Atom, ModelSpec};
use poisson::psi;

// ============================================================================
// f and g
// ============================================================================

/// Loss-arrival rates seen by one atom under state z: entry s-1 is the rate
/// of impact-(s) loss events, `sum_gamma in_weights[s, gamma] * z[s, vtype,
/// gamma]`.
pub(crate) fn atom_rates(atom: &Atom, z: &CoordArray) -> Vec<f64> {
    let (r_levels, t_types) = (z.r_levels(), z.t_types());
    (0..r_levels)
        .map(|s| {
            (0..t_types)
                .map(|gamma| atom.in_weights.get(s, gamma) * z.get(s, atom.vtype, gamma))
                .sum()
        })
        .collect()
}

/// Probability that the atom's accumulated integer loss reaches its capital
/// under state z.
pub(crate) fn atom_default_probability(atom: &Atom, z: &CoordArray) -> f64 {
    let rates = atom_rates(atom, z);
    psi(atom.capital, &rates).expect("rates are nonnegative for z in the nonnegative orthant")
}

/// Evaluates the fixed-point gap functions
/// `f[r, alpha, beta](z) = E[W_out[r, alpha] * psi_C(rates(z)) ; A = beta] - z[r, alpha, beta]`
/// as exact atom sums. Joint roots of all coordinates are the candidate
/// asymptotic states.
///
/// Defined on the nonnegative orthant; panics if z has a dimension mismatch
/// or drives a rate negative.
pub fn f_eval(spec: &ModelSpec, z: &CoordArray) -> CoordArray {
    assert_eq!(
        (z.r_levels(), z.t_types()),
        (spec.r_levels(), spec.t_types()),
        "state dimensions must match the spec"
    );
    let mut out = CoordArray::zeros(spec.r_levels(), spec.t_types());
    for atom in spec.atoms() {
        let p_default = atom_default_probability(atom, z);
        let weight = atom.prob * p_default;
        for r in 0..spec.r_levels() {
            for alpha in 0..spec.t_types() {
                let cur = out.get(r, alpha, atom.vtype);
                out.set(
                    r,
                    alpha,
                    atom.vtype,
                    cur + weight * atom.out_weights.get(r, alpha),
                );
            }
        }
    }
    out.add_scaled(z, -1.0)
}

/// The monotone transfer map `Phi(z) = f(z) + z` whose least fixed point
/// from 0 is the smallest joint root.
pub fn phi_eval(spec: &ModelSpec, z: &CoordArray) -> CoordArray {
    f_eval(spec, z).add_scaled(z, 1.0)
}

/// How the asymptotic default fraction weights each atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Plain count: fraction of all institutions.
    Count,
    /// Only institutions of one type (0-based), still as a fraction of the
    /// whole population.
    PerType(usize),
    /// Each institution weighted by its systemic-importance score.
    Importance,
}

/// Asymptotic final default fraction at state z:
/// `g(z) = E[psi_C(rates(z)) * weight(atom)]`, an exact atom sum.
///
/// With z a joint root of f this is the limiting defaulted fraction (count
/// weighting), the defaulted mass of one type, or the defaulted
/// systemic-importance mass. At z = 0 the count weighting returns the
/// initial default mass `P(C = 0)`.
pub fn g_eval(spec: &ModelSpec, z: &CoordArray, weighting: Weighting) -> f64 {
    assert_eq!(
        (z.r_levels(), z.t_types()),
        (spec.r_levels(), spec.t_types()),
        "state dimensions must match the spec"
    );
    if let Weighting::PerType(beta) = weighting {
        assert!(beta < spec.t_types(), "type index out of range");
    }
    spec.atoms()
        .iter()
        .map(|atom| {
            let factor = match weighting {
                Weighting::Count => 1.0,
                Weighting::PerType(beta) => {
                    if atom.vtype == beta {
                        1.0
                    } else {
                        0.0
                    }
                }
                Weighting::Importance => atom.importance,
            };
            if factor == 0.0 {
                0.0
            } else {
                atom.prob * factor * atom_default_probability(atom, z)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_spec, Capital, RawAtom, RawSpec};

    fn one_type_spec(capital: Capital, weight: f64) -> ModelSpec {
        validate_spec(RawSpec {
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
        })
        .unwrap()
    }

    #[test]
    fn f_vanishes_at_zero_without_initial_defaults() {
        let spec = one_type_spec(Capital::Finite(2), 1.5);
        let z = CoordArray::zeros(1, 1);
        assert_eq!(f_eval(&spec, &z).sup_norm(), 0.0);
        assert_eq!(g_eval(&spec, &z, Weighting::Count), 0.0);
    }

    #[test]
    fn g_at_zero_is_initial_default_mass() {
        let spec = validate_spec(RawSpec {
            description: None,
            r_levels: 1,
            t_types: 1,
            atoms: vec![
                RawAtom {
                    prob: 0.3,
                    vtype: 1,
                    in_weights: vec![vec![1.0]],
                    out_weights: vec![vec![1.0]],
                    capital: Capital::Finite(0),
                    shock_prob: 0.0,
                    importance: 2.0,
                },
                RawAtom {
                    prob: 0.7,
                    vtype: 1,
                    in_weights: vec![vec![1.0]],
                    out_weights: vec![vec![1.0]],
                    capital: Capital::Finite(2),
                    shock_prob: 0.0,
                    importance: 1.0,
                },
            ],
        })
        .unwrap();
        let z = CoordArray::zeros(1, 1);
        assert!((g_eval(&spec, &z, Weighting::Count) - 0.3).abs() < 1e-15);
        // Importance weighting doubles the defaulted atom's contribution.
        assert!((g_eval(&spec, &z, Weighting::Importance) - 0.6).abs() < 1e-15);
        assert!((g_eval(&spec, &z, Weighting::PerType(0)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn one_type_f_matches_scalar_closed_form() {
        // R = 1, capital 1: f(z) = w * (1 - exp(-w z)) - z.
        let w = 1.3;
        let spec = one_type_spec(Capital::Finite(1), w);
        for &zval in &[0.0, 0.1, 0.7, 2.0] {
            let z = CoordArray::from_flat(1, 1, vec![zval]).unwrap();
            let want = w * (1.0 - (-w * zval).exp()) - zval;
            assert!((f_eval(&spec, &z).get(0, 0, 0) - want).abs() < 1e-14);
        }
    }
}
