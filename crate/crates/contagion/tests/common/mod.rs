//! Shared helpers for the integration suites: fixture loading, small spec
//! builders, scalar bisection, brute-force Poisson references, and a seeded
//! random-spec generator for property checks.

#![allow(dead_code)]

use std::path::PathBuf;

use contagion::{validate_spec, Capital, ModelSpec, RawAtom, RawSpec};
use rand::rngs::StdRng;
use rand::Rng;

/// Repository-level specs directory (fixtures shipped with the workspace).
pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("specs")
}

pub fn load(name: &str) -> ModelSpec {
    let path = specs_dir().join(name);
    ModelSpec::from_path(&path).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

/// One-atom, one-type spec with equal in/out weight `w` on every impact
/// level.
pub fn single_type_spec(r_levels: usize, w: f64, capital: Capital, shock: f64) -> ModelSpec {
    validate_spec(RawSpec {
        description: None,
        r_levels,
        t_types: 1,
        atoms: vec![RawAtom {
            prob: 1.0,
            vtype: 1,
            in_weights: vec![vec![w]; r_levels],
            out_weights: vec![vec![w]; r_levels],
            capital,
            shock_prob: shock,
            importance: 1.0,
        }],
    })
    .unwrap()
}

/// Bisection for a continuous scalar function with a sign change on [lo, hi].
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(
        flo * f(hi) <= 0.0,
        "no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={}",
        f(hi)
    );
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Poisson pmf table P(X = 0..=kmax) for X ~ Poisson(lambda).
pub fn poisson_table(lambda: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut p = (-lambda).exp();
    for k in 0..=kmax {
        out.push(p);
        p *= lambda / (k as f64 + 1.0);
    }
    out
}

/// Brute-force P(sum of s * X_s >= ell) by direct enumeration over the box
/// `X_s <= ell`. Exact up to f64 roundoff: any configuration outside the box
/// already carries load > ell.
pub fn psi_brute(ell: u64, rates: &[f64]) -> f64 {
    let ell = ell as usize;
    if ell == 0 {
        return 1.0;
    }
    let tables: Vec<Vec<f64>> = rates.iter().map(|&x| poisson_table(x, ell)).collect();
    // P(load <= ell - 1), enumerated recursively over the impact levels.
    let mut below = 0.0;
    let mut stack = vec![(0usize, 0usize, 1.0f64)]; // (level, load, prob)
    while let Some((s, load, prob)) = stack.pop() {
        if s == tables.len() {
            below += prob;
            continue;
        }
        let weight = s + 1;
        let mut count = 0;
        while load + weight * count <= ell - 1 {
            stack.push((s + 1, load + weight * count, prob * tables[s][count]));
            count += 1;
        }
    }
    1.0 - below
}

/// Brute-force pmf of the integer-weighted Poisson sum on 0..=kmax, by the
/// same direct enumeration.
pub fn compound_pmf_brute(rates: &[f64], kmax: usize) -> Vec<f64> {
    let tables: Vec<Vec<f64>> = rates.iter().map(|&x| poisson_table(x, kmax)).collect();
    let mut out = vec![0.0; kmax + 1];
    let mut stack = vec![(0usize, 0usize, 1.0f64)];
    while let Some((s, load, prob)) = stack.pop() {
        if s == tables.len() {
            out[load] += prob;
            continue;
        }
        let weight = s + 1;
        let mut count = 0;
        while load + weight * count <= kmax {
            stack.push((s + 1, load + weight * count, prob * tables[s][count]));
            count += 1;
        }
    }
    out
}

/// Seeded random spec: R in 1..=3, T in 1..=2, up to 3 atoms, small weights,
/// mixed finite/infinite capitals. Guaranteed valid.
pub fn random_spec(rng: &mut StdRng) -> ModelSpec {
    let r_levels = rng.random_range(1..=3);
    let t_types = rng.random_range(1..=2usize);
    let atom_count = rng.random_range(1..=3usize);
    let mut probs: Vec<f64> = (0..atom_count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    // Make the masses sum to 1 exactly despite rounding.
    let correction: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[0] += correction;
    let atoms = probs
        .iter()
        .enumerate()
        .map(|(i, &prob)| {
            let weight = |rng: &mut StdRng| {
                if rng.random_range(0..4) == 0 {
                    0.0
                } else {
                    rng.random_range(0.1..1.5)
                }
            };
            RawAtom {
                prob,
                vtype: (i % t_types) + 1,
                in_weights: (0..r_levels)
                    .map(|_| (0..t_types).map(|_| weight(rng)).collect())
                    .collect(),
                out_weights: (0..r_levels)
                    .map(|_| (0..t_types).map(|_| weight(rng)).collect())
                    .collect(),
                capital: if rng.random_range(0..5) == 0 {
                    Capital::Infinite
                } else {
                    Capital::Finite(rng.random_range(1..=4))
                },
                shock_prob: 0.0,
                importance: 1.0,
            }
        })
        .collect();
    validate_spec(RawSpec {
        description: None,
        r_levels,
        t_types,
        atoms,
    })
    .unwrap()
}
