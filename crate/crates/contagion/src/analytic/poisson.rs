//! Compound-Poisson probability kernels.
//!
//! The analytic layer reduces every question about cascade limits to
//! evaluations of one distribution: the integer-weighted Poisson sum
//! `S = sum_{s=1..R} s * X_s` with independent `X_s ~ Poisson(x_s)`. This
//! module computes its pmf by sequential lag-s convolution and the tail
//! functional `psi_ell = P(S >= ell)`, both exactly (up to f64 rounding) and
//! without any sampling.

use crate::error::AnalyticError;
use crate::model::Capital;

/// Poisson pmf `P(X = k)` for `k = 0..=kmax`, computed by the stable upward
/// recurrence `p_{k+1} = p_k * lambda / (k + 1)`.
pub fn poisson_pmf(lambda: f64, kmax: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(kmax + 1);
    let mut p = (-lambda).exp();
    for k in 0..=kmax {
        pmf.push(p);
        p *= lambda / (k + 1) as f64;
    }
    pmf
}

fn check_rates(rates: &[f64]) -> Result<(), AnalyticError> {
    for (index, &value) in rates.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(AnalyticError::NegativeRate { index, value });
        }
    }
    Ok(())
}

/// Pmf of `S = sum_{s=1..R} s * X_s`, `X_s ~ Poisson(rates[s-1])`
/// independent, over `0..=kmax`.
///
/// Convolves one impact level at a time: level s contributes at lags
/// `0, s, 2s, ...`, so `new[k] = sum_j Poi(rates[s-1])[j] * old[k - s*j]`.
/// The result is a genuine sub-probability vector: entries in [0, 1] with
/// sum at most 1 (mass beyond `kmax` is truncated).
pub fn compound_poisson_pmf(rates: &[f64], kmax: usize) -> Result<Vec<f64>, AnalyticError> {
    check_rates(rates)?;
    let mut pmf = vec![0.0; kmax + 1];
    pmf[0] = 1.0;
    for (s_minus_1, &rate) in rates.iter().enumerate() {
        let s = s_minus_1 + 1;
        if rate == 0.0 {
            continue;
        }
        let level = poisson_pmf(rate, kmax / s);
        let mut next = vec![0.0; kmax + 1];
        for (j, &pj) in level.iter().enumerate() {
            let lag = s * j;
            for k in lag..=kmax {
                next[k] += pj * pmf[k - lag];
            }
        }
        pmf = next;
    }
    Ok(pmf)
}

/// Tail probability `psi_ell(x) = P(sum_{s} s * X_s >= ell)`.
///
/// `psi_0 = 1` identically and `psi_inf = 0` identically; in between the
/// complement of the head sum `P(S <= ell - 1)` is used, clamped into [0, 1]
/// against rounding.
pub fn psi(ell: Capital, rates: &[f64]) -> Result<f64, AnalyticError> {
    check_rates(rates)?;
    match ell {
        Capital::Infinite => Ok(0.0),
        Capital::Finite(0) => Ok(1.0),
        Capital::Finite(l) => {
            let head: f64 = compound_poisson_pmf(rates, (l - 1) as usize)?.iter().sum();
            Ok((1.0 - head).clamp(0.0, 1.0))
        }
    }
}
