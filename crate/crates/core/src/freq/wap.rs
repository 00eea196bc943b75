//! Weighted average power around an alternative.
//!
//! Weights are the multinomial pmf of `Multinomial(n, theta/n)` restricted
//! to the alternatives and renormalised. Because `n^n` cancels, each weight
//! is an integer `multinomial(t) * prod_k theta_k^t_k` over their sum; the
//! integers are exact and only the final ratio is rounded.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{check_space, power_on, TestFunction};
use crate::error::{ensure, Result};
use crate::exact::{self, Rational};
use crate::population::{TypeCounts, TypeSpace};

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    const KEEP: u64 = 1000;
    let bits = den.bits();
    if bits > KEEP {
        let shift = bits - KEEP;
        let a = (num >> shift).to_f64().unwrap_or(0.0);
        let b = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
        a / b
    } else {
        num.to_f64().unwrap_or(0.0) / den.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Normalised weights `w_n(t; theta)` over the alternatives, as pairs of
/// type index and weight. Alternatives with zero weight are omitted.
pub fn wap_weights(space: &TypeSpace, theta: &TypeCounts) -> Result<Vec<(usize, f64)>> {
    space.index_of(theta)?;
    ensure!(
        !theta.is_null(),
        InvalidInput,
        "weighted average power is centred on an alternative, but {theta} satisfies monotonicity"
    );
    let n = space.design().n() as usize;
    let centre = theta.as_array();
    let pows: Vec<Vec<BigUint>> = centre
        .iter()
        .map(|&b| {
            let mut row = Vec::with_capacity(n + 1);
            let mut acc = BigUint::from(1u32);
            for _ in 0..=n {
                row.push(acc.clone());
                acc *= b;
            }
            row
        })
        .collect();
    let multinomials = space.multinomial_coefficients();
    let mut numerators = Vec::new();
    for &a in space.alternatives() {
        let t = space.types()[a].as_array();
        if (0..4).any(|k| centre[k] == 0 && t[k] > 0) {
            continue;
        }
        let mut w = multinomials[a].clone();
        for k in 0..4 {
            if t[k] > 0 {
                w *= &pows[k][t[k] as usize];
            }
        }
        numerators.push((a, w));
    }
    let total: BigUint = numerators.iter().map(|(_, w)| w).sum();
    debug_assert!(!total.is_zero());
    Ok(numerators
        .into_iter()
        .map(|(a, w)| (a, ratio_f64(&w, &total)))
        .collect())
}

pub(crate) fn wap_with_weights(space: &TypeSpace, delta: &TestFunction, weights: &[(usize, f64)]) -> f64 {
    let active = delta.active();
    weights
        .iter()
        .map(|&(a, w)| w * power_on(space.dense(a), delta.values(), &active))
        .sum()
}

/// `sum_{t in alternatives} E_t[delta(Y)] w_n(t; theta)`.
pub fn wap(space: &TypeSpace, delta: &TestFunction, theta: &TypeCounts) -> Result<f64> {
    check_space(space, delta)?;
    let weights = wap_weights(space, theta)?;
    Ok(wap_with_weights(space, delta, &weights))
}

/// `1 / (1 - 2(1-v)^n + (1-2v)^n)`, the multiplier on the level in the WAP bound.
pub fn wap_factor(n: u32, v: &Rational) -> Result<f64> {
    ensure!(n >= 4, InvalidInput, "the WAP bound needs n >= 4, got {n}");
    let lo = exact::ratio(1, n as i64);
    let hi = exact::ratio(1, 2);
    ensure!(
        *v >= lo && *v <= hi,
        InvalidInput,
        "violation share v={} must lie in [1/n, 1/2]",
        exact::format(v)
    );
    let v = exact::to_f64(v);
    let nf = n as f64;
    let a = (nf * (-v).ln_1p()).exp();
    let b = if v >= 0.5 {
        0.0
    } else {
        (nf * (-2.0 * v).ln_1p()).exp()
    };
    Ok(1.0 / (1.0 - 2.0 * a + b))
}

/// Upper bound on WAP of any level-`alpha` test around an alternative with
/// violation share `v`.
pub fn wap_bound(n: u32, v: &Rational, alpha: f64) -> Result<f64> {
    Ok(alpha * wap_factor(n, v)?)
}
