//! Identification of the type counts from the outcome distribution, and the
//! observationally equivalent null shares in the superpopulation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::population::{Design, OutcomePmf, TypeCounts, TypeShares};

/// First and cross moments of `(Y_T, Y_U)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Moments {
    #[serde(with = "exact::serde_rational")]
    pub mu_t: Rational,
    #[serde(with = "exact::serde_rational")]
    pub mu_u: Rational,
    #[serde(with = "exact::serde_rational")]
    pub mu_tu: Rational,
}

pub fn moments(pmf: &OutcomePmf) -> Moments {
    Moments {
        mu_t: pmf.expectation(|y| BigInt::from(y.y_t)),
        mu_u: pmf.expectation(|y| BigInt::from(y.y_u)),
        mu_tu: pmf.expectation(|y| BigInt::from(y.y_t) * BigInt::from(y.y_u)),
    }
}

/// Probability that a fixed unit is treated and another fixed unit is not:
/// `n1 n0 / (n (n - 1))`.
pub fn pair_probability(design: Design) -> Rational {
    let (n, n1, n0) = (design.n() as i64, design.n1() as i64, design.n0() as i64);
    exact::ratio(n1 * n0, n * (n - 1))
}

/// Recovers the type counts from the moments of their outcome pmf.
///
/// With `q = n1/n` and `P12` the [`pair_probability`]:
/// `n_at = (mu_T/q)(mu_U/(1-q)) - mu_TU/P12`, `n_c = mu_T/q - n_at`,
/// `n_d = mu_U/(1-q) - n_at`. Non-integral or out-of-range solutions are
/// rejected rather than rounded.
pub fn invert_moments(m: &Moments, design: Design) -> Result<TypeCounts> {
    let n = BigRational::from_integer(BigInt::from(design.n()));
    let q = exact::ratio(design.n1() as i64, design.n() as i64);
    let one_minus_q = exact::ratio(design.n0() as i64, design.n() as i64);
    let treated_ones = &m.mu_t / &q;
    let untreated_ones = &m.mu_u / &one_minus_q;
    let at = &treated_ones * &untreated_ones - &m.mu_tu / pair_probability(design);
    let c = &treated_ones - &at;
    let d = &untreated_ones - &at;
    let nt = &n - &at - &c - &d;

    let mut counts = [0u32; 4];
    for (slot, (name, v)) in counts
        .iter_mut()
        .zip([("n_at", &at), ("n_nt", &nt), ("n_d", &d), ("n_c", &c)])
    {
        if !v.is_integer() {
            return Err(Error::NotAValidMoment(format!(
                "{name} = {} is not an integer",
                exact::format(v)
            )));
        }
        if v.is_negative() || *v > n {
            return Err(Error::NotAValidMoment(format!(
                "{name} = {} lies outside [0, {}]",
                exact::format(v),
                design.n()
            )));
        }
        *slot = v.to_integer().try_into().expect("bounded by n");
    }
    Ok(TypeCounts::from_array(counts))
}

/// Shares with the same outcome distribution as `p` that satisfy
/// monotonicity: `min(p_c, p_d)` of each of defiers and compliers is moved
/// to always-takers and never-takers.
pub fn equivalent_null_shares(p: &TypeShares) -> TypeShares {
    let m = if p.c < p.d { p.c.clone() } else { p.d.clone() };
    if m.is_zero() {
        return p.clone();
    }
    TypeShares {
        at: &p.at + &m,
        nt: &p.nt + &m,
        d: &p.d - &m,
        c: &p.c - &m,
    }
}
