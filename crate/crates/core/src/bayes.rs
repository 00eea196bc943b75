//! Discrete priors over type counts and exact posteriors.
//!
//! All arithmetic is exact: posteriors are rationals and equalities such as
//! "the posterior null probability equals the prior" are checked exactly.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::combinatorics::binomial;
use crate::error::{ensure, Error, Result};
use crate::exact::{self, Rational};
use crate::population::{pmf, support, Design, OutcomeCounts, OutcomePmf, TypeCounts};

/// Finite prior with exact weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    design: Design,
    weights: BTreeMap<TypeCounts, Rational>,
}

impl DiscretePrior {
    /// Zero weights are dropped.
    pub fn new(design: Design, weights: BTreeMap<TypeCounts, Rational>) -> Result<Self> {
        let mut total = Rational::zero();
        for (t, w) in &weights {
            design.check_theta(t)?;
            ensure!(!w.is_negative(), InvalidInput, "prior weight at {t} is negative");
            total += w;
        }
        ensure!(
            total.is_one(),
            InvalidInput,
            "prior weights sum to {}, not 1",
            exact::format(&total)
        );
        let weights = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        Ok(DiscretePrior { design, weights })
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn weights(&self) -> &BTreeMap<TypeCounts, Rational> {
        &self.weights
    }

    pub fn weight(&self, theta: &TypeCounts) -> Rational {
        self.weights.get(theta).cloned().unwrap_or_else(Rational::zero)
    }

    /// Prior probability of the monotonicity null.
    pub fn null_probability(&self) -> Rational {
        self.weights.iter().filter(|(t, _)| t.is_null()).map(|(_, w)| w).sum()
    }

    fn likelihoods(&self) -> Result<Vec<(TypeCounts, &Rational, OutcomePmf)>> {
        self.weights
            .iter()
            .map(|(t, w)| Ok((*t, w, pmf(self.design, t)?)))
            .collect()
    }

    /// Prior predictive pmf of the outcome, in grid order.
    pub fn marginal(&self) -> Result<Vec<Rational>> {
        let mut out = vec![Rational::zero(); self.design.grid_len()];
        for (_, w, f) in self.likelihoods()? {
            for i in f.support_indices() {
                out[i] += f.mass_at(i) * w;
            }
        }
        Ok(out)
    }

    /// Posterior over type counts after observing `y`.
    pub fn posterior(&self, y: OutcomeCounts) -> Result<BTreeMap<TypeCounts, Rational>> {
        self.design.check_outcome(y)?;
        let joint: Vec<(TypeCounts, Rational)> = self
            .likelihoods()?
            .into_iter()
            .map(|(t, w, f)| (t, f.mass(y) * w))
            .collect();
        let total: Rational = joint.iter().map(|(_, m)| m).sum();
        if total.is_zero() {
            return Err(Error::UndefinedPosterior(format!("outcome {y} has zero prior predictive mass")));
        }
        Ok(joint
            .into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|(t, m)| (t, m / &total))
            .collect())
    }
}

impl Serialize for DiscretePrior {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            theta: &'a TypeCounts,
            weight: String,
        }
        let mut seq = s.serialize_seq(Some(self.weights.len()))?;
        for (t, w) in &self.weights {
            seq.serialize_element(&Entry { theta: t, weight: exact::format(w) })?;
        }
        seq.end()
    }
}

/// `P(theta in nulls | Y = y)` under `prior`.
pub fn posterior_null_prob(prior: &DiscretePrior, y: OutcomeCounts) -> Result<Rational> {
    Ok(prior
        .posterior(y)?
        .into_iter()
        .filter(|(t, _)| t.is_null())
        .map(|(_, p)| p)
        .sum())
}

/// Equal mass on one null and one alternative.
pub fn two_point_prior(design: Design, theta0: &TypeCounts, theta1: &TypeCounts) -> Result<DiscretePrior> {
    ensure!(theta0.is_null(), InvalidInput, "{theta0} is not a null type vector");
    ensure!(!theta1.is_null(), InvalidInput, "{theta1} is not an alternative type vector");
    let half = exact::ratio(1, 2);
    DiscretePrior::new(design, BTreeMap::from([(*theta0, half.clone()), (*theta1, half)]))
}

fn check_balanced(design: Design) -> Result<u32> {
    let (n, n1) = (design.n(), design.n1());
    ensure!(
        n >= 4 && n % 2 == 0 && n1 * 2 == n,
        UnsupportedDesign,
        "construction needs even n >= 4 with n1 = n/2, got n={n}, n1={n1}"
    );
    Ok(n)
}

fn binomial_prior(design: Design, keys: impl Iterator<Item = (u32, TypeCounts)>) -> Result<DiscretePrior> {
    let n = design.n();
    let raw: Vec<(TypeCounts, Rational)> = keys.map(|(k, t)| (t, exact::from_uint(&binomial(n, k)))).collect();
    let total: Rational = raw.iter().map(|(_, w)| w).sum();
    DiscretePrior::new(design, raw.into_iter().map(|(t, w)| (t, w / &total)).collect())
}

/// A prior on nulls and a prior on alternatives with the same outcome
/// marginal. The null prior is `Multinomial(n, (1/2, 1/2, 0, 0))` restricted
/// to `n_at` even when `n1` is odd and odd when `n1` is even; the alternative
/// prior is `Multinomial(n, (0, 0, 1/2, 1/2))` restricted to odd `n_c`.
pub fn equivalent_null_alt_priors(design: Design) -> Result<(DiscretePrior, DiscretePrior)> {
    let n = check_balanced(design)?;
    let at_parity = if design.n1() % 2 == 1 { 0 } else { 1 };
    let pi_a = binomial_prior(
        design,
        (0..=n).filter(|k| k % 2 == at_parity).map(|k| (k, TypeCounts::new(k, n - k, 0, 0))),
    )?;
    let pi_b = binomial_prior(
        design,
        (0..=n).filter(|k| k % 2 == 1).map(|k| (k, TypeCounts::new(0, 0, n - k, k))),
    )?;
    Ok((pi_a, pi_b))
}

/// `c pi_A + (1 - c) pi_B`, whose posterior null probability is `c` at every
/// outcome with positive marginal.
pub fn never_update_prior(design: Design, c: &Rational) -> Result<DiscretePrior> {
    ensure!(
        c.is_positive() && *c < Rational::one(),
        InvalidInput,
        "mixing weight c must lie in (0, 1), got {}",
        exact::format(c)
    );
    let (pi_a, pi_b) = equivalent_null_alt_priors(design)?;
    let one_minus = Rational::one() - c;
    let mut weights = BTreeMap::new();
    for (t, w) in pi_a.weights {
        *weights.entry(t).or_insert_with(Rational::zero) += w * c;
    }
    for (t, w) in pi_b.weights {
        *weights.entry(t).or_insert_with(Rational::zero) += w * &one_minus;
    }
    DiscretePrior::new(design, weights)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeSets {
    /// Outcome supports of the parity-selected nulls `(k, n - k, 0, 0)`.
    pub a: BTreeSet<OutcomeCounts>,
    /// Outcome supports of `(0, 0, n - k, k)` for odd `k`.
    pub b: BTreeSet<OutcomeCounts>,
    /// Grid points of `{0..n/2}^2` with coordinates of different parity when
    /// `n/2` is even and of equal parity when `n/2` is odd.
    pub c: BTreeSet<OutcomeCounts>,
}

/// The three outcome sets for the balanced design of size `n`; errors if
/// they do not coincide.
pub fn lattice_sets(n: u32) -> Result<LatticeSets> {
    ensure!(n >= 4 && n % 2 == 0, UnsupportedDesign, "lattice sets need even n >= 4, got n={n}");
    let h = n / 2;
    let design = Design::new(n, h)?;
    let at_parity = if h % 2 == 0 { 1 } else { 0 };
    let mut a = BTreeSet::new();
    for k in (0..=n).filter(|k| k % 2 == at_parity) {
        a.extend(support(design, &TypeCounts::new(k, n - k, 0, 0))?);
    }
    let mut b = BTreeSet::new();
    for k in (0..=n).filter(|k| k % 2 == 1) {
        b.extend(support(design, &TypeCounts::new(0, 0, n - k, k))?);
    }
    let parity = if h % 2 == 0 { 1 } else { 0 };
    let c = (0..=h)
        .flat_map(|x| (0..=h).map(move |y| OutcomeCounts::new(x, y)))
        .filter(|y| (y.y_t + y.y_u) % 2 == parity)
        .collect();
    let sets = LatticeSets { a, b, c };
    ensure!(
        sets.a == sets.b && sets.b == sets.c,
        Inconsistent,
        "lattice sets differ at n={n}"
    );
    Ok(sets)
}
