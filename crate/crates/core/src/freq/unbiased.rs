//! Unbiased tests and upper bounds on the power of any unbiased test.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{check_alpha, TestFunction};
use crate::error::{ensure, Result};
use crate::exact::{self, Rational};
use crate::identification::equivalent_null_shares;
use crate::lp::{self, LpProblem, LpSolution, Sense};
use crate::population::{
    enumerate_compositions, multinomial_pmf, pmf, Design, OutcomeCounts, OutcomePmf, TypeCounts, TypeShares,
    TypeSpace,
};

/// Largest double not above `target`.
fn round_down(target: &Rational) -> Result<f64> {
    let mut v = exact::to_f64(target);
    while exact::from_f64(v)? > *target {
        v = v.next_down();
    }
    Ok(v)
}

fn zero() -> Rational {
    Rational::zero()
}

/// `alpha` everywhere except `0` at the two corner outcomes only nulls can
/// reach, plus the largest size-preserving `epsilon` at `(n1 - 1, 1)`.
pub fn unbiased_test(space: &TypeSpace, alpha: f64) -> Result<TestFunction> {
    let design = space.design();
    let (n1, n0) = (design.n1(), design.n0());
    ensure!(
        n1 == n0 && n1 >= 2,
        UnsupportedDesign,
        "unbiased test needs equal arms of at least two units, got n1={n1}, n0={n0}"
    );
    check_alpha(alpha)?;
    let a = exact::from_f64(alpha)?;
    let corner_t = design.grid_index(OutcomeCounts::new(n1, 0));
    let corner_u = design.grid_index(OutcomeCounts::new(0, n0));
    let bump = design.grid_index(OutcomeCounts::new(n1 - 1, 1));

    let mut eps = Rational::from_integer(1.into()) - &a;
    for &t in space.nulls() {
        let f = space.pmf(t);
        let hit = &f.numerators()[bump];
        if hit.is_zero() {
            continue;
        }
        let corners: BigUint = &f.numerators()[corner_t] + &f.numerators()[corner_u];
        let e = &a * exact::from_uint(&corners) / exact::from_uint(hit);
        if e < eps {
            eps = e;
        }
    }
    let mut values = vec![alpha; design.grid_len()];
    values[corner_t] = 0.0;
    values[corner_u] = 0.0;
    values[bump] = round_down(&(&a + &eps))?;
    TestFunction::new(design, values)
}

/// `pi(t; theta/n) * n^n` as an integer for every `t` in `types`.
fn centred_weights<'a>(theta: &TypeCounts, types: impl Iterator<Item = &'a TypeCounts>) -> Vec<(TypeCounts, BigUint)> {
    let centre = theta.as_array();
    types
        .filter(|t| (0..4).all(|k| centre[k] > 0 || t.as_array()[k] == 0))
        .map(|t| {
            let arr = t.as_array();
            let mut w = crate::combinatorics::multinomial(&arr);
            for k in 0..4 {
                w *= BigUint::from(centre[k]).pow(arr[k]);
            }
            (*t, w)
        })
        .collect()
}

/// `pi(theta; theta/n)`, the multinomial mass of an alternative at its own shares.
pub fn centre_mass(theta: &TypeCounts) -> Rational {
    multinomial_pmf(theta.total(), &TypeShares::from_counts(theta), theta)
        .expect("counts sum to their own total")
}

#[derive(Debug, Clone, Serialize)]
pub struct UnbiasedBound {
    pub theta: TypeCounts,
    /// `alpha (1 + pi(nulls; theta/n) / pi(theta; theta/n))`, rounded.
    pub dual_bound: f64,
    #[serde(with = "exact::serde_rational")]
    pub dual_bound_exact: Rational,
    /// `alpha (1 + 3.125 n^1.5 (1 - v)^n)` with `v = min(d, c) / n`.
    pub closed_form: f64,
}

pub fn unbiased_power_bound(design: Design, theta: &TypeCounts, alpha: f64) -> Result<UnbiasedBound> {
    design.check_theta(theta)?;
    let n = design.n();
    ensure!(n >= 4, UnsupportedDesign, "unbiased power bound needs n >= 4, got n={n}");
    ensure!(
        !theta.is_null(),
        InvalidInput,
        "unbiased power bound needs an alternative, but {theta} satisfies monotonicity"
    );
    check_alpha(alpha)?;
    let types = enumerate_compositions(n);
    let weights = centred_weights(theta, types.iter().filter(|t| t.is_null()));
    let null_mass: BigUint = weights.into_iter().map(|(_, w)| w).sum();
    let own = centred_weights(theta, std::iter::once(theta)).remove(0).1;
    let a = exact::from_f64(alpha)?;
    let exact_bound = &a * (Rational::from_integer(1.into()) + exact::from_uint(&null_mass) / exact::from_uint(&own));
    let v = theta.d.min(theta.c) as f64 / n as f64;
    let nf = n as f64;
    let closed_form = alpha * (1.0 + 3.125 * nf.powf(1.5) * (nf * (-v).ln_1p()).exp());
    Ok(UnbiasedBound {
        theta: *theta,
        dual_bound: exact::to_f64(&exact_bound),
        dual_bound_exact: exact_bound,
        closed_form,
    })
}

/// Dual multipliers certifying the unbiased power bound: `lambda(t) =
/// pi(t; p0) / pi(theta; p1)` on nulls and `mu(t) = pi(t; p1) / pi(theta; p1)`
/// on the other alternatives, where `p1 = theta/n` and `p0` is the null
/// with the same outcome distribution as `p1`.
pub fn null_alternative_multipliers(
    design: Design,
    theta: &TypeCounts,
) -> Result<(BTreeMap<TypeCounts, Rational>, BTreeMap<TypeCounts, Rational>)> {
    design.check_theta(theta)?;
    ensure!(
        !theta.is_null(),
        InvalidInput,
        "multipliers are built around an alternative, but {theta} satisfies monotonicity"
    );
    let n = design.n();
    let p1 = TypeShares::from_counts(theta);
    let p0 = equivalent_null_shares(&p1);
    let scale = centre_mass(theta);
    let mut lambda = BTreeMap::new();
    let mut mu = BTreeMap::new();
    for t in enumerate_compositions(n) {
        if t.is_null() {
            let w = multinomial_pmf(n, &p0, &t)?;
            if !w.is_zero() {
                lambda.insert(t, w / &scale);
            }
        } else if t != *theta {
            let w = multinomial_pmf(n, &p1, &t)?;
            if !w.is_zero() {
                mu.insert(t, w / &scale);
            }
        }
    }
    Ok((lambda, mu))
}

/// Dual objective of the unbiased-power LP at `(lambda, mu)`:
/// `alpha (sum lambda - sum mu) + sum_y [f_theta - sum lambda f + sum mu f]_+`.
pub fn dual_bound_value(
    design: Design,
    theta: &TypeCounts,
    alpha: &Rational,
    lambda: &BTreeMap<TypeCounts, Rational>,
    mu: &BTreeMap<TypeCounts, Rational>,
) -> Result<Rational> {
    design.check_theta(theta)?;
    let mut residual: Vec<Rational> = pmf(design, theta)?.masses();
    let mut value = zero();
    let mut fold = |weights: &BTreeMap<TypeCounts, Rational>, null: bool, sign: i32| -> Result<()> {
        for (t, w) in weights {
            design.check_theta(t)?;
            ensure!(!w.is_negative(), InvalidInput, "dual weight at {t} is negative");
            ensure!(
                t.is_null() == null,
                InvalidInput,
                "dual weight at {t} is attached to the wrong hypothesis"
            );
            if w.is_zero() {
                continue;
            }
            let f: OutcomePmf = pmf(design, t)?;
            for i in f.support_indices() {
                let m = f.mass_at(i) * w;
                if sign > 0 {
                    residual[i] += m;
                } else {
                    residual[i] -= m;
                }
            }
            if sign > 0 {
                value -= alpha * w;
            } else {
                value += alpha * w;
            }
        }
        Ok(())
    };
    fold(lambda, true, -1)?;
    fold(mu, false, 1)?;
    for r in residual {
        if r.is_positive() {
            value += r;
        }
    }
    Ok(value)
}

/// Maximises power at `theta` over tests with size at most `alpha` and power
/// at least `alpha` at every other alternative.
pub fn unbiased_power_lp(space: &TypeSpace, theta: &TypeCounts, alpha: f64) -> Result<LpSolution<f64>> {
    let idx = space.index_of(theta)?;
    ensure!(
        !theta.is_null(),
        InvalidInput,
        "unbiased power LP needs an alternative, but {theta} satisfies monotonicity"
    );
    check_alpha(alpha)?;
    let mut problem = LpProblem::new(space.dense(idx).to_vec())?;
    for &t in space.nulls() {
        problem.add_constraint(space.dense(t).to_vec(), Sense::Le, alpha)?;
    }
    for &t in space.alternatives() {
        if t != idx {
            problem.add_constraint(space.dense(t).to_vec(), Sense::Ge, alpha)?;
        }
    }
    lp::solve(&problem)
}
