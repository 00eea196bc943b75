//! Frequentist tests of the monotonicity null `min(n_d, n_c) = 0`.
//!
//! A test is a rejection probability for every point of the outcome grid.
//! Power at a type vector is the expectation of the test under its outcome
//! pmf; size is the largest power over the null.

mod mp;
mod scan;
mod trivial;
mod unbiased;
mod wap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::exact::{self, Rational};
use crate::population::{Design, OutcomeCounts, OutcomePmf, TypeCounts, TypeSpace};

pub use mp::{mp_lp, mp_test, mp_test_exact, ExactMpTest};
pub use scan::{power_scan, power_scan_streaming};
pub use support_test::{support_test, SupportTest};
pub use trivial::{trivial_power_check, TrivialPower};
pub use unbiased::{
    dual_bound_value, null_alternative_multipliers, unbiased_power_bound, unbiased_power_lp,
    unbiased_test, UnbiasedBound, centre_mass,
};
pub use wap::{wap, wap_bound, wap_factor, wap_weights};
use wap::wap_with_weights;

/// Default tolerance for size and power invariants.
pub const TOL_GAP: f64 = 1e-8;

/// Rejection probability `delta(y)` in `[0, 1]` for every outcome on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    design: Design,
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(design: Design, values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.len() == design.grid_len(),
            InvalidInput,
            "test function needs {} values, got {}",
            design.grid_len(),
            values.len()
        );
        ensure!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            InvalidInput,
            "rejection probabilities must lie in [0, 1]"
        );
        Ok(TestFunction { design, values })
    }

    pub fn constant(design: Design, level: f64) -> Result<Self> {
        Self::new(design, vec![level; design.grid_len()])
    }

    pub fn from_fn(design: Design, f: impl Fn(OutcomeCounts) -> f64) -> Result<Self> {
        Self::new(design, design.outcomes().map(f).collect())
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, y: OutcomeCounts) -> f64 {
        self.values[self.design.grid_index(y)]
    }

    /// Grid indices where the test rejects with positive probability.
    pub fn active(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] > 0.0).collect()
    }
}

/// Outcome of building and evaluating a test against one alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub theta: TypeCounts,
    pub power: f64,
    pub wap: f64,
    pub size: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure!(
        alpha > 0.0 && alpha < 1.0,
        InvalidInput,
        "alpha must lie in (0, 1), got {alpha}"
    );
    Ok(())
}

fn check_space(space: &TypeSpace, delta: &TestFunction) -> Result<()> {
    ensure!(
        space.design() == delta.design(),
        InvalidInput,
        "test built for {:?} evaluated on {:?}",
        delta.design(),
        space.design()
    );
    Ok(())
}

pub(crate) fn power_on(dense: &[f64], delta: &[f64], active: &[usize]) -> f64 {
    active.iter().map(|&i| dense[i] * delta[i]).sum()
}

/// `E_theta[delta(Y)]` from the rounded pmf.
pub fn power_at(space: &TypeSpace, delta: &TestFunction, theta: &TypeCounts) -> Result<f64> {
    check_space(space, delta)?;
    let idx = space.index_of(theta)?;
    Ok(power_on(space.dense(idx), delta.values(), &delta.active()))
}

/// Largest rejection probability over the null.
pub fn size_of(space: &TypeSpace, delta: &TestFunction) -> Result<f64> {
    check_space(space, delta)?;
    let active = delta.active();
    Ok(space
        .nulls()
        .iter()
        .map(|&i| power_on(space.dense(i), delta.values(), &active))
        .fold(0.0, f64::max))
}

/// Exact `E_theta[delta(Y)]`, reading each double in `delta` as the exact
/// dyadic rational it represents.
pub fn power_at_exact(delta: &TestFunction, theta: &TypeCounts) -> Result<Rational> {
    let f = crate::population::pmf(delta.design(), theta)?;
    exact_expectation(&f, delta)
}

pub(crate) fn exact_expectation(f: &OutcomePmf, delta: &TestFunction) -> Result<Rational> {
    let mut acc = Rational::from_integer(BigInt::from(0));
    for i in f.support_indices() {
        let v = delta.values()[i];
        if v == 0.0 {
            continue;
        }
        acc += exact::from_f64(v)? * exact::from_uint(&f.numerators()[i]);
    }
    Ok(acc / BigRational::from_integer(BigInt::from(f.denominator().clone())))
}

/// Exact size over the null.
pub fn size_of_exact(space: &TypeSpace, delta: &TestFunction) -> Result<Rational> {
    check_space(space, delta)?;
    let mut best = Rational::from_integer(BigInt::from(0));
    for &i in space.nulls() {
        let p = exact_expectation(space.pmf(i), delta)?;
        if p > best {
            best = p;
        }
    }
    Ok(best)
}
