//! Locating an alternative against which a level-`alpha` test is powerless.

use num_traits::ToPrimitive;
use serde::Serialize;

use super::{check_space, power_on, size_of, TestFunction, TOL_GAP};
use crate::bayes::equivalent_null_alt_priors;
use crate::error::{ensure, Result};
use crate::population::{TypeCounts, TypeSpace};

#[derive(Debug, Clone, Serialize)]
pub struct TrivialPower {
    /// Alternative in the support of the alternative prior with least power.
    pub theta_weak: TypeCounts,
    pub power: f64,
    /// Power averaged over the alternative prior; at most the size.
    pub average_power: f64,
}

/// Averages power over the alternative prior whose outcome marginal matches
/// a null prior, so the average cannot exceed the size; returns the weakest
/// alternative in its support.
pub fn trivial_power_check(space: &TypeSpace, delta: &TestFunction, alpha: f64) -> Result<TrivialPower> {
    check_space(space, delta)?;
    let (_, pi_b) = equivalent_null_alt_priors(space.design())?;
    let size = size_of(space, delta)?;
    ensure!(
        size <= alpha + TOL_GAP,
        InvalidInput,
        "test has size {size}, above the level {alpha}"
    );
    let active = delta.active();
    let mut average = 0.0;
    let mut weakest: Option<(TypeCounts, f64)> = None;
    for (t, w) in pi_b.weights() {
        let p = power_on(space.dense(space.index_of(t)?), delta.values(), &active);
        average += w.to_f64().unwrap_or(f64::NAN) * p;
        if weakest.is_none_or(|(_, q)| p < q) {
            weakest = Some((*t, p));
        }
    }
    let (theta_weak, power) = weakest.expect("alternative prior is non-empty");
    Ok(TrivialPower {
        theta_weak,
        power,
        average_power: average,
    })
}
