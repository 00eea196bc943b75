//! Most powerful level-`alpha` test against a single alternative.
//!
//! The LP maximises `f_theta1 . delta` subject to `f_t . delta <= alpha` for
//! every null `t` and `0 <= delta <= 1`. Outcomes outside the support of
//! `f_theta1` add nothing to the objective and only tighten the null rows,
//! so the LP is posed on the support columns with `delta = 0` elsewhere.
//! Null rows that vanish on the support are dropped.

use num_bigint::BigInt;
use serde::Serialize;

use super::{check_alpha, power_on, size_of, wap_with_weights, wap_weights, PowerReport, TestFunction};
use crate::error::{ensure, Error, Result};
use crate::exact::{self, Rational};
use crate::lp::{self, LpProblem, LpStatus, Sense};
use crate::population::{TypeCounts, TypeSpace};

/// The reduced MP LP together with the grid index of each column.
pub fn mp_lp(space: &TypeSpace, theta1: &TypeCounts, alpha: f64) -> Result<(LpProblem<f64>, Vec<usize>)> {
    let target = check_target(space, theta1, alpha)?;
    let columns = space.pmf(target).support_indices();
    let dense = space.dense(target);
    let mut problem = LpProblem::new(columns.iter().map(|&i| dense[i]).collect())?;
    for &t in space.nulls() {
        let f = space.dense(t);
        let row: Vec<f64> = columns.iter().map(|&i| f[i]).collect();
        if row.iter().any(|&v| v != 0.0) {
            problem.add_constraint(row, Sense::Le, alpha)?;
        }
    }
    Ok((problem, columns))
}

fn check_target(space: &TypeSpace, theta1: &TypeCounts, alpha: f64) -> Result<usize> {
    let idx = space.index_of(theta1)?;
    ensure!(
        !theta1.is_null(),
        InvalidInput,
        "most powerful test needs an alternative, but {theta1} satisfies monotonicity"
    );
    check_alpha(alpha)?;
    Ok(idx)
}

pub(crate) fn mp_delta(space: &TypeSpace, theta1: &TypeCounts, alpha: f64) -> Result<TestFunction> {
    let (problem, columns) = mp_lp(space, theta1, alpha)?;
    let solution = lp::solve(&problem)?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::SolverFailure(format!(
            "MP LP at {theta1} reported infeasible, but delta = 0 is feasible"
        )));
    }
    let mut values = vec![0.0; space.design().grid_len()];
    for (&i, &x) in columns.iter().zip(&solution.primal) {
        values[i] = x.clamp(0.0, 1.0);
    }
    TestFunction::new(space.design(), values)
}

pub(crate) fn report(space: &TypeSpace, delta: &TestFunction, theta: &TypeCounts) -> Result<PowerReport> {
    let idx = space.index_of(theta)?;
    let power = power_on(space.dense(idx), delta.values(), &delta.active());
    let weights = wap_weights(space, theta)?;
    Ok(PowerReport {
        theta: *theta,
        power,
        wap: wap_with_weights(space, delta, &weights),
        size: size_of(space, delta)?,
    })
}

/// MP test at `theta1` with its power, WAP around `theta1`, and size.
pub fn mp_test(space: &TypeSpace, theta1: &TypeCounts, alpha: f64) -> Result<(TestFunction, PowerReport)> {
    let delta = mp_delta(space, theta1, alpha)?;
    let report = report(space, &delta, theta1)?;
    Ok((delta, report))
}

/// MP test solved in exact rational arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct ExactMpTest {
    pub theta: TypeCounts,
    #[serde(with = "exact::serde_rational")]
    pub alpha: Rational,
    /// Rejection probability per grid point.
    #[serde(serialize_with = "serialize_rationals")]
    pub values: Vec<Rational>,
    #[serde(with = "exact::serde_rational")]
    pub power: Rational,
    #[serde(with = "exact::serde_rational")]
    pub size: Rational,
}

fn serialize_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(exact::format))
}

/// Same LP as [`mp_test`] with exact pmf masses and an exact level. Slow;
/// meant for spot checks of the floating-point solver.
pub fn mp_test_exact(space: &TypeSpace, theta1: &TypeCounts, alpha: &Rational) -> Result<ExactMpTest> {
    let zero = Rational::from_integer(BigInt::from(0));
    let one = Rational::from_integer(BigInt::from(1));
    ensure!(
        *alpha > zero && *alpha < one,
        InvalidInput,
        "alpha must lie in (0, 1), got {}",
        exact::format(alpha)
    );
    let target = check_target(space, theta1, 0.5)?;
    let columns = space.pmf(target).support_indices();
    let f1 = space.pmf(target);
    let mut problem = LpProblem::new(columns.iter().map(|&i| f1.mass_at(i)).collect())?;
    for &t in space.nulls() {
        let f = space.pmf(t);
        if columns.iter().all(|&i| f.numerators()[i] == num_bigint::BigUint::from(0u32)) {
            continue;
        }
        problem.add_constraint(columns.iter().map(|&i| f.mass_at(i)).collect(), Sense::Le, alpha.clone())?;
    }
    let solution = lp::solve(&problem)?;
    ensure!(
        solution.status == LpStatus::Optimal,
        SolverFailure,
        "exact MP LP at {theta1} reported infeasible"
    );
    let mut values = vec![zero.clone(); space.design().grid_len()];
    for (&i, x) in columns.iter().zip(solution.primal) {
        values[i] = x;
    }
    let mut size = zero;
    for &t in space.nulls() {
        let f = space.pmf(t);
        let p: Rational = columns.iter().map(|&i| f.mass_at(i) * &values[i]).sum();
        if p > size {
            size = p;
        }
    }
    Ok(ExactMpTest {
        theta: *theta1,
        alpha: alpha.clone(),
        values,
        power: solution.objective,
        size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::Design;

    #[test]
    fn small_design_beats_level() {
        let space = TypeSpace::new(Design::new(4, 2).unwrap());
        let theta = TypeCounts::new(0, 0, 1, 3);
        let (delta, rep) = mp_test(&space, &theta, 0.5).unwrap();
        assert!(rep.power > 0.5);
        assert!(rep.size <= 0.5 + 1e-9);
        assert!((super::super::power_at(&space, &delta, &theta).unwrap() - rep.power).abs() < 1e-15);
    }

    #[test]
    fn exact_and_float_agree() {
        let space = TypeSpace::new(Design::new(6, 3).unwrap());
        for theta in [TypeCounts::new(0, 0, 2, 4), TypeCounts::new(1, 1, 2, 2), TypeCounts::new(0, 2, 1, 3)] {
            let (_, rep) = mp_test(&space, &theta, 0.25).unwrap();
            let ex = mp_test_exact(&space, &theta, &exact::ratio(1, 4)).unwrap();
            assert!((rep.power - exact::to_f64(&ex.power)).abs() < 1e-9);
            assert!(ex.size <= exact::ratio(1, 4));
        }
    }

    #[test]
    fn rejects_null_target() {
        let space = TypeSpace::new(Design::new(4, 2).unwrap());
        assert!(mp_test(&space, &TypeCounts::new(2, 2, 0, 0), 0.05).is_err());
        assert!(mp_test(&space, &TypeCounts::new(0, 0, 1, 3), 1.0).is_err());
    }
}
