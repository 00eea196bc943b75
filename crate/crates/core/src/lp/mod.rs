//! Dense linear programs over the unit box, solved by a bounded-variable
//! primal simplex that returns a certified primal/dual pair.
//!
//! Problems have the form `maximize c.x` subject to rows `a_i.x <= b_i` or
//! `a_i.x >= b_i` and `0 <= x_j <= 1` for every variable. Dual multipliers
//! are reported non-negative: `lambda_i` for `<=` rows and `mu_i` for `>=`
//! rows, so that for every feasible `x`
//!
//! ```text
//! c.x <= sum_le lambda_i b_i - sum_ge mu_i b_i
//!        + sum_j [c_j - sum_le lambda_i a_ij + sum_ge mu_i a_ij]_+
//! ```
//!
//! The solver is generic over [`LpScalar`]; `f64` is the fast path and
//! `BigRational` gives an exact (slow) mode for spot verification.

mod scalar;
mod simplex;

use serde::Serialize;

use crate::error::{ensure, Result};

pub use scalar::LpScalar;
pub use simplex::{solve, solve_with, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpProblem<T = f64> {
    objective: Vec<T>,
    rows: Vec<Vec<T>>,
    senses: Vec<Sense>,
    rhs: Vec<T>,
}

impl<T: LpScalar> LpProblem<T> {
    pub fn new(objective: Vec<T>) -> Result<Self> {
        ensure!(
            objective.iter().all(LpScalar::is_finite),
            InvalidInput,
            "objective has non-finite coefficients"
        );
        Ok(LpProblem {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
        })
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, sense: Sense, rhs: T) -> Result<()> {
        ensure!(
            coeffs.len() == self.objective.len(),
            InvalidInput,
            "constraint has {} coefficients but the objective has {}",
            coeffs.len(),
            self.objective.len()
        );
        ensure!(
            coeffs.iter().all(LpScalar::is_finite) && rhs.is_finite(),
            InvalidInput,
            "constraint has non-finite coefficients"
        );
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn sense(&self, i: usize) -> Sense {
        self.senses[i]
    }

    pub fn rhs(&self, i: usize) -> &T {
        &self.rhs[i]
    }

    /// Value of the dual objective for non-negative multipliers (one per row,
    /// interpreted as `lambda` on `<=` rows and `mu` on `>=` rows). By weak
    /// duality it bounds the optimum from above.
    pub fn dual_value(&self, multipliers: &[T]) -> Result<T> {
        ensure!(
            multipliers.len() == self.num_constraints(),
            InvalidInput,
            "expected {} multipliers, got {}",
            self.num_constraints(),
            multipliers.len()
        );
        ensure!(
            multipliers.iter().all(|m| *m >= T::zero()),
            InvalidInput,
            "dual multipliers must be non-negative"
        );
        let mut value = T::zero();
        let mut reduced = self.objective.clone();
        for (i, m) in multipliers.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let signed = match self.senses[i] {
                Sense::Le => m.clone(),
                Sense::Ge => m.neg(),
            };
            value = value.add(&signed.mul(&self.rhs[i]));
            T::axpy(&mut reduced, &signed.neg(), &self.rows[i]);
        }
        for r in reduced {
            if r > T::zero() {
                value = value.add(&r);
            }
        }
        Ok(value)
    }

    /// Largest violation of any row or box bound at `x`.
    pub fn primal_infeasibility(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for v in x {
            worst = T::max(worst, v.neg());
            worst = T::max(worst, v.sub(&T::one()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act = dot(row, x);
            let viol = match self.senses[i] {
                Sense::Le => act.sub(&self.rhs[i]),
                Sense::Ge => self.rhs[i].sub(&act),
            };
            worst = T::max(worst, viol);
        }
        worst
    }
}

pub(crate) fn dot<T: LpScalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(T::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Checks attached to every returned solution.
#[derive(Debug, Clone)]
pub struct Certificate<T> {
    pub primal_infeasibility: T,
    pub dual_value: T,
    pub duality_gap: T,
    /// Largest `multiplier * |slack|` over rows.
    pub complementarity: T,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T = f64> {
    pub status: LpStatus,
    pub primal: Vec<T>,
    pub objective: T,
    /// Non-negative multipliers per constraint. For an infeasible problem
    /// these are the phase-one (Farkas) multipliers.
    pub duals: Vec<T>,
    pub iterations: usize,
    pub certificate: Certificate<T>,
}
