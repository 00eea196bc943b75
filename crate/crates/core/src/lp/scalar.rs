use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Arithmetic the simplex needs. Implemented for `f64` (with tolerances) and
/// for exact rationals (all tolerances zero).
pub trait LpScalar: Clone + PartialOrd + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn from_f64(x: f64) -> Self;

    /// Smallest pivot magnitude accepted.
    fn pivot_tol() -> Self;
    /// Reduced costs within this of zero count as optimal.
    fn dual_tol() -> Self;
    /// Bound violations within this count as feasible.
    fn primal_tol() -> Self;
    /// Smallest pivot, relative to the largest eligible one, that Bland's
    /// rule may still choose in the ratio test.
    fn harris_share() -> Self;
    /// Bound on primal infeasibility of a certified solution.
    fn feas_tol() -> Self;
    /// Bound on the duality gap of a certified solution.
    fn gap_tol() -> Self;

    /// Factor bringing a row with largest magnitude `max_abs` near 1.
    fn row_scale(max_abs: &Self) -> Self;

    /// `dst += a * src`, skipped entirely when `a` is zero.
    fn axpy(dst: &mut [Self], a: &Self, src: &[Self]) {
        if a.is_zero() {
            return;
        }
        for (d, s) in dst.iter_mut().zip(src) {
            if !s.is_zero() {
                *d = d.add(&a.mul(s));
            }
        }
    }

    fn max(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn pivot_tol() -> Self {
        1e-11
    }
    fn dual_tol() -> Self {
        1e-10
    }
    fn primal_tol() -> Self {
        1e-11
    }
    fn harris_share() -> Self {
        0.1
    }
    fn feas_tol() -> Self {
        1e-9
    }
    fn gap_tol() -> Self {
        1e-8
    }
    fn row_scale(max_abs: &Self) -> Self {
        if *max_abs == 0.0 {
            1.0
        } else {
            // Powers of two keep the scaled coefficients exact.
            (-max_abs.log2().round()).exp2()
        }
    }
    fn axpy(dst: &mut [Self], a: &Self, src: &[Self]) {
        if *a == 0.0 {
            return;
        }
        for (d, s) in dst.iter_mut().zip(src) {
            *d += a * s;
        }
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite")
    }
    fn pivot_tol() -> Self {
        Zero::zero()
    }
    fn dual_tol() -> Self {
        Zero::zero()
    }
    fn primal_tol() -> Self {
        Zero::zero()
    }
    fn harris_share() -> Self {
        Zero::zero()
    }
    fn feas_tol() -> Self {
        Zero::zero()
    }
    fn gap_tol() -> Self {
        Zero::zero()
    }
    fn row_scale(_: &Self) -> Self {
        num_traits::One::one()
    }
}
