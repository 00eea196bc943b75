//! The fixed experimental frame: designs, type counts, and the exact
//! distribution of the observed outcome counts under complete randomization.
//!
//! Unit types are always ordered `(at, nt, d, c)`: always-takers
//! `(y(1), y(0)) = (1, 1)`, never-takers `(0, 0)`, defiers `(0, 1)` and
//! compliers `(1, 0)`.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, multinomial, pascal, pascal_u128};
use crate::error::{ensure, Error, Result};
use crate::exact::{self, Rational};

/// Population size and number treated in a completely randomized experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Design {
    n: u32,
    n1: u32,
}

impl Design {
    /// Largest population accepted by [`Design::new`].
    pub const DEFAULT_MAX_N: u32 = 200;

    pub fn new(n: u32, n1: u32) -> Result<Self> {
        Self::with_max_n(n, n1, Self::DEFAULT_MAX_N)
    }

    pub fn with_max_n(n: u32, n1: u32, max_n: u32) -> Result<Self> {
        ensure!(n >= 2, InvalidInput, "population size n={n} must be at least 2");
        ensure!(
            n1 >= 1 && n1 < n,
            InvalidInput,
            "number treated n1={n1} must satisfy 1 <= n1 <= n-1 = {}",
            n - 1
        );
        ensure!(
            n <= max_n,
            InvalidInput,
            "population size n={n} exceeds the configured cap {max_n}"
        );
        Ok(Design { n, n1 })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n1(&self) -> u32 {
        self.n1
    }

    pub fn n0(&self) -> u32 {
        self.n - self.n1
    }

    /// Number of points of the outcome grid `{0..n1} x {0..n0}`.
    pub fn grid_len(&self) -> usize {
        (self.n1 as usize + 1) * (self.n0() as usize + 1)
    }

    /// Row-major position of `y` on the grid (`y_t` major).
    pub fn grid_index(&self, y: OutcomeCounts) -> usize {
        y.y_t as usize * (self.n0() as usize + 1) + y.y_u as usize
    }

    pub fn outcome_at(&self, idx: usize) -> OutcomeCounts {
        let w = self.n0() as usize + 1;
        OutcomeCounts {
            y_t: (idx / w) as u32,
            y_u: (idx % w) as u32,
        }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = OutcomeCounts> + '_ {
        (0..self.grid_len()).map(move |i| self.outcome_at(i))
    }

    pub fn contains(&self, y: OutcomeCounts) -> bool {
        y.y_t <= self.n1 && y.y_u <= self.n0()
    }

    /// `C(n, n1)`, the number of equally likely assignments.
    pub fn assignments(&self) -> BigUint {
        binomial(self.n, self.n1)
    }

    pub fn check_theta(&self, theta: &TypeCounts) -> Result<()> {
        ensure!(
            theta.total() == self.n,
            InvalidInput,
            "type counts {theta} sum to {} but the design has n={}",
            theta.total(),
            self.n
        );
        Ok(())
    }

    pub fn check_outcome(&self, y: OutcomeCounts) -> Result<()> {
        ensure!(
            self.contains(y),
            InvalidInput,
            "outcome {y} lies outside the grid {{0..{}}} x {{0..{}}}",
            self.n1,
            self.n0()
        );
        Ok(())
    }
}

/// Counts of always-takers, never-takers, defiers and compliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeCounts {
    pub at: u32,
    pub nt: u32,
    pub d: u32,
    pub c: u32,
}

impl TypeCounts {
    pub const fn new(at: u32, nt: u32, d: u32, c: u32) -> Self {
        TypeCounts { at, nt, d, c }
    }

    pub fn from_array(a: [u32; 4]) -> Self {
        TypeCounts::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.at, self.nt, self.d, self.c]
    }

    pub fn total(&self) -> u32 {
        self.at + self.nt + self.d + self.c
    }

    /// Membership in the monotonicity null: defiers and compliers do not coexist.
    pub fn is_null(&self) -> bool {
        self.d.min(self.c) == 0
    }

    /// Size of the monotonicity violation, `min(d, c) / n`.
    pub fn violation(&self) -> Rational {
        exact::ratio(self.d.min(self.c) as i64, self.total() as i64)
    }
}

impl fmt::Display for TypeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.at, self.nt, self.d, self.c)
    }
}

impl FromStr for TypeCounts {
    type Err = Error;

    /// Accepts `"at,nt,d,c"`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        ensure!(
            parts.len() == 4,
            InvalidInput,
            "type counts must be four comma-separated integers (at,nt,d,c), got {s:?}"
        );
        let mut a = [0u32; 4];
        for (slot, p) in a.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad type count {p:?} in {s:?}")))?;
        }
        Ok(TypeCounts::from_array(a))
    }
}

/// Observed counts `(Y_T, Y_U)`: treated units with `Y = 1` and untreated
/// units with `Y = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub y_t: u32,
    pub y_u: u32,
}

impl OutcomeCounts {
    pub const fn new(y_t: u32, y_u: u32) -> Self {
        OutcomeCounts { y_t, y_u }
    }
}

impl fmt::Display for OutcomeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.y_t, self.y_u)
    }
}

/// Exact distribution of `(Y_T, Y_U)` over the full outcome grid, stored as
/// integer numerators over one common denominator.
#[derive(Debug, Clone)]
pub struct OutcomePmf {
    design: Design,
    numerators: Vec<BigUint>,
    denominator: BigUint,
}

impl OutcomePmf {
    /// Builds a pmf from grid-ordered numerators; they must sum to `denominator`.
    pub fn from_counts(design: Design, numerators: Vec<BigUint>, denominator: BigUint) -> Result<Self> {
        ensure!(
            numerators.len() == design.grid_len(),
            InvalidInput,
            "expected {} grid masses, got {}",
            design.grid_len(),
            numerators.len()
        );
        ensure!(!denominator.is_zero(), InvalidInput, "zero denominator");
        let total: BigUint = numerators.iter().sum();
        ensure!(
            total == denominator,
            InvalidInput,
            "masses sum to {total}/{denominator}, not 1"
        );
        Ok(OutcomePmf {
            design,
            numerators,
            denominator,
        })
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn mass(&self, y: OutcomeCounts) -> Rational {
        if !self.design.contains(y) {
            return Rational::zero();
        }
        self.mass_at(self.design.grid_index(y))
    }

    pub fn mass_at(&self, idx: usize) -> Rational {
        BigRational::new(
            BigInt::from(self.numerators[idx].clone()),
            BigInt::from(self.denominator.clone()),
        )
    }

    pub fn masses(&self) -> Vec<Rational> {
        (0..self.numerators.len()).map(|i| self.mass_at(i)).collect()
    }

    /// Masses rounded once to the nearest double.
    pub fn to_f64(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .map(|a| exact::uint_ratio_f64(a, &self.denominator))
            .collect()
    }

    pub fn support(&self) -> BTreeSet<OutcomeCounts> {
        self.support_indices()
            .into_iter()
            .map(|i| self.design.outcome_at(i))
            .collect()
    }

    pub fn support_indices(&self) -> Vec<usize> {
        self.numerators
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// Exact `sum_y weight(y) f(y)`.
    pub fn expectation(&self, weight: impl Fn(OutcomeCounts) -> BigInt) -> Rational {
        let num: BigInt = self
            .numerators
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| weight(self.design.outcome_at(i)) * BigInt::from(a.clone()))
            .sum();
        BigRational::new(num, BigInt::from(self.denominator.clone()))
    }

    /// Total variation distance, computed exactly and rounded once.
    pub fn total_variation(&self, other: &OutcomePmf) -> Result<f64> {
        ensure!(
            self.design == other.design,
            InvalidInput,
            "cannot compare pmfs over different designs"
        );
        let mut acc = BigInt::zero();
        let da = BigInt::from(self.denominator.clone());
        let db = BigInt::from(other.denominator.clone());
        for (a, b) in self.numerators.iter().zip(&other.numerators) {
            let d = BigInt::from(a.clone()) * &db - BigInt::from(b.clone()) * &da;
            acc += d.abs();
        }
        let tv = BigRational::new(acc, da * db * 2);
        Ok(exact::to_f64(&tv))
    }
}

impl PartialEq for OutcomePmf {
    fn eq(&self, other: &Self) -> bool {
        if self.design != other.design {
            return false;
        }
        if self.denominator == other.denominator {
            return self.numerators == other.numerators;
        }
        self.numerators
            .iter()
            .zip(&other.numerators)
            .all(|(a, b)| a * &other.denominator == b * &self.denominator)
    }
}

impl Eq for OutcomePmf {}

/// Superpopulation type shares `(p_at, p_nt, p_d, p_c)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeShares {
    #[serde(with = "exact::serde_rational")]
    pub at: Rational,
    #[serde(with = "exact::serde_rational")]
    pub nt: Rational,
    #[serde(with = "exact::serde_rational")]
    pub d: Rational,
    #[serde(with = "exact::serde_rational")]
    pub c: Rational,
}

impl TypeShares {
    pub fn new(at: Rational, nt: Rational, d: Rational, c: Rational) -> Result<Self> {
        let shares = TypeShares { at, nt, d, c };
        ensure!(
            shares.as_array().iter().all(|p| !p.is_negative()),
            InvalidInput,
            "type shares must be non-negative"
        );
        let total: Rational = shares.as_array().into_iter().sum();
        ensure!(
            total.is_one(),
            InvalidInput,
            "type shares sum to {}, not 1",
            exact::format(&total)
        );
        Ok(shares)
    }

    /// Shares `theta / n`, the centre of the weighting used for power bounds.
    pub fn from_counts(theta: &TypeCounts) -> Self {
        let n = theta.total() as i64;
        let [at, nt, d, c] = theta.as_array().map(|k| exact::ratio(k as i64, n));
        TypeShares { at, nt, d, c }
    }

    pub fn as_array(&self) -> [Rational; 4] {
        [self.at.clone(), self.nt.clone(), self.d.clone(), self.c.clone()]
    }

    pub fn is_null(&self) -> bool {
        self.d.is_zero() || self.c.is_zero()
    }
}

impl fmt::Display for TypeShares {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.as_array().map(|r| exact::format(&r));
        write!(f, "({a},{b},{c},{d})")
    }
}

/// All type-count vectors for the design, ordered lexicographically on
/// `(at, nt, d)`; `c` is the remainder. Length is `C(n+3, 3)`.
pub fn enumerate_types(design: Design) -> Vec<TypeCounts> {
    enumerate_compositions(design.n())
}

pub(crate) fn enumerate_compositions(n: u32) -> Vec<TypeCounts> {
    let mut out = Vec::with_capacity(((n + 1) * (n + 2) * (n + 3) / 6) as usize);
    for at in 0..=n {
        for nt in 0..=n - at {
            for d in 0..=n - at - nt {
                out.push(TypeCounts::new(at, nt, d, n - at - nt - d));
            }
        }
    }
    out
}

/// Visits every split of the treated group into types: `(d_at, d_nt, d_d, d_c)`
/// with `sum = n1` and `d_t <= theta_t`, passing the split and its outcome.
fn for_each_split(n1: u32, theta: &TypeCounts, mut visit: impl FnMut([u32; 4], OutcomeCounts)) {
    let TypeCounts { at, nt, d, c } = *theta;
    for d_at in 0..=at.min(n1) {
        for d_c in 0..=c.min(n1 - d_at) {
            let rem = n1 - d_at - d_c;
            let lo = rem.saturating_sub(nt);
            let hi = d.min(rem);
            for d_d in lo..=hi {
                if lo > hi {
                    break;
                }
                let split = [d_at, rem - d_d, d_d, d_c];
                let y = OutcomeCounts::new(d_at + d_c, (at - d_at) + (d - d_d));
                visit(split, y);
            }
        }
    }
}

/// Binomial tables sized for one design; `u128` when every entry fits.
pub(crate) enum BinomialTable {
    Small(Vec<Vec<u128>>),
    Big(Vec<Vec<BigUint>>),
}

impl BinomialTable {
    pub(crate) fn new(n: u32) -> Self {
        match pascal_u128(n) {
            Some(t) => BinomialTable::Small(t),
            None => BinomialTable::Big(pascal(n)),
        }
    }
}

fn pmf_with(design: Design, theta: &TypeCounts, table: &BinomialTable) -> OutcomePmf {
    let len = design.grid_len();
    let numerators = match table {
        BinomialTable::Small(t) => {
            let mut acc = vec![0u128; len];
            for_each_split(design.n1(), theta, |split, y| {
                let th = theta.as_array();
                let w = (0..4).fold(1u128, |w, k| w * t[th[k] as usize][split[k] as usize]);
                acc[design.grid_index(y)] += w;
            });
            acc.into_iter().map(BigUint::from).collect()
        }
        BinomialTable::Big(t) => {
            let mut acc = vec![BigUint::zero(); len];
            for_each_split(design.n1(), theta, |split, y| {
                let th = theta.as_array();
                let w = (0..4).fold(BigUint::one(), |w, k| w * &t[th[k] as usize][split[k] as usize]);
                acc[design.grid_index(y)] += w;
            });
            acc
        }
    };
    OutcomePmf {
        design,
        numerators,
        denominator: design.assignments(),
    }
}

/// Exact pmf `f_theta` of `(Y_T, Y_U)`: the treated split of types is
/// multivariate hypergeometric with parameters `theta` and `n1`.
pub fn pmf(design: Design, theta: &TypeCounts) -> Result<OutcomePmf> {
    design.check_theta(theta)?;
    Ok(pmf_with(design, theta, &BinomialTable::new(design.n())))
}

/// Support of `f_theta`, computed directly as the image of feasible treated splits.
pub fn support(design: Design, theta: &TypeCounts) -> Result<BTreeSet<OutcomeCounts>> {
    design.check_theta(theta)?;
    let mut out = BTreeSet::new();
    for_each_split(design.n1(), theta, |_, y| {
        out.insert(y);
    });
    Ok(out)
}

fn pow_rational(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Multinomial probability of counts `t` under i.i.d. draws with shares `p`.
pub fn multinomial_pmf(n: u32, p: &TypeShares, t: &TypeCounts) -> Result<Rational> {
    ensure!(
        t.total() == n,
        InvalidInput,
        "type counts {t} do not sum to n={n}"
    );
    let coef = exact::from_uint(&multinomial(&t.as_array()));
    Ok(p.as_array()
        .iter()
        .zip(t.as_array())
        .fold(coef, |acc, (share, k)| acc * pow_rational(share, k)))
}

/// Mixture route is evaluated alongside the product route up to this n.
pub const SUPERPOP_MIXTURE_CHECK_MAX_N: u32 = 16;

/// Outcome pmf `g_p` when unit types are i.i.d. with shares `p`.
///
/// Computed as `Bin(n1, p_at + p_c) x Bin(n0, p_at + p_d)`. For
/// `n <= SUPERPOP_MIXTURE_CHECK_MAX_N` the mixture `sum_theta f_theta pi(theta; p)`
/// is computed as well and the two must agree exactly.
pub fn superpop_pmf(design: Design, p: &TypeShares) -> Result<OutcomePmf> {
    let shares = p.as_array();
    let l = exact::lcm_of_denominators(shares.iter());
    let scaled: Vec<BigUint> = shares
        .iter()
        .map(|s| (s * BigRational::from_integer(l.clone())).to_integer().to_biguint().unwrap())
        .collect();
    let l = l.to_biguint().unwrap();
    let treated_one = &scaled[0] + &scaled[3];
    let untreated_one = &scaled[0] + &scaled[2];
    let (n1, n0) = (design.n1(), design.n0());

    let bin_row = |m: u32, succ: &BigUint| -> Vec<BigUint> {
        let fail = &l - succ;
        (0..=m)
            .map(|k| binomial(m, k) * num_traits::pow(succ.clone(), k as usize) * num_traits::pow(fail.clone(), (m - k) as usize))
            .collect()
    };
    let rt = bin_row(n1, &treated_one);
    let ru = bin_row(n0, &untreated_one);
    let mut numerators = Vec::with_capacity(design.grid_len());
    for a in &rt {
        for b in &ru {
            numerators.push(a * b);
        }
    }
    let product = OutcomePmf::from_counts(design, numerators, num_traits::pow(l.clone(), design.n() as usize))?;

    if design.n() <= SUPERPOP_MIXTURE_CHECK_MAX_N {
        let mixture = superpop_mixture(design, &scaled, &l);
        if mixture != product {
            return Err(Error::Inconsistent(format!(
                "mixture and product forms of g_p disagree for p={p} on {design:?}"
            )));
        }
    }
    Ok(product)
}

fn superpop_mixture(design: Design, scaled: &[BigUint], l: &BigUint) -> OutcomePmf {
    let table = BinomialTable::new(design.n());
    let mut acc = vec![BigUint::zero(); design.grid_len()];
    for theta in enumerate_types(design) {
        let th = theta.as_array();
        let mut w = multinomial(&th);
        for k in 0..4 {
            w *= num_traits::pow(scaled[k].clone(), th[k] as usize);
        }
        if w.is_zero() {
            continue;
        }
        let f = pmf_with(design, &theta, &table);
        for (slot, a) in acc.iter_mut().zip(&f.numerators) {
            if !a.is_zero() {
                *slot += &w * a;
            }
        }
    }
    OutcomePmf {
        design,
        numerators: acc,
        denominator: num_traits::pow(l.clone(), design.n() as usize) * design.assignments(),
    }
}

/// Every type vector of a design together with its exact and rounded pmf.
///
/// The rounded masses are the single point where exact probabilities become
/// doubles for the LP and power computations.
pub struct TypeSpace {
    design: Design,
    types: Vec<TypeCounts>,
    index: HashMap<TypeCounts, usize>,
    pmfs: Vec<OutcomePmf>,
    dense: Vec<Vec<f64>>,
    nulls: Vec<usize>,
    alternatives: Vec<usize>,
    multinomials: OnceLock<Vec<BigUint>>,
}

impl TypeSpace {
    pub fn new(design: Design) -> Self {
        let types = enumerate_types(design);
        let table = BinomialTable::new(design.n());
        let pmfs: Vec<OutcomePmf> = types
            .par_iter()
            .map(|t| pmf_with(design, t, &table))
            .collect();
        let dense = pmfs.par_iter().map(OutcomePmf::to_f64).collect();
        let index = types.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let (nulls, alternatives) = (0..types.len()).partition(|&i| types[i].is_null());
        TypeSpace {
            design,
            types,
            index,
            pmfs,
            dense,
            nulls,
            alternatives,
            multinomials: OnceLock::new(),
        }
    }

    /// `n! / (t_at! t_nt! t_d! t_c!)` for every type, in type order.
    pub fn multinomial_coefficients(&self) -> &[BigUint] {
        self.multinomials
            .get_or_init(|| self.types.iter().map(|t| multinomial(&t.as_array())).collect())
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn types(&self) -> &[TypeCounts] {
        &self.types
    }

    pub fn index_of(&self, theta: &TypeCounts) -> Result<usize> {
        self.index.get(theta).copied().ok_or_else(|| {
            Error::InvalidInput(format!(
                "type counts {theta} are not consistent with n={}",
                self.design.n()
            ))
        })
    }

    pub fn pmf(&self, idx: usize) -> &OutcomePmf {
        &self.pmfs[idx]
    }

    pub fn dense(&self, idx: usize) -> &[f64] {
        &self.dense[idx]
    }

    /// Indices of types satisfying monotonicity.
    pub fn nulls(&self) -> &[usize] {
        &self.nulls
    }

    /// Indices of types violating monotonicity.
    pub fn alternatives(&self) -> &[usize] {
        &self.alternatives
    }
}
