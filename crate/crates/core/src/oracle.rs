//! Brute-force ground truth: explicit science tables, enumeration of every
//! treated subset, and seeded Monte Carlo.
//!
//! Monte Carlo uses ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`.
//! Each draw runs `n1` steps of a Fisher-Yates shuffle over a unit index
//! array that persists across draws; step `i` swaps position `i` with
//! `i + U(n - i)`, where `U(r)` is `next_u32() % r` after rejecting values
//! below `2^32 mod r`. The treated set is the first `n1` positions.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::exact::{self, Rational};
use crate::freq::TestFunction;
use crate::population::{Design, OutcomeCounts, OutcomePmf, TypeCounts};

/// Default bound on `C(n, n1)` for exhaustive enumeration.
pub const DEFAULT_CAP: u64 = 20_000_000;

/// Potential outcomes `(y(1), y(0))` of every unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScienceTable {
    units: Vec<(u8, u8)>,
}

impl ScienceTable {
    pub fn new(units: Vec<(u8, u8)>) -> Result<Self> {
        ensure!(
            units.iter().all(|&(a, b)| a <= 1 && b <= 1),
            InvalidInput,
            "potential outcomes must be 0 or 1"
        );
        Ok(ScienceTable { units })
    }

    pub fn units(&self) -> &[(u8, u8)] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn tally(&self) -> TypeCounts {
        let mut t = TypeCounts::default();
        for &u in &self.units {
            match u {
                (1, 1) => t.at += 1,
                (0, 0) => t.nt += 1,
                (0, 1) => t.d += 1,
                _ => t.c += 1,
            }
        }
        t
    }
}

/// Always-takers, then never-takers, then defiers, then compliers.
pub fn science_table_from(theta: &TypeCounts) -> ScienceTable {
    let mut units = Vec::with_capacity(theta.total() as usize);
    for (count, unit) in theta.as_array().into_iter().zip([(1, 1), (0, 0), (0, 1), (1, 0)]) {
        units.extend(std::iter::repeat_n(unit, count as usize));
    }
    ScienceTable { units }
}

fn check_table(design: Design, table: &ScienceTable) -> Result<()> {
    ensure!(
        table.len() == design.n() as usize,
        InvalidInput,
        "science table has {} units but n={}",
        table.len(),
        design.n()
    );
    Ok(())
}

/// Visits every size-`k` subset of `0..n` in colexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        visit(&c);
        let mut j = 0;
        while j < k && c[j] + 1 == if j + 1 < k { c[j + 1] } else { n } {
            j += 1;
        }
        if j == k {
            return;
        }
        c[j] += 1;
        for (i, v) in c.iter_mut().enumerate().take(j) {
            *v = i;
        }
    }
}

fn enumerate_counts(design: Design, table: &ScienceTable, cap: u64) -> Result<Vec<u64>> {
    check_table(design, table)?;
    let total = design.assignments();
    if total > BigUint::from(cap) {
        return Err(Error::TooLarge(format!(
            "C({}, {}) = {total} assignments exceed the cap {cap}; use monte_carlo_pmf",
            design.n(),
            design.n1()
        )));
    }
    let control_y0: u32 = table.units.iter().map(|u| u.1 as u32).sum();
    let mut counts = vec![0u64; design.grid_len()];
    for_each_subset(design.n() as usize, design.n1() as usize, |treated| {
        let (mut y_t, mut y0_treated) = (0, 0);
        for &i in treated {
            y_t += table.units[i].0 as u32;
            y0_treated += table.units[i].1 as u32;
        }
        counts[design.grid_index(OutcomeCounts::new(y_t, control_y0 - y0_treated))] += 1;
    });
    Ok(counts)
}

/// Exact outcome pmf by enumerating all `C(n, n1)` treated subsets.
pub fn enumerate_pmf(design: Design, table: &ScienceTable, cap: u64) -> Result<OutcomePmf> {
    let counts = enumerate_counts(design, table, cap)?;
    OutcomePmf::from_counts(design, counts.into_iter().map(BigUint::from).collect(), design.assignments())
}

fn below(rng: &mut ChaCha8Rng, range: u32) -> u32 {
    let threshold = range.wrapping_neg() % range;
    loop {
        let x = rng.next_u32();
        if x >= threshold {
            return x % range;
        }
    }
}

/// Empirical pmf from `reps` uniformly drawn treated subsets; reproducible
/// for a given `(seed, reps)`.
pub fn monte_carlo_pmf(design: Design, table: &ScienceTable, seed: u64, reps: u64) -> Result<OutcomePmf> {
    check_table(design, table)?;
    ensure!(reps >= 1, InvalidInput, "reps must be at least 1");
    let n = design.n() as usize;
    let n1 = design.n1() as usize;
    let control_y0: u32 = table.units.iter().map(|u| u.1 as u32).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counts = vec![0u64; design.grid_len()];
    for _ in 0..reps {
        let (mut y_t, mut y0_treated) = (0, 0);
        for i in 0..n1 {
            let j = i + below(&mut rng, (n - i) as u32) as usize;
            perm.swap(i, j);
            let u = table.units[perm[i]];
            y_t += u.0 as u32;
            y0_treated += u.1 as u32;
        }
        counts[design.grid_index(OutcomeCounts::new(y_t, control_y0 - y0_treated))] += 1;
    }
    OutcomePmf::from_counts(design, counts.into_iter().map(BigUint::from).collect(), BigUint::from(reps))
}

/// `E_theta[delta(Y)]` as the exact average of `delta` over all assignments.
pub fn verify_size_power(delta: &TestFunction, theta: &TypeCounts, cap: u64) -> Result<Rational> {
    let design = delta.design();
    design.check_theta(theta)?;
    let counts = enumerate_counts(design, &science_table_from(theta), cap)?;
    let mut acc = Rational::from_integer(0.into());
    for (i, &k) in counts.iter().enumerate() {
        if k > 0 && delta.values()[i] > 0.0 {
            acc += exact::from_f64(delta.values()[i])? * Rational::from_integer(k.into());
        }
    }
    Ok(acc / exact::from_uint(&design.assignments()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::pmf;

    #[test]
    fn tables() {
        assert_eq!(science_table_from(&TypeCounts::new(2, 0, 0, 0)).units(), &[(1, 1), (1, 1)]);
        assert_eq!(science_table_from(&TypeCounts::new(0, 0, 1, 1)).units(), &[(0, 1), (1, 0)]);
        assert!(ScienceTable::new(vec![(2, 0)]).is_err());
    }

    #[test]
    fn colex_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 3], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_subset(5, 5, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn example_pmf() {
        let design = Design::new(2, 1).unwrap();
        let theta = TypeCounts::new(0, 0, 1, 1);
        let f = enumerate_pmf(design, &science_table_from(&theta), DEFAULT_CAP).unwrap();
        assert_eq!(f.mass(OutcomeCounts::new(0, 0)), exact::ratio(1, 2));
        assert_eq!(f.mass(OutcomeCounts::new(1, 1)), exact::ratio(1, 2));
        assert_eq!(f, pmf(design, &theta).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let design = Design::new(30, 15).unwrap();
        let table = science_table_from(&TypeCounts::new(5, 10, 7, 8));
        assert!(matches!(enumerate_pmf(design, &table, DEFAULT_CAP), Err(Error::TooLarge(_))));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let design = Design::new(10, 4).unwrap();
        let table = science_table_from(&TypeCounts::new(2, 3, 2, 3));
        let a = monte_carlo_pmf(design, &table, 7, 500).unwrap();
        let b = monte_carlo_pmf(design, &table, 7, 500).unwrap();
        assert_eq!(a.numerators(), b.numerators());
        let one = monte_carlo_pmf(design, &table, 7, 1).unwrap();
        assert_eq!(one.support().len(), 1);
    }
}
