#![allow(dead_code)]

use monotest_core::{Design, OutcomeCounts, Rational, TypeCounts};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Potential outcomes `(y1, y0)` per unit, in type order.
pub fn units_of(theta: &TypeCounts) -> Vec<(u8, u8)> {
    let mut u = Vec::new();
    u.extend(std::iter::repeat_n((1, 1), theta.at as usize));
    u.extend(std::iter::repeat_n((0, 0), theta.nt as usize));
    u.extend(std::iter::repeat_n((0, 1), theta.d as usize));
    u.extend(std::iter::repeat_n((1, 0), theta.c as usize));
    u
}

/// Distribution of `(Y_T, Y_U)` by walking every treated subset as a bitmask.
pub fn brute_pmf(n1: u32, units: &[(u8, u8)]) -> BTreeMap<OutcomeCounts, Rational> {
    let n = units.len();
    let mut counts: BTreeMap<OutcomeCounts, u64> = BTreeMap::new();
    let mut total = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() != n1 {
            continue;
        }
        let (mut yt, mut yu) = (0, 0);
        for (i, &(y1, y0)) in units.iter().enumerate() {
            if mask >> i & 1 == 1 {
                yt += y1 as u32;
            } else {
                yu += y0 as u32;
            }
        }
        *counts.entry(OutcomeCounts::new(yt, yu)).or_default() += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(y, k)| (y, r(k as i64, total as i64)))
        .collect()
}

pub fn nonzero_masses(pmf: &monotest_core::OutcomePmf) -> BTreeMap<OutcomeCounts, Rational> {
    pmf.design()
        .outcomes()
        .map(|y| (y, pmf.mass(y)))
        .filter(|(_, m)| !m.is_zero())
        .collect()
}

pub fn binomial_pmf(m: u32, p: &Rational) -> Vec<Rational> {
    let q = Rational::one() - p;
    (0..=m)
        .map(|k| {
            let mut c = Rational::one();
            for j in 0..k {
                c = c * r((m - j) as i64, (j + 1) as i64);
            }
            c * num_traits::pow(p.clone(), k as usize) * num_traits::pow(q.clone(), (m - k) as usize)
        })
        .collect()
}

pub fn designs_up_to(max_n: u32) -> impl Iterator<Item = Design> {
    (2..=max_n).flat_map(|n| (1..n).map(move |n1| Design::new(n, n1).unwrap()))
}
