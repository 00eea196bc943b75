//! Binomial and multinomial coefficients.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Pascal's triangle rows `0..=n` with exact entries.
pub fn pascal(n: u32) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n as usize + 1);
    for i in 0..=n as usize {
        let mut row = vec![BigUint::one(); i + 1];
        for k in 1..i {
            row[k] = &rows[i - 1][k - 1] + &rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Pascal's triangle in `u128`, or `None` if some entry overflows.
pub fn pascal_u128(n: u32) -> Option<Vec<Vec<u128>>> {
    let mut rows: Vec<Vec<u128>> = Vec::with_capacity(n as usize + 1);
    for i in 0..=n as usize {
        let mut row = vec![1u128; i + 1];
        for k in 1..i {
            row[k] = rows[i - 1][k - 1].checked_add(rows[i - 1][k])?;
        }
        rows.push(row);
    }
    Some(rows)
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `n! / (k_1! ... k_m!)` where `n = sum k_i`.
pub fn multinomial(parts: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u32;
    for &k in parts {
        total += k;
        acc *= binomial(total, k);
    }
    acc
}
