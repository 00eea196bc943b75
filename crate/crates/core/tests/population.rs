mod common;

use common::{binomial_pmf, brute_pmf, designs_up_to, nonzero_masses, r, units_of};
use monotest_core::population::SUPERPOP_MIXTURE_CHECK_MAX_N;
use monotest_core::{
    enumerate_types, multinomial_pmf, pmf, superpop_pmf, support, Design, Error, OutcomeCounts, Rational,
    TypeCounts, TypeShares, TypeSpace,
};
use num_traits::{One, Zero};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn y(t: u32, u: u32) -> OutcomeCounts {
    OutcomeCounts::new(t, u)
}

fn shares(a: [Rational; 4]) -> TypeShares {
    let [at, nt, d, c] = a;
    TypeShares::new(at, nt, d, c).unwrap()
}

#[test]
fn type_enumeration_sizes() {
    assert_eq!(enumerate_types(Design::new(2, 1).unwrap()).len(), 10);
    let n30 = enumerate_types(Design::new(30, 15).unwrap());
    assert_eq!(n30.len(), 5456);
    let alternatives = n30.iter().filter(|t| !t.is_null()).count();
    // direct count of compositions with both d and c positive
    let mut direct = 0;
    for d in 1..=30u32 {
        for c in 1..=30 - d {
            direct += 30 - d - c + 1;
        }
    }
    assert_eq!(alternatives, direct as usize);
    assert_eq!(alternatives, 4495);
}

#[test]
fn enumeration_is_lexicographic() {
    for n in [3u32, 7, 12] {
        let types = enumerate_types(Design::new(n, 1).unwrap());
        assert!(types.windows(2).all(|w| (w[0].at, w[0].nt, w[0].d) < (w[1].at, w[1].nt, w[1].d)));
        assert!(types.iter().all(|t| t.total() == n));
        assert_eq!(types.len() as u32, (n + 3) * (n + 2) * (n + 1) / 6);
    }
}

#[test]
fn example_one_pmfs() {
    let d = Design::new(2, 1).unwrap();
    let f = pmf(d, &TypeCounts::new(1, 1, 0, 0)).unwrap();
    assert_eq!(f.mass(y(1, 0)), r(1, 2));
    assert_eq!(f.mass(y(0, 1)), r(1, 2));
    let g = pmf(d, &TypeCounts::new(0, 0, 1, 1)).unwrap();
    assert_eq!(g.mass(y(1, 1)), r(1, 2));
    assert_eq!(g.mass(y(0, 0)), r(1, 2));
}

#[test]
fn always_takers_are_degenerate() {
    for d in designs_up_to(9) {
        let f = pmf(d, &TypeCounts::new(d.n(), 0, 0, 0)).unwrap();
        assert_eq!(f.mass(y(d.n1(), d.n0())), Rational::one());
        let s = support(d, &TypeCounts::new(0, d.n(), 0, 0)).unwrap();
        assert_eq!(s, BTreeSet::from([y(0, 0)]));
    }
}

#[test]
fn pmf_matches_assignment_walk_exhaustively() {
    for d in designs_up_to(10) {
        for theta in enumerate_types(d) {
            let f = pmf(d, &theta).unwrap();
            assert_eq!(nonzero_masses(&f), brute_pmf(d.n1(), &units_of(&theta)), "{theta} {d:?}");
        }
    }
}

#[test]
fn four_unit_mixed_population_matches_walk() {
    let d = Design::new(4, 2).unwrap();
    let theta = TypeCounts::new(1, 1, 1, 1);
    assert_eq!(nonzero_masses(&pmf(d, &theta).unwrap()), brute_pmf(2, &units_of(&theta)));
}

#[test]
fn parity_grid_null_support() {
    let d = Design::new(4, 2).unwrap();
    let s = support(d, &TypeCounts::new(1, 3, 0, 0)).unwrap();
    assert_eq!(s, BTreeSet::from([y(1, 0), y(0, 1)]));
    assert!(matches!(support(d, &TypeCounts::new(1, 1, 0, 0)), Err(Error::InvalidInput(_))));
}

#[test]
fn pmfs_sum_to_one_and_first_moments_match() {
    for d in designs_up_to(12) {
        let (n, n1, n0) = (d.n() as i64, d.n1() as i64, d.n0() as i64);
        for theta in enumerate_types(d) {
            let f = pmf(d, &theta).unwrap();
            let total: Rational = f.masses().into_iter().sum();
            assert!(total.is_one());
            let et = f.expectation(|o| o.y_t.into());
            let eu = f.expectation(|o| o.y_u.into());
            assert_eq!(et, r(n1 * (theta.at + theta.c) as i64, n));
            assert_eq!(eu, r(n0 * (theta.at + theta.d) as i64, n));
        }
    }
}

#[test]
fn support_equals_positive_mass_set() {
    for d in designs_up_to(9) {
        for theta in enumerate_types(d) {
            let f = pmf(d, &theta).unwrap();
            let positive: BTreeSet<_> = nonzero_masses(&f).into_keys().collect();
            assert_eq!(support(d, &theta).unwrap(), positive);
        }
    }
}

#[test]
fn pure_type_supports_lie_on_lines() {
    for d in designs_up_to(12) {
        let n = d.n();
        for k in 0..=n {
            // always-takers and never-takers: Y_T + Y_U = at
            for o in support(d, &TypeCounts::new(k, n - k, 0, 0)).unwrap() {
                assert_eq!(o.y_t + o.y_u, k);
            }
            // defiers and compliers: Y_T - Y_U = (#treated compliers) - (#untreated defiers) = n1 - d
            for o in support(d, &TypeCounts::new(0, 0, k, n - k)).unwrap() {
                assert_eq!(o.y_t as i64 - o.y_u as i64, d.n1() as i64 - k as i64);
            }
        }
    }
}

#[test]
fn inconsistent_inputs_are_rejected() {
    let d = Design::new(6, 3).unwrap();
    assert!(matches!(pmf(d, &TypeCounts::new(1, 1, 1, 1)), Err(Error::InvalidInput(_))));
    assert!(Design::new(6, 0).is_err());
    assert!(Design::new(6, 6).is_err());
    assert!(TypeShares::new(r(1, 2), r(1, 2), r(1, 2), r(-1, 2)).is_err());
    assert!(TypeShares::new(r(1, 2), r(1, 4), Rational::zero(), Rational::zero()).is_err());
}

#[test]
fn multinomial_examples() {
    let one = Rational::one();
    let z = Rational::zero;
    for n in 2..8 {
        let p = shares([one.clone(), z(), z(), z()]);
        assert!(multinomial_pmf(n, &p, &TypeCounts::new(n, 0, 0, 0)).unwrap().is_one());
    }
    let p = shares([r(1, 2), r(1, 2), z(), z()]);
    assert_eq!(multinomial_pmf(2, &p, &TypeCounts::new(1, 1, 0, 0)).unwrap(), r(1, 2));
    let p = shares([r(1, 8), r(3, 8), r(1, 4), r(1, 4)]);
    for n in [3u32, 6, 9] {
        let total: Rational = enumerate_types(Design::new(n, 1).unwrap())
            .iter()
            .map(|t| multinomial_pmf(n, &p, t).unwrap())
            .sum();
        assert!(total.is_one());
    }
}

#[test]
fn superpopulation_examples() {
    let d = Design::new(2, 1).unwrap();
    let z = Rational::zero;
    for p in [shares([r(1, 2), r(1, 2), z(), z()]), shares([z(), z(), r(1, 2), r(1, 2)])] {
        let g = superpop_pmf(d, &p).unwrap();
        for o in d.outcomes() {
            assert_eq!(g.mass(o), r(1, 4));
        }
    }
    for d in designs_up_to(7) {
        let g = superpop_pmf(d, &shares([Rational::one(), z(), z(), z()])).unwrap();
        assert!(g.mass(y(d.n1(), d.n0())).is_one());
    }
}

fn share_grid(den: i64) -> Vec<[Rational; 4]> {
    let mut out = Vec::new();
    for a in 0..=den {
        for b in 0..=den - a {
            for c in 0..=den - a - b {
                out.push([r(a, den), r(b, den), r(c, den), r(den - a - b - c, den)]);
            }
        }
    }
    out
}

#[test]
fn superpopulation_is_a_product_of_binomials() {
    let designs = [(2, 1), (5, 2), (8, 4), (SUPERPOP_MIXTURE_CHECK_MAX_N, 7)];
    for (n, n1) in designs {
        let d = Design::new(n, n1).unwrap();
        for den in [3, 4] {
            for p in share_grid(den) {
                let g = superpop_pmf(d, &shares(p.clone())).unwrap();
                let bt = binomial_pmf(d.n1(), &(&p[0] + &p[3]));
                let bu = binomial_pmf(d.n0(), &(&p[0] + &p[2]));
                for o in d.outcomes() {
                    assert_eq!(g.mass(o), &bt[o.y_t as usize] * &bu[o.y_u as usize]);
                }
            }
        }
    }
}

#[test]
fn superpopulation_mixture_by_hand() {
    let d = Design::new(5, 2).unwrap();
    let p = shares([r(1, 8), r(3, 8), r(1, 4), r(1, 4)]);
    let g = superpop_pmf(d, &p).unwrap();
    for o in d.outcomes() {
        let mix: Rational = enumerate_types(d)
            .iter()
            .map(|t| multinomial_pmf(5, &p, t).unwrap() * brute_pmf(2, &units_of(t)).get(&o).cloned().unwrap_or_default())
            .sum();
        assert_eq!(g.mass(o), mix);
    }
}

#[test]
fn type_space_partitions_nulls_and_alternatives() {
    let space = TypeSpace::new(Design::new(10, 4).unwrap());
    assert_eq!(space.nulls().len() + space.alternatives().len(), space.types().len());
    for &i in space.nulls() {
        assert!(space.types()[i].is_null());
    }
    for (i, t) in space.types().iter().enumerate() {
        assert_eq!(space.index_of(t).unwrap(), i);
        let dense: f64 = space.dense(i).iter().sum();
        assert!((dense - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn pmf_is_invariant_to_labelling(at in 0u32..5, nt in 0u32..5, d in 0u32..5, c in 0u32..5, frac in 0.05f64..0.95) {
        let n = at + nt + d + c;
        prop_assume!(n >= 2);
        let n1 = ((n as f64 * frac).round() as u32).clamp(1, n - 1);
        let design = Design::new(n, n1).unwrap();
        let theta = TypeCounts::new(at, nt, d, c);
        let f = pmf(design, &theta).unwrap();
        prop_assert_eq!(nonzero_masses(&f), brute_pmf(n1, &units_of(&theta)));
        // swapping treatment and control maps (at, nt, d, c) to (at, nt, c, d) and (Y_T, Y_U) to (Y_U, Y_T)
        let mirror = Design::new(n, n - n1).unwrap();
        let g = pmf(mirror, &TypeCounts::new(at, nt, c, d)).unwrap();
        for o in design.outcomes() {
            prop_assert_eq!(f.mass(o), g.mass(y(o.y_u, o.y_t)));
        }
    }

    #[test]
    fn superpopulation_product_form_on_random_shares(a in 0i64..=8, b in 0i64..=8, c in 0i64..=8, e in 0i64..=8, n in 2u32..=9, n1f in 0.1f64..0.9) {
        let den = a + b + c + e;
        prop_assume!(den > 0);
        let p = [r(a, den), r(b, den), r(c, den), r(e, den)];
        let n1 = ((n as f64 * n1f).round() as u32).clamp(1, n - 1);
        let d = Design::new(n, n1).unwrap();
        let g = superpop_pmf(d, &shares(p.clone())).unwrap();
        let bt = binomial_pmf(n1, &(&p[0] + &p[3]));
        let bu = binomial_pmf(n - n1, &(&p[0] + &p[2]));
        for o in d.outcomes() {
            prop_assert_eq!(g.mass(o), &bt[o.y_t as usize] * &bu[o.y_u as usize]);
        }
    }
}
