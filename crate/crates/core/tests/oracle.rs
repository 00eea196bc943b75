mod common;

use common::{brute_pmf, designs_up_to, nonzero_masses, r, units_of};
use monotest_core::exact::from_f64;
use monotest_core::freq::{power_at, power_at_exact, support_test, TestFunction};
use monotest_core::oracle::{
    enumerate_pmf, monte_carlo_pmf, science_table_from, verify_size_power, ScienceTable, DEFAULT_CAP,
};
use monotest_core::{enumerate_types, pmf, Design, Error, OutcomeCounts, TypeCounts, TypeSpace};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn science_table_layout() {
    assert_eq!(science_table_from(&TypeCounts::new(2, 0, 0, 0)).units(), &[(1, 1), (1, 1)]);
    assert_eq!(science_table_from(&TypeCounts::new(0, 0, 1, 1)).units(), &[(0, 1), (1, 0)]);
    for n in 2..=12u32 {
        for t in enumerate_types(Design::new(n, 1).unwrap()) {
            let table = science_table_from(&t);
            assert_eq!(table.tally(), t);
            assert_eq!(table.units(), units_of(&t).as_slice());
        }
    }
    assert!(ScienceTable::new(vec![(2, 0)]).is_err());
}

#[test]
fn enumeration_matches_pmf_exhaustively() {
    for d in designs_up_to(12) {
        for t in enumerate_types(d) {
            let e = enumerate_pmf(d, &science_table_from(&t), DEFAULT_CAP).unwrap();
            assert_eq!(e, pmf(d, &t).unwrap(), "{t} {d:?}");
        }
    }
}

#[test]
fn enumeration_examples() {
    let d = Design::new(2, 1).unwrap();
    let e = enumerate_pmf(d, &science_table_from(&TypeCounts::new(0, 0, 1, 1)), DEFAULT_CAP).unwrap();
    assert_eq!(e.mass(OutcomeCounts::new(0, 0)), r(1, 2));
    assert_eq!(e.mass(OutcomeCounts::new(1, 1)), r(1, 2));
    let d = Design::new(9, 4).unwrap();
    let e = enumerate_pmf(d, &science_table_from(&TypeCounts::new(0, 9, 0, 0)), DEFAULT_CAP).unwrap();
    assert!(e.mass(OutcomeCounts::new(0, 0)).is_one());
}

#[test]
fn enumeration_spot_checks_at_sixteen() {
    let d = Design::new(16, 8).unwrap();
    for t in [TypeCounts::new(3, 4, 4, 5), TypeCounts::new(0, 0, 7, 9), TypeCounts::new(16, 0, 0, 0)] {
        let e = enumerate_pmf(d, &science_table_from(&t), 20_000).unwrap();
        assert_eq!(e, pmf(d, &t).unwrap());
        assert_eq!(nonzero_masses(&e), brute_pmf(8, &units_of(&t)));
    }
}

#[test]
fn enumeration_cap_is_enforced() {
    let d = Design::new(30, 15).unwrap();
    let table = science_table_from(&TypeCounts::new(5, 10, 7, 8));
    match enumerate_pmf(d, &table, DEFAULT_CAP) {
        Err(Error::TooLarge(msg)) => assert!(msg.contains("monte_carlo_pmf")),
        other => panic!("expected too-large, got {other:?}"),
    }
    let d = Design::new(12, 6).unwrap();
    assert!(matches!(
        enumerate_pmf(d, &science_table_from(&TypeCounts::new(3, 3, 3, 3)), 923),
        Err(Error::TooLarge(_))
    ));
    let delta = TestFunction::constant(d, 0.05).unwrap();
    assert!(matches!(verify_size_power(&delta, &TypeCounts::new(3, 3, 3, 3), 100), Err(Error::TooLarge(_))));
}

#[test]
fn table_must_match_design() {
    let d = Design::new(6, 3).unwrap();
    let table = science_table_from(&TypeCounts::new(1, 1, 1, 1));
    assert!(matches!(enumerate_pmf(d, &table, DEFAULT_CAP), Err(Error::InvalidInput(_))));
    assert!(matches!(monte_carlo_pmf(d, &table, 1, 10), Err(Error::InvalidInput(_))));
    let table = science_table_from(&TypeCounts::new(1, 2, 1, 2));
    assert!(monte_carlo_pmf(d, &table, 1, 0).is_err());
}

#[test]
fn monte_carlo_is_reproducible() {
    let d = Design::new(30, 15).unwrap();
    let table = science_table_from(&TypeCounts::new(5, 10, 7, 8));
    let a = monte_carlo_pmf(d, &table, 42, 20_000).unwrap();
    let b = monte_carlo_pmf(d, &table, 42, 20_000).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo_pmf(d, &table, 43, 20_000).unwrap();
    assert_ne!(a, c);
    let single = monte_carlo_pmf(d, &table, 7, 1).unwrap();
    assert_eq!(single.support().len(), 1);
    let y = *single.support().iter().next().unwrap();
    assert!(single.mass(y).is_one());
    assert!(!pmf(d, &TypeCounts::new(5, 10, 7, 8)).unwrap().mass(y).is_zero());
}

#[test]
fn monte_carlo_error_shrinks_with_reps() {
    let d = Design::new(30, 15).unwrap();
    let theta = TypeCounts::new(5, 10, 7, 8);
    let exact = pmf(d, &theta).unwrap();
    let table = science_table_from(&theta);
    let tv: Vec<f64> = [1_000u64, 100_000, 1_000_000]
        .iter()
        .map(|&reps| monte_carlo_pmf(d, &table, 2024, reps).unwrap().total_variation(&exact).unwrap())
        .collect();
    assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
    assert!(tv[2] <= 0.01);
}

#[test]
fn verify_size_power_matches_power_at() {
    let d = Design::new(10, 5).unwrap();
    let space = TypeSpace::new(d);
    let types = enumerate_types(d);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let delta = TestFunction::new(d, (0..d.grid_len()).map(|_| rng.random::<f64>()).collect()).unwrap();
        let theta = types[rng.random_range(0..types.len())];
        let oracle = verify_size_power(&delta, &theta, DEFAULT_CAP).unwrap();
        assert_eq!(oracle, power_at_exact(&delta, &theta).unwrap());
        assert!((monotest_core::exact::to_f64(&oracle) - power_at(&space, &delta, &theta).unwrap()).abs() < 1e-12);
    }
    let alpha = TestFunction::constant(d, 0.05).unwrap();
    for theta in types.iter().step_by(17) {
        assert_eq!(verify_size_power(&alpha, theta, DEFAULT_CAP).unwrap(), from_f64(0.05).unwrap());
    }
}

#[test]
fn support_indicator_rejects_its_alternative_surely() {
    for (n, n1) in [(6, 3), (8, 3), (9, 6), (12, 6)] {
        let space = TypeSpace::new(Design::new(n, n1).unwrap());
        let st = support_test(&space, 0.05).unwrap();
        let indicator =
            TestFunction::from_fn(space.design(), |y| if st.test.value(y) > 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!(verify_size_power(&indicator, &st.theta1, DEFAULT_CAP).unwrap().is_one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_ignores_unit_order(at in 0u32..4, nt in 0u32..4, d in 0u32..4, c in 0u32..4, n1f in 0.1f64..0.9, seed in any::<u64>()) {
        let n = at + nt + d + c;
        prop_assume!(n >= 2);
        let n1 = ((n as f64 * n1f).round() as u32).clamp(1, n - 1);
        let design = Design::new(n, n1).unwrap();
        let theta = TypeCounts::new(at, nt, d, c);
        let mut units = units_of(&theta);
        units.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = ScienceTable::new(units).unwrap();
        prop_assert_eq!(shuffled.tally(), theta);
        let a = enumerate_pmf(design, &shuffled, DEFAULT_CAP).unwrap();
        prop_assert_eq!(a, enumerate_pmf(design, &science_table_from(&theta), DEFAULT_CAP).unwrap());
    }
}
