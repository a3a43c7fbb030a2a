mod common;

use proptest::prelude::*;
use relstable::levy::{levy_density, removed_density};
use relstable::specialfns::{one_minus_psi, phi, psi, sigma, stable_constant, xi};
use relstable::ModelParams;

fn p(d: usize, a: f64, m: f64) -> ModelParams<f64> {
    ModelParams::new(d, a, m).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| lo * (hi / lo).powf(k as f64 / n as f64))
}

const CASES: [(usize, f64); 7] = [(1, 0.5), (1, 1.0), (1, 1.5), (2, 0.5), (2, 1.0), (3, 1.0), (3, 1.5)];

fn band(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[test]
fn psi_tail_has_exponential_power_profile() {
    for &(d, a) in &CASES {
        let q = p(d, a, 0.0);
        let k = (d as f64 + a - 1.0) / 2.0;
        let (lo, hi) = band(log_grid(1.0, 50.0, 200).map(|r| psi(r, &q).unwrap() / ((-r).exp() * r.powf(k))));
        let factor = hi.max(1.0 / lo);
        println!("(d, alpha) = ({d}, {a}): tail band factor = {factor:.4}");
        assert!(lo > 0.0 && factor.is_finite() && factor < 10.0);
    }
}

#[test]
fn one_minus_psi_is_controlled_by_xi() {
    for &(d, a) in &CASES {
        let q = p(d, a, 0.0);
        let top = if d == 1 && a == 1.0 { 0.5 } else { 0.999 };
        let (lo, hi) = band(log_grid(1e-6, top, 240).map(|r| one_minus_psi(r, &q).unwrap() / xi(r, &q).unwrap()));
        println!("(d, alpha) = ({d}, {a}): small-jump ratio sup = {hi:.4} on (0, {top}]");
        assert!(lo > 0.0 && hi < 5.0);
    }
}

#[test]
fn critical_xi_vanishes_at_one() {
    // r² ln(1/r) → 0 as r → 1 while 1 - ψ(1) > 0, so the ratio grows there.
    let q = p(1, 1.0, 0.0);
    let ratio = |r: f64| one_minus_psi(r, &q).unwrap() / xi(r, &q).unwrap();
    assert!(ratio(0.999) > 100.0 * ratio(0.5));
    assert!(ratio(0.9999) > 5.0 * ratio(0.999));
}

#[test]
fn doubling_ratio_is_bounded_below_one() {
    for &(d, a) in &CASES {
        let mut doubling: f64 = 0.0;
        for m in [1e-3, 0.1, 0.5, 1.0] {
            let q = p(d, a, m);
            for r in log_grid(1e-4, 0.999, 100) {
                doubling = doubling.max(levy_density(r, &q).unwrap() / levy_density(2.0 * r, &q).unwrap());
            }
        }
        println!("(d, alpha) = ({d}, {a}): doubling ratio sup = {doubling:.4}");
        // Untempered, the ratio is exactly 2^{d+α}.
        assert!(doubling >= 2f64.powf(d as f64 + a) * (1.0 - 1e-9));
        assert!(doubling < 2f64.powf(d as f64 + a) * std::f64::consts::E.powf(2.0));
    }
}

#[test]
fn shift_ratio_is_bounded_beyond_one() {
    for &(d, a) in &CASES {
        let mut shift: f64 = 0.0;
        for m in [1e-3, 0.1, 0.5, 1.0] {
            let q = p(d, a, m);
            for r in log_grid(1.0, 200.0, 150) {
                shift = shift.max(levy_density(r, &q).unwrap() / levy_density(r + 1.0, &q).unwrap());
            }
        }
        println!("(d, alpha) = ({d}, {a}): shift ratio sup = {shift:.4}");
        assert!(shift.is_finite() && shift < 2f64.powf(d as f64 + a) * std::f64::consts::E);
    }
}

#[test]
fn massless_limit_is_monotone_from_below() {
    for &(d, a) in &CASES {
        for r in [0.05, 0.5, 2.0, 10.0] {
            let stable = levy_density(r, &p(d, a, 0.0)).unwrap();
            let mut prev = 0.0;
            for m in [1.0, 0.3, 0.1, 0.01, 1e-4, 1e-8] {
                let v = levy_density(r, &p(d, a, m)).unwrap();
                assert!(v >= prev * (1.0 - 1e-12) && v <= stable, "({d}, {a}) r={r} m={m}");
                prev = v;
            }
            assert!((prev - stable).abs() <= 1e-6 * stable);
        }
    }
}

#[test]
fn bessel_values_of_the_density() {
    let q = p(1, 1.0, 1.0);
    let k1 = common::bessel_k(1.0, 1.0);
    let pi = std::f64::consts::PI;
    assert!((levy_density(1.0, &q).unwrap() - k1 / pi).abs() < 1e-10);
    assert!((removed_density(1.0, &q).unwrap() - (1.0 - k1) / pi).abs() < 1e-10);
}

fn case() -> impl Strategy<Value = (usize, f64)> {
    prop_oneof![
        (2usize..=4, 0.05..1.95f64),
        (1usize..=1, 1.0001..1.95f64),
        (1usize..=1, 0.05..0.9999f64),
        Just((1usize, 1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branch_functions_match_their_formulas((d, a) in case(), r in 1e-4..0.999f64) {
        let q = p(d, a, 0.0);
        let (xi_want, sig_want) = if d as f64 + a > 2.0 {
            (r * r, r.powf(2.0 - a - d as f64))
        } else if a < 1.0 {
            (r.powf(1.0 + a), 1.0)
        } else {
            (r * r * (1.0 / r).ln(), (1.0 / r).ln())
        };
        prop_assert!((xi(r, &q).unwrap() - xi_want).abs() <= 1e-14 * xi_want);
        prop_assert!((sigma(r, &q).unwrap() - sig_want).abs() <= 1e-14 * sig_want);
        let phi_want = (-r).exp() * (1.0 + r.powf((d as f64 + a - 1.0) / 2.0));
        prop_assert!((phi(r, &q) - phi_want).abs() <= 1e-14 * phi_want);
    }

    #[test]
    fn density_splits_into_retained_and_removed(
        (d, a) in case(), m in 0.0..3.0f64, r in 1e-3..20.0f64,
    ) {
        let q = p(d, a, m);
        let j = levy_density(r, &q).unwrap();
        let jm = removed_density(r, &q).unwrap();
        let stable = stable_constant(&q) * r.powf(-(d as f64) - a);
        // Huge m^{1/α} underflows ψ, so only nonnegativity is guaranteed.
        prop_assert!(j >= 0.0 && jm >= 0.0);
        prop_assert!((j + jm - stable).abs() <= 1e-10 * stable);
    }
}
