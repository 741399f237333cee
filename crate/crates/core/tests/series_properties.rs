use num_rational::BigRational;
use proptest::prelude::*;
use valley_core::model::Side;
use valley_core::series::{cached_series, compute_series, compute_series_with, SeriesOptions};
use valley_core::Execution;

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

/// First-order coefficient from second-order perturbation theory in the oscillator basis.
fn first_order(eps: &BigRational, n: i64, side: Side) -> BigRational {
    let e = eps * BigRational::from_integer(side.sign().into());
    let n = BigRational::from_integer(n.into());
    let one = q(1, 1);
    -(q(3, 1) * &n * &n + q(3, 1) * &n + &one) - q(3, 2) * &e * (q(2, 1) * &n + &one) - q(1, 2) * &e * &e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leading_orders_match_closed_forms(p in 0i64..60, d in 1i64..12, n in 0usize..4, plus in any::<bool>()) {
        let side = if plus { Side::Plus } else { Side::Minus };
        let eps = q(p, d);
        let s = compute_series(&eps, n, side, 3).unwrap();
        let e0 = q(2 * n as i64 + 1, 2) - if plus { q(0, 1) } else { eps.clone() };
        prop_assert_eq!(&s.coeffs[0], &e0);
        prop_assert_eq!(&s.coeffs[1], &first_order(&eps, n as i64, side));
    }

    #[test]
    fn execution_modes_agree(p in 0i64..40, d in 1i64..8, n in 0usize..3, m in 4usize..24) {
        let eps = q(p, d);
        let seq = compute_series_with(&eps, n, Side::Minus, m, &SeriesOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
        let par = compute_series_with(&eps, n, Side::Minus, m, &SeriesOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn susy_points_have_no_perturbative_correction() {
    for (eps, n) in [(1, 0), (2, 0), (2, 1)] {
        let s = compute_series(&q(eps, 1), n, Side::Minus, 40).unwrap();
        assert!(s.coeffs[1..].iter().all(|c| *c == q(0, 1)), "eps={eps} N={n}");
    }
    // the partner levels are not protected
    let s = compute_series(&q(2, 1), 2, Side::Minus, 4).unwrap();
    assert!(s.coeffs[1] != q(0, 1));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let eps = q(7, 5);
    let a = cached_series(dir.path(), &eps, 1, Side::Plus, 30, SeriesOptions::default()).unwrap();
    let b = cached_series(dir.path(), &eps, 1, Side::Plus, 30, SeriesOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("eps_7_5_N1_plus_M30.csv").exists());
}
