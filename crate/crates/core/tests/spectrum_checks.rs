use num_rational::BigRational;
use proptest::prelude::*;
use valley_core::model::{ModelParams, Side};
use valley_core::nonpert::{alpha, np_energy_degenerate, np_energy_generic};
use valley_core::series::compute_series;
use valley_core::spectrum::{band_lowest, build_hamiltonian, default_center, delta_e, eigenvalues_lowest, SpectrumOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalues_never_rise_with_basis(g2 in 0.02f64..0.12, eps in 0.0f64..1.5) {
        let p = ModelParams::from_g2(g2, eps).unwrap();
        let c = default_center(&p);
        let small = band_lowest(build_hamiltonian(&p, 40, c, 1.0).unwrap(), 4);
        let large = band_lowest(build_hamiltonian(&p, 80, c, 1.0).unwrap(), 4);
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(l.to_f64() <= s.to_f64() + 1e-13);
        }
    }

    #[test]
    fn converged_levels_ignore_basis_placement(g2 in 0.03f64..0.1, eps in 0.0f64..1.0, shift in -1.0f64..1.0, scale in 0.7f64..1.4) {
        let p = ModelParams::from_g2(g2, eps).unwrap();
        let a = eigenvalues_lowest(&p, 3, 1e-12, SpectrumOptions::default()).unwrap();
        let opts = SpectrumOptions { center: Some(default_center(&p) + shift), scale, ..Default::default() };
        let b = eigenvalues_lowest(&p, 3, 1e-12, opts).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
        }
        prop_assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn free_limit_is_union_of_well_spectra() {
    let p = ModelParams::from_g2(2e-4, 0.3).unwrap();
    let r = eigenvalues_lowest(&p, 4, 1e-12, SpectrumOptions::default()).unwrap();
    let expected = [-0.3 + 0.5, 0.5, -0.3 + 1.5, 1.5];
    for (e, x) in r.eigenvalues.iter().zip(expected) {
        assert!((e - x).abs() < 5e-3, "{e} vs {x}");
    }
}

#[test]
fn truncated_series_tracks_the_spectrum() {
    // the plus ground level is the second eigenvalue at ε = 1/2
    let half = BigRational::new(1.into(), 2.into());
    let series = compute_series(&half, 0, Side::Plus, 60).unwrap();
    for g2 in [0.02, 0.01] {
        let p = ModelParams::from_g2(g2, 0.5).unwrap();
        let r = eigenvalues_lowest(&p, 2, 1e-14, SpectrumOptions::default()).unwrap();
        let (sum, smallest) = series.optimal_truncation(g2);
        assert!((r.eigenvalues[1] - sum).abs() <= smallest, "g2={g2}");
    }
}

#[test]
fn half_integer_ground_state_is_series_plus_real_shift() {
    let half = BigRational::new(1.into(), 2.into());
    let series = compute_series(&half, 0, Side::Minus, 60).unwrap();
    let p = ModelParams::from_g2(0.04, 0.5).unwrap();
    let r = eigenvalues_lowest(&p, 1, 1e-14, SpectrumOptions::default()).unwrap();
    let (sum, smallest) = series.optimal_truncation(0.04);
    let shift = np_energy_generic(&p, 0, Side::Minus).unwrap().shift().re.to_f64();
    assert!((r.eigenvalues[0] - sum - shift).abs() <= smallest);
}

#[test]
fn susy_ground_state_shift_is_nonperturbative() {
    // perturbative corrections vanish at ε = 1, leaving α² g²/2
    let mut last = f64::INFINITY;
    for g2 in [0.05, 0.03, 0.02] {
        let p = ModelParams::from_g2(g2, 1.0).unwrap();
        let de = delta_e(&p, 0, -0.5, 1e-15).unwrap();
        let a = alpha(&p).to_f64();
        let dev = (de / (a * a * g2 / 2.0) - 1.0).abs();
        assert!(dev < last && dev < 0.06, "g2={g2} dev={dev}");
        last = dev;
    }
}

#[test]
fn symmetric_pair_splitting_is_of_order_alpha() {
    let mut last = f64::INFINITY;
    for g2 in [0.04, 0.02, 0.01] {
        let p = ModelParams::from_g2(g2, 0.0).unwrap();
        let r = eigenvalues_lowest(&p, 2, 1e-15, SpectrumOptions::default()).unwrap();
        let split = (r.extended[1] - r.extended[0]).to_f64();
        let up = np_energy_degenerate(&p, 0, 0, true).unwrap().energy_f64().0;
        let down = np_energy_degenerate(&p, 0, 0, false).unwrap().energy_f64().0;
        let dev = (split / (up - down) - 1.0).abs();
        assert!(dev < last, "g2={g2}");
        last = dev;
    }
    assert!(last < 0.07);
}
