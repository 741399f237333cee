use num_rational::BigRational;
use valley_core::model::{ModelParams, Side};
use valley_core::nonpert::{alpha_f64, find_np_levels, gamma_integral_check, large_order_bridge, np_energy_generic, np_seeds};
use valley_core::series::{predicted_a, predicted_coefficient};
use valley_core::Execution;

fn root_near(params: &ModelParams, seed: f64) -> f64 {
    let found = find_np_levels(params, (seed - 0.1, seed + 0.1), 4, Execution::Sequential);
    let r = found.roots.iter().find(|r| (r.seed - seed).abs() < 1e-12).expect("seed in window");
    assert!(r.converged, "seed {seed} did not converge");
    r.s.re.to_f64()
}

#[test]
fn right_well_root_matches_order_alpha_squared() {
    // |s_root - s_formula| / α⁴ should settle as g² shrinks
    let mut cs = Vec::new();
    for g2 in [0.05, 0.025] {
        let p = ModelParams::from_g2(g2, 0.4).unwrap().with_precision(60);
        let s = root_near(&p, -0.4);
        let f = np_energy_generic(&p, 0, Side::Minus).unwrap().energy_f64().0 - 0.5;
        let a = alpha_f64(g2);
        cs.push((s - f).abs() / a.powi(4));
    }
    let ratio = cs[0] / cs[1];
    assert!((0.5..=2.0).contains(&ratio), "{cs:?}");
}

#[test]
fn seeds_cover_both_pole_families() {
    let p = ModelParams::from_g2(0.05, 0.4).unwrap();
    let seeds = np_seeds(&p, (-1.0, 1.5));
    for want in [-0.4, 0.0, 0.6, 1.0] {
        assert!(seeds.iter().any(|s| (s - want).abs() < 1e-12), "{want} missing from {seeds:?}");
    }
}

#[test]
fn integer_epsilon_seeds_split_the_double_pole() {
    let p = ModelParams::from_g2(0.02, 1.0).unwrap();
    let seeds = np_seeds(&p, (-0.5, 0.5));
    assert_eq!(seeds.len(), 2, "{seeds:?}");
    assert!(seeds[0] < 0.0 && (seeds[0] + seeds[1]).abs() < 1e-15);
    // splitting α sqrt(2/g²) at N = 0, N0 = 1
    assert!((seeds[1] - alpha_f64(0.02) * 10.0).abs() < 1e-12);
}

#[test]
fn dispersion_integral_reproduces_large_order_growth() {
    let zero = BigRational::from_integer(0.into());
    let z = large_order_bridge(0.0, 0, Side::Plus, 50, 128).unwrap().to_f64();
    let pred = predicted_coefficient(&zero, 0, Side::Plus, 50, 128).to_f64();
    assert!((z / pred - 1.0).abs() < 0.01, "{z} vs {pred}");

    let eps = BigRational::new(2.into(), 5.into());
    let z = large_order_bridge(0.4, 0, Side::Minus, 100, 128).unwrap().to_f64();
    let pred = predicted_coefficient(&eps, 0, Side::Minus, 100, 128).to_f64();
    assert!((z / pred - 1.0).abs() < 0.02, "{z} vs {pred}");
}

#[test]
fn bridge_vanishes_where_the_amplitude_does() {
    let one = BigRational::from_integer(1.into());
    assert!(predicted_a(&one, 0, Side::Minus, 64).is_zero());
    assert_eq!(large_order_bridge(1.0, 0, Side::Minus, 40, 64).unwrap().to_f64(), 0.0);
}

#[test]
fn collective_coordinate_integral_is_a_gamma_function() {
    for (s, eps, g2) in [((-0.3, 0.0), 0.0, 0.1), ((-0.7, 0.2), 0.4, 0.05), ((-1.2, -0.5), 0.6, 0.2)] {
        let c = gamma_integral_check(s, eps, g2, 1e-12).unwrap();
        let scale = c.closed_form.0.hypot(c.closed_form.1);
        assert!((c.numeric.0 - c.closed_form.0).abs() < 1e-8 * scale, "{c:?}");
        assert!((c.numeric.1 - c.closed_form.1).abs() < 1e-8 * scale, "{c:?}");
    }
    assert!(gamma_integral_check((0.1, 0.0), 0.0, 0.1, 1e-10).is_err());
}
