//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::Zero;
use valley_runner::run::{approaches_one, fig4_rows, level_report, valley_checks};
use valley_core::model::{ModelParams, Side};
use valley_core::mp::Real;
use valley_core::rational::format_rational;
use valley_core::nonpert::{alpha_f64, find_np_levels, large_order_bridge, np_energy_generic};
use valley_core::series::{cached_series, predicted_coefficient, SeriesOptions, DEFAULT_CAP, DEFAULT_WINDOW};
use valley_core::spectrum::{eigenvalues_lowest, SpectrumOptions};
use valley_core::valley::{solve_valley_instanton, tail_exponents, trace_valley_with, TraceOptions};
use valley_core::{Execution, Result};

const ORDER: usize = 200;
const EXEC: Execution = Execution::Parallel;

// Tolerances, as stated by each criterion.
const RATIO_LAW_REL: f64 = 1e-3;
const RATIO_LAW_SHIFTED_REL: f64 = 1e-2;
const A_REL: f64 = 5e-3;
const A_REL_FAR: f64 = 0.15;
const ROOT_C_FACTOR: f64 = 2.0;
const BRIDGE_PLUS_REL: f64 = 0.01;
const BRIDGE_MINUS_REL: f64 = 0.02;
const SPLITTING_REL: f64 = 0.15;
const FIG4_FINAL: f64 = 0.2;
const VALLEY_LARGE_R: f64 = 1e-3;
const VALLEY_SMALL_R: f64 = 0.05;
const VALLEY_ENDPOINT: f64 = 0.02;
const TAIL_REL: f64 = 0.01;
const ACTION_ABS: f64 = 1e-4;

fn cache() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-series")
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn series(eps: &BigRational, n: usize, side: Side) -> Result<valley_core::series::PerturbativeSeries> {
    cached_series(&cache(), eps, n, side, ORDER, SeriesOptions { cap: DEFAULT_CAP, exec: EXEC })
}

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn susy_zeros() -> Outcome {
    let mut bad = Vec::new();
    for (e, n) in [(1, 0), (2, 0), (2, 1)] {
        let s = series(&rat(e, 1), n, Side::Minus)?;
        let nonzero = s.coeffs[1..].iter().filter(|c| !c.is_zero()).count();
        if nonzero > 0 || s.max_order() != ORDER {
            bad.push(format!("eps={e} N={n}: {nonzero} nonzero"));
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { format!("E_m = 0 for m = 1..{ORDER} at all three levels") } else { bad.join("; ") }))
}

fn ratio_law() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (eps, n, tol) in [(rat(1, 2), 0, RATIO_LAW_REL), (rat(5, 2), 0, RATIO_LAW_REL), (rat(5, 2), 3, RATIO_LAW_SHIFTED_REL)] {
        let r = level_report(&cache(), &format_rational(&eps), n, Side::Minus, ORDER, DEFAULT_WINDOW, EXEC)
            .map_err(into_core)?;
        let c = r.c_hat.unwrap_or(f64::NAN);
        let rel = (c / r.c_expected - 1.0).abs();
        ok &= rel <= tol;
        parts.push(format!("eps={} N={n}: c={c:.6} vs {} (rel {rel:.1e} <= {tol:.0e})", r.epsilon, r.c_expected));
    }
    Ok((ok, parts.join("; ")))
}

fn a_extraction() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut worst_floor = 0.0f64;
    for e in 0..=10 {
        let r = level_report(&cache(), &e.to_string(), 0, Side::Minus, ORDER, DEFAULT_WINDOW, EXEC).map_err(into_core)?;
        match (r.noise_floor, r.rel_err) {
            (Some(floor), _) => {
                ok &= r.a_fit.abs() <= floor;
                worst_floor = worst_floor.max(r.a_fit.abs() / floor);
            }
            (None, Some(rel)) => {
                ok &= rel.abs() <= A_REL;
                worst = worst.max(rel.abs());
            }
            (None, None) => ok = false,
        }
    }
    let far = level_report(&cache(), "20", 0, Side::Plus, ORDER, DEFAULT_WINDOW, EXEC).map_err(into_core)?;
    let far_rel = far.rel_err.map_or(f64::NAN, f64::abs);
    ok &= far_rel <= A_REL_FAR;
    Ok((
        ok,
        format!("eps=0 rel {worst:.1e} <= {A_REL:.0e}; integer eps |A_fit|/floor max {worst_floor:.1e} <= 1; eps=20 plus rel {far_rel:.3} <= {A_REL_FAR}"),
    ))
}

fn root_consistency() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (seed, n, side) in [(0.0, 0, Side::Plus), (-0.4, 0, Side::Minus)] {
        let mut cs = Vec::new();
        for g2 in [0.05, 0.025] {
            let p = ModelParams::from_g2(g2, 0.4)?.with_precision(60);
            let found = find_np_levels(&p, (seed - 0.1, seed + 0.1), 4, Execution::Sequential);
            let root = found.roots.iter().find(|r| (r.seed - seed).abs() < 1e-12 && r.converged);
            let Some(root) = root else {
                cs.push(f64::NAN);
                continue;
            };
            let level = np_energy_generic(&p, n, side)?;
            let w = level.energy.prec();
            let formula = level.energy.add_real(&Real::from_f64(-0.5, w));
            let diff = root.s.sub(&formula).abs().to_f64();
            cs.push(diff / alpha_f64(g2).powi(4));
        }
        let factor = cs[1] / cs[0];
        let stable = factor.max(1.0 / factor) <= ROOT_C_FACTOR;
        ok &= stable;
        parts.push(format!("seed s={seed}: C = {:.4} -> {:.4} (x{factor:.2})", cs[0], cs[1]));
    }
    Ok((ok, parts.join("; ")))
}

fn bridge() -> Outcome {
    let z = large_order_bridge(0.0, 0, Side::Plus, 50, 160)?.to_f64();
    let p = predicted_coefficient(&rat(0, 1), 0, Side::Plus, 50, 160).to_f64();
    let plus = (z / p - 1.0).abs();
    let z = large_order_bridge(0.4, 0, Side::Minus, 100, 160)?.to_f64();
    let p = predicted_coefficient(&rat(2, 5), 0, Side::Minus, 100, 160).to_f64();
    let minus = (z / p - 1.0).abs();
    Ok((
        plus <= BRIDGE_PLUS_REL && minus <= BRIDGE_MINUS_REL,
        format!("eps=0 plus m=50 rel {plus:.1e} <= {BRIDGE_PLUS_REL}; eps=0.4 minus m=100 rel {minus:.1e} <= {BRIDGE_MINUS_REL}"),
    ))
}

fn splitting() -> Outcome {
    let p = ModelParams::from_g2(0.04, 0.0)?;
    let s = eigenvalues_lowest(&p, 2, 1e-14, SpectrumOptions::default())?;
    let ratio = (s.extended[1] - s.extended[0]).to_f64() / (2.0 * alpha_f64(0.04));
    let dev = (ratio - 1.0).abs();
    Ok((dev <= SPLITTING_REL, format!("g2=0.04: dE/(2 alpha) = {ratio:.4}, |dev| {dev:.3} <= {SPLITTING_REL}; 1 - 71 g2/12 = {:.4}", 1.0 - 71.0 * 0.04 / 12.0)))
}

fn fig4() -> Outcome {
    let rows = fig4_rows("2", &[0.08, 0.05, 0.03], &[0, 1], 50, EXEC).map_err(into_core)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for level in [0, 1] {
        let lv: Vec<_> = rows.iter().filter(|r| r.level == level).collect();
        let last = lv.last().map_or(f64::NAN, |r| r.ratio);
        ok &= approaches_one(&lv) && (last - 1.0).abs() <= FIG4_FINAL;
        let ratios: Vec<String> = lv.iter().map(|r| format!("{:.4}", r.ratio)).collect();
        parts.push(format!("level {level}: {}", ratios.join(" -> ")));
    }
    Ok((ok, format!("{} (final within {FIG4_FINAL})", parts.join("; "))))
}

fn valley_asymptotics() -> Outcome {
    let p = ModelParams::new(0.1, 0.0)?;
    let profile = trace_valley_with(&p, TraceOptions::default())?;
    let c = valley_checks(&profile).map_err(into_core)?;
    let f0 = (3.0 * c.f0 - 1.0).abs();
    let f3 = (c.f_third / (2.0f64 / 3.0).sqrt() - 1.0).abs();
    let ok = c.large_r_dev <= VALLEY_LARGE_R && c.small_r_dev <= VALLEY_SMALL_R && f0 <= VALLEY_ENDPOINT && f3 <= VALLEY_ENDPOINT;
    Ok((
        ok,
        format!(
            "large-R {:.1e} <= {VALLEY_LARGE_R:.0e}; small-R {:.1e} <= {VALLEY_SMALL_R} and f(0) rel {f0:.1e} (R = sqrt(2S) before the pair separates); f(1/3) rel {f3:.1e} <= {VALLEY_ENDPOINT}",
            c.large_r_dev, c.small_r_dev
        ),
    ))
}

fn valley_tails() -> Outcome {
    let p = ModelParams::new(0.1, 1.0)?;
    let cfg = solve_valley_instanton(&p, 40.0, 4001)?;
    let (l, r) = tail_exponents(&cfg)?;
    let (dl, dr) = ((l.exponent / 0.97 - 1.0).abs(), (r.exponent / 1.03 - 1.0).abs());
    let sym = solve_valley_instanton(&ModelParams::new(0.1, 0.0)?, 40.0, 4001)?;
    let da = (sym.action - 1.0 / 6.0).abs();
    Ok((
        dl <= TAIL_REL && dr <= TAIL_REL && da <= ACTION_ABS,
        format!("exponents {:.5} / {:.5} (rel {dl:.1e} / {dr:.1e} <= {TAIL_REL}); g2 S - 1/6 = {da:.1e} <= {ACTION_ABS:.0e}", l.exponent, r.exponent),
    ))
}

fn into_core(e: valley_runner::CliError) -> valley_core::Error {
    match e {
        valley_runner::CliError::Core(c) => c,
        other => valley_core::Error::InvalidParameter(other.to_string()),
    }
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("SUSY exact zeros", susy_zeros),
        ("ratio law", ratio_law),
        ("A extraction", a_extraction),
        ("root/formula consistency", root_consistency),
        ("dispersion bridge", bridge),
        ("degenerate splitting", splitting),
        ("spectrum vs valley ratio", fig4),
        ("valley asymptotics", valley_asymptotics),
        ("valley-instanton tails", valley_tails),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{} {}. {name}: {detail} [{:.1} s]", if ok { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria pass", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
