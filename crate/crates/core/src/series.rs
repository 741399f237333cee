//! Exact perturbative coefficients and their large-order analysis.
//!
//! The recursion runs in the unnormalized oscillator basis `|n) = (a†)^n |0>`,
//! where `X = a + a†` acts as `X|n) = |n+1) + n|n-1)`. With `ε = p/q` and
//! `t = g/(2√2 q)` the left-well Hamiltonian is `H0 + t Q1 + t² Q2` with
//! `Q1 = -q X³ - 2p X` and `Q2 = q² X⁴`, so every coefficient is rational.
//! The right well is the same problem at `-ε`, shifted by `-ε`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::Side;
use crate::mp::{gamma_real, pi, rgamma_real, Real};
use crate::rational::{format_rational, is_integer, parse_rational, ratio_to_f64};

pub const DEFAULT_CAP: usize = 250;
pub const DEFAULT_WINDOW: (usize, usize) = (150, 200);
/// Working precision (bits) for the fits; the inputs are exact.
const FIT_BITS: u32 = 384;

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbativeSeries {
    pub epsilon: BigRational,
    pub n: usize,
    pub side: Side,
    /// `E_0 ..= E_M`, coefficients of `g^(2m)`.
    pub coeffs: Vec<BigRational>,
    /// False when `ε` was rounded before the exact recursion.
    pub exact: bool,
}

impl PerturbativeSeries {
    pub fn max_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff_f64(&self, m: usize) -> f64 {
        let c = &self.coeffs[m];
        ratio_to_f64(c.numer(), c.denom())
    }

    /// Partial sum through order `m_max` at coupling `g²`.
    pub fn partial_sum(&self, g2: f64, m_max: usize) -> f64 {
        let mut acc = 0.0;
        let mut pw = 1.0;
        for m in 0..=m_max.min(self.max_order()) {
            acc += self.coeff_f64(m) * pw;
            pw *= g2;
        }
        acc
    }

    /// Sum truncated before the smallest term; returns `(sum, smallest term)`.
    pub fn optimal_truncation(&self, g2: f64) -> (f64, f64) {
        let mut best = (0usize, f64::INFINITY);
        let mut pw = 1.0;
        for m in 1..=self.max_order() {
            pw *= g2;
            let t = (self.coeff_f64(m) * pw).abs();
            if t < best.1 {
                best = (m, t);
            } else if t > 10.0 * best.1 {
                break;
            }
        }
        (self.partial_sum(g2, best.0.saturating_sub(1)), best.1)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SeriesOptions {
    pub cap: usize,
    pub exec: Execution,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { cap: DEFAULT_CAP, exec: Execution::default() }
    }
}

/// Coefficient vector with a shared denominator.
#[derive(Clone)]
struct Scaled {
    v: Vec<BigInt>,
    d: BigInt,
}

fn apply_x(v: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); v.len() + 1];
    for (n, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out[n + 1] += c;
        if n > 0 {
            out[n - 1] += c * BigInt::from(n);
        }
    }
    out
}

/// Raw coefficients `ê_k` of `t^k` for the left well at `ε = p/q`.
fn raw_energies(p: &BigInt, q: &BigInt, level: usize, kmax: usize, exec: Execution) -> Vec<BigRational> {
    let mut psi: Vec<Scaled> = Vec::with_capacity(kmax + 1);
    let mut e: Vec<BigRational> = Vec::with_capacity(kmax + 1);
    let mut v0 = vec![BigInt::zero(); level + 1];
    v0[level] = BigInt::one();
    psi.push(Scaled { v: v0, d: BigInt::one() });
    e.push(BigRational::zero());
    let two_p = p * 2;
    let q2 = q * q;
    for k in 1..=kmax {
        let len = level + 3 * k + 1;
        // S = Q1 ψ_{k-1} + Q2 ψ_{k-2} as num/den
        let a = &psi[k - 1];
        let x1 = apply_x(&a.v);
        let x3 = apply_x(&apply_x(&x1));
        let mut t1 = vec![BigInt::zero(); len];
        for (n, c) in x3.iter().enumerate() {
            t1[n] -= c * q;
        }
        for (n, c) in x1.iter().enumerate() {
            t1[n] -= c * &two_p;
        }
        let (num, den) = if k >= 2 {
            let b = &psi[k - 2];
            let y = apply_x(&apply_x(&apply_x(&apply_x(&b.v))));
            let l = a.d.lcm(&b.d);
            let fa = &l / &a.d;
            let fb = (&l / &b.d) * &q2;
            let mut num: Vec<BigInt> = t1.iter().map(|c| c * &fa).collect();
            for (n, c) in y.iter().enumerate() {
                num[n] += c * &fb;
            }
            (num, l)
        } else {
            (t1, a.d.clone())
        };
        let ek = BigRational::new(num[level].clone(), den.clone());

        // R = -S + Σ_j ê_j ψ_{k-j}, then ψ_k[n] = R[n] / (n - N)
        let mut l = den.clone();
        let mut terms = Vec::new();
        for j in 1..k {
            if e[j].is_zero() {
                continue;
            }
            l = l.lcm(&(e[j].denom() * &psi[k - j].d));
            terms.push(j);
        }
        let f0 = &l / &den;
        let factors: Vec<(usize, BigInt)> = terms
            .iter()
            .map(|&j| (j, e[j].numer() * (&l / (e[j].denom() * &psi[k - j].d))))
            .collect();
        let mut r: Vec<BigInt> = exec.for_len(len, 64).map_range(0..len, |n| {
            let mut acc = -(&num[n] * &f0);
            for (j, c) in &factors {
                if let Some(x) = psi[k - j].v.get(n) {
                    if !x.is_zero() {
                        acc += x * c;
                    }
                }
            }
            acc
        });
        r[level] = BigInt::zero();
        let mut m = BigInt::one();
        for (n, x) in r.iter().enumerate() {
            if n != level && !x.is_zero() {
                m = m.lcm(&BigInt::from(n.abs_diff(level)));
            }
        }
        for (n, x) in r.iter_mut().enumerate() {
            if n != level && !x.is_zero() {
                let dn = n as i64 - level as i64;
                *x = &*x * (&m / BigInt::from(dn.abs())) * dn.signum();
            }
        }
        let mut d = l * m;
        let mut gcd = d.clone();
        for x in r.iter() {
            if !x.is_zero() {
                gcd = gcd.gcd(x);
                if gcd.is_one() {
                    break;
                }
            }
        }
        if !gcd.is_one() {
            for x in r.iter_mut() {
                *x = &*x / &gcd;
            }
            d /= &gcd;
        }
        psi.push(Scaled { v: r, d });
        e.push(ek);
    }
    e
}

/// Exact coefficients `E_0..=E_M` of level `N` in the well selected by `side`.
pub fn compute_series(epsilon: &BigRational, n: usize, side: Side, m: usize) -> Result<PerturbativeSeries> {
    compute_series_with(epsilon, n, side, m, &SeriesOptions::default())
}

pub fn compute_series_with(
    epsilon: &BigRational,
    n: usize,
    side: Side,
    m: usize,
    opts: &SeriesOptions,
) -> Result<PerturbativeSeries> {
    if m > opts.cap {
        return Err(Error::CapExceeded { requested: m, cap: opts.cap });
    }
    if epsilon.is_negative() {
        return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let eff = epsilon * BigRational::from_integer(side.sign().into());
    let (p, q) = (eff.numer().clone(), eff.denom().clone());
    let raw = raw_energies(&p, &q, n, 2 * m, opts.exec);
    let mut coeffs = Vec::with_capacity(m + 1);
    let half = BigRational::new(1.into(), 2.into());
    let e0 = BigRational::from_integer(n.into()) + half;
    coeffs.push(if side == Side::Plus { e0 } else { e0 - epsilon });
    let four_q2 = BigInt::from(4) * &q * &q;
    let mut scale = BigInt::one();
    for k in 1..=m {
        assert!(raw[2 * k - 1].is_zero(), "odd-order energy must vanish");
        scale = scale * &four_q2 * 2;
        coeffs.push(&raw[2 * k] / BigRational::from_integer(scale.clone()));
    }
    Ok(PerturbativeSeries { epsilon: epsilon.clone(), n, side, coeffs, exact: true })
}

/// Float-parameter entry point: `ε` is rounded to `bits` binary digits and the
/// result flagged non-exact. Use [`compute_series`] whenever `ε` is a known rational.
pub fn compute_series_rounded(epsilon: &Real, n: usize, side: Side, m: usize, bits: u32) -> Result<PerturbativeSeries> {
    let r = epsilon.with_prec(bits).to_ratio();
    let mut s = compute_series(&r, n, side, m)?;
    s.exact = false;
    Ok(s)
}

/// Parses `ε` for exact mode; anything that is not a literal rational is rejected.
pub fn exact_epsilon(s: &str) -> Result<BigRational> {
    parse_rational(s)
}

/// `b = ±ε + 2N`.
pub fn gamma_shift(epsilon: &BigRational, n: usize, side: Side) -> BigRational {
    epsilon * BigRational::from_integer(side.sign().into()) + BigRational::from_integer((2 * n).into())
}

/// `E_m ≈ A · 3^m · Γ(b + m + 1)`.
#[derive(Clone, Debug)]
pub struct LargeOrderModel {
    pub a: Real,
    pub b: BigRational,
    pub scale: u32,
}

impl LargeOrderModel {
    pub fn new(epsilon: &BigRational, n: usize, side: Side, bits: u32) -> LargeOrderModel {
        LargeOrderModel { a: predicted_a(epsilon, n, side, bits), b: gamma_shift(epsilon, n, side), scale: 3 }
    }

    pub fn coefficient(&self, m: usize) -> Real {
        let bits = self.a.prec();
        if self.a.is_zero() {
            return Real::zero(bits);
        }
        let arg = Real::from_ratio(&self.b, bits + 16).add(&Real::from_i64(m as i64 + 1, bits + 16));
        let g = gamma_real(&arg).expect("Γ(b+m+1) finite when A ≠ 0");
        self.a.mul(&Real::from_i64(self.scale as i64, bits + 16).powi(m as i64)).mul(&g).with_prec(bits)
    }
}

/// `A = -(3/π) 6^b / (N! Γ(±ε + 1 + N))`; exactly zero on a pole of the Γ in the denominator.
pub fn predicted_a(epsilon: &BigRational, n: usize, side: Side, bits: u32) -> Real {
    let w = bits + 32;
    let b = gamma_shift(epsilon, n, side);
    let arg = epsilon * BigRational::from_integer(side.sign().into()) + BigRational::from_integer((n + 1).into());
    let rg = rgamma_real(&Real::from_ratio(&arg, w));
    if rg.is_zero() {
        return Real::zero(bits);
    }
    let mut fact = Real::one(w);
    for k in 2..=n {
        fact = fact.mul_i64(k as i64);
    }
    let six_b = Real::from_i64(6, w).powr(&Real::from_ratio(&b, w));
    Real::from_i64(-3, w).div(&pi(w)).mul(&six_b).mul(&rg).div(&fact).with_prec(bits)
}

pub fn predicted_coefficient(epsilon: &BigRational, n: usize, side: Side, m: usize, bits: u32) -> Real {
    LargeOrderModel::new(epsilon, n, side, bits).coefficient(m)
}

fn check_window(series: &PerturbativeSeries, window: (usize, usize)) -> Result<()> {
    let (lo, hi) = window;
    if lo < 2 || hi > series.max_order() || hi < lo + 9 {
        return Err(Error::Window { lo, hi, max: series.max_order() });
    }
    Ok(())
}

/// Least-squares polynomial in `x` evaluated at `x = 0`, in multiprecision.
fn ls_intercept(xs: &[Real], ys: &[Real], degree: usize) -> Real {
    let w = FIT_BITS;
    let k = degree + 1;
    let mut a = vec![vec![Real::zero(w); k]; k];
    let mut rhs = vec![Real::zero(w); k];
    for (x, y) in xs.iter().zip(ys) {
        let mut pw = vec![Real::one(w); 2 * k - 1];
        for i in 1..2 * k - 1 {
            pw[i] = pw[i - 1].mul(x);
        }
        for i in 0..k {
            rhs[i] = rhs[i].add(&pw[i].mul(y));
            for j in 0..k {
                a[i][j] = a[i][j].add(&pw[i + j]);
            }
        }
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        rhs.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c].div(&a[c][c]);
            for j in c..k {
                let t = a[c][j].mul(&f);
                a[r][j] = a[r][j].sub(&t);
            }
            let t = rhs[c].mul(&f);
            rhs[r] = rhs[r].sub(&t);
        }
    }
    let mut sol = vec![Real::zero(w); k];
    for c in (0..k).rev() {
        let mut s = rhs[c].clone();
        for j in c + 1..k {
            s = s.sub(&a[c][j].mul(&sol[j]));
        }
        sol[c] = s.div(&a[c][c]);
    }
    sol.swap_remove(0)
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioFit {
    pub window: (usize, usize),
    /// Intercept of `r_m/3 - m = c + d/m + …` at `m → ∞`.
    pub c_hat: f64,
    /// Plain mean of `r_m/3 - m` over the window (biased by `O(1/m)`).
    pub c_naive: f64,
    pub degree: usize,
    /// `(m, r_m/3 - m)` samples.
    pub samples: Vec<(usize, f64)>,
}

/// Ratio test `r_m = E_m/E_{m-1} = 3(m + c) + O(1/m)`.
pub fn ratio_diagnostic(series: &PerturbativeSeries, window: (usize, usize)) -> Result<RatioFit> {
    ratio_diagnostic_deg(series, window, 3)
}

pub fn ratio_diagnostic_deg(series: &PerturbativeSeries, window: (usize, usize), degree: usize) -> Result<RatioFit> {
    check_window(series, window)?;
    let w = FIT_BITS;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut samples = Vec::new();
    for m in window.0..=window.1 {
        let (num, den) = (&series.coeffs[m], &series.coeffs[m - 1]);
        if den.is_zero() {
            return Err(Error::ZeroCoefficient(m - 1));
        }
        if num.is_zero() {
            return Err(Error::ZeroCoefficient(m));
        }
        let r = Real::from_ratio(&(num / den), w);
        let y = r.div_i64(3).sub(&Real::from_i64(m as i64, w));
        samples.push((m, y.to_f64()));
        xs.push(Real::from_i64(window.0 as i64, w).div_i64(m as i64));
        ys.push(y);
    }
    let c_naive = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let c_hat = ls_intercept(&xs, &ys, degree).to_f64();
    Ok(RatioFit { window, c_hat, c_naive, degree, samples })
}

#[derive(Clone, Debug, Serialize)]
pub struct AExtraction {
    pub window: (usize, usize),
    pub a_fit: f64,
    pub error_bar: f64,
    /// Extrapolated value for each polynomial order `0..=max_order`.
    pub by_order: Vec<f64>,
    /// `a_m = E_m / (3^m Γ(b+m+1))` at the window ends.
    pub a_lo: f64,
    pub a_hi: f64,
}

pub const EXTRACT_ORDERS: usize = 5;

/// `Γ(b + m + 1) / Γ(c)` as an exact product, with `c = b + m0 + 1` the first positive argument.
fn gamma_telescope(b: &BigRational, m: usize) -> Result<(BigRational, BigRational)> {
    let one = BigRational::one();
    let mut m0 = 0usize;
    while (b + BigRational::from_integer(m0.into()) + &one) <= BigRational::zero() {
        m0 += 1;
    }
    if m < m0 {
        return Err(Error::Window { lo: m, hi: m, max: m0 });
    }
    let c = b + BigRational::from_integer(m0.into()) + &one;
    let mut prod = BigRational::one();
    for j in (m0 + 1)..=m {
        prod *= b + BigRational::from_integer(j.into());
    }
    Ok((c, prod))
}

/// Fits `A` from `a_m = E_m / (3^m Γ(b+m+1))` by polynomial extrapolation in `1/m`.
///
/// The Γ ratio is telescoped exactly, so only `O(1)`-sized numbers are rounded.
pub fn extract_a(series: &PerturbativeSeries, window: (usize, usize)) -> Result<AExtraction> {
    extract_a_orders(series, window, EXTRACT_ORDERS)
}

pub fn extract_a_orders(series: &PerturbativeSeries, window: (usize, usize), max_order: usize) -> Result<AExtraction> {
    check_window(series, window)?;
    if max_order + 2 > window.1 - window.0 + 1 {
        return Err(Error::PrecisionLoss(format!("order {max_order} needs more than {} samples", window.1 - window.0 + 1)));
    }
    let w = FIT_BITS;
    let b = gamma_shift(&series.epsilon, series.n, series.side);
    let (c, _) = gamma_telescope(&b, window.0)?;
    let gc = gamma_real(&Real::from_ratio(&c, w + 32)).expect("c > 0");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let three = BigInt::from(3);
    for m in window.0..=window.1 {
        let (_, prod) = gamma_telescope(&b, m)?;
        let denom = prod * BigRational::from_integer(num_traits::pow(three.clone(), m));
        let r = &series.coeffs[m] / denom;
        ys.push(Real::from_ratio(&r, w + 32).div(&gc).with_prec(w));
        xs.push(Real::from_i64(window.0 as i64, w).div_i64(m as i64));
    }
    let by_order: Vec<f64> = (0..=max_order).map(|d| ls_intercept(&xs, &ys, d).to_f64()).collect();
    let a_fit = by_order[max_order];
    let error_bar = (by_order[max_order] - by_order[max_order - 1]).abs();
    Ok(AExtraction {
        window,
        a_fit,
        error_bar,
        by_order,
        a_lo: ys[0].to_f64(),
        a_hi: ys.last().unwrap().to_f64(),
    })
}

#[derive(Serialize, Deserialize)]
struct SeriesMeta {
    epsilon: String,
    #[serde(rename = "N")]
    n: usize,
    side: Side,
    #[serde(rename = "M")]
    m: usize,
    exact: bool,
}

/// Writes `<stem>.csv` with columns `m,numerator,denominator` and `<stem>.json` metadata.
pub fn write_series(series: &PerturbativeSeries, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    w.write_record(["m", "numerator", "denominator"])?;
    for (m, c) in series.coeffs.iter().enumerate() {
        w.write_record([m.to_string(), c.numer().to_string(), c.denom().to_string()])?;
    }
    w.flush()?;
    let meta = SeriesMeta {
        epsilon: format_rational(&series.epsilon),
        n: series.n,
        side: series.side,
        m: series.max_order(),
        exact: series.exact,
    };
    let mut f = std::fs::File::create(dir.join(format!("{stem}.json")))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    writeln!(f)?;
    Ok(())
}

pub fn read_series(dir: &Path, stem: &str) -> Result<PerturbativeSeries> {
    let meta: SeriesMeta = serde_json::from_reader(std::fs::File::open(dir.join(format!("{stem}.json")))?)?;
    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    let mut coeffs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |_| Error::InvalidParameter(format!("corrupt series file {stem}"));
        let n: BigInt = rec[1].parse().map_err(bad)?;
        let d: BigInt = rec[2].parse().map_err(bad)?;
        coeffs.push(BigRational::new(n, d));
    }
    if coeffs.len() != meta.m + 1 {
        return Err(Error::InvalidParameter(format!("series file {stem} truncated")));
    }
    Ok(PerturbativeSeries { epsilon: parse_rational(&meta.epsilon)?, n: meta.n, side: meta.side, coeffs, exact: meta.exact })
}

/// Canonical file stem for a level, e.g. `eps_5_2_N0_minus_M200`.
pub fn series_stem(epsilon: &BigRational, n: usize, side: Side, m: usize) -> String {
    format!("eps_{}_N{n}_{side}_M{m}", format_rational(epsilon).replace('/', "_"))
}

/// Whether `A` vanishes identically for this level (integer `ε` on a Γ pole).
pub fn a_vanishes(epsilon: &BigRational, n: usize, side: Side) -> bool {
    side == Side::Minus && is_integer(epsilon) && epsilon.to_integer().to_usize().is_some_and(|e| e > n)
}

/// Relative size below which an extracted `A` counts as zero, measured against
/// the predicted `A` at `ε - 1/2`.
pub const NOISE_FLOOR_REL: f64 = 1e-10;

/// Absolute noise floor for `A` at an integer `ε` where it vanishes.
pub fn a_noise_floor(epsilon: &BigRational, n: usize, side: Side) -> f64 {
    let shifted = epsilon - BigRational::new(1.into(), 2.into());
    NOISE_FLOOR_REL * predicted_a(&shifted, n, side, FIT_BITS).to_f64().abs()
}

/// Loads `<dir>/<stem>` if present, otherwise computes the series and stores it.
pub fn cached_series(dir: &Path, epsilon: &BigRational, n: usize, side: Side, m: usize, opts: SeriesOptions) -> Result<PerturbativeSeries> {
    let stem = series_stem(epsilon, n, side, m);
    if dir.join(format!("{stem}.json")).exists() {
        if let Ok(s) = read_series(dir, &stem) {
            if &s.epsilon == epsilon && s.n == n && s.side == side {
                return Ok(s);
            }
        }
    }
    let s = compute_series_with(epsilon, n, side, m, &opts)?;
    write_series(&s, dir, &stem)?;
    Ok(s)
}

/// Large-order comparison for one level.
#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub epsilon: String,
    pub n: usize,
    pub side: Side,
    pub max_order: usize,
    pub a_theory: f64,
    pub a_fit: f64,
    pub a_error: f64,
    /// `A_fit/A_theory - 1`, absent when `A` vanishes.
    pub rel_err: Option<f64>,
    /// Set when `A` vanishes: the threshold `|A_fit|` must stay under.
    pub noise_floor: Option<f64>,
    pub c_hat: Option<f64>,
    pub c_expected: f64,
}

impl LevelReport {
    /// `|ĉ - c| / max(1, |c|)`.
    pub fn c_err(&self) -> Option<f64> {
        self.c_hat.map(|c| (c - self.c_expected).abs() / self.c_expected.abs().max(1.0))
    }

    pub fn a_ok(&self, rel_tol: f64) -> bool {
        match (self.rel_err, self.noise_floor) {
            (_, Some(floor)) => self.a_fit.abs() <= floor,
            (Some(r), None) => r.abs() <= rel_tol,
            (None, None) => false,
        }
    }
}

/// Extracted against predicted `A`, plus the ratio fit, over `window`.
/// Vanishing coefficients make both fits inapplicable; `A_fit` is then reported as zero.
pub fn analyze_level(series: &PerturbativeSeries, window: (usize, usize)) -> Result<LevelReport> {
    let (eps, n, side) = (&series.epsilon, series.n, series.side);
    let a_theory = predicted_a(eps, n, side, FIT_BITS).to_f64();
    let (a_fit, a_error) = match extract_a(series, window) {
        Ok(x) => (x.a_fit, x.error_bar),
        Err(Error::ZeroCoefficient(_)) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let c_hat = match ratio_diagnostic(series, window) {
        Ok(r) => Some(r.c_hat),
        Err(Error::ZeroCoefficient(_)) => None,
        Err(e) => return Err(e),
    };
    let vanishes = a_vanishes(eps, n, side);
    Ok(LevelReport {
        epsilon: format_rational(eps),
        n,
        side,
        max_order: series.max_order(),
        a_theory,
        a_fit,
        a_error,
        rel_err: if vanishes || a_theory == 0.0 { None } else { Some(a_fit / a_theory - 1.0) },
        noise_floor: vanishes.then(|| a_noise_floor(eps, n, side)),
        c_hat,
        c_expected: ratio_to_f64(gamma_shift(eps, n, side).numer(), gamma_shift(eps, n, side).denom()),
    })
}
