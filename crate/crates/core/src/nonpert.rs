//! Multi-valley-instanton machinery: `α`, the secular function `φ(s)`, its
//! zeros, closed-form non-perturbative levels and the dispersion bridge to
//! large-order coefficients.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ModelParams, Side};
use crate::mp::{euler_gamma, gamma, pi, rgamma, Complex, Real};
use crate::quad;
use crate::rational::{is_integer, rational_from_f64_decimal};

const EXTRA_BITS: u32 = 32;

/// `g² = |g²| e^{iθ}` together with the branch of `(-2/g²)^x`.
///
/// `ln(-2/g²) = ln(2/|g²|) + i(π - θ)`: real at `θ = π`, `arg(-1) = +π` at `θ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchedCoupling {
    pub g2_abs: f64,
    pub theta: f64,
}

impl BranchedCoupling {
    pub fn new(g2_abs: f64, theta: f64) -> Result<BranchedCoupling> {
        if !(g2_abs > 0.0) || !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!("bad coupling |g²| = {g2_abs}, θ = {theta}")));
        }
        Ok(BranchedCoupling { g2_abs, theta })
    }

    pub fn physical(g2: f64) -> BranchedCoupling {
        BranchedCoupling { g2_abs: g2, theta: 0.0 }
    }

    pub fn rotated(g2_abs: f64) -> BranchedCoupling {
        BranchedCoupling { g2_abs, theta: std::f64::consts::PI }
    }

    fn is_rotated(&self) -> bool {
        self.theta == std::f64::consts::PI
    }

    /// `ln(-2/g²)` on this branch.
    pub fn ln_neg_two_over_g2(&self, bits: u32) -> Complex {
        let re = Real::from_i64(2, bits).div(&Real::from_ratio(&rational_from_f64_decimal(self.g2_abs).unwrap(), bits)).ln();
        let im = if self.is_rotated() {
            Real::zero(bits)
        } else {
            pi(bits).sub(&Real::from_f64(self.theta, bits))
        };
        Complex::new(re, im)
    }

    /// `(-2/g²)^x` on this branch.
    pub fn pow(&self, x: &Complex) -> Complex {
        let bits = x.prec();
        x.mul(&self.ln_neg_two_over_g2(bits)).exp()
    }
}

/// `α = e^{-1/(6g²)} / (g √π)`.
pub fn alpha(params: &ModelParams) -> Real {
    let bits = params.bits();
    alpha_bits(&params.g_real(bits + EXTRA_BITS), bits)
}

fn alpha_bits(g: &Real, bits: u32) -> Real {
    let w = bits + EXTRA_BITS;
    let g = g.with_prec(w);
    let g2 = g.mul(&g);
    let e = Real::one(w).div(&g2.mul_i64(6)).neg().exp();
    e.div(&g.mul(&pi(w).sqrt())).with_prec(bits)
}

/// `α` as a function of `z = g²` in `f64`.
pub fn alpha_f64(g2: f64) -> f64 {
    (-1.0 / (6.0 * g2)).exp() / (g2.sqrt() * std::f64::consts::PI.sqrt())
}

fn near_nonpositive_integer(z: &Complex, tol_log2: i64) -> bool {
    let k = z.re.round_to_bigint();
    if k > num_bigint::BigInt::zero() {
        return false;
    }
    let d = Complex::new(z.re.sub(&Real::from_bigint(&k, z.prec())), z.im.clone()).abs();
    d.is_zero() || d.ilog2() < tol_log2
}

/// `φ(s) = 1 - α² (-2/g²)^{2s+ε} Γ(-s-ε) Γ(-s)`.
///
/// `α` is taken at `g = params.g`; the branch only selects the phase of the power.
pub fn phi(s: &Complex, params: &ModelParams, branch: &BranchedCoupling) -> Result<Complex> {
    let bits = params.bits();
    let w = bits + EXTRA_BITS;
    let s = s.with_prec(w);
    let eps = params.epsilon_real(w);
    let ms = s.neg();
    let mse = ms.add_real(&eps.neg());
    let tol = -((params.precision as f64 / 2.0 * std::f64::consts::LOG2_10) as i64);
    for z in [&ms, &mse] {
        if near_nonpositive_integer(z, tol) {
            return Err(Error::PoleOfGamma(z.neg().re.to_sci_string(12)));
        }
    }
    let a = alpha(params).with_prec(w);
    let expo = s.scale(&Real::from_i64(2, w)).add_real(&eps);
    let pw = branch.pow(&expo);
    let g1 = gamma(&ms).ok_or_else(|| Error::PoleOfGamma("s".into()))?;
    let g2 = gamma(&mse).ok_or_else(|| Error::PoleOfGamma("s+ε".into()))?;
    let t = pw.mul(&g1).mul(&g2).scale(&a.mul(&a));
    Ok(Complex::from_real(Real::one(w)).sub(&t).with_prec(bits))
}

/// `1/(Γ(-s)Γ(-s-ε)) - α²(-2/g²)^{2s+ε}`: entire, with the zeros of `φ`.
fn secular_entire(s: &Complex, eps: &Real, alpha2: &Real, branch: &BranchedCoupling) -> Complex {
    let w = s.prec();
    let ms = s.neg();
    let r = rgamma(&ms).mul(&rgamma(&ms.add_real(&eps.neg())));
    let expo = s.scale(&Real::from_i64(2, w)).add_real(eps);
    r.sub(&branch.pow(&expo).scale(alpha2))
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaIntegralCheck {
    /// Quadrature of `∫ dR exp((s+ε)R - (2/|g²|) e^{-R})` over the whole line.
    pub numeric: (f64, f64),
    /// `(-2/g²)^{s+ε} Γ(-s-ε)` at `θ = π`.
    pub closed_form: (f64, f64),
    /// Same integrand over `R ≥ 0` only (an incomplete Γ).
    pub half_line: (f64, f64),
    pub quadrature_error: f64,
}

/// Quadrature check of the factorized collective-coordinate integral at `θ = π`.
pub fn gamma_integral_check(s: (f64, f64), epsilon: f64, g2_abs: f64, tol: f64) -> Result<GammaIntegralCheck> {
    let a = (s.0 + epsilon, s.1);
    if !(a.0 < 0.0 && s.0 < 0.0) {
        return Err(Error::DivergentIntegral(format!("need Re(s+ε) < 0 and Re s < 0, got s = {s:?}")));
    }
    let c = 2.0 / g2_abs;
    let ln_integrand = |r: f64| a.0 * r - c * (-r).exp();
    let re = |r: f64| ln_integrand(r).exp() * (a.1 * r).cos();
    let im = |r: f64| ln_integrand(r).exp() * (a.1 * r).sin();
    let full_re = quad::integrate_line(re, tol)?;
    let full_im = quad::integrate_line(im, tol)?;
    let half_re = quad::integrate_upper(re, 0.0, tol)?;
    let half_im = quad::integrate_upper(im, 0.0, tol)?;
    let bits = 128;
    let br = BranchedCoupling::rotated(g2_abs);
    let ac = Complex::from_f64(a.0, a.1, bits);
    let g = gamma(&ac.neg()).ok_or_else(|| Error::PoleOfGamma(format!("{a:?}")))?;
    let closed = br.pow(&ac).mul(&g).to_f64();
    Ok(GammaIntegralCheck {
        numeric: (full_re.value, full_im.value),
        closed_form: closed,
        half_line: (half_re.value, half_im.value),
        quadrature_error: full_re.error + full_im.error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NpLabel {
    Plus,
    Minus,
    Degenerate { n0: usize, upper: bool },
}

impl std::fmt::Display for NpLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NpLabel::Plus => f.write_str("plus"),
            NpLabel::Minus => f.write_str("minus"),
            NpLabel::Degenerate { n0, upper } => write!(f, "degenerate(N0={n0},{})", if *upper { "+" } else { "-" }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NPLevel {
    pub epsilon: f64,
    pub n: usize,
    pub label: NpLabel,
    pub energy: Complex,
    /// `a^{(±)}`, or the bracketed `α²` block of the degenerate formula.
    pub alpha2_coefficient: Complex,
    /// Signed coefficient of `α` (degenerate splitting), zero otherwise.
    pub alpha1_coefficient: Real,
    pub alpha: Real,
    pub g2: f64,
}

impl NPLevel {
    pub fn energy_f64(&self) -> (f64, f64) {
        self.energy.to_f64()
    }

    /// Energy minus its `α⁰` part.
    pub fn shift(&self) -> Complex {
        let w = self.energy.prec();
        let e0 = match self.label {
            NpLabel::Minus => Real::from_f64(self.n as f64 + 0.5, w).sub(&Real::from_f64(self.epsilon, w)),
            _ => Real::from_f64(self.n as f64 + 0.5, w),
        };
        self.energy.sub(&Complex::from_real(e0))
    }
}

/// `a^{(±)} = ((-1)^{N+1}/N!) Γ(∓ε-N) (-2/g²)^{±ε+2N}` on the given branch.
pub fn a_coefficient(epsilon: &Real, n: usize, side: Side, branch: &BranchedCoupling) -> Result<Complex> {
    let w = epsilon.prec();
    let sgn = side.sign();
    let arg = epsilon.mul_i64(-sgn).sub(&Real::from_i64(n as i64, w));
    let g = gamma(&Complex::from_real(arg.clone())).ok_or_else(|| Error::PoleOfGamma(arg.to_sci_string(12)))?;
    let b = epsilon.mul_i64(sgn).add(&Real::from_i64(2 * n as i64, w));
    let pw = branch.pow(&Complex::from_real(b));
    let mut fact = Real::one(w);
    for k in 2..=n {
        fact = fact.mul_i64(k as i64);
    }
    let sign = if n.is_multiple_of(2) { -1 } else { 1 };
    Ok(g.mul(&pw).scale(&Real::from_i64(sign, w).div(&fact)))
}

/// Generic-`ε` level: `½ + N + a⁺α²` or `-ε + ½ + N + a⁻α²`, on the `θ = 0` branch.
///
/// At integer `ε` only the unpaired right-well levels `N < ε` are accepted.
pub fn np_energy_generic(params: &ModelParams, n: usize, side: Side) -> Result<NPLevel> {
    let unpaired = side == Side::Minus && (n as f64) < params.epsilon;
    if is_integer(&params.epsilon_ratio()) && !unpaired {
        return Err(Error::IntegerEpsilon(params.epsilon));
    }
    let bits = params.bits();
    let w = bits + EXTRA_BITS;
    let eps = params.epsilon_real(w);
    let branch = BranchedCoupling::physical(params.g2());
    let a = a_coefficient(&eps, n, side, &branch)?;
    let al = alpha(params).with_prec(w);
    let mut e0 = Real::from_i64(2 * n as i64 + 1, w).mul_pow2(-1);
    if side == Side::Minus {
        e0 = e0.sub(&eps);
    }
    let energy = Complex::from_real(e0).add(&a.scale(&al.mul(&al)));
    Ok(NPLevel {
        epsilon: params.epsilon,
        n,
        label: if side == Side::Plus { NpLabel::Plus } else { NpLabel::Minus },
        energy: energy.with_prec(bits),
        alpha2_coefficient: a.with_prec(bits),
        alpha1_coefficient: Real::zero(bits),
        alpha: al.with_prec(bits),
        g2: params.g2(),
    })
}

/// Level pair at `ε = N0`: the plus level `N` and the minus level `N + N0` mix.
pub fn np_energy_degenerate(params: &ModelParams, n0: usize, n: usize, upper: bool) -> Result<NPLevel> {
    let er = params.epsilon_ratio();
    if er != BigRational::from_integer(n0.into()) {
        return Err(Error::InvalidParameter(format!("degenerate formula needs ε = {n0}, got {}", params.epsilon)));
    }
    let bits = params.bits();
    let w = bits + EXTRA_BITS;
    let branch = BranchedCoupling::physical(params.g2());
    let p = (2 * n + n0) as i64;
    let two_over = Real::from_i64(2, w).div(&Real::from_ratio(&rational_from_f64_decimal(params.g2()).unwrap(), w));
    let mut denom = Real::one(w);
    for k in 2..=n {
        denom = denom.mul_i64(k as i64);
    }
    for k in 2..=(n + n0) {
        denom = denom.mul_i64(k as i64);
    }
    let weight = two_over.powi(p).div(&denom);
    let al = alpha(params).with_prec(w);
    let split = weight.sqrt().mul_i64(if upper { 1 } else { -1 });
    let mut harmonic = Real::zero(w);
    for k in 1..=n {
        harmonic = harmonic.add(&Real::one(w).div_i64(k as i64));
    }
    for k in 1..=(n + n0) {
        harmonic = harmonic.add(&Real::one(w).div_i64(k as i64));
    }
    let block = branch
        .ln_neg_two_over_g2(w)
        .scale(&Real::from_i64(2, w))
        .add_real(&euler_gamma(w).mul_i64(2))
        .add_real(&harmonic.neg())
        .scale(&weight.mul_pow2(-1));
    let e0 = Real::from_i64(2 * n as i64 + 1, w).mul_pow2(-1);
    let energy = Complex::from_real(e0.add(&split.mul(&al))).add(&block.scale(&al.mul(&al)));
    Ok(NPLevel {
        epsilon: params.epsilon,
        n,
        label: NpLabel::Degenerate { n0, upper },
        energy: energy.with_prec(bits),
        alpha2_coefficient: block.with_prec(bits),
        alpha1_coefficient: split.with_prec(bits),
        alpha: al.with_prec(bits),
        g2: params.g2(),
    })
}

#[derive(Clone, Debug)]
pub struct NpRoot {
    pub seed: f64,
    pub s: Complex,
    /// `E = s + ½`.
    pub energy: Complex,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct NpSearch {
    pub roots: Vec<NpRoot>,
    pub warning: Option<String>,
}

/// Seeds inside `window`: the poles `s = k` and `s = -ε + k`; a coincident
/// (double) pole is split into two seeds by the degenerate `α`-order shift.
pub fn np_seeds(params: &ModelParams, window: (f64, f64)) -> Vec<f64> {
    let eps = params.epsilon;
    let integer_eps = is_integer(&params.epsilon_ratio());
    let al = alpha_f64(params.g2());
    let mut seeds = Vec::new();
    let kmax = window.1.ceil().max(0.0) as i64 + 1;
    for k in 0..=kmax {
        let s = k as f64;
        if s < window.0 || s > window.1 {
            continue;
        }
        if integer_eps {
            let n0 = eps as usize;
            let n = k as usize;
            let w = (2.0 / params.g2()).powi((2 * n + n0) as i32) / (factorial(n) * factorial(n + n0));
            let d = al * w.sqrt();
            seeds.push(s - d);
            seeds.push(s + d);
        } else {
            seeds.push(s);
        }
    }
    let kmax = (window.1 + eps).ceil() as i64 + 1;
    for k in 0..=kmax {
        let s = k as f64 - eps;
        if s < window.0 || s > window.1 || (integer_eps && s >= 0.0) {
            continue;
        }
        seeds.push(s);
    }
    seeds.sort_by(f64::total_cmp);
    seeds
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// Newton iteration on the zeros of `φ` from the Γ-pole seeds in `window`.
///
/// At most `count` seeds (lowest first) are used; each converges or reports failure independently.
pub fn find_np_levels(params: &ModelParams, window: (f64, f64), count: usize, exec: Execution) -> NpSearch {
    let bits = params.bits();
    let w = bits + EXTRA_BITS;
    let al = alpha(params).with_prec(w);
    let warning = (al.to_f64() > 0.1).then(|| format!("α = {:.3e} is not small; seeds may be unreliable", al.to_f64()));
    let seeds: Vec<f64> = np_seeds(params, window).into_iter().take(count).collect();
    let eps = params.epsilon_real(w);
    let alpha2 = al.mul(&al);
    let branch = BranchedCoupling::physical(params.g2());
    let tol_log2 = -((params.precision as f64 / 2.0 * std::f64::consts::LOG2_10) as i64);
    let roots = exec.map(&seeds, |&seed| {
        let mut s = Complex::from_f64(seed, 0.0, w);
        let h = Real::one(w).mul_pow2(-((w / 3) as i64));
        let hc = Complex::from_real(h.clone());
        let mut converged = false;
        let mut it = 0;
        for i in 0..80 {
            it = i + 1;
            let f = secular_entire(&s, &eps, &alpha2, &branch);
            let fp = secular_entire(&s.add(&hc), &eps, &alpha2, &branch)
                .sub(&secular_entire(&s.sub(&hc), &eps, &alpha2, &branch))
                .scale(&h.mul_i64(2).recip());
            if fp.is_zero() {
                break;
            }
            let step = f.div(&fp);
            s = s.sub(&step);
            let sm = step.abs();
            if sm.is_zero() || sm.ilog2() < -((w as f64 * 0.6) as i64) {
                break;
            }
        }
        let residual = match phi(&s, params, &branch) {
            Ok(p) => {
                let r = p.abs();
                converged = r.is_zero() || r.ilog2() < tol_log2;
                r.to_f64()
            }
            Err(_) => f64::INFINITY,
        };
        let energy = s.add_real(&Real::one(w).mul_pow2(-1));
        NpRoot { seed, s: s.with_prec(bits), energy: energy.with_prec(bits), residual, iterations: it, converged }
    });
    NpSearch { roots, warning }
}

/// `Im a^{(±)}` in the reflection-regularized form `π (2/g²)^b / (N! Γ(1±ε+N))`, real `g²`.
pub fn im_a_coefficient(epsilon: &Real, n: usize, side: Side, g2: &Real) -> Real {
    let w = epsilon.prec();
    let sgn = side.sign();
    let b = epsilon.mul_i64(sgn).add(&Real::from_i64(2 * n as i64, w));
    let rg = rgamma(&Complex::from_real(epsilon.mul_i64(sgn).add(&Real::from_i64(n as i64 + 1, w)))).re;
    let mut fact = Real::one(w);
    for k in 2..=n {
        fact = fact.mul_i64(k as i64);
    }
    Real::from_i64(2, w).div(g2).powr(&b).mul(&rg).mul(&pi(w)).div(&fact)
}

/// `z_m = -(1/π) ∫₀^∞ dz Im E_NP(z) / z^{m+1}`, with `Im E_NP = Im a(z) α(z)²` and `u = 1/(3z)`.
pub fn large_order_bridge(epsilon: f64, n: usize, side: Side, m: usize, bits: u32) -> Result<Real> {
    let w = bits + EXTRA_BITS;
    let er = rational_from_f64_decimal(epsilon)?;
    let eps = Real::from_ratio(&er, w);
    let b = er.clone() * BigRational::from_integer(side.sign().into()) + BigRational::from_integer((2 * n).into());
    let bf = b.to_f64().unwrap();
    // prefactor K with Im E_NP(z) = K e^{-1/(3z)} z^{-b-1}
    let k = im_a_coefficient(&eps, n, side, &Real::one(w)).div(&pi(w));
    if k.is_zero() {
        return Ok(Real::zero(bits));
    }
    let p = bf + m as f64;
    if p <= -1.0 {
        return Err(Error::DivergentIntegral(format!("b + m = {p} ≤ -1")));
    }
    // ∫₀^∞ e^{-u} u^p du, scaled by its peak value at u = p
    let up = p.max(1.0);
    let peak = -up + p * up.ln();
    let f = |u: f64| if u <= 0.0 { 0.0 } else { (-u + p * u.ln() - peak).exp() };
    let left = quad::integrate(f, 0.0, up, 1e-13)?;
    let right = quad::integrate_upper(f, up, 1e-13)?;
    let integral = Real::from_f64(left.value + right.value, w).mul(&Real::from_f64(peak, w).exp());
    // z_m = -(1/π) K 3^{b+m+1} ∫ e^{-u} u^{b+m} du
    let three_pow = Real::from_i64(3, w).powr(&Real::from_ratio(&b, w).add(&Real::from_i64(m as i64 + 1, w)));
    Ok(k.mul(&three_pow).mul(&integral).div(&pi(w)).neg().with_prec(bits))
}

#[derive(Serialize)]
struct NpLevelRecord {
    epsilon: f64,
    #[serde(rename = "N")]
    n: usize,
    label: String,
    re: f64,
    im: f64,
    alpha: f64,
    g2: f64,
}

/// Writes a JSON array of `{epsilon, N, label, re, im, alpha, g2}`.
pub fn write_levels_json(levels: &[NPLevel], path: &Path) -> Result<()> {
    let recs: Vec<NpLevelRecord> = levels
        .iter()
        .map(|l| {
            let (re, im) = l.energy_f64();
            NpLevelRecord { epsilon: l.epsilon, n: l.n, label: l.label.to_string(), re, im, alpha: l.alpha.to_f64(), g2: l.g2 }
        })
        .collect();
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &recs)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g2: f64, eps: f64) -> ModelParams {
        ModelParams::from_g2(g2, eps).unwrap()
    }

    #[test]
    fn alpha_at_one_sixth() {
        let p = ModelParams::new((1.0f64 / 6.0).sqrt(), 0.0).unwrap();
        let a = alpha(&p).to_f64();
        assert!((a - (-1f64).exp() * (6.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((a - 0.508_400_8).abs() < 1e-7);
    }

    #[test]
    fn phi_real_on_rotated_branch() {
        let p = params(0.05, 0.4);
        let br = BranchedCoupling::rotated(0.05);
        for s in [-0.5, -1.7, 0.3, 2.2] {
            let v = phi(&Complex::from_f64(s, 0.0, 200), &p, &br).unwrap();
            assert!(v.im.is_zero() || v.im.to_f64().abs() < 1e-40, "s = {s}");
        }
        assert!(matches!(phi(&Complex::from_f64(1.0, 0.0, 200), &p, &br), Err(Error::PoleOfGamma(_))));
    }

    #[test]
    fn half_integer_plus_coefficient_is_imaginary() {
        let p = params(0.05, 0.5);
        let l = np_energy_generic(&p, 0, Side::Plus).unwrap();
        let (re, im) = l.alpha2_coefficient.to_f64();
        let expect = 2.0 * std::f64::consts::PI.sqrt() * (2.0f64 / 0.05).sqrt();
        assert!(re.abs() < 1e-30);
        assert!((im - expect).abs() < 1e-10 * expect);
        assert!(np_energy_generic(&params(0.05, 2.0), 0, Side::Plus).is_err());
    }

    #[test]
    fn degenerate_splitting_terms() {
        let l = np_energy_degenerate(&params(0.05, 0.0), 0, 0, true).unwrap();
        assert!((l.alpha1_coefficient.to_f64() - 1.0).abs() < 1e-30);
        let l = np_energy_degenerate(&params(0.05, 2.0), 2, 0, false).unwrap();
        let expect = -(2.0 / 0.05) / 2f64.sqrt();
        assert!((l.alpha1_coefficient.to_f64() - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn im_coefficient_matches_direct_form() {
        let w = 200;
        let eps = Real::from_f64(0.4, w);
        for side in [Side::Plus, Side::Minus] {
            for n in 0..3 {
                let a = a_coefficient(&eps, n, side, &BranchedCoupling::physical(0.05)).unwrap();
                let im = im_a_coefficient(&eps, n, side, &Real::from_ratio(&rational_from_f64_decimal(0.05).unwrap(), w));
                assert!((a.im.to_f64() / im.to_f64() - 1.0).abs() < 1e-30, "{side} {n}");
            }
        }
    }
}
