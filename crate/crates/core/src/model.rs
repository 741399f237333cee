//! The asymmetric double-well potential and its minima.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::mp::{bits_for_digits, Real};
use crate::rational::rational_from_f64_decimal;

pub const DEFAULT_PRECISION: u32 = 50;

/// Level family. `Plus` lives in the left well (free energies `N + 1/2`),
/// `Minus` in the right well (free energies `-ε + N + 1/2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// `+1` or `-1`.
    pub fn sign(self) -> i64 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }

    pub fn well(self) -> &'static str {
        match self {
            Side::Plus => "left",
            Side::Minus => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Side> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" | "left" => Ok(Side::Plus),
            "minus" | "-" | "right" => Ok(Side::Minus),
            _ => Err(Error::InvalidParameter(format!("unknown side {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    pub epsilon: f64,
    /// Decimal digits for multiprecision work.
    pub precision: u32,
    pub exact_mode: bool,
}

impl ModelParams {
    pub fn new(g: f64, epsilon: f64) -> Result<ModelParams> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(ModelParams { g, epsilon, precision: DEFAULT_PRECISION, exact_mode: true })
    }

    pub fn from_g2(g2: f64, epsilon: f64) -> Result<ModelParams> {
        if !(g2 > 0.0) {
            return Err(Error::InvalidParameter(format!("g² must be positive, got {g2}")));
        }
        ModelParams::new(g2.sqrt(), epsilon)
    }

    pub fn with_precision(mut self, digits: u32) -> ModelParams {
        self.precision = digits.max(10);
        self
    }

    pub fn g2(&self) -> f64 {
        self.g * self.g
    }

    pub fn bits(&self) -> u32 {
        bits_for_digits(self.precision)
    }

    /// `g` as the exact rational of its shortest decimal form.
    pub fn g_ratio(&self) -> BigRational {
        rational_from_f64_decimal(self.g).expect("finite g")
    }

    pub fn epsilon_ratio(&self) -> BigRational {
        rational_from_f64_decimal(self.epsilon).expect("finite epsilon")
    }

    pub fn g_real(&self, bits: u32) -> Real {
        Real::from_ratio(&self.g_ratio(), bits)
    }

    pub fn epsilon_real(&self, bits: u32) -> Real {
        Real::from_ratio(&self.epsilon_ratio(), bits)
    }
}

/// `V(q) = q²(1 - g q)²/2 - ε g q` at the precision of `q`.
pub fn potential(params: &ModelParams, q: &Real) -> Real {
    let p = q.prec();
    let g = params.g_real(p + 8);
    let e = params.epsilon_real(p + 8);
    let w = Real::one(p + 8).sub(&g.mul(q));
    let a = q.mul(&w);
    a.mul(&a).mul_pow2(-1).sub(&e.mul(&g).mul(q)).with_prec(p)
}

pub fn potential_f64(params: &ModelParams, q: f64) -> f64 {
    let (g, e) = (params.g, params.epsilon);
    let a = q * (1.0 - g * q);
    0.5 * a * a - e * g * q
}

/// Derivatives of order 1 to 4.
pub fn potential_deriv(params: &ModelParams, q: &Real, k: u32) -> Result<Real> {
    let p = q.prec();
    let g = params.g_real(p + 8);
    let gq = g.mul(q);
    let one = Real::one(p + 8);
    let v = match k {
        1 => {
            let e = params.epsilon_real(p + 8);
            q.mul(&one.sub(&gq)).mul(&one.sub(&gq.mul_i64(2))).sub(&e.mul(&g))
        }
        2 => one.sub(&gq.mul_i64(6)).add(&gq.mul(&gq).mul_i64(6)),
        3 => g.mul_i64(-6).add(&g.mul(&gq).mul_i64(12)),
        4 => g.mul(&g).mul_i64(12),
        _ => return Err(Error::DerivativeOrder(k)),
    };
    Ok(v.with_prec(p))
}

pub fn potential_deriv_f64(params: &ModelParams, q: f64, k: u32) -> Result<f64> {
    let (g, e) = (params.g, params.epsilon);
    let gq = g * q;
    match k {
        1 => Ok(q * (1.0 - gq) * (1.0 - 2.0 * gq) - e * g),
        2 => Ok(1.0 - 6.0 * gq + 6.0 * gq * gq),
        3 => Ok(-6.0 * g + 12.0 * g * gq),
        4 => Ok(12.0 * g * g),
        _ => Err(Error::DerivativeOrder(k)),
    }
}

/// Exact test of `ε g² < √3/18`, i.e. `(ε g²)² < 1/108`.
pub fn two_wells(params: &ModelParams) -> bool {
    let g = params.g_ratio();
    let kappa = params.epsilon_ratio() * &g * &g;
    &kappa * &kappa < BigRational::new(BigInt::one(), BigInt::from(108))
}

/// Power series `Σ c_k g^(k + lowest_power)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    pub lowest_power: i32,
    pub coeffs: Vec<BigRational>,
}

impl LaurentSeries {
    pub fn coeff(&self, power: i32) -> BigRational {
        let i = power - self.lowest_power;
        if i < 0 {
            return BigRational::zero();
        }
        self.coeffs.get(i as usize).cloned().unwrap_or_else(BigRational::zero)
    }
}

#[derive(Clone, Debug)]
pub struct WellLocation {
    pub side: Side,
    pub q_star: Real,
    /// Empty unless the parameters are in exact mode.
    pub q_star_series: LaurentSeries,
    pub omega: Real,
    pub depth: Real,
}

impl WellLocation {
    pub fn q_star_f64(&self) -> f64 {
        self.q_star.to_f64()
    }

    pub fn omega_f64(&self) -> f64 {
        self.omega.to_f64()
    }

    pub fn depth_f64(&self) -> f64 {
        self.depth.to_f64()
    }
}

/// Root of `P(x) = x(1-x)(1-2x) - κ` in `[lo, hi]` where `P(lo) ≤ 0 ≤ P(hi)` up to sign orientation.
fn refine_root(kappa: &Real, lo: f64, hi: f64, bits: u32) -> Real {
    let kf = kappa.to_f64();
    let pf = |x: f64| x * (1.0 - x) * (1.0 - 2.0 * x) - kf;
    let (mut a, mut b) = (lo, hi);
    let fa = pf(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if (pf(m) <= 0.0) == (fa <= 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    let (lo_r, hi_r) = (Real::from_f64(lo, bits), Real::from_f64(hi, bits));
    let mut x = Real::from_f64(0.5 * (a + b), bits + 16);
    let one = Real::one(bits + 16);
    for _ in 0..64 {
        let p = x.mul(&one.sub(&x)).mul(&one.sub(&x.mul_i64(2))).sub(kappa);
        let dp = x.mul(&x).mul_i64(6).sub(&x.mul_i64(6)).add(&one);
        if dp.is_zero() {
            break;
        }
        let step = p.div(&dp);
        let next = x.sub(&step);
        if next.cmp(&lo_r).is_lt() || next.cmp(&hi_r).is_gt() {
            break;
        }
        x = next;
        if step.is_zero() || step.ilog2() < x.ilog2().max(-4) - bits as i64 - 8 {
            break;
        }
    }
    x.with_prec(bits)
}

/// Left and right minima, ordered by position.
pub fn find_minima(params: &ModelParams) -> Result<(WellLocation, WellLocation)> {
    if !two_wells(params) {
        return Err(Error::DegeneratePotential(params.epsilon * params.g2()));
    }
    let bits = params.bits() + 16;
    let g = params.g_real(bits);
    let kappa = params.epsilon_real(bits).mul(&g).mul(&g);
    let s3 = 3f64.sqrt();
    let (x1, x2) = ((3.0 - s3) / 6.0, (3.0 + s3) / 6.0);
    let xl = if kappa.is_zero() { Real::zero(bits) } else { refine_root(&kappa, 0.0, x1, bits) };
    let xr = if kappa.is_zero() { Real::one(bits) } else { refine_root(&kappa, x2.max(1.0), 2.0, bits) };
    let build = |side: Side, x: Real| -> Result<WellLocation> {
        let q = x.div(&g);
        let v2 = potential_deriv(params, &q, 2)?;
        let series = if params.exact_mode { well_position_series(params, side, 8)? } else {
            LaurentSeries { lowest_power: 0, coeffs: vec![] }
        };
        let out_bits = params.bits();
        Ok(WellLocation {
            side,
            omega: v2.sqrt().with_prec(out_bits),
            depth: potential(params, &q).with_prec(out_bits),
            q_star: q.with_prec(out_bits),
            q_star_series: series,
        })
    };
    Ok((build(Side::Plus, xl)?, build(Side::Minus, xr)?))
}

/// Truncated product of power series in `u`.
fn series_mul(a: &[BigRational], b: &[BigRational], n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Formal expansion of the minimum position in powers of `g`, through `g^order`.
///
/// Left: `q* = g y(g²)` with `y - 3g²y² + 2g⁴y³ = ε`.
/// Right: `q* = 1/g + g z(g²)` with `z + 3g²z² + 2g⁴z³ = ε`.
pub fn well_position_series(params: &ModelParams, side: Side, order: usize) -> Result<LaurentSeries> {
    let eps = params.epsilon_ratio();
    // number of u = g² coefficients needed for g·y through g^order
    let n = order.div_ceil(2).max(1);
    let sgn = BigRational::from_integer(BigInt::from(-side.sign()));
    let mut y = vec![BigRational::zero(); n];
    y[0] = eps.clone();
    for _ in 0..n {
        let y2 = series_mul(&y, &y, n);
        let y3 = series_mul(&y2, &y, n);
        let mut next = vec![BigRational::zero(); n];
        next[0] = eps.clone();
        for k in 1..n {
            next[k] = -&sgn * BigRational::from_integer(3.into()) * &y2[k - 1];
            if k >= 2 {
                next[k] -= BigRational::from_integer(2.into()) * &y3[k - 2];
            }
        }
        y = next;
    }
    // y_k multiplies g^(2k+1)
    let mut coeffs = vec![BigRational::zero(); order + 2];
    for (k, c) in y.iter().enumerate() {
        if 2 * k < order {
            coeffs[2 * k + 2] = c.clone();
        }
    }
    let lowest_power = -1;
    if side == Side::Minus {
        coeffs[0] = BigRational::one();
    }
    coeffs.truncate(order + 2);
    Ok(LaurentSeries { lowest_power, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g: f64, e: f64) -> ModelParams {
        ModelParams::new(g, e).unwrap()
    }

    #[test]
    fn trivial_values() {
        let bits = 200;
        let m = p(0.3, 0.0);
        assert!(potential(&m, &Real::zero(bits)).is_zero());
        let m = p(0.3, 2.0);
        let q = Real::one(bits).div(&m.g_real(bits));
        assert!((potential(&m, &q).to_f64() + 2.0).abs() < 1e-50);
        let m = p(0.2, 0.0);
        let q = Real::one(bits).div(&m.g_real(bits));
        assert!((potential_deriv(&m, &q, 2).unwrap().to_f64() - 1.0).abs() < 1e-50);
        assert!(potential_deriv(&m, &q, 5).is_err());
    }

    #[test]
    fn minima_symmetric_case() {
        let (l, r) = find_minima(&p(0.4, 0.0)).unwrap();
        assert_eq!(l.q_star_f64(), 0.0);
        assert!((r.q_star_f64() - 2.5).abs() < 1e-40);
        assert!(l.depth.is_zero() || l.depth.to_f64().abs() < 1e-45);
        assert!(r.depth_f64().abs() < 1e-40);
    }

    #[test]
    fn boundary_is_rejected() {
        let e = 3f64.sqrt() / 18.0 + 0.01;
        assert!(matches!(find_minima(&p(1.0, e)), Err(Error::DegeneratePotential(_))));
        assert!(!two_wells(&p(1.0, e)));
        assert!(two_wells(&p(1.0, 0.09)));
    }

    #[test]
    fn series_leading_terms() {
        let m = p(0.1, 0.5);
        let s = well_position_series(&m, Side::Plus, 5).unwrap();
        assert_eq!(s.coeff(1), BigRational::new(1.into(), 2.into()));
        assert_eq!(s.coeff(0), BigRational::zero());
        let r = well_position_series(&m, Side::Minus, 5).unwrap();
        assert_eq!(r.coeff(-1), BigRational::one());
        assert_eq!(r.coeff(1), BigRational::new(1.into(), 2.into()));
        assert_eq!(s.coeff(3), BigRational::new(3.into(), 4.into()));
        assert_eq!(r.coeff(3), BigRational::new((-3).into(), 4.into()));
    }
}
