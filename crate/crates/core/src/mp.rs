//! Binary multiprecision floating point and complex arithmetic.
//!
//! A [`Real`] is `man * 2^exp` with the mantissa rounded to `prec` bits.
//! Binary operations use the larger precision of their operands. The
//! transcendental functions evaluate in fixed point with guard bits and
//! round once at the end.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Mutex;

const GUARD: u32 = 24;

/// Bits needed to carry `digits` decimal digits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 8
}

#[derive(Clone, Debug)]
pub struct Real {
    man: BigInt,
    exp: i64,
    prec: u32,
}

fn shift(x: &BigInt, s: i64) -> BigInt {
    if s >= 0 {
        x << (s as usize)
    } else {
        x >> ((-s) as usize)
    }
}

fn round_shift_right(x: &BigInt, s: u64) -> BigInt {
    if s == 0 {
        return x.clone();
    }
    let half = BigInt::one() << ((s - 1) as usize);
    let mag = (x.abs() + half) >> (s as usize);
    if x.is_negative() {
        -mag
    } else {
        mag
    }
}

impl Real {
    fn normalized(man: BigInt, exp: i64, prec: u32) -> Real {
        if man.is_zero() {
            return Real::zero(prec);
        }
        let bits = man.bits();
        if bits > prec as u64 {
            let s = bits - prec as u64;
            let m = round_shift_right(&man, s);
            Real { man: m, exp: exp + s as i64, prec }
        } else {
            Real { man, exp, prec }
        }
    }

    pub fn zero(prec: u32) -> Real {
        Real { man: BigInt::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Real {
        Real::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Real {
        Real::normalized(BigInt::from(v), 0, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Real {
        Real::normalized(v.clone(), 0, prec)
    }

    pub fn from_ratio(r: &BigRational, prec: u32) -> Real {
        Real::from_bigint(r.numer(), prec + 4).div(&Real::from_bigint(r.denom(), prec + 4)).with_prec(prec)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64, prec: u32) -> Real {
        assert!(v.is_finite(), "non-finite f64 in Real::from_f64");
        if v == 0.0 {
            return Real::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, ex) = if e == 0 { (frac, -1074) } else { (frac | (1i64 << 52), e - 1075) };
        Real::normalized(BigInt::from(sign * m), ex, prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Real {
        Real::normalized(self.man.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.man.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// `floor(log2 |x|)`; meaningless for zero.
    pub fn ilog2(&self) -> i64 {
        self.man.bits() as i64 - 1 + self.exp
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.man.bits() as i64;
        let s = (bits - 60).max(0);
        let top = shift(&self.man, -s).to_i64().unwrap() as f64;
        let e = self.exp + s;
        if e > 2000 {
            return top.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0;
        }
        let e = e as i32;
        let half = e / 2;
        top * 2f64.powi(half) * 2f64.powi(e - half)
    }

    /// Natural log of `|x|` as an `f64`, valid far outside the `f64` range.
    pub fn ln_abs_f64(&self) -> f64 {
        let bits = self.man.bits() as i64;
        let s = bits - 60;
        let top = shift(&self.man.abs(), -s).to_f64().unwrap();
        top.ln() + (self.exp + s) as f64 * std::f64::consts::LN_2
    }

    pub fn neg(&self) -> Real {
        Real { man: -&self.man, exp: self.exp, prec: self.prec }
    }

    pub fn abs(&self) -> Real {
        Real { man: self.man.abs(), exp: self.exp, prec: self.prec }
    }

    pub fn add(&self, o: &Real) -> Real {
        let prec = self.prec.max(o.prec);
        if self.is_zero() {
            return o.with_prec(prec);
        }
        if o.is_zero() {
            return self.with_prec(prec);
        }
        let (ta, tb) = (self.ilog2(), o.ilog2());
        if ta - tb > prec as i64 + 4 {
            return self.with_prec(prec);
        }
        if tb - ta > prec as i64 + 4 {
            return o.with_prec(prec);
        }
        let e = self.exp.min(o.exp);
        let m = shift(&self.man, self.exp - e) + shift(&o.man, o.exp - e);
        Real::normalized(m, e, prec)
    }

    pub fn sub(&self, o: &Real) -> Real {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Real) -> Real {
        let prec = self.prec.max(o.prec);
        Real::normalized(&self.man * &o.man, self.exp + o.exp, prec)
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        Real::normalized(&self.man * k, self.exp, self.prec)
    }

    pub fn div(&self, o: &Real) -> Real {
        assert!(!o.is_zero(), "division by zero Real");
        let prec = self.prec.max(o.prec);
        if self.is_zero() {
            return Real::zero(prec);
        }
        let s = (prec as i64 + 3 + o.man.bits() as i64 - self.man.bits() as i64).max(0);
        let q = shift(&self.man, s) / &o.man;
        Real::normalized(q, self.exp - o.exp - s, prec)
    }

    pub fn div_i64(&self, k: i64) -> Real {
        self.div(&Real::from_i64(k, self.prec))
    }

    pub fn mul_pow2(&self, k: i64) -> Real {
        Real { man: self.man.clone(), exp: self.exp + k, prec: self.prec }
    }

    pub fn recip(&self) -> Real {
        Real::one(self.prec).div(self)
    }

    pub fn sqrt(&self) -> Real {
        assert!(!self.is_negative(), "sqrt of negative Real");
        if self.is_zero() {
            return self.clone();
        }
        let want = 2 * self.prec as i64 + 4;
        let mut s = (want - self.man.bits() as i64).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let m = shift(&self.man, s).sqrt();
        Real::normalized(m, (self.exp - s) / 2, self.prec)
    }

    pub fn cmp(&self, o: &Real) -> Ordering {
        self.sub(o).signum().cmp(&0)
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            shift(&self.man, self.exp)
        } else {
            round_shift_right(&self.man, (-self.exp) as u64)
        }
    }

    pub fn floor_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            shift(&self.man, self.exp)
        } else {
            &self.man >> ((-self.exp) as usize)
        }
    }

    /// Exact rational value.
    pub fn to_ratio(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(shift(&self.man, self.exp))
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    fn to_fixed(&self, w: u32) -> BigInt {
        let s = self.exp + w as i64;
        if s >= 0 {
            shift(&self.man, s)
        } else {
            round_shift_right(&self.man, (-s) as u64)
        }
    }

    fn from_fixed(x: BigInt, w: u32, prec: u32) -> Real {
        Real::normalized(x, -(w as i64), prec)
    }

    pub fn exp(&self) -> Real {
        let prec = self.prec;
        if self.is_zero() {
            return Real::one(prec);
        }
        let x = self.to_f64();
        assert!(x.abs() < 1e15, "exp argument out of range");
        let k = (x / std::f64::consts::LN_2).round() as i64;
        let kb = 64 - (k.unsigned_abs().leading_zeros());
        let w = prec + GUARD + kb;
        let r = self.with_prec(w).sub(&ln2(w).mul_i64(k));
        let s = ((w as f64).sqrt() / 2.0) as u32;
        let wr = w + s + 8;
        let rr = r.to_fixed(wr) >> (s as usize);
        let one = BigInt::one() << (wr as usize);
        let mut sum = one.clone();
        let mut term = one;
        let mut n = 1i64;
        loop {
            term = ((&term * &rr) >> (wr as usize)) / n;
            if term.is_zero() {
                break;
            }
            sum += &term;
            n += 1;
        }
        for _ in 0..s {
            sum = (&sum * &sum) >> (wr as usize);
        }
        Real::from_fixed(sum, wr, prec).mul_pow2(k)
    }

    pub fn ln(&self) -> Real {
        assert!(self.signum() > 0, "ln of non-positive Real");
        let prec = self.prec;
        let w = prec + GUARD;
        let mut e = self.ilog2();
        // mantissa m = x / 2^e in [1, 2); shift to [1/sqrt2, sqrt2]
        let mut m = Real { man: self.man.clone(), exp: self.exp - e, prec: w };
        if m.to_f64() > std::f64::consts::SQRT_2 {
            e += 1;
            m = m.mul_pow2(-1);
        }
        let mf = m.to_fixed(w);
        let one = BigInt::one() << (w as usize);
        let z = ((&mf - &one) << (w as usize)) / (&mf + &one);
        let z2 = (&z * &z) >> (w as usize);
        let mut pw = z.clone();
        let mut sum = z;
        let mut k = 3i64;
        loop {
            pw = (&pw * &z2) >> (w as usize);
            let t = &pw / k;
            if t.is_zero() {
                break;
            }
            sum += t;
            k += 2;
        }
        let at = Real::from_fixed(sum << 1, w, w);
        let eb = 64 - e.unsigned_abs().leading_zeros();
        at.add(&ln2(w + eb).mul_i64(e)).with_prec(prec)
    }

    pub fn powr(&self, y: &Real) -> Real {
        let w = self.prec.max(y.prec);
        let ly = self.with_prec(w + 16).ln().mul(&y.with_prec(w + 16));
        ly.exp().with_prec(w)
    }

    pub fn powi(&self, n: i64) -> Real {
        let w = self.prec + 2 * (64 - n.unsigned_abs().leading_zeros()) + 4;
        let mut base = self.with_prec(w);
        let mut acc = Real::one(w);
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        if n < 0 {
            acc = acc.recip();
        }
        acc.with_prec(self.prec)
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(&self) -> (Real, Real) {
        let prec = self.prec;
        if self.is_zero() {
            return (Real::zero(prec), Real::one(prec));
        }
        let mag = self.ilog2().max(0) as u32;
        let w = prec + GUARD + mag;
        let half_pi = pi(w + 8).mul_pow2(-1);
        let k = self.with_prec(w).div(&half_pi).round_to_bigint();
        let r = self.with_prec(w).sub(&half_pi.mul(&Real::from_bigint(&k, w + 8)));
        let wf = w + 8;
        let rf = r.to_fixed(wf);
        let r2 = (&rf * &rf) >> (wf as usize);
        let one = BigInt::one() << (wf as usize);
        let (mut s, mut c) = (rf.clone(), one.clone());
        let (mut ts, mut tc) = (rf, one);
        let mut n = 1i64;
        loop {
            ts = -((&ts * &r2) >> (wf as usize)) / ((2 * n) * (2 * n + 1));
            tc = -((&tc * &r2) >> (wf as usize)) / ((2 * n - 1) * (2 * n));
            if ts.is_zero() && tc.is_zero() {
                break;
            }
            s += &ts;
            c += &tc;
            n += 1;
        }
        let (s, c) = (Real::from_fixed(s, wf, prec), Real::from_fixed(c, wf, prec));
        match k.mod_floor(&BigInt::from(4)).to_u8().unwrap() {
            0 => (s, c),
            1 => (c, s.neg()),
            2 => (s.neg(), c.neg()),
            _ => (c.neg(), s),
        }
    }

    pub fn sin(&self) -> Real {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Real {
        self.sin_cos().1
    }

    /// `(sinh x, cosh x)`.
    pub fn sinh_cosh(&self) -> (Real, Real) {
        let w = self.prec + GUARD;
        let e = self.with_prec(w).exp();
        let ei = e.recip();
        (
            e.sub(&ei).mul_pow2(-1).with_prec(self.prec),
            e.add(&ei).mul_pow2(-1).with_prec(self.prec),
        )
    }

    pub fn atan(&self) -> Real {
        let prec = self.prec;
        if self.is_zero() {
            return self.clone();
        }
        let w = prec + GUARD;
        let x = self.with_prec(w);
        if x.abs().cmp(&Real::one(w)) == Ordering::Greater {
            let hp = pi(w).mul_pow2(-1);
            let r = x.recip().atan();
            let v = if x.is_negative() { hp.neg().sub(&r) } else { hp.sub(&r) };
            return v.with_prec(prec);
        }
        // two argument halvings: atan x = 2 atan(x / (1 + sqrt(1 + x^2)))
        let mut y = x;
        for _ in 0..2 {
            let d = Real::one(w).add(&Real::one(w).add(&y.mul(&y)).sqrt());
            y = y.div(&d);
        }
        let yf = y.to_fixed(w);
        let y2 = (&yf * &yf) >> (w as usize);
        let mut pw = yf.clone();
        let mut sum = yf;
        let mut k = 1i64;
        loop {
            pw = -((&pw * &y2) >> (w as usize));
            let t = &pw / (2 * k + 1);
            if t.is_zero() {
                break;
            }
            sum += t;
            k += 1;
        }
        Real::from_fixed(sum << 2, w, prec)
    }

    /// Angle of the point `(x, y)` in `(-pi, pi]`.
    pub fn atan2(y: &Real, x: &Real) -> Real {
        let prec = y.prec.max(x.prec);
        let w = prec + GUARD;
        if x.is_zero() {
            let hp = pi(w).mul_pow2(-1);
            return match y.signum() {
                1 => hp.with_prec(prec),
                -1 => hp.neg().with_prec(prec),
                _ => Real::zero(prec),
            };
        }
        let a = y.with_prec(w).div(&x.with_prec(w)).atan();
        let v = if !x.is_negative() {
            a
        } else if y.is_negative() {
            a.sub(&pi(w))
        } else {
            a.add(&pi(w))
        };
        v.with_prec(prec)
    }

    /// Scientific notation with `digits` significant digits.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let l10 = self.ln_abs_f64() / std::f64::consts::LN_10;
        let mut e10 = l10.floor() as i64;
        let n = loop {
            let k = digits as i64 - 1 - e10;
            let mut r = self.to_ratio().abs();
            let ten = BigRational::from_integer(BigInt::from(10));
            r = if k >= 0 { r * num_traits::pow(ten, k as usize) } else { r / num_traits::pow(ten, (-k) as usize) };
            let n = (r + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
            let len = n.to_string().len();
            if len > digits {
                e10 += 1;
            } else if len < digits {
                e10 -= 1;
            } else {
                break n;
            }
        };
        let s = n.to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        if digits == 1 {
            format!("{sign}{s}e{e10}")
        } else {
            format!("{sign}{}.{}e{e10}", &s[..1], &s[1..])
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec as f64 - 8.0) / std::f64::consts::LOG2_10).max(1.0) as usize;
        f.write_str(&self.to_sci_string(f.precision().unwrap_or(digits)))
    }
}

struct ConstCache(Mutex<Option<Real>>);

impl ConstCache {
    const fn new() -> Self {
        ConstCache(Mutex::new(None))
    }

    fn get(&self, prec: u32, compute: impl FnOnce(u32) -> Real) -> Real {
        let mut g = self.0.lock().unwrap();
        if let Some(v) = g.as_ref() {
            if v.prec >= prec {
                return v.with_prec(prec);
            }
        }
        let v = compute(prec + 32);
        let out = v.with_prec(prec);
        *g = Some(v);
        out
    }
}

static PI: ConstCache = ConstCache::new();
static LN2: ConstCache = ConstCache::new();
static EULER: ConstCache = ConstCache::new();

/// `sum_k (-1)^k / ((2k+1) n^(2k+1))` in fixed point.
fn atan_inv_fixed(n: i64, w: u32) -> BigInt {
    let n2 = n * n;
    let mut pw = (BigInt::one() << (w as usize)) / n;
    let mut sum = pw.clone();
    let mut k = 1i64;
    loop {
        pw = -(pw / n2);
        let t = &pw / (2 * k + 1);
        if t.is_zero() {
            break;
        }
        sum += t;
        k += 1;
    }
    sum
}

pub fn pi(prec: u32) -> Real {
    PI.get(prec, |p| {
        let w = p + 16;
        let v = atan_inv_fixed(5, w) * 16 - atan_inv_fixed(239, w) * 4;
        Real::from_fixed(v, w, p)
    })
}

pub fn ln2(prec: u32) -> Real {
    LN2.get(prec, |p| {
        let w = p + 16;
        let mut pw: BigInt = (BigInt::one() << (w as usize)) / 3;
        let mut sum = pw.clone();
        let mut k = 1i64;
        loop {
            pw /= 9;
            let t = &pw / (2 * k + 1);
            if t.is_zero() {
                break;
            }
            sum += t;
            k += 1;
        }
        Real::from_fixed(sum << 1, w, p)
    })
}

/// Euler's constant from the Euler-Maclaurin expansion of the digamma function.
pub fn euler_gamma(prec: u32) -> Real {
    EULER.get(prec, |p| {
        let w = p + 16;
        let n = (p as f64 * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI)).ceil() as i64 + 4;
        let mut h = Real::zero(w);
        for k in 1..n {
            h = h.add(&Real::one(w).div_i64(k));
        }
        let nr = Real::from_i64(n, w);
        let mut acc = h.sub(&nr.ln()).add(&Real::one(w).div_i64(2 * n));
        let n2 = nr.mul(&nr);
        let mut pw = n2.clone();
        let mut k = 1usize;
        loop {
            let b = Real::from_ratio(&bernoulli(2 * k), w);
            let t = b.div(&pw.mul_i64(2 * k as i64));
            if t.is_zero() || t.ilog2() < -(w as i64) {
                break;
            }
            acc = acc.add(&t);
            pw = pw.mul(&n2);
            k += 1;
        }
        acc.with_prec(p)
    })
}

static BERNOULLI: Mutex<Vec<BigRational>> = Mutex::new(Vec::new());

/// Bernoulli number `B_n` with the convention `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> BigRational {
    let mut table = BERNOULLI.lock().unwrap();
    while table.len() <= n {
        let m = table.len();
        if m == 0 {
            table.push(BigRational::one());
            continue;
        }
        if m > 1 && m % 2 == 1 {
            table.push(BigRational::zero());
            continue;
        }
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, b) in table.iter().enumerate() {
            if !b.is_zero() {
                acc += b * BigRational::from_integer(binom.clone());
            }
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        table.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    table[n].clone()
}

#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Complex {
        Complex { re, im }
    }

    pub fn from_real(re: Real) -> Complex {
        let p = re.prec();
        Complex { re, im: Real::zero(p) }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Complex {
        Complex { re: Real::from_f64(re, prec), im: Real::from_f64(im, prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, p: u32) -> Complex {
        Complex { re: self.re.with_prec(p), im: self.im.with_prec(p) }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn neg(&self) -> Complex {
        Complex { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn add_real(&self, r: &Real) -> Complex {
        Complex { re: self.re.add(r), im: self.im.clone() }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        Complex {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn scale(&self, r: &Real) -> Complex {
        Complex { re: self.re.mul(r), im: self.im.mul(r) }
    }

    pub fn norm_sqr(&self) -> Real {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn arg(&self) -> Real {
        Real::atan2(&self.im, &self.re)
    }

    pub fn recip(&self) -> Complex {
        let d = self.norm_sqr();
        Complex { re: self.re.div(&d), im: self.im.neg().div(&d) }
    }

    pub fn div(&self, o: &Complex) -> Complex {
        self.mul(&o.recip())
    }

    pub fn exp(&self) -> Complex {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex { re: m.mul(&c), im: m.mul(&s) }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Complex {
        Complex { re: self.norm_sqr().ln().mul_pow2(-1), im: self.arg() }
    }

    pub fn sin(&self) -> Complex {
        let (s, c) = self.re.sin_cos();
        let (sh, ch) = self.im.sinh_cosh();
        Complex { re: s.mul(&ch), im: c.mul(&sh) }
    }
}

/// `ln Gamma(z)` by Stirling's series; requires `|z|` large compared with the precision.
fn ln_gamma_stirling(z: &Complex, w: u32) -> Complex {
    let half = Real::one(w).mul_pow2(-1);
    let ln_z = z.ln();
    let ln_2pi = pi(w).mul_pow2(1).ln();
    let mut acc = z.sub(&Complex::from_real(half)).mul(&ln_z).sub(z).add_real(&ln_2pi.mul_pow2(-1));
    let zi = z.recip();
    let zi2 = zi.mul(&zi);
    let mut pw = zi;
    let mut k = 1usize;
    loop {
        let b = Real::from_ratio(&bernoulli(2 * k), w);
        let c = b.div_i64((2 * k * (2 * k - 1)) as i64);
        let t = pw.scale(&c);
        acc = acc.add(&t);
        let tm = t.abs();
        if tm.is_zero() || tm.ilog2() < -(w as i64) - 4 || k > 4 * w as usize {
            break;
        }
        pw = pw.mul(&zi2);
        k += 1;
    }
    acc
}

/// `1/Gamma(z)`, an entire function; exact zeros at the non-positive integers.
pub fn rgamma(z: &Complex) -> Complex {
    let prec = z.prec();
    let w = prec + GUARD + 16;
    let z = z.with_prec(w);
    let half = Real::one(w).mul_pow2(-1);
    if z.re.cmp(&half) == Ordering::Less {
        // 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi, with the real part reduced first
        let k = z.re.round_to_bigint();
        let frac = Complex::new(z.re.sub(&Real::from_bigint(&k, w)), z.im.clone());
        if frac.is_zero() {
            return Complex::from_real(Real::zero(prec));
        }
        let mut s = frac.scale(&pi(w)).sin();
        if k.is_odd() {
            s = s.neg();
        }
        let one_minus = Complex::from_real(Real::one(w)).sub(&z);
        let g = rgamma(&one_minus).recip();
        return s.mul(&g).scale(&pi(w).recip()).with_prec(prec);
    }
    let radius = (0.11 * w as f64).ceil() + 2.0;
    let n = (radius - z.re.to_f64()).ceil().max(0.0) as i64;
    let mut prod = Complex::from_real(Real::one(w));
    let mut zz = z.clone();
    for _ in 0..n {
        prod = prod.mul(&zz);
        zz = zz.add_real(&Real::one(w));
    }
    let lg = ln_gamma_stirling(&zz, w);
    prod.mul(&lg.neg().exp()).with_prec(prec)
}

/// `Gamma(z)`; `None` at a pole.
pub fn gamma(z: &Complex) -> Option<Complex> {
    let r = rgamma(z);
    if r.is_zero() {
        None
    } else {
        Some(r.recip())
    }
}

pub fn gamma_real(x: &Real) -> Option<Real> {
    gamma(&Complex::from_real(x.clone())).map(|c| c.re)
}

pub fn rgamma_real(x: &Real) -> Real {
    rgamma(&Complex::from_real(x.clone())).re
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 200;

    fn close(a: &Real, b: &Real, bits: i64) -> bool {
        let d = a.sub(b);
        d.is_zero() || d.ilog2() - b.ilog2().max(0) < -bits
    }

    #[test]
    fn constants_match_known_digits() {
        let pi_s = "3.14159265358979323846264338327950288419716939937510582097494";
        assert!(pi(P).to_sci_string(50).starts_with(&pi_s[..50]));
        assert!(ln2(P).to_sci_string(40).starts_with("6.93147180559945309417232121458176568075"));
        assert!(euler_gamma(P).to_sci_string(40).starts_with("5.77215664901532860606512090082402431042"));
    }

    #[test]
    fn bernoulli_small() {
        assert_eq!(bernoulli(1), BigRational::new((-1).into(), 2.into()));
        assert_eq!(bernoulli(12), BigRational::new((-691).into(), 2730.into()));
        assert!(bernoulli(13).is_zero());
    }

    #[test]
    fn exp_ln_roundtrip() {
        for v in [1e-8, 0.3, 1.0, 2.5, 77.0, 1234.5] {
            let x = Real::from_f64(v, P);
            assert!(close(&x.ln().exp(), &x, 190), "v = {v}");
            assert!(close(&x.exp().ln(), &x, 185), "v = {v}");
        }
        let e = Real::one(P).exp();
        assert!(e.to_sci_string(40).starts_with("2.718281828459045235360287471352662497757"));
    }

    #[test]
    fn trig_identities() {
        for v in [0.1, 1.0, -2.0, 10.0, 1e5] {
            let x = Real::from_f64(v, P);
            let (s, c) = x.sin_cos();
            assert!(close(&s.mul(&s).add(&c.mul(&c)), &Real::one(P), 190));
            assert!((s.to_f64() - v.sin()).abs() < 1e-12);
        }
        let four_atan_one = Real::one(P).atan().mul_i64(4);
        assert!(close(&four_atan_one, &pi(P), 190));
        let a = Real::atan2(&Real::from_f64(-1.0, P), &Real::from_f64(-1.0, P));
        assert!((a.to_f64() + 0.75 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sqrt_and_div() {
        let two = Real::from_i64(2, P);
        let r = two.sqrt();
        assert!(close(&r.mul(&r), &two, 195));
        let third = Real::one(P).div_i64(3);
        assert!(close(&third.mul_i64(3), &Real::one(P), 195));
    }

    #[test]
    fn gamma_values() {
        let g = gamma_real(&Real::from_f64(0.5, P)).unwrap();
        assert!(close(&g, &pi(P).sqrt(), 180));
        let g = gamma_real(&Real::from_i64(21, P)).unwrap();
        assert!(close(&g, &Real::from_bigint(&"2432902008176640000".parse().unwrap(), P), 180));
        let g = gamma_real(&Real::from_f64(-0.5, P)).unwrap();
        assert!(close(&g, &pi(P).sqrt().mul_i64(-2), 180));
        assert!(gamma_real(&Real::from_i64(-3, P)).is_none());
        assert!(rgamma_real(&Real::from_i64(0, P)).is_zero());
    }

    #[test]
    fn gamma_complex_reflection() {
        let z = Complex::from_f64(0.3, 2.0, P);
        let one_minus = Complex::from_real(Real::one(P)).sub(&z);
        let lhs = gamma(&z).unwrap().mul(&gamma(&one_minus).unwrap());
        let rhs = Complex::from_real(pi(P)).div(&z.scale(&pi(P)).sin());
        assert!(close(&lhs.sub(&rhs).abs().add(&Real::one(P)), &Real::one(P), 170));
    }

    #[test]
    fn sci_string_format() {
        assert_eq!(Real::from_f64(-1234.5, 64).to_sci_string(4), "-1.235e3");
        assert_eq!(Real::from_f64(0.00125, 64).to_sci_string(2), "1.3e-3");
    }
}
