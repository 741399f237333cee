//! Exact parsing and formatting of rational parameters.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `"p/q"`, an integer, or a finite decimal such as `"2.5"` or `"1e-6"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::NonRationalEpsilon(s.to_string());
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mant, exp10) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp10 - fp.len() as i32;
    let ten = BigRational::from_integer(10.into());
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= num_traits::pow(ten, scale as usize);
    } else {
        r /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -r } else { r })
}

/// Exact rational value of a finite `f64`, used only when the caller accepts binary rounding.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::NonRationalEpsilon(x.to_string()))
}

/// Shortest decimal string that round-trips to the same `f64`, converted exactly.
pub fn rational_from_f64_decimal(x: f64) -> Result<BigRational> {
    parse_rational(&format!("{x:e}"))
}

pub fn to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r.numer(), r.denom())
}

/// `n/d` as `f64`, robust for numerators and denominators far beyond the `f64` range.
pub fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // scale so the integer quotient carries about 64 significant bits
    let s = 64 - (nb - db);
    let q = if s >= 0 { (n << (s as usize)) / d } else { n / (d << ((-s) as usize)) };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    let e = -s;
    if e.abs() > 2000 {
        return if e > 0 { qf.signum() * f64::INFINITY } else { 0.0 };
    }
    let e = e as i32;
    qf * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
}

/// `p/q` string form.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert_eq!(parse_rational("2.5").unwrap(), r(5, 2));
        assert_eq!(parse_rational("-3/6").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("1e-6").unwrap(), r(1, 1_000_000));
        assert_eq!(parse_rational("9.8").unwrap(), r(49, 5));
        assert_eq!(parse_rational("20").unwrap(), r(20, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("sqrt(2)").is_err());
    }

    #[test]
    fn huge_ratio_to_f64() {
        let n = BigInt::from(3) * num_traits::pow(BigInt::from(10), 900);
        let d = num_traits::pow(BigInt::from(10), 900);
        assert!((ratio_to_f64(&n, &d) - 3.0).abs() < 1e-15);
        assert!((ratio_to_f64(&-BigInt::one(), &BigInt::from(8)) + 0.125).abs() < 1e-18);
    }
}
