//! Exact rational arithmetic for the small-n oracle path.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::LogReal;
use crate::error::{Error, Result};

/// Arbitrary-precision rational, always reduced, positive denominator.
pub type Rational = BigRational;

/// `num / den` as a reduced rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a terminating decimal such as `"0.125"` exactly.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::param(format!("not a decimal: {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::param(format!("not a decimal: {s:?}")));
    }
    let num: BigInt = digits.parse().map_err(|_| Error::param(format!("not a decimal: {s:?}")))?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Natural log of a positive big integer, accurate to a few ulps for any size.
fn ln_bigint(x: &BigInt) -> f64 {
    debug_assert!(x.sign() == Sign::Plus);
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite below 2^1000").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Converts a non-negative rational into the log domain.
pub fn to_logreal(r: &Rational) -> LogReal {
    assert!(!r.is_negative(), "negative rational has no LogReal image");
    if r.is_zero() {
        return LogReal::ZERO;
    }
    LogReal::from_ln(ln_bigint(r.numer()) - ln_bigint(r.denom()))
}

/// Nearest-ish f64 (via the log path for huge/tiny magnitudes).
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v != 0.0 || r.is_zero() {
            return v;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * to_logreal(&r.abs()).to_linear()
}

/// `base^k` for a non-negative integer exponent.
pub fn pow(base: &Rational, k: usize) -> Rational {
    let mut acc = Rational::one();
    let mut b = base.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}
