//! Exact scalars: arbitrary precision rationals and small integer helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_i128(n: i128) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `n!` as an exact integer.
pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Generalised binomial coefficient `n (n-1) ... (n-k+1) / k!` for any integer `n`.
///
/// Panics on overflow of `i128`; arguments in this crate are tiny.
pub fn binom_i128(n: i64, k: u32) -> i128 {
    let mut acc: i128 = 1;
    for i in 0..k as i128 {
        acc = acc.checked_mul(n as i128 - i).expect("binomial overflow");
        acc /= i + 1;
    }
    acc
}

/// `base^exp` for a rational base and a signed exponent.
pub fn pow(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub fn to_f64(q: &Rational) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    // Large numerators: compare bit lengths to avoid infinities.
    let shift = q.numer().bits().max(q.denom().bits()) as i64 - 900;
    let n = (q.numer() >> shift.max(0) as usize).to_f64().unwrap_or(0.0);
    let d = (q.denom() >> shift.max(0) as usize).to_f64().unwrap_or(1.0);
    n / d
}

/// Floor of a rational as `i64`.
pub fn floor_i64(q: &Rational) -> i64 {
    q.numer().div_floor(q.denom()).to_i64().expect("floor out of range")
}

fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::String(n.to_string()),
    }
}

/// Encode a rational as a `[num, den]` JSON pair.
pub fn to_json(q: &Rational) -> Value {
    Value::Array(vec![bigint_json(q.numer()), bigint_json(q.denom())])
}

fn parse_bigint(v: &Value, path: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::config(format!("{path}: expected an integer"))),
        Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| Error::config(format!("{path}: bad integer literal {s:?}"))),
        _ => Err(Error::config(format!("{path}: expected an integer"))),
    }
}

/// Decode a rational from `[num, den]`, a bare integer, or a `"p/q"` string.
pub fn from_json(v: &Value, path: &str) -> Result<Rational> {
    match v {
        Value::Array(items) if items.len() == 2 => {
            let n = parse_bigint(&items[0], path)?;
            let d = parse_bigint(&items[1], path)?;
            if d.is_zero() {
                return Err(Error::config(format!("{path}: zero denominator")));
            }
            Ok(Rational::new(n, d))
        }
        Value::Number(_) => Ok(Rational::from_integer(parse_bigint(v, path)?)),
        Value::String(s) => {
            let (n, d) = match s.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (s.trim(), "1"),
            };
            let n = n
                .parse::<BigInt>()
                .map_err(|_| Error::config(format!("{path}: bad rational {s:?}")))?;
            let d = d
                .parse::<BigInt>()
                .map_err(|_| Error::config(format!("{path}: bad rational {s:?}")))?;
            if d.is_zero() {
                return Err(Error::config(format!("{path}: zero denominator")));
            }
            Ok(Rational::new(n, d))
        }
        _ => Err(Error::config(format!("{path}: expected [num, den]"))),
    }
}

/// Human readable form: `3`, `-1/2`.
pub fn display(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
