//! Exact rationals, certified intervals and angles.

mod angle;
mod bigfloat;
mod interval;
pub mod trig;

pub use angle::{angle_mod_2pi, mod2, trig_eval, AngleRep, PowerSum, PowerTerm};
pub use bigfloat::{BigFloat, Round};
pub use interval::{format_decimal, CertInterval, IntervalOrd};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use num_rational::BigRational as Rational;

/// Working precision used when a caller does not ask for one.
pub const DEFAULT_BITS: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrecisionError {
    #[error("square root of a negative interval")]
    NegativeRadicand,
    #[error("square root of an interval straddling zero")]
    PartialDomain,
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("cannot parse number: {0}")]
    Parse(String),
}

/// `[PrecisionError::NegativeRadicand]`-safe `interval_sqrt`.
pub fn interval_sqrt(x: &CertInterval) -> Result<CertInterval, PrecisionError> {
    x.sqrt()
}

/// Parses `p/q`, integers and decimals with an optional exponent, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, PrecisionError> {
    let s = s.trim();
    let err = || PrecisionError::Parse(s.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all = format!("{int_part}{frac_part}");
    let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| err())? };
    let scale = exp - frac_part.len() as i64;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(n);
    if scale >= 0 {
        v *= num_traits::pow(ten, scale as usize);
    } else {
        v /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -v } else { v })
}

/// `p/q`, or `p` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Serde helpers for exact rational strings.
pub mod rational_serde {
    use super::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), rat(-7, 1));
        assert_eq!(parse_rational("0.001").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), rat(250, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(format_rational(&rat(-4, 6)), "-2/3");
    }
}
