//! Angles as `pi_coeff * π + remainder` with exact modular reduction.
//!
//! The remainder is a short sum of terms `c * b^e` with rational `c`, `b` and
//! a machine-size exponent `e`, so quantities like `7 q^(k+1) / k` for very
//! large `k` stay small and exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::interval::CertInterval;
use super::{format_rational, parse_rational, trig, PrecisionError};

/// Above this many bits a remainder is not rendered as a single fraction.
const FLAT_BITS_LIMIT: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PowerTerm {
    pub coeff: BigRational,
    pub base: BigRational,
    pub exp: u64,
}

impl PowerTerm {
    fn approx_bits(&self) -> u64 {
        let b = self.base.numer().bits().max(self.base.denom().bits());
        self.exp.saturating_mul(b)
    }

    fn eval(&self, bits: u32) -> CertInterval {
        let extra = 8 + 2 * (64 - self.exp.leading_zeros());
        let wp = bits + extra;
        let p = CertInterval::from_rational(&self.base, wp).pow(self.exp);
        p.mul(&CertInterval::from_rational(&self.coeff, wp))
    }
}

/// Canonical sparse sum of power terms. Terms with equal `(base, exp)` are
/// merged, zero terms dropped, and the list sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PowerSum {
    terms: Vec<PowerTerm>,
}

impl PowerSum {
    pub fn zero() -> Self {
        PowerSum { terms: Vec::new() }
    }

    pub fn rational(c: BigRational) -> Self {
        Self::term(c, BigRational::one(), 0)
    }

    /// `c * base^exp`.
    pub fn term(c: BigRational, base: BigRational, exp: u64) -> Self {
        let mut s = PowerSum { terms: vec![PowerTerm { coeff: c, base, exp }] };
        s.canonicalize();
        s
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    fn canonicalize(&mut self) {
        let mut flat = BigRational::zero();
        let mut rest: Vec<PowerTerm> = Vec::new();
        for t in self.terms.drain(..) {
            if t.coeff.is_zero() {
                continue;
            }
            if t.base.is_zero() {
                if t.exp == 0 {
                    flat += t.coeff;
                }
                continue;
            }
            if t.exp == 0 || t.base.is_one() {
                flat += t.coeff;
                continue;
            }
            // Keep a moderate-size power flat so small values stay plain fractions.
            if t.approx_bits() <= 256 {
                let p = num_traits::pow(t.base.clone(), t.exp as usize);
                flat += t.coeff * p;
                continue;
            }
            rest.push(t);
        }
        rest.sort_by(|a, b| (a.exp, &a.base).cmp(&(b.exp, &b.base)));
        let mut merged: Vec<PowerTerm> = Vec::new();
        for t in rest {
            if let Some(last) = merged.last_mut() {
                if last.exp == t.exp && last.base == t.base {
                    last.coeff += t.coeff;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| !t.coeff.is_zero());
        if !flat.is_zero() {
            merged.insert(0, PowerTerm { coeff: flat, base: BigRational::one(), exp: 0 });
        }
        self.terms = merged;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut s = PowerSum { terms: self.terms.iter().chain(o.terms.iter()).cloned().collect() };
        s.canonicalize();
        s
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        let mut s = PowerSum {
            terms: self
                .terms
                .iter()
                .map(|t| PowerTerm { coeff: &t.coeff * r, base: t.base.clone(), exp: t.exp })
                .collect(),
        };
        s.canonicalize();
        s
    }

    /// The value as one fraction, if that fraction is of moderate size.
    pub fn as_rational(&self) -> Option<BigRational> {
        let total: u64 = self.terms.iter().map(|t| t.approx_bits()).sum();
        if total > FLAT_BITS_LIMIT {
            return None;
        }
        let mut acc = BigRational::zero();
        for t in &self.terms {
            acc += &t.coeff * num_traits::pow(t.base.clone(), t.exp as usize);
        }
        Some(acc)
    }

    pub fn eval(&self, bits: u32) -> CertInterval {
        let mut acc = CertInterval::zero(bits);
        for t in &self.terms {
            acc = acc.add(&t.eval(bits));
        }
        acc
    }

    /// Certified sign, escalating precision up to `max_bits`.
    pub fn sign(&self, max_bits: u32) -> Option<Ordering> {
        if self.is_zero() {
            return Some(Ordering::Equal);
        }
        if let Some(r) = self.as_rational() {
            return Some(r.cmp(&BigRational::zero()));
        }
        let mut bits = 128;
        loop {
            if let Some(s) = self.eval(bits).sign() {
                return Some(s);
            }
            if bits >= max_bits {
                return None;
            }
            bits = (bits * 2).min(max_bits);
        }
    }

    pub fn parse(s: &str) -> Result<Self, PrecisionError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(PrecisionError::Parse(s.to_string()));
        }
        let mut acc = PowerSum::zero();
        for part in s.split(" + ") {
            let part = part.trim();
            let t = if let Some((c, rest)) = part.split_once('*') {
                let (b, e) = rest
                    .trim_start_matches('(')
                    .split_once(")^")
                    .ok_or_else(|| PrecisionError::Parse(part.to_string()))?;
                let e: u64 = e.parse().map_err(|_| PrecisionError::Parse(part.to_string()))?;
                PowerSum::term(parse_rational(c)?, parse_rational(b)?, e)
            } else {
                PowerSum::rational(parse_rational(part)?)
            };
            acc = acc.add(&t);
        }
        Ok(acc)
    }
}

impl fmt::Display for PowerSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{}", format_rational(&r));
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                if t.exp == 0 {
                    format_rational(&t.coeff)
                } else {
                    format!("{}*({})^{}", format_rational(&t.coeff), format_rational(&t.base), t.exp)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `pi_coeff * π + remainder`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AngleRep {
    pub pi_coeff: BigRational,
    pub remainder: PowerSum,
}

impl AngleRep {
    pub fn new(pi_coeff: BigRational, remainder: PowerSum) -> Self {
        AngleRep { pi_coeff, remainder }
    }

    pub fn zero() -> Self {
        AngleRep { pi_coeff: BigRational::zero(), remainder: PowerSum::zero() }
    }

    pub fn from_pi(c: BigRational) -> Self {
        AngleRep { pi_coeff: c, remainder: PowerSum::zero() }
    }

    pub fn from_rational(r: BigRational) -> Self {
        AngleRep { pi_coeff: BigRational::zero(), remainder: PowerSum::rational(r) }
    }

    pub fn is_zero(&self) -> bool {
        self.pi_coeff.is_zero() && self.remainder.is_zero()
    }

    /// Canonical form with `pi_coeff` in `[0, 2)`; exact.
    pub fn mod_2pi(&self) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        let k = (&self.pi_coeff / &two).floor();
        AngleRep { pi_coeff: &self.pi_coeff - k * two, remainder: self.remainder.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        AngleRep { pi_coeff: &self.pi_coeff + &o.pi_coeff, remainder: self.remainder.add(&o.remainder) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AngleRep { pi_coeff: &self.pi_coeff - &o.pi_coeff, remainder: self.remainder.sub(&o.remainder) }
    }

    pub fn neg(&self) -> Self {
        AngleRep { pi_coeff: -&self.pi_coeff, remainder: self.remainder.neg() }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        AngleRep { pi_coeff: &self.pi_coeff * r, remainder: self.remainder.scale(r) }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(k)))
    }

    /// Real value (not reduced) as an interval.
    pub fn value(&self, bits: u32) -> CertInterval {
        let p = trig::pi(bits + 8).scale(&self.pi_coeff);
        p.add(&self.remainder.eval(bits + 8))
    }

    /// Certified comparison of the real values, escalating up to `max_bits`.
    pub fn cmp_value(&self, o: &Self, max_bits: u32) -> Option<Ordering> {
        let d = self.sub(o);
        if d.pi_coeff.is_zero() {
            return d.remainder.sign(max_bits);
        }
        let mut bits = 128;
        loop {
            if let Some(s) = d.value(bits).sign() {
                return Some(s);
            }
            if bits >= max_bits {
                return None;
            }
            bits = (bits * 2).min(max_bits);
        }
    }

    /// Certified (cos, sin). Angles that are exact multiples of π/2 give
    /// exact results.
    pub fn cos_sin(&self, bits: u32) -> (CertInterval, CertInterval) {
        trig_eval(self, bits)
    }

    /// Parses `p/q`, decimals, `pi`, `3pi/2`, `-pi/4`, and sums such as
    /// `pi/2 + 1/1000`.
    pub fn parse(s: &str) -> Result<Self, PrecisionError> {
        let s = s.trim();
        let mut acc = AngleRep::zero();
        for part in split_signed(s) {
            let part: String = part.chars().filter(|c| !c.is_whitespace()).collect();
            let part = part.trim_start_matches('+');
            if let Some(idx) = part.find("pi") {
                let (c, rest) = part.split_at(idx);
                let rest = &rest[2..];
                let c = c.trim().trim_end_matches('*');
                let coeff = match c {
                    "" | "+" => BigRational::one(),
                    "-" => -BigRational::one(),
                    other => parse_rational(other)?,
                };
                let div = if rest.is_empty() {
                    BigRational::one()
                } else {
                    let d = rest.strip_prefix('/').ok_or_else(|| PrecisionError::Parse(part.to_string()))?;
                    parse_rational(d)?
                };
                if div.is_zero() {
                    return Err(PrecisionError::Parse(part.to_string()));
                }
                acc = acc.add(&AngleRep::from_pi(coeff / div));
            } else {
                acc = acc.add(&AngleRep::from_rational(parse_rational(part)?));
            }
        }
        Ok(acc)
    }
}

fn split_signed(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = s.chars().collect();
    for (i, &ch) in chars.iter().enumerate() {
        let prev = if i > 0 { chars[i - 1] } else { ' ' };
        if (ch == '+' || ch == '-') && !cur.trim().is_empty() && prev != 'e' && prev != 'E' && prev != '/' {
            parts.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        parts.push(cur);
    }
    parts
}

impl fmt::Display for AngleRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*pi + {}", format_rational(&self.pi_coeff), self.remainder)
    }
}

#[derive(Serialize, Deserialize)]
struct AngleWire {
    pi_coeff: String,
    remainder: String,
}

impl Serialize for PowerSum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PowerSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PowerSum::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Serialize for AngleRep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AngleWire { pi_coeff: format_rational(&self.pi_coeff), remainder: self.remainder.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AngleRep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = AngleWire::deserialize(d)?;
        let p = parse_rational(&w.pi_coeff).map_err(serde::de::Error::custom)?;
        let r = PowerSum::parse(&w.remainder).map_err(serde::de::Error::custom)?;
        Ok(AngleRep::new(p, r))
    }
}

/// Exact mod-2π reduction.
pub fn angle_mod_2pi(a: &AngleRep) -> AngleRep {
    a.mod_2pi()
}

/// Certified `(cos, sin)` of an angle.
pub fn trig_eval(a: &AngleRep, bits: u32) -> (CertInterval, CertInterval) {
    let r = a.mod_2pi();
    let twice = &r.pi_coeff * BigRational::from_integer(BigInt::from(2));
    let quarter = twice.floor().to_integer();
    let qd = quarter.mod_floor(&BigInt::from(4)).to_i64().unwrap_or(0);
    let frac = &r.pi_coeff - BigRational::new(quarter, BigInt::from(2));
    let (c, s) = if frac.is_zero() && r.remainder.is_zero() {
        (CertInterval::one(bits), CertInterval::zero(bits))
    } else {
        let wp = bits + 16;
        let mut t = r.remainder.eval(wp);
        if !frac.is_zero() {
            t = t.add(&trig::pi(wp).scale(&frac));
        }
        let (s, c) = trig::sin_cos(&t, bits);
        (c, s)
    };
    match qd {
        0 => (c, s),
        1 => (s.neg(), c),
        2 => (c.neg(), s.neg()),
        _ => (s, c.neg()),
    }
}

/// `frac(x)` helper used by sign-run analysis: the exact rational `x mod 2`.
pub fn mod2(x: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    x - (x / &two).floor() * two
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigFloat;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn q() -> BigRational {
        r(1, 1000)
    }

    #[test]
    fn reduction_examples() {
        let a = AngleRep::new(r(2, 1), PowerSum::term(r(7, 1), q(), 3));
        let m = angle_mod_2pi(&a);
        assert_eq!(m.pi_coeff, r(0, 1));
        assert_eq!(m.remainder, PowerSum::term(r(7, 1), q(), 3));
        assert_eq!(angle_mod_2pi(&AngleRep::zero()), AngleRep::zero());
        let b = angle_mod_2pi(&AngleRep::from_pi(r(5, 2)));
        assert_eq!(b, AngleRep::from_pi(r(1, 2)));
        let c = angle_mod_2pi(&AngleRep::from_pi(r(-1, 2)));
        assert_eq!(c.pi_coeff, r(3, 2));
    }

    #[test]
    fn exact_quarter_turns() {
        let (c, s) = trig_eval(&AngleRep::from_pi(r(1, 2)), 64);
        assert!(c.contains(&BigFloat::zero()) && s.contains(&BigFloat::one()));
        assert!(c.is_point() && s.is_point());
        let (c, s) = trig_eval(&AngleRep::zero(), 64);
        assert!(c.contains(&BigFloat::one()) && s.contains(&BigFloat::zero()));
    }

    #[test]
    fn remainder_one_radian() {
        let (c, s) = trig_eval(&AngleRep::from_rational(r(1, 1)), 128);
        assert!(c.to_decimal_pair(10).0.starts_with("5.403023058"));
        assert!(s.to_decimal_pair(10).0.starts_with("8.414709848"));
        assert!(c.width().top() <= -100 && s.width().top() <= -100);
    }

    #[test]
    fn huge_exponent_terms_stay_symbolic() {
        let k: u64 = 628_318_531;
        let t = PowerSum::term(r(7, k as i64), q(), k + 1);
        assert!(t.as_rational().is_none());
        let back = t.scale(&r(k as i64, 1));
        assert_eq!(back, PowerSum::term(r(7, 1), q(), k + 1));
        assert_eq!(PowerSum::parse(&back.to_string()).unwrap(), back);
        assert_eq!(t.sign(256), Some(Ordering::Greater));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(AngleRep::parse("pi/2").unwrap(), AngleRep::from_pi(r(1, 2)));
        assert_eq!(AngleRep::parse("3pi/2").unwrap(), AngleRep::from_pi(r(3, 2)));
        assert_eq!(AngleRep::parse("-pi").unwrap(), AngleRep::from_pi(r(-1, 1)));
        assert_eq!(AngleRep::parse("2*pi").unwrap(), AngleRep::from_pi(r(2, 1)));
        let s = AngleRep::parse("pi/2 + 1/1000").unwrap();
        assert_eq!(s, AngleRep::new(r(1, 2), PowerSum::rational(r(1, 1000))));
        assert_eq!(AngleRep::parse("1").unwrap(), AngleRep::from_rational(r(1, 1)));
    }

    #[test]
    fn json_round_trip() {
        let a = AngleRep::new(r(3, 7), PowerSum::term(r(7, 5), q(), 9000));
        let j = serde_json::to_string(&a).unwrap();
        let b: AngleRep = serde_json::from_str(&j).unwrap();
        assert_eq!(a, b);
    }
}
