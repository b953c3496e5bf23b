//! Outward-rounded intervals with `BigFloat` endpoints.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::bigfloat::{BigFloat, Round};
use super::PrecisionError;

/// Result of comparing two intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalOrd {
    Less,
    Greater,
    Overlap,
}

#[derive(Clone, PartialEq, Eq)]
pub struct CertInterval {
    lo: BigFloat,
    hi: BigFloat,
    bits: u32,
}

impl CertInterval {
    pub fn new(lo: BigFloat, hi: BigFloat, bits: u32) -> Self {
        assert!(lo <= hi, "interval with lo > hi");
        CertInterval { lo, hi, bits }
    }

    pub fn point(x: BigFloat, bits: u32) -> Self {
        CertInterval { lo: x.clone(), hi: x, bits }
    }

    pub fn zero(bits: u32) -> Self {
        Self::point(BigFloat::zero(), bits)
    }

    pub fn one(bits: u32) -> Self {
        Self::point(BigFloat::one(), bits)
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        Self::point(BigFloat::from_i64(v), bits)
    }

    pub fn from_rational(q: &BigRational, bits: u32) -> Self {
        if q.denom().is_one() {
            return Self::point(BigFloat::from_bigint(q.numer().clone()), bits);
        }
        CertInterval {
            lo: BigFloat::from_rational(q, bits, Round::Down),
            hi: BigFloat::from_rational(q, bits, Round::Up),
            bits,
        }
    }

    /// Interval around an `f64` whose provenance is only approximate.
    pub fn from_f64(v: f64, bits: u32) -> Self {
        Self::point(BigFloat::from_f64_exact(v), bits)
    }

    /// `[lo, hi]` from two possibly unordered endpoints.
    pub fn hull_of(a: BigFloat, b: BigFloat, bits: u32) -> Self {
        if a <= b {
            CertInterval { lo: a, hi: b, bits }
        } else {
            CertInterval { lo: b, hi: a, bits }
        }
    }

    pub fn lo(&self) -> &BigFloat {
        &self.lo
    }

    pub fn hi(&self) -> &BigFloat {
        &self.hi
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bits = bits;
        self
    }

    fn prec(&self, other: &Self) -> u32 {
        self.bits.max(other.bits)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = self.prec(o);
        CertInterval {
            lo: self.lo.add(&o.lo, p, Round::Down),
            hi: self.hi.add(&o.hi, p, Round::Up),
            bits: p,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = self.prec(o);
        CertInterval {
            lo: self.lo.sub(&o.hi, p, Round::Down),
            hi: self.hi.sub(&o.lo, p, Round::Up),
            bits: p,
        }
    }

    pub fn neg(&self) -> Self {
        CertInterval { lo: -&self.hi, hi: -&self.lo, bits: self.bits }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec(o);
        let cands = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = cands.iter().map(|(a, b)| a.mul(b, p, Round::Down)).min().unwrap();
        let hi = cands.iter().map(|(a, b)| a.mul(b, p, Round::Up)).max().unwrap();
        CertInterval { lo, hi, bits: p }
    }

    pub fn sqr(&self) -> Self {
        let a = self.abs();
        CertInterval {
            lo: a.lo.mul(&a.lo, self.bits, Round::Down),
            hi: a.hi.mul(&a.hi, self.bits, Round::Up),
            bits: self.bits,
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = (-&self.lo).max_ref(&self.hi).clone();
            CertInterval { lo: BigFloat::zero(), hi: m, bits: self.bits }
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self, PrecisionError> {
        if o.contains_zero() {
            return Err(PrecisionError::DivisionByZero);
        }
        let p = self.prec(o);
        let cands = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = cands.iter().map(|(a, b)| a.div(b, p, Round::Down)).min().unwrap();
        let hi = cands.iter().map(|(a, b)| a.div(b, p, Round::Up)).max().unwrap();
        Ok(CertInterval { lo, hi, bits: p })
    }

    /// Square root. A lower endpoint below zero is an error even when the
    /// upper endpoint is non-negative; use [`sqrt_clamped`](Self::sqrt_clamped)
    /// to take the root over the non-negative part only.
    pub fn sqrt(&self) -> Result<Self, PrecisionError> {
        if self.hi.is_negative() {
            return Err(PrecisionError::NegativeRadicand);
        }
        if self.lo.is_negative() {
            return Err(PrecisionError::PartialDomain);
        }
        Ok(self.sqrt_clamped())
    }

    pub fn sqrt_clamped(&self) -> Self {
        let lo = if self.lo.is_positive() { self.lo.sqrt(self.bits, Round::Down) } else { BigFloat::zero() };
        let hi = if self.hi.is_positive() { self.hi.sqrt(self.bits, Round::Up) } else { BigFloat::zero() };
        CertInterval { lo, hi, bits: self.bits }
    }

    pub fn pow(&self, n: u64) -> Self {
        if n == 0 {
            return Self::one(self.bits);
        }
        let base = if n % 2 == 0 { self.abs() } else { self.clone() };
        let mut result: Option<Self> = None;
        let mut b = base;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => b.clone(),
                    Some(r) => r.mul(&b),
                });
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        result.unwrap()
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        CertInterval { lo: self.lo.mul_pow2(k), hi: self.hi.mul_pow2(k), bits: self.bits }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        self.mul(&Self::from_rational(r, self.bits))
    }

    pub fn max(&self, o: &Self) -> Self {
        CertInterval { lo: self.lo.max_ref(&o.lo).clone(), hi: self.hi.max_ref(&o.hi).clone(), bits: self.prec(o) }
    }

    pub fn min(&self, o: &Self) -> Self {
        CertInterval { lo: self.lo.min_ref(&o.lo).clone(), hi: self.hi.min_ref(&o.hi).clone(), bits: self.prec(o) }
    }

    /// Smallest interval containing both.
    pub fn union(&self, o: &Self) -> Self {
        CertInterval { lo: self.lo.min_ref(&o.lo).clone(), hi: self.hi.max_ref(&o.hi).clone(), bits: self.prec(o) }
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let lo = self.lo.max_ref(&o.lo).clone();
        let hi = self.hi.min_ref(&o.hi).clone();
        if lo <= hi {
            Some(CertInterval { lo, hi, bits: self.prec(o) })
        } else {
            None
        }
    }

    /// Widen by `r >= 0` on both sides.
    pub fn inflate(&self, r: &BigFloat) -> Self {
        CertInterval {
            lo: self.lo.sub(r, self.bits, Round::Down),
            hi: self.hi.add(r, self.bits, Round::Up),
            bits: self.bits,
        }
    }

    pub fn width(&self) -> BigFloat {
        self.hi.sub(&self.lo, self.bits, Round::Up)
    }

    /// A representable point inside the interval, close to the centre.
    pub fn mid(&self) -> BigFloat {
        let m = self.lo.add(&self.hi, self.bits + 2, Round::Down).mul_pow2(-1);
        if m < self.lo {
            self.lo.clone()
        } else if m > self.hi {
            self.hi.clone()
        } else {
            m
        }
    }

    /// Half-width rounded up; `mid() ± rad()` covers the interval.
    pub fn rad(&self) -> BigFloat {
        let m = self.mid();
        let a = m.sub(&self.lo, self.bits, Round::Up);
        let b = self.hi.sub(&m, self.bits, Round::Up);
        a.max_ref(&b).clone()
    }

    pub fn contains(&self, x: &BigFloat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Exact membership test for a rational.
    pub fn contains_rational(&self, q: &BigRational) -> bool {
        let d = BigFloat::from_bigint(q.denom().clone());
        let n = BigFloat::from_bigint(q.numer().clone());
        self.lo.mul_exact(&d) <= n && n <= self.hi.mul_exact(&d)
    }

    pub fn contains_interval(&self, o: &Self) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn cmp_interval(&self, o: &Self) -> IntervalOrd {
        if self.hi < o.lo {
            IntervalOrd::Less
        } else if self.lo > o.hi {
            IntervalOrd::Greater
        } else {
            IntervalOrd::Overlap
        }
    }

    /// Certified sign: `Some(Greater)` if every element is positive, etc.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    /// Certified `self < o`.
    pub fn lt(&self, o: &Self) -> bool {
        self.hi < o.lo
    }

    /// Certified `self <= o`.
    pub fn le(&self, o: &Self) -> bool {
        self.hi <= o.lo
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Outward-rounded decimal endpoints with `digits` significant digits.
    pub fn to_decimal_pair(&self, digits: usize) -> (String, String) {
        (format_decimal(&self.lo, digits, Round::Down), format_decimal(&self.hi, digits, Round::Up))
    }
}

impl fmt::Debug for CertInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_decimal_pair(20);
        write!(f, "[{a}, {b}]@{}", self.bits)
    }
}

impl fmt::Display for CertInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_decimal_pair(17);
        write!(f, "[{a}, {b}]")
    }
}

/// Serialized as decimal endpoint strings rounded outward to 17 digits.
impl Serialize for CertInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (a, b) = self.to_decimal_pair(17);
        let mut st = s.serialize_struct("CertInterval", 2)?;
        st.serialize_field("lo", &a)?;
        st.serialize_field("hi", &b)?;
        st.end()
    }
}

/// Past this binary exponent decimal expansion is not attempted and the exact
/// binary form `<mantissa>p<exponent>` is emitted instead.
const DECIMAL_EXP_LIMIT: i64 = 1 << 14;

/// Directed decimal rendering in scientific notation.
pub fn format_decimal(x: &BigFloat, digits: usize, dir: Round) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let top = x.top();
    if top.abs() > DECIMAL_EXP_LIMIT {
        return format!("{}p{}", x.mantissa(), x.exponent());
    }
    let digits = digits.max(1) as i64;
    // floor(log10 |x|) estimate; off-by-one only changes the digit count.
    let e10 = ((top - 1) as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let s = digits - 1 - e10;
    let ten = BigInt::from(10);
    let work = (top.unsigned_abs() as u32 + digits as u32 * 4 + 64).max(128);
    let y = if s >= 0 {
        x.mul_exact(&BigFloat::from_bigint(num_traits::pow(ten, s as usize)))
    } else {
        let d = BigFloat::from_bigint(num_traits::pow(ten, (-s) as usize));
        x.div(&d, work, dir)
    };
    let n = match dir {
        Round::Down => y.floor_int(),
        Round::Up => -((-y).floor_int()),
    };
    let neg = n.is_negative();
    let ds = n.abs().to_string();
    let exp = ds.len() as i64 - 1 - s;
    let (head, tail) = ds.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{exp}")
    } else {
        format!("{sign}{head}.{tail}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn sqrt_of_perfect_square_is_tight() {
        let x = CertInterval::from_i64(4, 64);
        let r = x.sqrt().unwrap();
        assert!(r.contains(&BigFloat::from_i64(2)));
        assert!(r.width().to_f64() <= 2f64.powi(-62));
    }

    #[test]
    fn sqrt_of_zero() {
        let r = CertInterval::zero(64).sqrt().unwrap();
        assert!(r.lo().is_zero() && r.hi().is_zero());
    }

    #[test]
    fn sqrt_domain_errors() {
        let neg = CertInterval::from_i64(-1, 64);
        assert!(matches!(neg.sqrt(), Err(PrecisionError::NegativeRadicand)));
        let mixed = CertInterval::new(BigFloat::from_i64(-1), BigFloat::from_i64(1), 64);
        assert!(matches!(mixed.sqrt(), Err(PrecisionError::PartialDomain)));
    }

    #[test]
    fn sqrt_small_value() {
        let x = CertInterval::from_rational(&q(5, 10_000_000), 512);
        let r = x.sqrt().unwrap();
        // 7.0710678118654752e-4
        let (lo, hi) = (r.lo().to_f64(), r.hi().to_f64());
        assert!((lo - 7.071067811865475e-4).abs() < 1e-18);
        assert!(hi - lo < 1e-100);
    }

    #[test]
    fn rational_containment_is_exact() {
        let x = CertInterval::from_rational(&q(1, 3), 80);
        assert!(x.contains_rational(&q(1, 3)));
        assert!(!x.contains_rational(&q(333_333, 1_000_000)));
        assert_eq!(CertInterval::from_i64(2, 8).cmp_interval(&CertInterval::from_i64(3, 8)), IntervalOrd::Less);
    }

    #[test]
    fn decimal_rendering_is_directed() {
        let x = CertInterval::from_rational(&q(1, 3), 128);
        let (a, b) = x.to_decimal_pair(5);
        assert_eq!(a, "3.3333e-1");
        assert_eq!(b, "3.3334e-1");
        assert_eq!(format_decimal(&BigFloat::from_i64(1000), 5, Round::Down), "1e3");
        assert_eq!(format_decimal(&BigFloat::from_i64(-25), 5, Round::Up), "-2.5e1");
    }
}
