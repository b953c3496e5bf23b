//! Binary floating-point numbers with an arbitrary-size mantissa and a wide
//! (`i64`) exponent. Every rounded operation takes an explicit precision and
//! direction; the `*_exact` operations never round.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::{Integer};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rounding direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

impl Round {
    pub fn flip(self) -> Round {
        match self {
            Round::Down => Round::Up,
            Round::Up => Round::Down,
        }
    }
}

/// `mant * 2^exp`, kept canonical: the mantissa is odd, or zero with `exp == 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

fn bit_len(m: &BigInt) -> i64 {
    m.bits() as i64
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        BigFloat { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_parts(mant: BigInt, exp: i64) -> Self {
        let mut f = BigFloat { mant, exp };
        f.normalize();
        f
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_parts(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Self::from_parts(v, 0)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64_exact(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite f64");
        if v == 0.0 {
            return Self::zero();
        }
        let bits = v.to_bits();
        let sign = if (bits >> 63) != 0 { -1 } else { 1 };
        let exponent = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & 0x000f_ffff_ffff_ffff;
        let (m, e) = if exponent == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), exponent - 1075)
        };
        Self::from_parts(BigInt::from(m) * sign, e)
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Number of significant bits of the mantissa.
    pub fn precision(&self) -> u64 {
        self.mant.bits()
    }

    /// `|self|` lies in `[2^(top-1), 2^top)`. Zero has `i64::MIN`.
    pub fn top(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + bit_len(&self.mant)
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        BigFloat { mant: self.mant.clone(), exp: self.exp + k }
    }

    /// Rounds `mant * 2^exp` to at most `bits` significant bits.
    pub fn round_parts(mant: BigInt, exp: i64, bits: u32, dir: Round) -> Self {
        let len = bit_len(&mant);
        let bits = bits.max(2) as i64;
        if len <= bits {
            return Self::from_parts(mant, exp);
        }
        let s = (len - bits) as usize;
        let m = match dir {
            // BigInt's `>>` rounds toward negative infinity.
            Round::Down => &mant >> s,
            Round::Up => -((-&mant) >> s),
        };
        Self::from_parts(m, exp + s as i64)
    }

    pub fn round(&self, bits: u32, dir: Round) -> Self {
        Self::round_parts(self.mant.clone(), self.exp, bits, dir)
    }

    pub fn add_exact(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << ((self.exp - e) as usize);
        let b = &other.mant << ((other.exp - e) as usize);
        Self::from_parts(a + b, e)
    }

    pub fn sub_exact(&self, other: &Self) -> Self {
        self.add_exact(&other.neg_ref())
    }

    pub fn mul_exact(&self, other: &Self) -> Self {
        Self::from_parts(&self.mant * &other.mant, self.exp + other.exp)
    }

    fn neg_ref(&self) -> Self {
        BigFloat { mant: -&self.mant, exp: self.exp }
    }

    /// Directed-rounded sum. Operands whose magnitudes are far apart are
    /// handled with a sticky bit so that no huge shift is ever materialized.
    pub fn add(&self, other: &Self, bits: u32, dir: Round) -> Self {
        if self.is_zero() {
            return other.round(bits, dir);
        }
        if other.is_zero() {
            return self.round(bits, dir);
        }
        let (big, small) = if self.top() >= other.top() { (self, other) } else { (other, self) };
        let gap = big.top() - small.top();
        if small.top() < big.exp - 1 && gap > bits as i64 + 4 {
            let len = bit_len(&big.mant);
            let g = (bits as i64 + 2 - len).max(0);
            let m = &big.mant << (g as usize);
            let e = big.exp - g;
            let sticky = BigInt::from(small.signum());
            let m2 = (m << 1usize) + sticky;
            return Self::round_parts(m2, e - 1, bits, dir);
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << ((self.exp - e) as usize);
        let b = &other.mant << ((other.exp - e) as usize);
        Self::round_parts(a + b, e, bits, dir)
    }

    pub fn sub(&self, other: &Self, bits: u32, dir: Round) -> Self {
        self.add(&other.neg_ref(), bits, dir)
    }

    pub fn mul(&self, other: &Self, bits: u32, dir: Round) -> Self {
        Self::round_parts(&self.mant * &other.mant, self.exp + other.exp, bits, dir)
    }

    /// Directed-rounded quotient. Panics on division by zero.
    pub fn div(&self, other: &Self, bits: u32, dir: Round) -> Self {
        assert!(!other.is_zero(), "BigFloat division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        let sh = (bits as i64 + 2 + bit_len(&other.mant) - bit_len(&self.mant)).max(0);
        let n = &self.mant << (sh as usize);
        let (q, r) = n.div_rem(&other.mant);
        let exp = self.exp - sh - other.exp;
        let sticky = if r.is_zero() {
            0
        } else if n.is_negative() == other.mant.is_negative() {
            1
        } else {
            -1
        };
        Self::round_parts((q << 1usize) + BigInt::from(sticky), exp - 1, bits, dir)
    }

    /// Directed-rounded square root of a non-negative value.
    pub fn sqrt(&self, bits: u32, dir: Round) -> Self {
        assert!(!self.is_negative(), "BigFloat sqrt of negative value");
        if self.is_zero() {
            return Self::zero();
        }
        let mut m = self.mant.clone();
        let mut e = self.exp;
        if e.rem_euclid(2) != 0 {
            m <<= 1usize;
            e -= 1;
        }
        let mut sh = (2 * (bits as i64 + 2) - bit_len(&m)).max(0);
        if sh % 2 != 0 {
            sh += 1;
        }
        let n = m << (sh as usize);
        let e2 = e - sh;
        let r = n.sqrt();
        let sticky = if &r * &r == n { 0 } else { 1 };
        Self::round_parts((r << 1usize) + BigInt::from(sticky), e2 / 2 - 1, bits, dir)
    }

    pub fn from_rational(q: &BigRational, bits: u32, dir: Round) -> Self {
        let n = Self::from_bigint(q.numer().clone());
        let d = Self::from_bigint(q.denom().clone());
        n.div(&d, bits, dir)
    }

    /// Exact conversion; only sensible for moderate exponents.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << (self.exp as usize))
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    /// Nearest-ish `f64`, saturating to 0 / infinity outside the f64 range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let len = bit_len(&self.mant);
        let (m, e) = if len > 60 {
            (&self.mant >> ((len - 60) as usize), self.exp + len - 60)
        } else {
            (self.mant.clone(), self.exp)
        };
        let mf = m.to_f64().unwrap_or(0.0);
        if e > 2000 {
            return mf.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0 * mf.signum();
        }
        let half = (e / 2) as i32;
        mf * 2f64.powi(half) * 2f64.powi(e as i32 - half)
    }

    /// Largest integer `<= self`.
    pub fn floor_int(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << (self.exp as usize)
        } else {
            &self.mant >> ((-self.exp) as usize)
        }
    }

    pub fn min_ref<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self <= other { self } else { other }
    }

    pub fn max_ref<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self >= other { self } else { other }
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let (ta, tb) = (self.top(), other.top());
        let mag = if ta != tb {
            ta.cmp(&tb)
        } else {
            let e = self.exp.min(other.exp);
            let a = self.mant.abs() << ((self.exp - e) as usize);
            let b = other.mant.abs() << ((other.exp - e) as usize);
            a.cmp(&b)
        };
        if sa > 0 { mag } else { mag.reverse() }
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{} (~{:e})", self.mant, self.exp, self.to_f64())
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat { mant: -self.mant, exp: self.exp }
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        self.neg_ref()
    }
}

impl Add for &BigFloat {
    type Output = BigFloat;
    fn add(self, rhs: &BigFloat) -> BigFloat {
        self.add_exact(rhs)
    }
}

impl Sub for &BigFloat {
    type Output = BigFloat;
    fn sub(self, rhs: &BigFloat) -> BigFloat {
        self.sub_exact(rhs)
    }
}

impl Mul for &BigFloat {
    type Output = BigFloat;
    fn mul(self, rhs: &BigFloat) -> BigFloat {
        self.mul_exact(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn division_brackets_one_third() {
        let one = BigFloat::one();
        let three = BigFloat::from_i64(3);
        let lo = one.div(&three, 64, Round::Down);
        let hi = one.div(&three, 64, Round::Up);
        assert!(lo.to_rational() < r(1, 3));
        assert!(hi.to_rational() > r(1, 3));
        assert!(lo < hi);
    }

    #[test]
    fn exact_division_is_not_widened() {
        let a = BigFloat::from_i64(12);
        let b = BigFloat::from_i64(4);
        assert_eq!(a.div(&b, 32, Round::Down), BigFloat::from_i64(3));
        assert_eq!(a.div(&b, 32, Round::Up), BigFloat::from_i64(3));
    }

    #[test]
    fn sqrt_of_two_brackets() {
        let two = BigFloat::from_i64(2);
        let lo = two.sqrt(80, Round::Down);
        let hi = two.sqrt(80, Round::Up);
        assert!(lo.mul_exact(&lo) < two);
        assert!(hi.mul_exact(&hi) > two);
        assert_eq!(BigFloat::from_i64(9).sqrt(16, Round::Up), BigFloat::from_i64(3));
    }

    #[test]
    fn far_apart_addition_uses_sticky_bit() {
        let big = BigFloat::one();
        let tiny = BigFloat::from_parts(BigInt::from(1), -10_000_000_000);
        let up = big.add(&tiny, 64, Round::Up);
        let down = big.add(&tiny, 64, Round::Down);
        assert_eq!(down, BigFloat::one());
        assert!(up > BigFloat::one());
        let down2 = big.sub(&tiny, 64, Round::Down);
        assert!(down2 < BigFloat::one());
        assert_eq!(big.sub(&tiny, 64, Round::Up), BigFloat::one());
    }

    #[test]
    fn ordering_handles_wide_exponents() {
        let a = BigFloat::from_parts(BigInt::from(3), -5_000_000_000);
        let b = BigFloat::from_parts(BigInt::from(1), -4_999_999_999);
        assert!(a > b);
        assert!(-&a < -&b);
        assert!(BigFloat::zero() < a);
    }

    #[test]
    fn f64_round_trip() {
        for v in [0.5, -3.25, 1e-300, 123456.789] {
            assert_eq!(BigFloat::from_f64_exact(v).to_f64(), v);
        }
    }
}
