//! π, sine and cosine as certified intervals.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::bigfloat::{BigFloat, Round};
use super::interval::CertInterval;

static PI_CACHE: Mutex<Option<HashMap<u32, CertInterval>>> = Mutex::new(None);

/// Fixed-point `atan(1/n)` scaled by `2^w`, with its absolute error in ulps.
fn atan_inv_fixed(n: u64, w: u32) -> (BigInt, u64) {
    let scale = BigInt::one() << (w as usize);
    let n2 = BigInt::from(n) * BigInt::from(n);
    let mut power = BigInt::from(n); // n^(2k+1)
    let mut sum = BigInt::from(0);
    let mut k: u64 = 0;
    loop {
        let term = &scale / (&power * BigInt::from(2 * k + 1));
        if term.is_zero() {
            break;
        }
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power *= &n2;
        k += 1;
    }
    // One ulp of truncation per term plus the (sub-ulp) tail.
    (sum, k + 2)
}

/// Enclosure of π with `bits` of precision (Machin's formula).
pub fn pi(bits: u32) -> CertInterval {
    {
        let guard = PI_CACHE.lock().unwrap();
        if let Some(v) = guard.as_ref().and_then(|m| m.get(&bits)) {
            return v.clone();
        }
    }
    let w = bits + 16;
    let (a, ea) = atan_inv_fixed(5, w);
    let (b, eb) = atan_inv_fixed(239, w);
    let center = a * 16 - b * 4;
    let err = BigInt::from(16 * ea + 4 * eb);
    let lo = BigFloat::from_parts(&center - &err, -(w as i64)).round(bits, Round::Down);
    let hi = BigFloat::from_parts(&center + &err, -(w as i64)).round(bits, Round::Up);
    let v = CertInterval::new(lo, hi, bits);
    let mut guard = PI_CACHE.lock().unwrap();
    guard.get_or_insert_with(HashMap::new).insert(bits, v.clone());
    v
}

/// sin and cos at a single point `y` with `|y| <= 1/2`, via Taylor series.
/// The sine series stops on a relative criterion so tiny arguments keep full
/// relative accuracy.
fn sin_cos_small(y: &BigFloat, bits: u32) -> (CertInterval, CertInterval) {
    let yi = CertInterval::point(y.clone(), bits);
    let y2 = yi.sqr();
    let rel = y.top() - bits as i64 - 4;

    let mut s = yi.clone();
    let mut term = yi.clone();
    let mut n: i64 = 1;
    loop {
        term = term.mul(&y2).div(&CertInterval::from_i64((n + 1) * (n + 2), bits)).unwrap().neg();
        n += 2;
        let small = term.abs().hi().top() < rel;
        if small {
            // Alternating series with decreasing terms: the tail is bounded by this term.
            let t = term.abs().hi().clone();
            s = s.inflate(&t);
            break;
        }
        s = s.add(&term);
    }

    let mut c = CertInterval::one(bits);
    let mut term = CertInterval::one(bits);
    let mut n: i64 = 0;
    loop {
        term = term.mul(&y2).div(&CertInterval::from_i64((n + 1) * (n + 2), bits)).unwrap().neg();
        n += 2;
        if term.abs().hi().top() < -(bits as i64) - 4 {
            let t = term.abs().hi().clone();
            c = c.inflate(&t);
            break;
        }
        c = c.add(&term);
    }
    (s, c)
}

/// sin and cos of a point argument of moderate size.
fn sin_cos_point(x: &BigFloat, bits: u32) -> (CertInterval, CertInterval) {
    let half = BigFloat::from_parts(BigInt::from(1), -1);
    let mut h: i64 = 0;
    if x.abs() > half {
        h = (x.top() + 1).max(0) + 8;
    }
    let wp = bits + 2 * h as u32 + 16;
    let y = x.mul_pow2(-h);
    let (mut s, mut c) = sin_cos_small(&y, wp);
    for _ in 0..h {
        let s2 = s.mul(&c).mul_pow2(1);
        let c2 = c.sqr().sub(&s.sqr());
        s = s2;
        c = c2;
    }
    let unit = CertInterval::new(BigFloat::from_i64(-1), BigFloat::one(), wp);
    (s.intersect(&unit).unwrap_or(s), c.intersect(&unit).unwrap_or(c))
}

/// Certified (sin, cos) of every point in `t`. Arguments larger than a few
/// units are first reduced by a multiple of 2π.
pub fn sin_cos(t: &CertInterval, bits: u32) -> (CertInterval, CertInterval) {
    let mut t = t.clone();
    let four = BigFloat::from_i64(4);
    if t.hi().abs() > four || t.lo().abs() > four {
        let wp = bits + (t.hi().abs().max_ref(&t.lo().abs()).top().max(0) as u32) + 16;
        let two_pi = pi(wp).mul_pow2(1);
        let k = t.mid().div(&two_pi.mid(), 64, Round::Down).floor_int();
        let kk = CertInterval::point(BigFloat::from_bigint(k), wp);
        t = t.sub(&two_pi.mul(&kk));
    }
    let m = t.mid();
    let r = t.rad();
    let (s, c) = sin_cos_point(&m, bits + 8);
    // |d/dt sin|, |d/dt cos| <= 1.
    let s = round_to(&s.inflate(&r), bits);
    let c = round_to(&c.inflate(&r), bits);
    (s, c)
}

fn round_to(x: &CertInterval, bits: u32) -> CertInterval {
    CertInterval::new(x.lo().round(bits, Round::Down), x.hi().round(bits, Round::Up), bits)
}

/// Arc cosine enclosure in `[0, π]`; arguments are clamped to `[-1, 1]`.
pub fn acos(c: &CertInterval, bits: u32) -> CertInterval {
    // acos is decreasing on [-1, 1]; bisect on the monotone cosine.
    let p = pi(bits + 16);
    let lo_target = c.hi().min_ref(&BigFloat::one()).clone();
    let hi_target = c.lo().max_ref(&BigFloat::from_i64(-1)).clone();
    let a = acos_point(&lo_target, bits, &p, Round::Down);
    let b = acos_point(&hi_target, bits, &p, Round::Up);
    CertInterval::new(a, b, bits)
}

fn acos_point(v: &BigFloat, bits: u32, p: &CertInterval, dir: Round) -> BigFloat {
    // Find t in [0, π] with cos t = v; return a bound on the correct side.
    let mut lo = BigFloat::zero();
    let mut hi = p.hi().clone();
    for _ in 0..(bits + 8) {
        let mid = lo.add(&hi, bits + 16, Round::Down).mul_pow2(-1);
        let (_, c) = sin_cos(&CertInterval::point(mid.clone(), bits + 16), bits + 16);
        // cos decreasing: cos(mid) > v  => root is right of mid.
        if c.lo() > v {
            lo = mid;
        } else if c.hi() < v {
            hi = mid;
        } else {
            break;
        }
    }
    match dir {
        Round::Down => {
            if lo.is_negative() {
                BigFloat::zero()
            } else {
                lo
            }
        }
        Round::Up => hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_digits() {
        let p = pi(200);
        let (lo, hi) = p.to_decimal_pair(30);
        assert!(lo.starts_with("3.14159265358979323846264338"));
        assert!(hi.starts_with("3.14159265358979323846264338"));
        assert!(p.width().top() < -190);
    }

    #[test]
    fn sin_cos_of_one() {
        let (s, c) = sin_cos(&CertInterval::one(128), 128);
        assert!(s.to_decimal_pair(12).0.starts_with("8.414709848"));
        assert!(c.to_decimal_pair(12).0.starts_with("5.403023058"));
        assert!(s.width().top() <= -100);
        assert!(c.width().top() <= -100);
    }

    #[test]
    fn sin_of_tiny_argument_keeps_relative_accuracy() {
        let x = BigFloat::from_parts(BigInt::from(7), -3_000_000_000);
        let (s, c) = sin_cos(&CertInterval::point(x.clone(), 128), 128);
        assert!(s.contains(&x) || s.hi() <= &x);
        assert!(s.lo().top() == x.top());
        let w = s.width();
        assert!(w.is_zero() || w.top() < x.top() - 120);
        assert!(c.contains(&BigFloat::one()) || c.hi() <= &BigFloat::one());
    }

    #[test]
    fn large_argument_reduction() {
        let (s, _) = sin_cos(&CertInterval::from_i64(100, 128), 128);
        // sin(100) = -0.50636564110975879...
        assert!(s.to_decimal_pair(10).1.starts_with("-5.063656411"));
    }

    #[test]
    fn acos_of_zero_is_half_pi() {
        let a = acos(&CertInterval::zero(80), 80);
        let hp = pi(80).mul_pow2(-1);
        assert!(a.overlaps(&hp));
        assert!(a.width().top() < -60);
    }
}
