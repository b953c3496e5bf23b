//! Closed forms on the `±1` sub-attractor.
//!
//! A point of `ϕ_2 ∘ ϕ_{j_1} ∘ … ∘ ϕ_{j_m}(K')` is
//! `(0, q) + q² Σ_{p≥0} (s_p / 2) q^p e^{ipα}` with `s_p = j_{p+1}` for
//! `p < m` and `s_p = ±1` free afterwards. Everything here follows from that
//! sum: the lowest point picks `s_p = -sign(sin pα)` on the tail.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{AlphaBox, ConstructionError};
use crate::ifs::Word;
use crate::precision::{trig, trig_eval, BigFloat, CertInterval, Round};

/// Above this many sign runs a range is reported as unknown.
const MAX_RUNS: usize = 1_000_000;
/// Ranges at most this long fall back to per-position evaluation.
const PER_POSITION: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
    Unknown,
}

impl Sign {
    fn of(x: &CertInterval) -> Sign {
        match x.sign() {
            Some(std::cmp::Ordering::Greater) => Sign::Pos,
            Some(std::cmp::Ordering::Less) => Sign::Neg,
            Some(std::cmp::Ordering::Equal) => Sign::Zero,
            None => Sign::Unknown,
        }
    }

    fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
            s => s,
        }
    }

    pub fn as_i32(self) -> Option<i32> {
        match self {
            Sign::Neg => Some(-1),
            Sign::Zero => Some(0),
            Sign::Pos => Some(1),
            Sign::Unknown => None,
        }
    }
}

/// Positions `p0..=p1` on which `sin(pα)` has the same sign for every α in
/// the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignRun {
    pub p0: u64,
    pub p1: u64,
    pub sign: Sign,
}

#[derive(Clone, Debug)]
struct Cx {
    re: CertInterval,
    im: CertInterval,
}

impl Cx {
    fn sub(&self, o: &Cx) -> Cx {
        Cx { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    fn mul(&self, o: &Cx) -> Cx {
        Cx {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    fn div(&self, o: &Cx) -> Cx {
        let n = o.re.sqr().add(&o.im.sqr());
        let conj = Cx { re: o.re.clone(), im: o.im.neg() };
        let t = self.mul(&conj);
        Cx { re: t.re.div(&n).expect("nonzero"), im: t.im.div(&n).expect("nonzero") }
    }
}

fn radius_hi(alpha: &AlphaBox, bits: u32) -> BigFloat {
    alpha.radius().value(bits).abs().hi().clone()
}

/// `(cos pα, sin pα)` enclosing every α in the box.
pub fn trig_mul(alpha: &AlphaBox, p: u64, bits: u32) -> (CertInterval, CertInterval) {
    let c = alpha.center().mod_2pi();
    let pi = i64::try_from(p).expect("position fits i64");
    let (co, si) = trig_eval(&c.mul_int(pi), bits);
    let r = radius_hi(alpha, bits);
    if r.is_zero() || p == 0 {
        return (co, si);
    }
    let spread = r.mul(&BigFloat::from_bigint(BigInt::from(p)), bits, Round::Up);
    (co.inflate(&spread), si.inflate(&spread))
}

/// `q^p`.
pub fn qpow(q: &BigRational, p: u64, bits: u32) -> CertInterval {
    let extra = 8 + 2 * (64 - p.leading_zeros());
    CertInterval::from_rational(q, bits + extra).pow(p).with_bits(bits)
}

/// `Σ_{p=p0}^{p1} q^p (cos pα, sin pα)`.
pub fn run_sum(q: &BigRational, alpha: &AlphaBox, p0: u64, p1: u64, bits: u32) -> (CertInterval, CertInterval) {
    let z0 = CertInterval::zero(bits);
    if p0 > p1 {
        return (z0.clone(), z0);
    }
    if p1 - p0 < 8 {
        let (mut re, mut im) = (z0.clone(), z0);
        for p in p0..=p1 {
            let qp = qpow(q, p, bits);
            let (c, s) = trig_mul(alpha, p, bits);
            re = re.add(&qp.mul(&c));
            im = im.add(&qp.mul(&s));
        }
        return (re, im);
    }
    let zpow = |p: u64| {
        let qp = qpow(q, p, bits);
        let (c, s) = trig_mul(alpha, p, bits);
        Cx { re: qp.mul(&c), im: qp.mul(&s) }
    };
    let one = Cx { re: CertInterval::one(bits), im: CertInterval::zero(bits) };
    let s = zpow(p0).sub(&zpow(p1 + 1)).div(&one.sub(&zpow(1)));
    (s.re, s.im)
}

/// `Σ_{p=p0}^{p1} q^p`.
pub fn geometric(q: &BigRational, p0: u64, p1: u64, bits: u32) -> CertInterval {
    if p0 > p1 {
        return CertInterval::zero(bits);
    }
    let one = CertInterval::one(bits);
    let qi = CertInterval::from_rational(q, bits);
    qpow(q, p0, bits).sub(&qpow(q, p1 + 1, bits)).div(&one.sub(&qi)).expect("q < 1")
}

/// `Σ_{p≥p0} q^p = q^{p0} / (1 - q)`.
pub fn geometric_tail(q: &BigRational, p0: u64, bits: u32) -> CertInterval {
    let one = CertInterval::one(bits);
    qpow(q, p0, bits).div(&one.sub(&CertInterval::from_rational(q, bits))).expect("q < 1")
}

fn per_position(alpha: &AlphaBox, p0: u64, p1: u64, bits: u32) -> Vec<SignRun> {
    (p0..=p1)
        .map(|p| {
            let sign = if p == 0 { Sign::Zero } else { Sign::of(&trig_mul(alpha, p, bits).1) };
            SignRun { p0: p, p1: p, sign }
        })
        .collect()
}

fn merge(runs: Vec<SignRun>) -> Vec<SignRun> {
    let mut out: Vec<SignRun> = Vec::with_capacity(runs.len());
    for r in runs {
        if let Some(last) = out.last_mut() {
            if last.sign == r.sign && last.p1 + 1 == r.p0 {
                last.p1 = r.p1;
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// Sign pattern of `sin(pα)` for `p0 ≤ p ≤ p1` over the whole box.
///
/// With the box center `c = (a/b)π + ρ` (reduced, `0 ≤ a/b < 2`) and
/// radius `r`, `pα = ⌊pa/b⌋π + (pa mod b)π/b + p(ρ + δ)`, `|δ| ≤ r`. Off the
/// multiples of `b` the sign is `(-1)^⌊pa/b⌋` as soon as `p1(|ρ| + r) < π/b`;
/// on multiples it additionally needs the sign of `ρ ± r`.
pub fn sign_runs(alpha: &AlphaBox, p0: u64, p1: u64, bits: u32) -> Vec<SignRun> {
    if p0 > p1 {
        return Vec::new();
    }
    let c = alpha.center().mod_2pi();
    let a = c.pi_coeff.numer().clone();
    let b = c.pi_coeff.denom().clone();
    let rho = c.remainder.eval(bits);
    let r = radius_hi(alpha, bits);
    let reach = rho.abs().inflate(&r).mul(&CertInterval::from_rational(&BigRational::from_integer(p1.into()), bits));
    let pi = trig::pi(bits);
    let bi = CertInterval::from_rational(&BigRational::from_integer(b.clone()), bits);
    let off_ok = reach.lt(&pi.div(&bi).expect("b > 0"));
    if !off_ok {
        if p1 - p0 < PER_POSITION {
            return merge(per_position(alpha, p0, p1, bits));
        }
        return vec![SignRun { p0, p1, sign: Sign::Unknown }];
    }
    let on_ok = reach.lt(&pi);
    let delta_sign = if c.remainder.is_zero() && r.is_zero() {
        Sign::Zero
    } else if !on_ok {
        Sign::Unknown
    } else if rho.lo().sub(&r, bits, Round::Down).is_positive() {
        Sign::Pos
    } else if rho.hi().add(&r, bits, Round::Up).is_negative() {
        Sign::Neg
    } else {
        Sign::Unknown
    };
    let parity = |p: &BigInt| -> Sign {
        let n = (p * &a).div_floor(&b);
        if n.is_even() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    };
    let mut out = Vec::new();
    let mut cur = p0;
    if cur == 0 {
        out.push(SignRun { p0: 0, p1: 0, sign: Sign::Zero });
        cur = 1;
    }
    while cur <= p1 {
        if out.len() > MAX_RUNS {
            out.push(SignRun { p0: cur, p1, sign: Sign::Unknown });
            break;
        }
        let pc = BigInt::from(cur);
        if pc.is_multiple_of(&b) {
            let sign = match delta_sign {
                Sign::Neg => parity(&pc).flip(),
                Sign::Pos => parity(&pc),
                s => s,
            };
            // With b = 1 every position is a multiple; a = 0 keeps the parity.
            let end = if b.is_one() && a.is_zero() { p1 } else { cur };
            let sign = if sign == Sign::Unknown && end == cur { Sign::of(&trig_mul(alpha, cur, bits).1) } else { sign };
            out.push(SignRun { p0: cur, p1: end, sign });
            cur = end + 1;
            continue;
        }
        let n = (&pc * &a).div_floor(&b);
        // First p > cur where ⌊pa/b⌋ changes: p·a ≥ (n+1)·b.
        let change = if a.is_zero() { None } else { Some(Integer::div_ceil(&((n + 1u32) * &b), &a)) };
        let next_mult = Integer::div_ceil(&pc, &b) * &b;
        let mut end = next_mult - 1u32;
        if let Some(ch) = change {
            end = end.min(ch - 1u32);
        }
        let end = end.to_u64().unwrap_or(u64::MAX).min(p1);
        out.push(SignRun { p0: cur, p1: end, sign: parity(&pc) });
        if end == u64::MAX {
            break;
        }
        cur = end + 1;
    }
    merge(out)
}

/// The `±1` symbols of a word `(2, j_1, …, j_m)` as runs over positions.
pub fn pm_runs(w: &Word) -> Result<Vec<(i32, u64, u64)>, ConstructionError> {
    if w.first() != Some(2) {
        return Err(ConstructionError::Invalid("word must start with +2".into()));
    }
    let mut out = Vec::new();
    let mut pos = 0u64;
    for (i, &(s, n)) in w.runs().iter().enumerate() {
        let (s, n) = if i == 0 { (s, n - 1) } else { (s, n) };
        if n == 0 {
            continue;
        }
        if s != 1 && s != -1 {
            return Err(ConstructionError::Invalid(format!("symbol {s} after the leading +2")));
        }
        out.push((s, pos, pos + n - 1));
        pos += n;
    }
    Ok(out)
}

/// Number of explicit tail terms so that the remainder is below `2^-bits`
/// relative to the first one.
fn tail_terms(q: &BigRational) -> impl Fn(u32) -> u64 {
    let l = -q.to_f64().unwrap_or(0.5).log2();
    move |bits| ((bits as f64 / l).ceil() as u64 + 4).min(4096)
}

/// `Σ_{p≥m} q^p |sin pα|` (or `|cos pα|`).
fn abs_tail(q: &BigRational, alpha: &AlphaBox, m: u64, bits: u32, use_sin: bool) -> CertInterval {
    let t = tail_terms(q)(bits);
    let mut s = CertInterval::zero(bits);
    for p in m..m + t {
        let (c, si) = trig_mul(alpha, p, bits);
        let v = if use_sin { si } else { c };
        s = s.add(&qpow(q, p, bits).mul(&v.abs()));
    }
    let rest = geometric_tail(q, m + t, bits);
    s.add(&CertInterval::new(BigFloat::zero(), rest.hi().clone(), bits))
}

fn prefix_sum(q: &BigRational, alpha: &AlphaBox, runs: &[(i32, u64, u64)], bits: u32) -> (CertInterval, CertInterval) {
    let (mut re, mut im) = (CertInterval::zero(bits), CertInterval::zero(bits));
    for &(j, p0, p1) in runs {
        let (c, s) = run_sum(q, alpha, p0, p1, bits);
        let h = if j > 0 { CertInterval::one(bits) } else { CertInterval::one(bits).neg() };
        re = re.add(&c.mul(&h).mul_pow2(-1));
        im = im.add(&s.mul(&h).mul_pow2(-1));
    }
    (re, im)
}

/// `M_w = min y` over `ϕ_w(K')`, valid for every α in the box.
pub fn m_closed(q: &BigRational, alpha: &AlphaBox, w: &Word, bits: u32) -> Result<CertInterval, ConstructionError> {
    let runs = pm_runs(w)?;
    let m = w.len() - 1;
    let (_, im) = prefix_sum(q, alpha, &runs, bits);
    let tail = abs_tail(q, alpha, m, bits, true).mul_pow2(-1);
    let qi = CertInterval::from_rational(q, bits);
    Ok(qi.add(&qi.sqr().mul(&im.sub(&tail))))
}

/// x-coordinates of the lowest points of `ϕ_w(K')`.
pub fn x_min(q: &BigRational, alpha: &AlphaBox, w: &Word, bits: u32) -> Result<CertInterval, ConstructionError> {
    let runs = pm_runs(w)?;
    let m = w.len() - 1;
    let (re, _) = prefix_sum(q, alpha, &runs, bits);
    let t = tail_terms(q)(bits);
    let mut tail = CertInterval::zero(bits);
    for p in m..m + t {
        let (c, s) = trig_mul(alpha, p, bits);
        let term = qpow(q, p, bits).mul(&c);
        tail = tail.add(&match Sign::of(&s) {
            Sign::Pos => term.neg(),
            Sign::Neg => term,
            _ => term.abs().union(&term.abs().neg()),
        });
    }
    let rest = geometric_tail(q, m + t, bits);
    let tail = tail.inflate(rest.hi()).mul_pow2(-1);
    let qi = CertInterval::from_rational(q, bits);
    Ok(qi.sqr().mul(&re.add(&tail)))
}

/// Projection of `ϕ_w(K')` onto the x-axis.
pub fn x_range(q: &BigRational, alpha: &AlphaBox, w: &Word, bits: u32) -> Result<CertInterval, ConstructionError> {
    let runs = pm_runs(w)?;
    let m = w.len() - 1;
    let (re, _) = prefix_sum(q, alpha, &runs, bits);
    let half = abs_tail(q, alpha, m, bits, false).mul_pow2(-1);
    let qi = CertInterval::from_rational(q, bits);
    let q2 = qi.sqr();
    Ok(q2.mul(&re).inflate(q2.mul(&half).hi()))
}

fn sym_at(runs: &[(i32, u64, u64)], p: u64) -> Option<i32> {
    runs.iter().find(|r| r.1 <= p && p <= r.2).map(|r| r.0)
}

/// `½ Σ_{p=p0}^{p1} q^p (j sin pα + |sin pα|)`: a fixed symbol `j` against
/// a free tail.
fn fixed_vs_tail(q: &BigRational, alpha: &AlphaBox, j: i32, p0: u64, p1: u64, bits: u32) -> CertInterval {
    let mut acc = CertInterval::zero(bits);
    let js = if j > 0 { Sign::Pos } else { Sign::Neg };
    for run in sign_runs(alpha, p0, p1, bits) {
        match run.sign {
            Sign::Zero => {}
            s if s == js => {
                let (_, im) = run_sum(q, alpha, run.p0, run.p1, bits);
                acc = acc.add(&if j > 0 { im } else { im.neg() });
            }
            Sign::Unknown if run.p1 - run.p0 < 64 => {
                for p in run.p0..=run.p1 {
                    let si = trig_mul(alpha, p, bits).1;
                    let v = if j > 0 { si.clone() } else { si.neg() };
                    let v = v.add(&si.abs()).mul_pow2(-1);
                    acc = acc.add(&qpow(q, p, bits).mul(&v));
                }
            }
            Sign::Unknown => {
                let g = geometric(q, run.p0, run.p1, bits);
                acc = acc.add(&CertInterval::new(BigFloat::zero(), g.hi().clone(), bits));
            }
            _ => {}
        }
    }
    acc
}

/// `M_a - M_b` computed term by term so that shared symbols and shared
/// tails cancel exactly.
pub fn m_diff(q: &BigRational, alpha: &AlphaBox, a: &Word, b: &Word, bits: u32) -> Result<CertInterval, ConstructionError> {
    let ra = pm_runs(a)?;
    let rb = pm_runs(b)?;
    let (ma, mb) = (a.len() - 1, b.len() - 1);
    let end = ma.max(mb);
    let mut cuts: Vec<u64> = ra.iter().chain(rb.iter()).map(|r| r.1).chain([0, ma, mb, end]).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut acc = CertInterval::zero(bits);
    for w in cuts.windows(2) {
        let (p0, p1) = (w[0], w[1] - 1);
        if w[0] >= end {
            break;
        }
        match (sym_at(&ra, p0), sym_at(&rb, p0)) {
            (Some(x), Some(y)) if x == y => {}
            (Some(x), Some(_)) => {
                let (_, im) = run_sum(q, alpha, p0, p1, bits);
                acc = acc.add(&if x > 0 { im } else { im.neg() });
            }
            (Some(x), None) => acc = acc.add(&fixed_vs_tail(q, alpha, x, p0, p1, bits)),
            (None, Some(y)) => acc = acc.sub(&fixed_vs_tail(q, alpha, y, p0, p1, bits)),
            (None, None) => {}
        }
    }
    let qi = CertInterval::from_rational(q, bits);
    Ok(qi.sqr().mul(&acc))
}

/// Symbols minimizing `M` on positions `p0..=p1`: `-sign(sin pα)`, with an
/// exact zero broken toward `-1`. `None` if some sign is not certified.
pub fn greedy_runs(alpha: &AlphaBox, p0: u64, p1: u64, bits: u32) -> Option<Vec<(i32, u64)>> {
    let mut out: Vec<(i32, u64)> = Vec::new();
    for run in sign_runs(alpha, p0, p1, bits) {
        let s = match run.sign {
            Sign::Pos | Sign::Zero => -1,
            Sign::Neg => 1,
            Sign::Unknown => return None,
        };
        let n = run.p1 - run.p0 + 1;
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += n,
            _ => out.push((s, n)),
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{rat, AngleRep, PowerSum};

    fn pbox(a: AngleRep) -> AlphaBox {
        AlphaBox::point(a)
    }

    #[test]
    fn zero_rotation_oracle() {
        // At α = 0 the ±1 tail contributes nothing to y, so M = q exactly and
        // the x-range is q²·(Σ (j/2) q^p ± ½ q^m/(1-q)).
        let q = rat(1, 1000);
        let w = Word::from_symbols(&[2, 1, -1]);
        let a = pbox(AngleRep::zero());
        let m = m_closed(&q, &a, &w, 256).unwrap();
        assert!(m.contains_rational(&q) && m.width().to_f64() < 1e-60);
        let xr = x_range(&q, &a, &w, 256).unwrap();
        let c = &q * &q * (rat(1, 2) - rat(1, 2) * &q);
        let h = &q * &q * rat(1, 2) * &q * &q / (rat(1, 1) - &q);
        assert!(xr.contains_rational(&(&c - &h)) && xr.contains_rational(&(&c + &h)));
        assert!(xr.width().to_f64() < 2.0 * h.to_f64().unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn quarter_turn_oracle() {
        // α = π/2: sin(pα) = 0, 1, 0, -1, …; M = q - ½q²·Σ_{p odd} q^p
        // for the word (2) alone.
        let q = rat(1, 1000);
        let a = pbox(AngleRep::from_pi(rat(1, 2)));
        let m = m_closed(&q, &a, &Word::single(2), 256).unwrap();
        let expect = &q - rat(1, 2) * &q * &q * &q / (rat(1, 1) - &q * &q);
        assert!(m.contains_rational(&expect), "{m:?}");
        let runs = sign_runs(&a, 0, 7, 256);
        let signs: Vec<_> = runs.iter().map(|r| r.sign.as_i32().unwrap()).collect();
        assert_eq!(signs, vec![0, 1, 0, -1, 0, 1, 0, -1]);
    }

    #[test]
    fn sign_runs_rational_multiple() {
        // α = 2π/7 + tiny: signs + on 1..=3, - on 4..=6, + at 7.
        let tiny = PowerSum::term(rat(1, 1), rat(1, 1000), 90);
        let a = AlphaBox::point(AngleRep::new(rat(2, 7), tiny));
        let runs = sign_runs(&a, 0, 8, 256);
        let v: Vec<_> = runs.iter().map(|r| (r.p0, r.p1, r.sign)).collect();
        assert_eq!(
            v,
            vec![(0, 0, Sign::Zero), (1, 3, Sign::Pos), (4, 6, Sign::Neg), (7, 8, Sign::Pos)]
        );
        for p in 1..=8u64 {
            let s = Sign::of(&trig_mul(&a, p, 256).1);
            assert_eq!(runs.iter().find(|r| r.p0 <= p && p <= r.p1).unwrap().sign, s);
        }
    }

    #[test]
    fn sign_runs_huge_range() {
        let n = 628_318_531i64;
        let a = AlphaBox::point(AngleRep::new(rat(2, n), PowerSum::term(rat(7, n), rat(1, 1000), 1000)));
        let runs = sign_runs(&a, 2, n as u64, 256);
        let half = (n as u64 - 1) / 2;
        assert_eq!(
            runs,
            vec![
                SignRun { p0: 2, p1: half, sign: Sign::Pos },
                SignRun { p0: half + 1, p1: n as u64 - 1, sign: Sign::Neg },
                SignRun { p0: n as u64, p1: n as u64, sign: Sign::Pos },
            ]
        );
    }

    #[test]
    fn run_sum_matches_direct() {
        let q = rat(1, 10);
        let a = pbox(AngleRep::from_rational(rat(7, 10)));
        let (c, s) = run_sum(&q, &a, 3, 40, 256);
        let (mut dc, mut ds) = (0.0, 0.0);
        for p in 3..=40 {
            dc += 0.1f64.powi(p) * (0.7 * p as f64).cos();
            ds += 0.1f64.powi(p) * (0.7 * p as f64).sin();
        }
        assert!((c.to_f64() - dc).abs() < 1e-15 && (s.to_f64() - ds).abs() < 1e-15);
    }

    #[test]
    fn m_diff_matches_m_closed() {
        let q = rat(1, 10);
        let a = pbox(AngleRep::from_rational(rat(7, 10)));
        let words = [
            Word::from_symbols(&[2, 1, 1, -1]),
            Word::from_symbols(&[2, -1]),
            Word::from_symbols(&[2, 1, -1, -1, 1, 1]),
            Word::single(2),
        ];
        for x in &words {
            for y in &words {
                let d = m_diff(&q, &a, x, y, 256).unwrap();
                let e = m_closed(&q, &a, x, 256).unwrap().sub(&m_closed(&q, &a, y, 256).unwrap());
                assert!(d.overlaps(&e), "{x:?} {y:?}");
            }
        }
    }
}
