use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::ConstructionError;
use crate::precision::{rat, AngleRep, PowerSum};

/// Largest `k` tried by [`kappa_search`].
pub const DEFAULT_MAX_K: u64 = 1_000_000_000_000;
const CMP_BITS: u32 = 1024;

/// `κ = (2lπ + 7q^{k+1}) / N` with `N = k - offset`, and `[c, d] = [κ - ε, κ + ε]`
/// with `ε = 3q^{k+1} / N`, so that `Nα ∈ [4q^{k+1}, 10q^{k+1}]` mod 2π on `[c, d]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaResult {
    pub k: u64,
    pub l: u64,
    pub multiplier: u64,
    pub kappa: AngleRep,
    pub eps: PowerSum,
    pub c: AngleRep,
    pub d: AngleRep,
}

impl KappaResult {
    /// `N·x mod 2π` as an exact angle.
    pub fn times_multiplier(&self, x: &AngleRep) -> AngleRep {
        x.mul_int(self.multiplier as i64).mod_2pi()
    }

    /// `N·κ ≡ 7q^{k+1}`, `N·c ≡ 4q^{k+1}` and `N·d ≡ 10q^{k+1}` exactly.
    pub fn identities_hold(&self, q: &BigRational) -> bool {
        let t = |c: i64| AngleRep::new(BigRational::zero(), PowerSum::term(rat(c, 1), q.clone(), self.k + 1));
        self.times_multiplier(&self.kappa) == t(7) && self.times_multiplier(&self.c) == t(4) && self.times_multiplier(&self.d) == t(10)
    }
}

fn candidate(q: &BigRational, k: u64, l: u64, offset: u64) -> KappaResult {
    let n = k - offset;
    let inv = BigRational::new(BigInt::from(1), BigInt::from(n));
    let s = PowerSum::term(rat(1, 1), q.clone(), k + 1);
    let kappa = AngleRep::new(BigRational::from_integer(BigInt::from(2 * l as u128)) * &inv, s.scale(&(rat(7, 1) * &inv)));
    let eps = s.scale(&(rat(3, 1) * &inv));
    let e = AngleRep::new(BigRational::zero(), eps.clone());
    KappaResult { k, l, multiplier: n, c: kappa.sub(&e), d: kappa.add(&e), kappa, eps }
}

fn less(x: &AngleRep, y: &AngleRep) -> bool {
    x.cmp_value(y, CMP_BITS) == Some(Ordering::Less)
}

/// Smallest `k > k0` (and smallest `l` for it) with `[κ - ε, κ + ε] ⊂ (a, b)`,
/// using multiplier `k`.
pub fn kappa_search(a: &AngleRep, b: &AngleRep, k0: u64, q: &BigRational) -> Result<KappaResult, ConstructionError> {
    kappa_search_with(a, b, k0, q, 0, DEFAULT_MAX_K)
}

/// As [`kappa_search`] with multiplier `k - offset`.
pub fn kappa_search_with(
    a: &AngleRep,
    b: &AngleRep,
    k0: u64,
    q: &BigRational,
    offset: u64,
    max_k: u64,
) -> Result<KappaResult, ConstructionError> {
    let mut b = b.clone();
    if !less(a, &b) {
        b = b.add(&AngleRep::from_pi(rat(2, 1)));
    }
    let (af, bf) = (a.value(128).to_f64(), b.value(128).to_f64());
    if bf <= 0.0 {
        return Err(ConstructionError::Invalid("interval must have a positive right end".into()));
    }
    let two_pi = std::f64::consts::TAU;
    let k_min = (k0 + 1).max(offset + 1);
    let mut best: Option<KappaResult> = None;
    let mut l: u64 = 0;
    loop {
        // For this l, κ(N) < b needs N > 2lπ/b.
        let n_lo = (two_pi * l as f64 / bf).floor() as u64;
        let k_start = (n_lo.saturating_sub(2) + offset).max(k_min);
        if let Some(bst) = &best {
            if k_start > bst.k {
                break;
            }
        }
        if k_start > max_k {
            break;
        }
        // Cheap rejection: the whole admissible N range for this l misses (a, b).
        let n_hi = if af > 0.0 { two_pi * l as f64 / af } else { f64::INFINITY };
        if l == 0 || (n_hi * (1.0 + 1e-12)) >= (k_start - offset) as f64 {
            let mut k = k_start;
            while k <= max_k && best.as_ref().map_or(true, |b| k < b.k) {
                let c = candidate(q, k, l, offset);
                if !less(&c.kappa, &b) {
                    k += 1;
                    continue;
                }
                if !less(a, &c.kappa) {
                    break;
                }
                if less(a, &c.c) && less(&c.d, &b) {
                    best = Some(c);
                    break;
                }
                k += 1;
                if k > k_start + 64 {
                    break;
                }
            }
        }
        l += 1;
        if l.to_f64().unwrap() * two_pi / bf > max_k as f64 + 2.0 {
            break;
        }
    }
    match best {
        Some(mut r) => {
            r.kappa = r.kappa.mod_2pi();
            let shift = r.kappa.sub(&candidate(q, r.k, r.l, offset).kappa);
            r.c = r.c.add(&shift);
            r.d = r.d.add(&shift);
            Ok(r)
        }
        None => Err(ConstructionError::SearchExhausted(max_k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_circle() {
        let q = rat(1, 1000);
        let r = kappa_search(&AngleRep::from_pi(rat(1, 2)), &AngleRep::from_pi(rat(3, 2)), 1, &q).unwrap();
        assert_eq!((r.k, r.l), (2, 1));
        let want = AngleRep::new(rat(1, 1), PowerSum::rational(rat(7, 2) * &q * &q * &q));
        assert_eq!(r.kappa, want);
        assert_eq!(r.eps, PowerSum::rational(rat(3, 2) * &q * &q * &q));
        assert!(r.identities_hold(&q));
    }

    #[test]
    fn full_circle() {
        let q = rat(1, 1000);
        let r = kappa_search(&AngleRep::zero(), &AngleRep::from_pi(rat(2, 1)), 0, &q).unwrap();
        assert_eq!((r.k, r.l), (1, 0));
        assert_eq!(r.kappa, AngleRep::from_rational(rat(7, 1) * &q * &q));
        assert!(r.identities_hold(&q));
    }

    #[test]
    fn narrow_interval_needs_large_k() {
        // (4q³, 10q³) with multiplier k - 1: the first l = 1 solution has
        // N = ⌈2π / 10q³⌉.
        let q = rat(1, 1000);
        let q3 = &q * &q * &q;
        let a = AngleRep::from_rational(rat(4, 1) * &q3);
        let b = AngleRep::from_rational(rat(10, 1) * &q3);
        let r = kappa_search_with(&a, &b, 5, &q, 1, DEFAULT_MAX_K).unwrap();
        assert_eq!((r.multiplier, r.l), (628_318_531, 1));
        assert!(r.identities_hold(&q));
    }

    #[test]
    fn exhausted() {
        let q = rat(1, 1000);
        let a = AngleRep::from_rational(rat(1, 1));
        let b = AngleRep::from_rational(rat(1, 1) + rat(1, 1_000_000_000) * rat(1, 1_000_000_000));
        assert!(matches!(kappa_search_with(&a, &b, 0, &q, 0, 1000), Err(ConstructionError::SearchExhausted(1000))));
    }
}
