//! A one-parameter family of four-map attractors whose rotation angle is
//! pinned down by nested intervals so that uncountably many distinct
//! "touching" values appear.
//!
//! Maps: `ϕ_{±1}(x) = q A^α x ± e₁/2` and `ϕ_{±2}(x) = q² x ± q e₂`.
//! Words used by the construction have the shape `(2, j_1, …, j_m)` with
//! `j_i = ±1`; closed forms for those live in [`series`].

mod bnb;
mod kappa;
mod lemmas;
mod refine;
pub mod series;

pub use bnb::{m_value, m_value_capped, r_balls, MValue, RBall};
pub use kappa::{kappa_search, kappa_search_with, KappaResult, DEFAULT_MAX_K};
pub use lemmas::{check_ball_separation, check_cr, check_cr_box, check_sqrt_bounds, separation_trials, SeparationReport, SqrtReport, TrialSummary};
pub use refine::{
    certificate_check, critical_family, refine, refine_capped, CertificateReport, CertificateStatus, ConditionFlag, CriticalFamilyReport, PairSeparation,
    PhiEntry, RefinementState, StepRecord, Touching, SCHEMA_VERSION,
};

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ifs::{Ifs, IfsError, Similarity};
use crate::precision::{rat, rational_serde, AngleRep, CertInterval, PowerSum};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error("a^2 < b: the square root is not real")]
    DomainViolation,
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("no admissible k up to {0}")]
    SearchExhausted(u64),
    #[error("condition {condition} not certified: {evidence}")]
    CertificationFailed { condition: String, evidence: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Three-valued outcome of a certified inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

impl Verdict {
    /// `lhs < rhs` (or `<=` when `strict` is false) on intervals.
    pub fn less(lhs: &CertInterval, rhs: &CertInterval, strict: bool) -> Self {
        let holds = if strict { lhs.lt(rhs) } else { lhs.le(rhs) };
        let fails = if strict { rhs.le(lhs) } else { rhs.lt(lhs) };
        if holds {
            Verdict::Holds
        } else if fails {
            Verdict::Fails
        } else {
            Verdict::Undecided
        }
    }
}

/// Which maps generate the set a word is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branches {
    /// All four maps.
    Full,
    /// Only `ϕ_{±1}`.
    PlusMinusOne,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KAlphaConfig {
    #[serde(with = "rational_serde")]
    pub q: BigRational,
    pub alpha: AngleRep,
}

impl Default for KAlphaConfig {
    fn default() -> Self {
        KAlphaConfig { q: default_q(), alpha: AngleRep::zero() }
    }
}

pub fn default_q() -> BigRational {
    rat(1, 1000)
}

impl KAlphaConfig {
    pub fn new(q: BigRational, alpha: AngleRep) -> Result<Self, ConstructionError> {
        if q <= BigRational::zero() || q >= rat(1, 4) {
            return Err(ConstructionError::Invalid(format!("q = {q} outside (0, 1/4)")));
        }
        Ok(KAlphaConfig { q, alpha })
    }

    /// The constants of the construction are tuned to `q = 1/1000`.
    pub fn conformant(&self) -> bool {
        self.q <= default_q()
    }
}

/// The four-map IFS with labels `+1, -1, +2, -2`.
pub fn build_kalpha(cfg: &KAlphaConfig) -> Ifs {
    let q = &cfg.q;
    let half = rat(1, 2);
    let z = BigRational::zero();
    let maps = vec![
        Similarity::new(q.clone(), cfg.alpha.clone(), false, [half.clone(), z.clone()]),
        Similarity::new(q.clone(), cfg.alpha.clone(), false, [-half, z.clone()]),
        Similarity::scaling(q * q, [z.clone(), q.clone()]),
        Similarity::scaling(q * q, [z, -q.clone()]),
    ];
    Ifs::new(maps, vec![1, -1, 2, -2]).expect("valid construction IFS")
}

/// The two-map IFS `{ϕ_{+1}, ϕ_{-1}}`.
pub fn build_pm1(cfg: &KAlphaConfig) -> Ifs {
    let half = rat(1, 2);
    let z = BigRational::zero();
    let maps = vec![
        Similarity::new(cfg.q.clone(), cfg.alpha.clone(), false, [half.clone(), z.clone()]),
        Similarity::new(cfg.q.clone(), cfg.alpha.clone(), false, [-half, z]),
    ];
    Ifs::new(maps, vec![1, -1]).expect("valid sub IFS")
}

/// A closed arc of angles `[lo, hi]`, stored exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaBox {
    pub lo: AngleRep,
    pub hi: AngleRep,
}

impl AlphaBox {
    pub fn new(lo: AngleRep, hi: AngleRep) -> Self {
        AlphaBox { lo, hi }
    }

    pub fn point(a: AngleRep) -> Self {
        AlphaBox { lo: a.clone(), hi: a }
    }

    /// The whole circle `[0, 2π]`.
    pub fn circle() -> Self {
        AlphaBox { lo: AngleRep::zero(), hi: AngleRep::from_pi(rat(2, 1)) }
    }

    pub fn center(&self) -> AngleRep {
        self.lo.add(&self.hi).scale(&rat(1, 2))
    }

    pub fn radius(&self) -> AngleRep {
        self.hi.sub(&self.lo).scale(&rat(1, 2))
    }

    /// Lower half or upper half.
    pub fn half(&self, upper: bool) -> Self {
        let c = self.center();
        if upper {
            AlphaBox::new(c, self.hi.clone())
        } else {
            AlphaBox::new(self.lo.clone(), c)
        }
    }

    /// `[c - e, c + e]`.
    pub fn around(c: &AngleRep, e: &PowerSum) -> Self {
        let e = AngleRep::new(BigRational::zero(), e.clone());
        AlphaBox::new(c.sub(&e), c.add(&e))
    }

    /// Certified `self ⊆ other` (as real intervals, no wrap-around).
    pub fn inside(&self, other: &AlphaBox, max_bits: u32) -> Option<bool> {
        use std::cmp::Ordering::*;
        let a = other.lo.cmp_value(&self.lo, max_bits)?;
        let b = self.hi.cmp_value(&other.hi, max_bits)?;
        Some(a != Greater && b != Greater)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use crate::ifs::{diam_certified, DEFAULT_NODE_CAP};
    use crate::precision::BigFloat;

    #[test]
    fn kalpha_images_of_origin() {
        let cfg = KAlphaConfig::default();
        let ifs = build_kalpha(&cfg);
        let o = geometry::pt_rational(&rat(0, 1), &rat(0, 1), 128);
        let p1 = ifs.map(1).unwrap().numeric(128).apply(&o);
        assert!(p1[0].contains_rational(&rat(1, 2)) && p1[1].contains(&BigFloat::zero()));
        let cfg = KAlphaConfig::new(rat(1, 1000), AngleRep::from_rational(rat(1, 3))).unwrap();
        let ifs = build_kalpha(&cfg);
        let p2 = ifs.map(2).unwrap().numeric(128).apply(&o);
        assert!(p2[0].contains(&BigFloat::zero()) && p2[1].contains_rational(&rat(1, 1000)));
    }

    #[test]
    fn kalpha_diameter_band() {
        let cfg = KAlphaConfig::new(rat(1, 1000), AngleRep::from_rational(rat(1, 3))).unwrap();
        let d = diam_certified(&build_kalpha(&cfg), &rat(1, 10_000), 128, DEFAULT_NODE_CAP).unwrap();
        assert!(d.lo() >= &BigFloat::one());
        assert!(d.hi().to_rational() <= rat(1002, 1000));
    }

    #[test]
    fn config_flags() {
        assert!(KAlphaConfig::default().conformant());
        assert!(!KAlphaConfig::new(rat(1, 10), AngleRep::zero()).unwrap().conformant());
        assert!(KAlphaConfig::new(rat(1, 2), AngleRep::zero()).is_err());
    }
}
