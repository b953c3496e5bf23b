use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{series, AlphaBox, ConstructionError, KAlphaConfig, Verdict};
use crate::geometry::{self, set_distance_and_rballs, Pt};
use crate::ifs::Word;
use crate::precision::{rat, BigFloat, CertInterval, Round};

/// The two-sided bounds on `a ∓ √(a² ∓ b)`.
#[derive(Clone, Debug, Serialize)]
pub struct SqrtReport {
    /// `2q/3 ≤ a ≤ 4q/3` and `0 < b ≤ q²` are not certifiably violated.
    pub hypotheses: bool,
    pub minus_value: CertInterval,
    pub plus_value: CertInterval,
    /// `b/(2a) < a - √(a² - b)`
    pub minus_lower: Verdict,
    /// `a - √(a² - b) < 3b/(5a)`
    pub minus_upper: Verdict,
    /// `2b/(5a) < √(a² + b) - a`
    pub plus_lower: Verdict,
    /// `√(a² + b) - a < b/(2a)`
    pub plus_upper: Verdict,
}

impl SqrtReport {
    pub fn verdicts(&self) -> [Verdict; 4] {
        [self.minus_lower, self.minus_upper, self.plus_lower, self.plus_upper]
    }
}

pub fn check_sqrt_bounds(a: &CertInterval, b: &CertInterval, q: &BigRational) -> Result<SqrtReport, ConstructionError> {
    // Endpoints are dyadic, so this comparison is exact.
    let (ahi, blo) = (a.hi().to_rational(), b.lo().to_rational());
    let amax2 = if a.lo().is_negative() { (a.lo().to_rational()).max(ahi.clone()) } else { ahi.clone() };
    if &amax2 * &amax2 < blo {
        return Err(ConstructionError::DomainViolation);
    }
    let hyp = ahi >= rat(2, 3) * q
        && a.lo().to_rational() <= rat(4, 3) * q
        && b.hi().is_positive()
        && blo <= q * q;
    let a2 = a.sqr();
    let minus = b.div(&a.add(&a2.sub(b).sqrt_clamped())).map_err(|_| ConstructionError::DomainViolation)?;
    let plus = b.div(&a2.add(b).sqrt_clamped().add(a)).map_err(|_| ConstructionError::DomainViolation)?;
    let frac = |n: i64, d: i64| b.scale(&rat(n, d)).div(a).map_err(|_| ConstructionError::DomainViolation);
    Ok(SqrtReport {
        hypotheses: hyp,
        minus_lower: Verdict::less(&frac(1, 2)?, &minus, true),
        minus_upper: Verdict::less(&minus, &frac(3, 5)?, true),
        plus_lower: Verdict::less(&frac(2, 5)?, &plus, true),
        plus_upper: Verdict::less(&plus, &frac(1, 2)?, true),
        minus_value: minus,
        plus_value: plus,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub verdict: Verdict,
    pub dist_kl: CertInterval,
    pub bound: CertInterval,
    /// `min_R dist(R, M) - bound`.
    pub margin: CertInterval,
    pub balls: usize,
}

fn ball_to_cloud(center: &Pt, radius: &CertInterval, cloud: &[Pt]) -> CertInterval {
    let bits = radius.bits();
    let mut best: Option<CertInterval> = None;
    for p in cloud {
        let d = geometry::dist(center, p).sub(radius).max(&CertInterval::zero(bits));
        best = Some(match best {
            None => d,
            Some(b) => b.min(&d),
        });
    }
    best.expect("nonempty cloud")
}

/// `dist(R, M) ≥ √(dist(K,L)²/4 + d²/2) - dist(K,L)/2` for every ball
/// `R` on a closest `K`–`L` pair.
pub fn check_ball_separation(k: &[Pt], l: &[Pt], m: &[Pt], d: &CertInterval) -> Result<SeparationReport, ConstructionError> {
    let dlm = set_distance_and_rballs(l, m, &BigFloat::zero()).0;
    let dkm = set_distance_and_rballs(k, m, &BigFloat::zero()).0;
    let (dkl, balls) = set_distance_and_rballs(k, l, &BigFloat::zero());
    if dlm.lt(d) {
        return Err(ConstructionError::HypothesisViolation("dist(L, M) < d".into()));
    }
    if dkm.lt(&dkl) {
        return Err(ConstructionError::HypothesisViolation("dist(K, L) > dist(K, M)".into()));
    }
    let bound = dkl.sqr().mul_pow2(-2).add(&d.sqr().mul_pow2(-1)).sqrt_clamped().sub(&dkl.mul_pow2(-1));
    let mut margin: Option<CertInterval> = None;
    for r in &balls {
        let x = ball_to_cloud(&r.center, &r.radius, m).sub(&bound);
        margin = Some(match margin {
            None => x,
            Some(y) => y.min(&x),
        });
    }
    let margin = margin.expect("at least one ball");
    let verdict = if !margin.lo().is_negative() {
        Verdict::Holds
    } else if margin.hi().is_negative() {
        Verdict::Fails
    } else {
        Verdict::Undecided
    };
    Ok(SeparationReport { verdict, dist_kl: dkl, bound, margin, balls: balls.len() })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub holds: usize,
    pub fails: usize,
    pub undecided: usize,
    /// Configurations redrawn because a hypothesis was not certified.
    pub redrawn: usize,
}

fn random_cloud(rng: &mut ChaCha8Rng, cx: f64, cy: f64, bits: u32) -> Vec<Pt> {
    let n = rng.gen_range(1..=4);
    (0..n)
        .map(|_| {
            let x = cx + rng.gen_range(-0.25..0.25);
            let y = cy + rng.gen_range(-0.25..0.25);
            geometry::pt_f64(x, y, bits)
        })
        .collect()
}

/// Runs [`check_ball_separation`] on `n` random small clouds with
/// `dist(L, M) ≥ d` and `dist(K, M) ≥ dist(K, L)`.
pub fn separation_trials(n: usize, seed: u64, bits: u32) -> TrialSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TrialSummary::default();
    while out.trials < n {
        let k = random_cloud(&mut rng, 0.0, 0.0, bits);
        let (lx, ly) = (rng.gen_range(0.6..1.5), rng.gen_range(-1.0..1.0));
        let l = random_cloud(&mut rng, lx, ly, bits);
        let (mx, my) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let m = random_cloud(&mut rng, mx, my, bits);
        let dlm = set_distance_and_rballs(&l, &m, &BigFloat::zero()).0;
        let d = dlm.scale(&rat(rng.gen_range(1..=1000), 1000)).lo().clone();
        match check_ball_separation(&k, &l, &m, &CertInterval::point(d, bits)) {
            Ok(r) => {
                out.trials += 1;
                match r.verdict {
                    Verdict::Holds => out.holds += 1,
                    Verdict::Fails => out.fails += 1,
                    Verdict::Undecided => out.undecided += 1,
                }
            }
            Err(_) => out.redrawn += 1,
        }
    }
    out
}

/// Distance lower bound from `R = B((x_I, 0), M_I)` to `ϕ_J(K')`:
/// `√(X² + M_J²) - M_I` with `X` the horizontal gap, written so that
/// `M_J - M_I` enters through its structural difference.
pub(crate) fn ball_gap(
    q: &BigRational,
    alpha: &AlphaBox,
    i: &Word,
    j: &Word,
    bits: u32,
) -> Result<CertInterval, ConstructionError> {
    let xi = series::x_min(q, alpha, i, bits)?;
    let xj = series::x_range(q, alpha, j, bits)?;
    let right = xj.lo().sub(xi.hi(), bits, Round::Down);
    let left = xi.lo().sub(xj.hi(), bits, Round::Down);
    let gap = right.max_ref(&left).clone();
    let x = if gap.is_positive() { CertInterval::point(gap, bits) } else { CertInterval::zero(bits) };
    let mi = series::m_closed(q, alpha, i, bits)?;
    let mj = series::m_closed(q, alpha, j, bits)?;
    let diff = series::m_diff(q, alpha, j, i, bits)?;
    let num = x.sqr().add(&diff.mul(&mj.add(&mi)));
    let den = x.sqr().add(&mj.sqr()).sqrt_clamped().add(&mi);
    Ok(num.div(&den).expect("positive denominator"))
}

/// Every R-ball of `I` keeps distance at least `q^{2|I|-1}/7` from each
/// `ϕ_J(K')`, `J ∈ L`, provided `M_I ≤ M_J` for all of them.
pub fn check_cr(cfg: &KAlphaConfig, i: &Word, l: &[Word], bits: u32) -> Result<Verdict, ConstructionError> {
    check_cr_box(&cfg.q, &AlphaBox::point(cfg.alpha.clone()), i, l, bits)
}

pub fn check_cr_box(q: &BigRational, alpha: &AlphaBox, i: &Word, l: &[Word], bits: u32) -> Result<Verdict, ConstructionError> {
    series::pm_runs(i)?;
    for j in l {
        series::pm_runs(j)?;
        if j.len() != i.len() {
            return Err(ConstructionError::Invalid(format!("{j:?} and {i:?} differ in length")));
        }
        let d = series::m_diff(q, alpha, i, j, bits)?;
        if !d.hi().is_negative() && !d.hi().is_zero() {
            return Err(ConstructionError::HypothesisViolation(format!("M of {i:?} not certified below M of {j:?}: diff {d}")));
        }
    }
    let bound = CertInterval::from_rational(q, bits).pow(2 * i.len() - 1).scale(&rat(1, 7));
    let mut out = Verdict::Holds;
    for j in l {
        if j == i {
            continue;
        }
        let g = ball_gap(q, alpha, i, j, bits)?;
        match Verdict::less(&bound, &g, false) {
            Verdict::Holds => {}
            Verdict::Fails => return Ok(Verdict::Fails),
            Verdict::Undecided => out = Verdict::Undecided,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::AngleRep;

    fn iv(x: BigRational) -> CertInterval {
        CertInterval::from_rational(&x, 512)
    }

    #[test]
    fn sqrt_examples() {
        let q = rat(1, 1000);
        let r = check_sqrt_bounds(&iv(q.clone()), &iv(rat(5, 10_000_000)), &q).unwrap();
        assert_eq!(r.minus_lower, Verdict::Holds);
        assert_eq!(r.minus_upper, Verdict::Holds);
        assert!((r.minus_value.to_f64() - 2.9289e-4).abs() < 1e-8);
        let r = check_sqrt_bounds(&iv(rat(4, 3) * &q), &iv(&q * &q), &q).unwrap();
        assert_eq!(r.minus_upper, Verdict::Fails);
        assert!(r.hypotheses);
        assert_eq!(
            check_sqrt_bounds(&iv(rat(2, 3) * &q), &iv(&q * &q), &q).unwrap_err(),
            ConstructionError::DomainViolation
        );
    }

    fn p(x: i64, y: i64) -> Pt {
        geometry::pt_rational(&rat(x, 1), &rat(y, 1), 256)
    }

    #[test]
    fn separation_equality_and_strict() {
        let d = CertInterval::from_i64(8, 256).sqrt_clamped();
        let r = check_ball_separation(&[p(0, 1)], &[p(0, -1)], &[p(2, 1)], &d).unwrap();
        assert_eq!(r.verdict, Verdict::Undecided);
        assert!(r.margin.lo().to_f64().abs() < 1e-12 && r.margin.hi().to_f64().abs() < 1e-12);
        let five = CertInterval::from_i64(5, 256).sqrt_clamped().sub(&CertInterval::one(256));
        assert!(r.bound.overlaps(&five));
        let r = check_ball_separation(&[p(0, 1)], &[p(0, -1)], &[p(3, 1)], &d).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(matches!(
            check_ball_separation(&[p(0, 1)], &[p(0, -1)], &[p(2, 1)], &CertInterval::from_i64(3, 256)),
            Err(ConstructionError::HypothesisViolation(_))
        ));
    }

    #[test]
    fn random_trials_hold() {
        let t = separation_trials(50, 7, 128);
        assert_eq!(t.holds, 50, "{t:?}");
    }

    #[test]
    fn cr_cases() {
        let q = rat(1, 1000);
        let cfg = KAlphaConfig::new(q.clone(), AngleRep::from_rational(rat(7, 1) * &q * &q * &q)).unwrap();
        let all: Vec<Word> = [[-1, -1], [-1, 1], [1, -1], [1, 1]]
            .iter()
            .map(|s| Word::from_symbols(&[2, s[0], s[1]]))
            .collect();
        let i = all[0].clone();
        let sib: Vec<Word> = all[1..].to_vec();
        assert_eq!(check_cr(&cfg, &i, &sib, 512).unwrap(), Verdict::Holds);
        assert_eq!(check_cr(&cfg, &i, &[], 512).unwrap(), Verdict::Holds);
        assert!(matches!(check_cr(&cfg, &all[1], &[i], 512), Err(ConstructionError::HypothesisViolation(_))));
    }
}
