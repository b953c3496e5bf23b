use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_rational::BigRational;
use serde::Serialize;

use super::{build_kalpha, build_pm1, series, AlphaBox, Branches, ConstructionError, KAlphaConfig};
use crate::geometry::{self, Ball, Pt};
use crate::ifs::{compose_word, IfsError, NumericMap, RootBall, Word, DEFAULT_NODE_CAP};
use crate::precision::{rat, BigFloat, CertInterval, Round};

/// Words of the `{2} × {±1}*` shape at least this long use the closed form.
const CLOSED_FORM_FROM: u64 = 24;

#[derive(Clone, Debug, Serialize)]
pub struct MValue {
    pub word: Word,
    pub branches: Branches,
    /// Encloses `min{y : (x, y) ∈ K_I}`.
    pub value: CertInterval,
    /// Encloses every `x` with `(x, M_I) ∈ K_I`.
    pub minimizing_x: CertInterval,
    /// `value ⊂ [2q/3, 4q/3]`, checked for `{2} × {±1}*` words.
    pub in_band: Option<bool>,
    /// Lowest-point candidates, grouped.
    pub clusters: Vec<CertInterval>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RBall {
    pub ball: Ball,
    pub source_word: Word,
}

struct Node {
    lb: BigFloat,
    word: Word,
    map: NumericMap,
    ratio: BigRational,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.lb.cmp(&o.lb).then_with(|| self.word.cmp(&o.word))
    }
}

fn is_pm_word(w: &Word) -> bool {
    w.first() == Some(2) && w.runs().iter().skip(1).all(|r| r.0 == 1 || r.0 == -1) && w.runs()[0].1 == 1
}

/// `M_I` for `K_I = ϕ_I(K_sub)` where `K_sub` is generated by `branches`.
pub fn m_value(cfg: &KAlphaConfig, word: &Word, branches: Branches, bits: u32) -> Result<MValue, ConstructionError> {
    m_value_capped(cfg, word, branches, bits, DEFAULT_NODE_CAP)
}

pub fn m_value_capped(
    cfg: &KAlphaConfig,
    word: &Word,
    branches: Branches,
    bits: u32,
    cap: u64,
) -> Result<MValue, ConstructionError> {
    if word.first() != Some(2) {
        return Err(ConstructionError::Invalid("word must start with +2".into()));
    }
    let pm = is_pm_word(word);
    let mut out = if pm && branches == Branches::PlusMinusOne && word.len() >= CLOSED_FORM_FROM {
        let a = AlphaBox::point(cfg.alpha.clone());
        let value = series::m_closed(&cfg.q, &a, word, bits)?;
        let x = series::x_min(&cfg.q, &a, word, bits)?;
        MValue { word: word.clone(), branches, value, minimizing_x: x.clone(), in_band: None, clusters: vec![x] }
    } else {
        bnb(cfg, word, branches, bits, cap)?
    };
    if pm {
        let lo = CertInterval::from_rational(&(rat(2, 3) * &cfg.q), bits);
        let hi = CertInterval::from_rational(&(rat(4, 3) * &cfg.q), bits);
        out.in_band = Some(lo.le(&out.value) && out.value.le(&hi));
    }
    Ok(out)
}

fn bnb(cfg: &KAlphaConfig, word: &Word, branches: Branches, bits: u32, cap: u64) -> Result<MValue, ConstructionError> {
    let full = build_kalpha(cfg);
    let sub = match branches {
        Branches::Full => full.clone(),
        Branches::PlusMinusOne => build_pm1(cfg),
    };
    let outer = compose_word(&full, word, bits)?;
    let root = RootBall::standard(&sub);
    let r0 = CertInterval::from_rational(&root.radius, bits);
    let c0 = geometry::pt_rational(&root.center[0], &root.center[1], bits);
    let anchor = sub.anchor(bits);
    let maps = sub.numeric(bits);
    let order = sub.label_order();
    // Target: 2^{-bits/2} q^{|I|}, kept above the arithmetic noise floor.
    let target = CertInterval::from_rational(&cfg.q, bits)
        .pow(word.len())
        .mul_pow2(-(bits as i64) / 2)
        .hi()
        .clone();
    let lb_of = |map: &NumericMap, ratio: &BigRational| {
        let c = map.apply(&c0);
        c[1].sub(&r0.mul(&CertInterval::from_rational(ratio, bits))).lo().clone()
    };
    let mut heap = BinaryHeap::new();
    let root_node = Node { lb: lb_of(&outer.numeric, &outer.ratio), word: Word::empty(), map: outer.numeric.clone(), ratio: outer.ratio.clone() };
    let mut ub = outer.numeric.apply(&anchor)[1].hi().clone();
    heap.push(Reverse(root_node));
    let mut nodes: u64 = 1;
    let mut done: Vec<Node> = Vec::new();
    while let Some(Reverse(n)) = heap.pop() {
        if n.lb > ub {
            continue;
        }
        let gap = ub.sub(&n.lb, bits, Round::Up);
        let size = r0.mul(&CertInterval::from_rational(&n.ratio, bits)).hi().mul_pow2(1);
        if gap <= target && size <= target {
            done.push(n);
            continue;
        }
        if size <= target.mul_pow2(-2) {
            done.push(n);
            continue;
        }
        for &i in &order {
            nodes += 1;
            if nodes > cap {
                return Err(ConstructionError::Ifs(IfsError::BudgetExceeded { needed: nodes as u128, cap }));
            }
            let map = n.map.compose(&maps[i]);
            let ratio = &n.ratio * sub.maps()[i].ratio.clone();
            let p = map.apply(&anchor);
            if p[1].hi() < &ub {
                ub = p[1].hi().clone();
            }
            let lb = lb_of(&map, &ratio);
            if lb <= ub {
                heap.push(Reverse(Node { lb, word: n.word.with(sub.labels()[i]), map, ratio }));
            }
        }
    }
    done.retain(|n| n.lb <= ub);
    let lo = done.iter().map(|n| n.lb.clone()).min().unwrap_or_else(|| ub.clone());
    let value = CertInterval::new(lo, ub, bits);
    // Lowest-point candidates: boxes around surviving cylinders, merged when
    // they come within twice the target of each other.
    let mut boxes: Vec<CertInterval> = done
        .iter()
        .map(|n| {
            let c = n.map.apply(&c0);
            let r = r0.mul(&CertInterval::from_rational(&n.ratio, bits));
            c[0].inflate(r.hi())
        })
        .collect();
    boxes.sort_by(|a, b| a.lo().cmp(b.lo()));
    let link = target.mul_pow2(1);
    let mut clusters: Vec<CertInterval> = Vec::new();
    for b in boxes {
        if let Some(last) = clusters.last_mut() {
            if b.lo().sub(last.hi(), bits, Round::Down) <= link {
                *last = last.union(&b);
                continue;
            }
        }
        clusters.push(b);
    }
    let minimizing_x = clusters.iter().skip(1).fold(clusters[0].clone(), |a, b| a.union(b));
    Ok(MValue { word: word.clone(), branches, value, minimizing_x, in_band: None, clusters })
}

/// `B((x, 0), M_I)` for each cluster of lowest points of `K_I`.
pub fn r_balls(cfg: &KAlphaConfig, word: &Word, branches: Branches, bits: u32) -> Result<Vec<RBall>, ConstructionError> {
    let m = m_value(cfg, word, branches, bits)?;
    Ok(balls_of(&m, bits))
}

pub(crate) fn balls_of(m: &MValue, bits: u32) -> Vec<RBall> {
    m.clusters
        .iter()
        .map(|x| {
            let center: Pt = [x.clone(), CertInterval::zero(bits)];
            RBall { ball: Ball::new(center, m.value.clone()), source_word: m.word.clone() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::AngleRep;

    #[test]
    fn single_two_band() {
        let cfg = KAlphaConfig::new(rat(1, 1000), AngleRep::from_rational(rat(1, 3))).unwrap();
        let q = &cfg.q;
        let m = m_value(&cfg, &Word::single(2), Branches::Full, 96).unwrap();
        let slack = rat(2, 1) * q * q * (rat(1, 1) + rat(2, 1) * q);
        let (lo, hi) = (CertInterval::from_rational(&(q - &slack), 96), CertInterval::from_rational(&(q + &slack), 96));
        assert!(lo.le(&m.value) && m.value.le(&hi));
        assert_eq!(m.in_band, Some(true));
    }

    #[test]
    fn zero_rotation_oracle() {
        // α = 0: min y over K is the fixed point of ϕ_{-2}, -q/(1-q²), so
        // M_{(2,1)} = q + q²·q·(-q/(1-q²)).
        let cfg = KAlphaConfig::default();
        let q = &cfg.q;
        let m = m_value(&cfg, &Word::from_symbols(&[2, 1]), Branches::Full, 128).unwrap();
        let want = q - q * q * q * q / (rat(1, 1) - q * q);
        assert!(m.value.contains_rational(&want), "{:?}", m.value);
        assert!(m.value.width().to_f64() < 1e-20);
    }

    #[test]
    fn ball_at_origin() {
        let cfg = KAlphaConfig::default();
        let b = r_balls(&cfg, &Word::single(2), Branches::Full, 96).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].ball.center[0].contains(&BigFloat::zero()));
        assert!(b[0].ball.center[0].width().to_f64() < 1e-9);
    }

    #[test]
    fn two_minima() {
        // α = π/2 on K': the first symbol does not move y, so the lowest
        // points split into two groups q² apart in x.
        let cfg = KAlphaConfig::new(rat(1, 1000), AngleRep::from_pi(rat(1, 2))).unwrap();
        let b = r_balls(&cfg, &Word::single(2), Branches::PlusMinusOne, 32).unwrap();
        assert_eq!(b.len(), 2);
        let gap = b[1].ball.center[0].sub(&b[0].ball.center[0]).to_f64();
        assert!((gap - 1e-6).abs() < 1e-8, "{gap}");
    }

    #[test]
    fn closed_form_agrees_with_search() {
        let cfg = KAlphaConfig::new(rat(1, 1000), AngleRep::from_rational(rat(1, 3))).unwrap();
        let w = Word::from_symbols(&[2, 1, -1, -1]);
        let m = m_value(&cfg, &w, Branches::PlusMinusOne, 128).unwrap();
        let c = series::m_closed(&cfg.q, &AlphaBox::point(cfg.alpha.clone()), &w, 128).unwrap();
        assert!(m.value.overlaps(&c));
        let x = series::x_min(&cfg.q, &AlphaBox::point(cfg.alpha.clone()), &w, 128).unwrap();
        assert!(m.minimizing_x.overlaps(&x));
    }
}
