//! Similarities, iterated function systems and their cylinders.

mod cylinder;
mod word;

pub use cylinder::{
    attractor_cloud, cloud_at_depth, cloud_depth, cylinder_ball, diam_certified, expand_level, sigma_delta, Cloud, CylinderBall,
    RootBall, DEFAULT_NODE_CAP,
};
pub use word::Word;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pt;
use crate::precision::{format_rational, parse_rational, AngleRep, CertInterval};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IfsError {
    #[error("symbol {0} is not a label of this IFS")]
    UnknownSymbol(i32),
    #[error("cylinder budget exceeded: {needed} nodes requested, cap {cap}")]
    BudgetExceeded { needed: u128, cap: u64 },
    #[error("invalid IFS: {0}")]
    Invalid(String),
}

/// `x ↦ ratio · R(rotation) · F · x + translation`, with `F` the reflection
/// in the x-axis when `reflect` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Similarity {
    pub ratio: BigRational,
    pub rotation: AngleRep,
    pub reflect: bool,
    pub translation: [BigRational; 2],
}

/// Cos and sin of an angle that is an exact multiple of π/2.
fn exact_cos_sin(a: &AngleRep) -> Option<(i64, i64)> {
    if !a.remainder.is_zero() {
        return None;
    }
    let twice = &a.mod_2pi().pi_coeff * BigRational::from_integer(BigInt::from(2));
    if !twice.is_integer() {
        return None;
    }
    match twice.to_integer().to_i64()? {
        0 => Some((1, 0)),
        1 => Some((0, 1)),
        2 => Some((-1, 0)),
        _ => Some((0, -1)),
    }
}

impl Similarity {
    pub fn new(ratio: BigRational, rotation: AngleRep, reflect: bool, translation: [BigRational; 2]) -> Self {
        Similarity { ratio, rotation: rotation.mod_2pi(), reflect, translation }
    }

    pub fn scaling(ratio: BigRational, translation: [BigRational; 2]) -> Self {
        Self::new(ratio, AngleRep::zero(), false, translation)
    }

    /// Linear part `ratio · A` as an interval matrix.
    pub fn linear(&self, bits: u32) -> [[CertInterval; 2]; 2] {
        let r = CertInterval::from_rational(&self.ratio, bits);
        let (c, s) = self.rotation.cos_sin(bits);
        let (c, s) = (c.mul(&r), s.mul(&r));
        if self.reflect {
            [[c.clone(), s.clone()], [s, c.neg()]]
        } else {
            [[c.clone(), s.neg()], [s, c]]
        }
    }

    pub fn numeric(&self, bits: u32) -> NumericMap {
        NumericMap {
            lin: self.linear(bits),
            trans: [
                CertInterval::from_rational(&self.translation[0], bits),
                CertInterval::from_rational(&self.translation[1], bits),
            ],
        }
    }

    /// Exact rational linear part when the rotation is a multiple of π/2.
    fn linear_exact(&self) -> Option<[[BigRational; 2]; 2]> {
        let (c, s) = exact_cos_sin(&self.rotation)?;
        let r = &self.ratio;
        let c = r * BigRational::from_integer(c.into());
        let s = r * BigRational::from_integer(s.into());
        Some(if self.reflect { [[c.clone(), s.clone()], [s, -c]] } else { [[c.clone(), -s.clone()], [s, c]] })
    }
}

/// A composed map `ϕ_I` with exact ratio and rotation and an interval
/// translation (exact as well when every rotation is a multiple of π/2).
#[derive(Clone, Debug)]
pub struct ComposedMap {
    pub ratio: BigRational,
    pub rotation: AngleRep,
    pub reflect: bool,
    pub translation: Pt,
    pub translation_exact: Option<[BigRational; 2]>,
    pub numeric: NumericMap,
}

/// Interval form of an affine map `x ↦ lin · x + trans`.
#[derive(Clone, Debug)]
pub struct NumericMap {
    pub lin: [[CertInterval; 2]; 2],
    pub trans: Pt,
}

impl NumericMap {
    pub fn identity(bits: u32) -> Self {
        let (o, z) = (CertInterval::one(bits), CertInterval::zero(bits));
        NumericMap { lin: [[o.clone(), z.clone()], [z.clone(), o]], trans: [z.clone(), z] }
    }

    pub fn apply(&self, p: &Pt) -> Pt {
        let m = &self.lin;
        [
            m[0][0].mul(&p[0]).add(&m[0][1].mul(&p[1])).add(&self.trans[0]),
            m[1][0].mul(&p[0]).add(&m[1][1].mul(&p[1])).add(&self.trans[1]),
        ]
    }

    pub fn apply_linear(&self, p: &Pt) -> Pt {
        let m = &self.lin;
        [m[0][0].mul(&p[0]).add(&m[0][1].mul(&p[1])), m[1][0].mul(&p[0]).add(&m[1][1].mul(&p[1]))]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &NumericMap) -> NumericMap {
        let a = &self.lin;
        let b = &other.lin;
        let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
        NumericMap { lin: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]], trans: self.apply(&other.trans) }
    }

    /// The unique fixed point of a contraction.
    pub fn fixed_point(&self) -> Pt {
        let bits = self.trans[0].bits();
        let one = CertInterval::one(bits);
        let m = [
            [one.sub(&self.lin[0][0]), self.lin[0][1].neg()],
            [self.lin[1][0].neg(), one.sub(&self.lin[1][1])],
        ];
        let det = m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0]));
        let t = &self.trans;
        let x = m[1][1].mul(&t[0]).sub(&m[0][1].mul(&t[1])).div(&det).expect("contraction");
        let y = m[0][0].mul(&t[1]).sub(&m[1][0].mul(&t[0])).div(&det).expect("contraction");
        [x, y]
    }
}

/// An ordered family of contracting similarities with distinct labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ifs {
    maps: Vec<Similarity>,
    labels: Vec<i32>,
}

impl Ifs {
    pub fn new(maps: Vec<Similarity>, labels: Vec<i32>) -> Result<Self, IfsError> {
        if maps.len() < 2 {
            return Err(IfsError::Invalid("need at least two maps".into()));
        }
        if maps.len() != labels.len() {
            return Err(IfsError::Invalid("one label per map required".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(IfsError::Invalid("labels must be distinct".into()));
        }
        for m in &maps {
            if !m.ratio.is_positive() || m.ratio >= BigRational::one() {
                return Err(IfsError::Invalid(format!("ratio {} not in (0,1)", format_rational(&m.ratio))));
            }
        }
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                if maps[i] == maps[j] {
                    return Err(IfsError::Invalid("two identical maps".into()));
                }
            }
        }
        Ok(Ifs { maps, labels })
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn index_of(&self, label: i32) -> Result<usize, IfsError> {
        self.labels.iter().position(|&l| l == label).ok_or(IfsError::UnknownSymbol(label))
    }

    pub fn map(&self, label: i32) -> Result<&Similarity, IfsError> {
        Ok(&self.maps[self.index_of(label)?])
    }

    /// Map indices in increasing label order, so that expansions come out
    /// sorted by `≺`.
    pub fn label_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.maps.len()).collect();
        idx.sort_by_key(|&i| self.labels[i]);
        idx
    }

    pub fn max_ratio(&self) -> BigRational {
        self.maps.iter().map(|m| m.ratio.clone()).max().unwrap()
    }

    pub fn numeric(&self, bits: u32) -> Vec<NumericMap> {
        self.maps.iter().map(|m| m.numeric(bits)).collect()
    }

    /// A point of the attractor: the fixed point of the map with the smallest label.
    pub fn anchor(&self, bits: u32) -> Pt {
        let i = self.label_order()[0];
        self.maps[i].numeric(bits).fixed_point()
    }

    pub fn ratio_of(&self, w: &Word) -> Result<BigRational, IfsError> {
        let mut r = BigRational::one();
        for &(s, n) in w.runs() {
            r *= num_traits::pow(self.map(s)?.ratio.clone(), n as usize);
        }
        Ok(r)
    }
}

/// `ϕ_I = ϕ_{I(1)} ∘ … ∘ ϕ_{I(|I|)}`. Cost is linear in `|I|`; intended
/// for words of moderate length.
pub fn compose_word(ifs: &Ifs, word: &Word, bits: u32) -> Result<ComposedMap, IfsError> {
    let mut ratio = BigRational::one();
    let mut rotation = AngleRep::zero();
    let mut reflect = false;
    let mut numeric = NumericMap::identity(bits);
    let zero = BigRational::zero();
    let mut exact: Option<([[BigRational; 2]; 2], [BigRational; 2])> = Some((
        [[BigRational::one(), zero.clone()], [zero.clone(), BigRational::one()]],
        [zero.clone(), zero.clone()],
    ));
    for &(s, n) in word.runs() {
        let m = ifs.map(s)?;
        let mn = m.numeric(bits);
        let me = m.linear_exact();
        for _ in 0..n {
            ratio *= &m.ratio;
            let r = if reflect { m.rotation.neg() } else { m.rotation.clone() };
            rotation = rotation.add(&r).mod_2pi();
            reflect ^= m.reflect;
            numeric = numeric.compose(&mn);
            exact = match (exact, &me) {
                (Some((a, t)), Some(b)) => {
                    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
                    let v = &m.translation;
                    let nt = [
                        &a[0][0] * &v[0] + &a[0][1] * &v[1] + &t[0],
                        &a[1][0] * &v[0] + &a[1][1] * &v[1] + &t[1],
                    ];
                    Some(([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]], nt))
                }
                _ => None,
            };
        }
    }
    let translation_exact = exact.map(|(_, t)| t);
    let translation = match &translation_exact {
        Some(t) => [CertInterval::from_rational(&t[0], bits), CertInterval::from_rational(&t[1], bits)],
        None => numeric.trans.clone(),
    };
    Ok(ComposedMap { ratio, rotation, reflect, translation, translation_exact, numeric })
}

// ---------------------------------------------------------------------------
// Built-in families and JSON ingestion.

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Middle-thirds Cantor set on `[0,1] × {0}`, labels 1, 2.
pub fn cantor() -> Ifs {
    Ifs::new(
        vec![
            Similarity::scaling(r(1, 3), [r(0, 1), r(0, 1)]),
            Similarity::scaling(r(1, 3), [r(2, 3), r(0, 1)]),
        ],
        vec![1, 2],
    )
    .unwrap()
}

/// Two halves of the unit segment; the attractor is `[0,1] × {0}`.
pub fn unit_segment() -> Ifs {
    Ifs::new(
        vec![
            Similarity::scaling(r(1, 2), [r(0, 1), r(0, 1)]),
            Similarity::scaling(r(1, 2), [r(1, 2), r(0, 1)]),
        ],
        vec![1, 2],
    )
    .unwrap()
}

/// Sierpinski triangle on `(0,0), (1,0), (1/2,1)`.
pub fn sierpinski() -> Ifs {
    Ifs::new(
        vec![
            Similarity::scaling(r(1, 2), [r(0, 1), r(0, 1)]),
            Similarity::scaling(r(1, 2), [r(1, 2), r(0, 1)]),
            Similarity::scaling(r(1, 2), [r(1, 4), r(1, 2)]),
        ],
        vec![1, 2, 3],
    )
    .unwrap()
}

/// Two maps `x ↦ ratio · R(alpha) x ± e₁`, labels 1 (`+e₁`) and 2 (`-e₁`).
pub fn rotation_pair(ratio: BigRational, alpha: AngleRep) -> Ifs {
    Ifs::new(
        vec![
            Similarity::new(ratio.clone(), alpha.clone(), false, [r(1, 1), r(0, 1)]),
            Similarity::new(ratio, alpha, false, [r(-1, 1), r(0, 1)]),
        ],
        vec![1, 2],
    )
    .unwrap()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub ratio: String,
    pub rotation: AngleRep,
    #[serde(default)]
    pub reflect: bool,
    pub translation: [String; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub maps: Vec<MapSpec>,
    pub labels: Vec<i32>,
}

impl IfsSpec {
    pub fn build(&self) -> Result<Ifs, IfsError> {
        let bad = |e: crate::precision::PrecisionError| IfsError::Invalid(e.to_string());
        let mut maps = Vec::new();
        for m in &self.maps {
            maps.push(Similarity::new(
                parse_rational(&m.ratio).map_err(bad)?,
                m.rotation.clone(),
                m.reflect,
                [parse_rational(&m.translation[0]).map_err(bad)?, parse_rational(&m.translation[1]).map_err(bad)?],
            ));
        }
        Ifs::new(maps, self.labels.clone())
    }

    pub fn from_ifs(ifs: &Ifs) -> Self {
        IfsSpec {
            maps: ifs
                .maps
                .iter()
                .map(|m| MapSpec {
                    ratio: format_rational(&m.ratio),
                    rotation: m.rotation.clone(),
                    reflect: m.reflect,
                    translation: [format_rational(&m.translation[0]), format_rational(&m.translation[1])],
                })
                .collect(),
            labels: ifs.labels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigFloat;

    #[test]
    fn cantor_composition() {
        let ifs = cantor();
        let m = compose_word(&ifs, &Word::from_symbols(&[1, 2]), 64).unwrap();
        assert_eq!(m.ratio, r(1, 9));
        assert_eq!(m.translation_exact, Some([r(2, 9), r(0, 1)]));
        let id = compose_word(&ifs, &Word::empty(), 64).unwrap();
        assert_eq!(id.ratio, r(1, 1));
        assert!(id.rotation.is_zero());
        assert!(matches!(compose_word(&ifs, &Word::single(7), 64), Err(IfsError::UnknownSymbol(7))));
    }

    #[test]
    fn reflection_negates_later_rotations() {
        let a = Similarity::new(r(1, 2), AngleRep::zero(), true, [r(0, 1), r(0, 1)]);
        let b = Similarity::new(r(1, 2), AngleRep::from_pi(r(1, 2)), false, [r(1, 1), r(0, 1)]);
        let ifs = Ifs::new(vec![a, b], vec![1, 2]).unwrap();
        let m = compose_word(&ifs, &Word::from_symbols(&[1, 2]), 64).unwrap();
        assert!(m.reflect);
        assert_eq!(m.rotation, AngleRep::from_pi(r(3, 2)));
        // ϕ_1(ϕ_2(0)) = ϕ_1((1,0)) = (1/2, 0)
        let p = m.numeric.apply(&[CertInterval::zero(64), CertInterval::zero(64)]);
        assert!(p[0].contains_rational(&r(1, 2)) && p[1].contains(&BigFloat::zero()));
    }

    #[test]
    fn spec_round_trip() {
        let ifs = rotation_pair(r(1, 5), AngleRep::from_pi(r(2, 3)));
        let json = serde_json::to_string(&IfsSpec::from_ifs(&ifs)).unwrap();
        let back: IfsSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), ifs);
        assert!(serde_json::from_str::<IfsSpec>(r#"{"maps":[],"labels":[],"extra":1}"#).is_err());
    }

    #[test]
    fn invalid_families_rejected() {
        let m = Similarity::scaling(r(1, 2), [r(0, 1), r(0, 1)]);
        assert!(Ifs::new(vec![m.clone(), m.clone()], vec![1, 2]).is_err());
        assert!(Ifs::new(vec![m.clone()], vec![1]).is_err());
        let big = Similarity::scaling(r(3, 2), [r(1, 1), r(0, 1)]);
        assert!(Ifs::new(vec![m, big], vec![1, 2]).is_err());
    }
}
