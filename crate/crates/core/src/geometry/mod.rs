//! Planar primitives on interval points, plus exact hulls.

mod hull;

pub use hull::{convex_hull, orient, point_in_hull, ExactScalar, HullLocation, Polygon, XPoint};

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::precision::{trig, BigFloat, CertInterval};

/// A point with interval coordinates.
pub type Pt = [CertInterval; 2];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("vertex coincides with an endpoint")]
    DegenerateVertex,
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("reference point lies on the line")]
    AmbiguousOrientation,
}

pub fn pt_rational(x: &BigRational, y: &BigRational, bits: u32) -> Pt {
    [CertInterval::from_rational(x, bits), CertInterval::from_rational(y, bits)]
}

pub fn pt_exact(x: &BigFloat, y: &BigFloat, bits: u32) -> Pt {
    [CertInterval::point(x.clone(), bits), CertInterval::point(y.clone(), bits)]
}

pub fn pt_f64(x: f64, y: f64, bits: u32) -> Pt {
    [CertInterval::from_f64(x, bits), CertInterval::from_f64(y, bits)]
}

pub fn sub(a: &Pt, b: &Pt) -> Pt {
    [a[0].sub(&b[0]), a[1].sub(&b[1])]
}

pub fn add(a: &Pt, b: &Pt) -> Pt {
    [a[0].add(&b[0]), a[1].add(&b[1])]
}

pub fn scale(a: &Pt, s: &CertInterval) -> Pt {
    [a[0].mul(s), a[1].mul(s)]
}

pub fn dot(a: &Pt, b: &Pt) -> CertInterval {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1]))
}

pub fn cross(a: &Pt, b: &Pt) -> CertInterval {
    a[0].mul(&b[1]).sub(&a[1].mul(&b[0]))
}

pub fn norm2(a: &Pt) -> CertInterval {
    a[0].sqr().add(&a[1].sqr())
}

pub fn dist(a: &Pt, b: &Pt) -> CertInterval {
    norm2(&sub(a, b)).sqrt_clamped()
}

/// Exact midpoint representative of an interval point.
pub fn mid(a: &Pt) -> XPoint<BigFloat> {
    [a[0].mid(), a[1].mid()]
}

/// Largest coordinate radius of an interval point.
pub fn rad(a: &Pt) -> BigFloat {
    a[0].rad().max_ref(&a[1].rad()).clone()
}

pub fn to_f64(a: &Pt) -> [f64; 2] {
    [a[0].to_f64(), a[1].to_f64()]
}

/// Closed ball `B(center, radius)`.
#[derive(Clone, Debug, Serialize)]
pub struct Ball {
    pub center: Pt,
    pub radius: CertInterval,
}

impl Ball {
    pub fn new(center: Pt, radius: CertInterval) -> Self {
        assert!(!radius.lo().is_negative(), "negative radius");
        Ball { center, radius }
    }

    /// Certified `self ⊆ other`.
    pub fn inside(&self, other: &Ball) -> bool {
        let d = dist(&self.center, &other.center);
        d.add(&self.radius).le(&other.radius)
    }
}

/// ∠(a, b, c): the angle between `a - b` and `c - b`, in `[0, π]`.
pub fn angle_between(a: &Pt, b: &Pt, c: &Pt) -> Result<CertInterval, GeometryError> {
    let u = sub(a, b);
    let v = sub(c, b);
    let nu = norm2(&u);
    let nv = norm2(&v);
    if !nu.is_positive() || !nv.is_positive() {
        return Err(GeometryError::DegenerateVertex);
    }
    let bits = nu.bits();
    let cosv = dot(&u, &v).div(&nu.mul(&nv).sqrt_clamped()).map_err(|_| GeometryError::DegenerateVertex)?;
    Ok(trig::acos(&cosv, bits))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tri {
    Yes,
    No,
    Undecided,
}

/// Membership of `x` in the closed half plane bounded by line(a, b) that
/// contains `v`.
pub fn half_plane_contains(a: &Pt, b: &Pt, v: &Pt, x: &Pt) -> Result<Tri, GeometryError> {
    let ab = sub(b, a);
    if norm2(&ab).contains_zero() {
        return Err(GeometryError::DegenerateSegment);
    }
    let sv = cross(&ab, &sub(v, a));
    let side = match sv.sign() {
        Some(std::cmp::Ordering::Greater) => 1,
        Some(std::cmp::Ordering::Less) => -1,
        _ => return Err(GeometryError::AmbiguousOrientation),
    };
    let sx = cross(&ab, &sub(x, a));
    let sx = if side > 0 { sx } else { sx.neg() };
    Ok(if !sx.lo().is_negative() {
        Tri::Yes
    } else if sx.hi().is_negative() {
        Tri::No
    } else {
        Tri::Undecided
    })
}

/// Minimum pairwise distance between two finite clouds and the balls on the
/// pairs realizing it within `slack`.
pub fn set_distance_and_rballs(l: &[Pt], m: &[Pt], slack: &BigFloat) -> (CertInterval, Vec<Ball>) {
    assert!(!l.is_empty() && !m.is_empty(), "empty cloud");
    let mut pairs: Vec<(usize, usize, CertInterval)> = Vec::with_capacity(l.len() * m.len());
    for (i, a) in l.iter().enumerate() {
        for (j, b) in m.iter().enumerate() {
            pairs.push((i, j, dist(a, b)));
        }
    }
    let best_lo = pairs.iter().map(|p| p.2.lo().clone()).min().unwrap();
    let best_hi = pairs.iter().map(|p| p.2.hi().clone()).min().unwrap();
    let bits = pairs[0].2.bits();
    let d = CertInterval::new(best_lo, best_hi.clone(), bits).inflate(slack);
    let cutoff = d.hi().clone();
    let mut balls = Vec::new();
    for (i, j, dd) in &pairs {
        if dd.lo() <= &cutoff {
            let two = CertInterval::from_i64(2, bits);
            let c = [l[*i][0].add(&m[*j][0]).div(&two).unwrap(), l[*i][1].add(&m[*j][1]).div(&two).unwrap()];
            balls.push(Ball::new(c, dd.mul_pow2(-1)));
        }
    }
    (d, balls)
}

/// Hausdorff distance between two finite clouds.
pub fn hausdorff_distance(a: &[Pt], b: &[Pt]) -> CertInterval {
    assert!(!a.is_empty() && !b.is_empty(), "empty cloud");
    let directed = |p: &[Pt], q: &[Pt]| {
        let mut lo = BigFloat::zero();
        let mut hi = BigFloat::zero();
        for x in p {
            let ds: Vec<CertInterval> = q.iter().map(|y| dist(x, y)).collect();
            let l = ds.iter().map(|d| d.lo().clone()).min().unwrap();
            let h = ds.iter().map(|d| d.hi().clone()).min().unwrap();
            lo = lo.max_ref(&l).clone();
            hi = hi.max_ref(&h).clone();
        }
        (lo, hi)
    };
    let (l1, h1) = directed(a, b);
    let (l2, h2) = directed(b, a);
    let bits = a[0][0].bits();
    CertInterval::new(l1.max_ref(&l2).clone(), h1.max_ref(&h2).clone(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::rat;

    fn p(x: i64, y: i64) -> Pt {
        pt_rational(&rat(x, 1), &rat(y, 1), 128)
    }

    #[test]
    fn angles() {
        let pi = trig::pi(128);
        let right = angle_between(&p(1, 0), &p(0, 0), &p(0, 1)).unwrap();
        assert!(right.overlaps(&pi.mul_pow2(-1)));
        let zero = angle_between(&p(1, 0), &p(0, 0), &p(1, 0)).unwrap();
        assert!(zero.contains(&BigFloat::zero()));
        let straight = angle_between(&p(1, 0), &p(0, 0), &p(-1, 0)).unwrap();
        assert!(straight.overlaps(&pi));
        assert!(angle_between(&p(0, 0), &p(0, 0), &p(1, 0)).is_err());
    }

    #[test]
    fn half_planes() {
        let h = |x: Pt| half_plane_contains(&p(0, 0), &p(1, 0), &p(0, 1), &x).unwrap();
        let half = rat(1, 2);
        assert_eq!(h(pt_rational(&half, &rat(2, 1), 64)), Tri::Yes);
        assert_eq!(h(pt_rational(&half, &rat(-1, 1), 64)), Tri::No);
        assert_eq!(h(pt_rational(&half, &rat(0, 1), 64)), Tri::Yes);
        assert_eq!(half_plane_contains(&p(0, 0), &p(1, 0), &p(2, 0), &p(0, 0)), Err(GeometryError::AmbiguousOrientation));
    }

    #[test]
    fn rballs_two_points() {
        let (d, balls) = set_distance_and_rballs(&[p(0, 0)], &[p(2, 0)], &BigFloat::zero());
        assert!(d.contains(&BigFloat::from_i64(2)));
        assert_eq!(balls.len(), 1);
        assert!(balls[0].center[0].contains(&BigFloat::one()));
        assert!(balls[0].radius.contains(&BigFloat::one()));
        let (_, balls) = set_distance_and_rballs(&[p(0, 1)], &[p(0, -1)], &BigFloat::zero());
        assert!(balls[0].center[1].contains(&BigFloat::zero()));
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![p(0, 0), p(1, 1)];
        assert!(hausdorff_distance(&a, &a).contains(&BigFloat::zero()));
        assert!(hausdorff_distance(&[p(0, 0)], &[p(3, 4)]).contains(&BigFloat::from_i64(5)));
    }
}
