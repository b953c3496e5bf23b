//! Convex hulls and point location with exact predicates.

use num_rational::BigRational;
use num_traits::Zero;

use crate::precision::{BigFloat, CertInterval};

/// A number type with exact ring operations and a total order.
pub trait ExactScalar: Clone + Ord + std::fmt::Debug {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn to_interval(&self, bits: u32) -> CertInterval;
    fn to_f64(&self) -> f64;
}

impl ExactScalar for BigFloat {
    fn zero() -> Self {
        BigFloat::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self.add_exact(o)
    }
    fn sub(&self, o: &Self) -> Self {
        self.sub_exact(o)
    }
    fn mul(&self, o: &Self) -> Self {
        self.mul_exact(o)
    }
    fn to_interval(&self, bits: u32) -> CertInterval {
        CertInterval::point(self.clone(), bits)
    }
    fn to_f64(&self) -> f64 {
        BigFloat::to_f64(self)
    }
}

impl ExactScalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn to_interval(&self, bits: u32) -> CertInterval {
        CertInterval::from_rational(self, bits)
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

pub type XPoint<T> = [T; 2];

fn vsub<T: ExactScalar>(a: &XPoint<T>, b: &XPoint<T>) -> XPoint<T> {
    [a[0].sub(&b[0]), a[1].sub(&b[1])]
}

fn cross<T: ExactScalar>(u: &XPoint<T>, v: &XPoint<T>) -> T {
    u[0].mul(&v[1]).sub(&u[1].mul(&v[0]))
}

fn dot<T: ExactScalar>(u: &XPoint<T>, v: &XPoint<T>) -> T {
    u[0].mul(&v[0]).add(&u[1].mul(&v[1]))
}

/// Twice the signed area of `(a, b, c)`; positive for a left turn.
pub fn orient<T: ExactScalar>(a: &XPoint<T>, b: &XPoint<T>, c: &XPoint<T>) -> T {
    cross(&vsub(b, a), &vsub(c, a))
}

/// Convex polygon with counterclockwise vertices. One vertex is a point, two
/// a segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon<T> {
    pub vertices: Vec<XPoint<T>>,
}

impl<T: ExactScalar> Polygon<T> {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` vertex indices; a segment has one edge.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self.vertices.len() {
            0 | 1 => vec![],
            2 => vec![(0, 1)],
            n => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
pub fn convex_hull<T: ExactScalar>(points: &[XPoint<T>]) -> Polygon<T> {
    let mut pts: Vec<XPoint<T>> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return Polygon { vertices: pts };
    }
    let zero = T::zero();
    let mut lower: Vec<XPoint<T>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && orient(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= zero {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<XPoint<T>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && orient(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= zero {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    Polygon { vertices: lower }
}

/// Location of a point relative to a hull, with a margin.
#[derive(Clone, Debug)]
pub enum HullLocation {
    /// Barycentric coefficients over at most three hull vertex indices.
    Inside { coeffs: Vec<(usize, CertInterval)> },
    Outside,
    BoundaryUndecided,
}

impl HullLocation {
    pub fn is_inside(&self) -> bool {
        matches!(self, HullLocation::Inside { .. })
    }
}

/// Squared distance from `x` to segment `[a, b]` compared against `m2`:
/// returns true when the squared distance is `>= m2`.
fn seg_dist2_at_least<T: ExactScalar>(x: &XPoint<T>, a: &XPoint<T>, b: &XPoint<T>, m2: &T) -> bool {
    let ab = vsub(b, a);
    let ax = vsub(x, a);
    let t = dot(&ax, &ab);
    let len2 = dot(&ab, &ab);
    if t <= T::zero() || len2 == T::zero() {
        return dot(&ax, &ax) >= *m2;
    }
    if t >= len2 {
        let bx = vsub(x, b);
        return dot(&bx, &bx) >= *m2;
    }
    let c = cross(&ab, &ax);
    c.mul(&c) >= m2.mul(&len2)
}

/// Locates `x` relative to `hull`. `Inside` means every edge line is at
/// distance at least `margin`; `Outside` means the distance to the hull is at
/// least `margin`. With `margin == 0` a point on the boundary is `Inside`.
pub fn point_in_hull<T: ExactScalar>(x: &XPoint<T>, hull: &Polygon<T>, margin: &T, bits: u32) -> HullLocation {
    let m2 = margin.mul(margin);
    let zero = T::zero();
    let v = &hull.vertices;
    match v.len() {
        0 => return HullLocation::Outside,
        1 => {
            let d = vsub(x, &v[0]);
            if d[0] == zero && d[1] == zero && *margin == zero {
                return HullLocation::Inside { coeffs: vec![(0, CertInterval::one(bits))] };
            }
            let dd = dot(&d, &d);
            return if dd >= m2 && dd > zero { HullLocation::Outside } else { HullLocation::BoundaryUndecided };
        }
        2 => {
            let on_line = orient(&v[0], &v[1], x) == zero;
            let ab = vsub(&v[1], &v[0]);
            let t = dot(&vsub(x, &v[0]), &ab);
            let len2 = dot(&ab, &ab);
            if on_line && *margin == zero && t >= zero && t <= len2 {
                let ti = t.to_interval(bits).div(&len2.to_interval(bits)).expect("nonzero length");
                let coeffs = vec![(0, CertInterval::one(bits).sub(&ti)), (1, ti)];
                return HullLocation::Inside { coeffs };
            }
            return if seg_dist2_at_least(x, &v[0], &v[1], &m2) && !(on_line && t >= zero && t <= len2) {
                HullLocation::Outside
            } else {
                HullLocation::BoundaryUndecided
            };
        }
        _ => {}
    }
    let n = v.len();
    let mut inside = true;
    for i in 0..n {
        let a = &v[i];
        let b = &v[(i + 1) % n];
        let c = orient(a, b, x);
        let ab = vsub(b, a);
        // signed distance c/|ab| >= margin
        if c < zero || c.mul(&c) < m2.mul(&dot(&ab, &ab)) {
            inside = false;
            break;
        }
    }
    if inside {
        return HullLocation::Inside { coeffs: barycentric(x, hull, bits) };
    }
    let outside_some = (0..n).any(|i| orient(&v[i], &v[(i + 1) % n], x) < zero);
    if outside_some && (0..n).all(|i| seg_dist2_at_least(x, &v[i], &v[(i + 1) % n], &m2)) {
        HullLocation::Outside
    } else {
        HullLocation::BoundaryUndecided
    }
}

fn barycentric<T: ExactScalar>(x: &XPoint<T>, hull: &Polygon<T>, bits: u32) -> Vec<(usize, CertInterval)> {
    let v = &hull.vertices;
    let zero = T::zero();
    for i in 1..v.len() - 1 {
        let (a, b, c) = (&v[0], &v[i], &v[i + 1]);
        let wa = orient(b, c, x);
        let wb = orient(c, a, x);
        let wc = orient(a, b, x);
        if wa >= zero && wb >= zero && wc >= zero {
            let total = orient(a, b, c).to_interval(bits);
            let f = |w: &T| w.to_interval(bits).div(&total).expect("non-degenerate triangle");
            return vec![(0, f(&wa)), (i, f(&wb)), (i + 1, f(&wc))];
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::rat;

    fn p(x: (i64, i64), y: (i64, i64)) -> XPoint<BigRational> {
        [rat(x.0, x.1), rat(y.0, y.1)]
    }

    #[test]
    fn triangle_with_interior_point() {
        let pts = vec![p((0, 1), (0, 1)), p((1, 1), (0, 1)), p((0, 1), (1, 1)), p((1, 5), (1, 5))];
        let h = convex_hull(&pts);
        assert_eq!(h.vertices, vec![p((0, 1), (0, 1)), p((1, 1), (0, 1)), p((0, 1), (1, 1))]);
        assert_eq!(convex_hull(&h.vertices), h);
    }

    #[test]
    fn collinear_points_give_segment() {
        let pts: Vec<_> = (0..5).map(|i| p((i, 4), (0, 1))).collect();
        let h = convex_hull(&pts);
        assert_eq!(h.vertices.len(), 2);
        assert_eq!(convex_hull(&[p((0, 1), (0, 1))]).vertices.len(), 1);
    }

    #[test]
    fn point_location_examples() {
        let h = convex_hull(&[p((0, 1), (0, 1)), p((1, 1), (0, 1)), p((0, 1), (1, 1))]);
        let m = rat(1, 100);
        match point_in_hull(&p((1, 4), (1, 4)), &h, &m, 64) {
            HullLocation::Inside { coeffs } => {
                let want = [rat(1, 2), rat(1, 4), rat(1, 4)];
                for ((_, c), w) in coeffs.iter().zip(want.iter()) {
                    assert!(c.contains_rational(w));
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(point_in_hull(&p((1, 1), (1, 1)), &h, &m, 64), HullLocation::Outside));
        assert!(matches!(point_in_hull(&p((1, 2), (1, 2)), &h, &m, 64), HullLocation::BoundaryUndecided));
    }
}
