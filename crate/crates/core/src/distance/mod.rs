//! Certified distance to an attractor, nearest-point sets and criticality.

mod scan;

pub use scan::{critical_scan, isolation_check, Isolation, ScanEntry};

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, convex_hull, point_in_hull, HullLocation, Pt, XPoint};
use crate::ifs::{Ifs, IfsError, NumericMap, RootBall, Word, DEFAULT_NODE_CAP};
use crate::precision::{BigFloat, CertInterval, Round};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistanceError {
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error("query point lies on the attractor")]
    OnAttractor,
}

/// Certified `dist(x, K)` with the cylinders that may realize it.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub value: CertInterval,
    pub witnesses: Vec<(Word, Pt)>,
    pub nodes: u64,
}

#[derive(Clone, Debug)]
struct Node {
    word: Word,
    map: NumericMap,
    ratio: BigRational,
    lb: BigFloat,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.lb == o.lb && self.word == o.word
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        (&self.lb, &self.word).cmp(&(&o.lb, &o.word))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Immutable per-IFS data shared by all queries.
#[derive(Clone, Debug)]
pub struct Engine {
    ifs: Ifs,
    bits: u32,
    root: RootBall,
    root_center: Pt,
    anchor: Pt,
    maps: Vec<NumericMap>,
    order: Vec<usize>,
    pub cap: u64,
}

impl Engine {
    pub fn new(ifs: &Ifs, bits: u32) -> Self {
        let root = RootBall::standard(ifs);
        Engine {
            ifs: ifs.clone(),
            bits,
            root_center: geometry::pt_rational(&root.center[0], &root.center[1], bits),
            root,
            anchor: ifs.anchor(bits),
            maps: ifs.numeric(bits),
            order: ifs.label_order(),
            cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn ifs(&self) -> &Ifs {
        &self.ifs
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn radius(&self, ratio: &BigRational) -> BigFloat {
        BigFloat::from_rational(&(ratio * &self.root.radius), 64, Round::Up)
    }

    fn lower_bound(&self, x: &Pt, map: &NumericMap, ratio: &BigRational) -> BigFloat {
        let c = map.apply(&self.root_center);
        let d = geometry::dist(x, &c);
        let lb = d.lo().sub(&self.radius(ratio), self.bits, Round::Down);
        if lb.is_negative() {
            BigFloat::zero()
        } else {
            lb
        }
    }

    fn rep(&self, map: &NumericMap) -> Pt {
        map.apply(&self.anchor)
    }

    fn children(&self, x: &Pt, n: &Node) -> Vec<Node> {
        self.order
            .iter()
            .map(|&i| {
                let map = n.map.compose(&self.maps[i]);
                let ratio = &n.ratio * &self.ifs.maps()[i].ratio;
                let lb = self.lower_bound(x, &map, &ratio);
                Node { word: n.word.with(self.ifs.labels()[i]), map, ratio, lb }
            })
            .collect()
    }

    fn root_node(&self, x: &Pt) -> Node {
        let map = NumericMap::identity(self.bits);
        let ratio = BigRational::one();
        let lb = self.lower_bound(x, &map, &ratio);
        Node { word: Word::empty(), map, ratio, lb }
    }

    /// Best-first branch and bound; the result has width at most `eps`
    /// (plus rounding).
    pub fn distance(&self, x: &Pt, eps: f64) -> Result<DistanceResult, DistanceError> {
        let eps = BigFloat::from_f64_exact(eps);
        let root = self.root_node(x);
        let mut ub = geometry::dist(x, &self.rep(&root.map)).hi().clone();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(root));
        let mut nodes: u64 = 1;
        loop {
            let Reverse(n) = heap.pop().expect("frontier never empties");
            let gap = ub.sub(&n.lb, 64, Round::Down);
            if gap <= eps {
                let lo = n.lb.clone();
                let value = CertInterval::new(lo.min_ref(&ub).clone(), ub.clone(), self.bits);
                let mut wit: Vec<(Word, Pt)> = std::iter::once(n)
                    .chain(heap.into_iter().map(|r| r.0))
                    .filter(|m| m.lb <= ub)
                    .map(|m| (m.word.clone(), self.rep(&m.map)))
                    .collect();
                wit.sort_by(|a, b| a.0.cmp(&b.0));
                return Ok(DistanceResult { value, witnesses: wit, nodes });
            }
            for c in self.children(x, &n) {
                nodes += 1;
                if nodes > self.cap {
                    return Err(IfsError::BudgetExceeded { needed: nodes as u128, cap: self.cap }.into());
                }
                let d = geometry::dist(x, &self.rep(&c.map));
                if d.hi() < &ub {
                    ub = d.hi().clone();
                }
                if c.lb <= ub {
                    heap.push(Reverse(c));
                }
            }
        }
    }

    /// Representative points of every cylinder of diameter `<= eps` that
    /// meets `B(x, dist + eta)`.
    pub fn near_set(&self, x: &Pt, eta: f64, eps: f64) -> Result<NearSet, DistanceError> {
        assert!(eta > eps && eps > 0.0, "need eta > eps > 0");
        let d = self.distance(x, eps / 4.0)?;
        let reach = d.value.hi().add(&BigFloat::from_f64_exact(eta), self.bits, Round::Up);
        let eps_b = BigFloat::from_f64_exact(eps);
        let mut stack = vec![self.root_node(x)];
        let mut points = Vec::new();
        let mut nodes: u64 = 1;
        while let Some(n) = stack.pop() {
            if n.lb > reach {
                continue;
            }
            if self.radius(&n.ratio).mul_pow2(1) <= eps_b {
                points.push((n.word.clone(), self.rep(&n.map)));
                continue;
            }
            let mut ch = self.children(x, &n);
            nodes += ch.len() as u64;
            if nodes > self.cap {
                return Err(IfsError::BudgetExceeded { needed: nodes as u128, cap: self.cap }.into());
            }
            ch.reverse();
            stack.extend(ch);
        }
        let mut clusters = cluster(&points, 2.0 * eps);
        let xf = geometry::to_f64(x);
        let dx = |i: &usize| {
            let q = geometry::to_f64(&points[*i].1);
            (q[0] - xf[0]).hypot(q[1] - xf[1])
        };
        for c in &mut clusters {
            c.sort_by(|a, b| dx(a).partial_cmp(&dx(b)).unwrap().then(a.cmp(b)));
        }
        Ok(NearSet { distance: d.value, eta, eps, points, clusters })
    }

    pub fn criticality(&self, x: &Pt, eps: f64) -> Result<CriticalityVerdict, DistanceError> {
        criticality_with(self, x, eps)
    }
}

/// Points within `eta` of nearest, grouped into clusters.
#[derive(Clone, Debug)]
pub struct NearSet {
    pub distance: CertInterval,
    pub eta: f64,
    pub eps: f64,
    pub points: Vec<(Word, Pt)>,
    /// Indices into `points`; the first member, nearest to `x`, is the
    /// representative.
    pub clusters: Vec<Vec<usize>>,
}

impl NearSet {
    pub fn representatives(&self) -> Vec<Pt> {
        self.clusters.iter().map(|c| self.points[c[0]].1.clone()).collect()
    }
}

/// Single-linkage clustering at threshold `tol`.
fn cluster(points: &[(Word, Pt)], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    let f: Vec<[f64; 2]> = points.iter().map(|p| geometry::to_f64(&p.1)).collect();
    // Sort by x so the inner scan can stop early.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| f[a][0].partial_cmp(&f[b][0]).unwrap().then(a.cmp(&b)));
    for a in 0..n {
        for b in a + 1..n {
            let (i, j) = (idx[a], idx[b]);
            if f[j][0] - f[i][0] > tol {
                break;
            }
            let d = ((f[i][0] - f[j][0]).powi(2) + (f[i][1] - f[j][1]).powi(2)).sqrt();
            if d <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Critical,
    NotCritical,
    Undecided,
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// `x ≈ Σ λ_i w_i` with `w_i` cluster representatives.
    Convex { weights: Vec<(Pt, CertInterval)>, residual: CertInterval },
    /// Every near point `w` satisfies `u · (w - x) >= margin`.
    Separating { direction: [f64; 2], margin: CertInterval },
    None,
}

#[derive(Clone, Debug)]
pub struct CriticalityVerdict {
    pub status: Status,
    pub certificate: Certificate,
    pub eta: f64,
    pub eps: f64,
    pub distance: CertInterval,
}

impl CriticalityVerdict {
    /// Re-checks the attached certificate from its own data.
    pub fn validate(&self, x: &Pt) -> bool {
        match &self.certificate {
            Certificate::Convex { weights, residual } => {
                let bits = x[0].bits();
                let mut sum = CertInterval::zero(bits);
                let mut acc = [CertInterval::zero(bits), CertInterval::zero(bits)];
                for (w, l) in weights {
                    if l.hi().is_negative() {
                        return false;
                    }
                    sum = sum.add(l);
                    acc = geometry::add(&acc, &geometry::scale(w, l));
                }
                let r = geometry::dist(&acc, x);
                sum.contains(&BigFloat::one()) && r.hi() <= residual.hi()
            }
            Certificate::Separating { margin, .. } => margin.is_positive(),
            Certificate::None => self.status == Status::Undecided,
        }
    }
}

/// Closest point of the hull of `reps` to `x`, as convex weights, and the
/// distance from `x` to that combination.
fn hull_fit(x: &Pt, reps: &[Pt], bits: u32) -> (Vec<(Pt, CertInterval)>, CertInterval) {
    let exact: Vec<XPoint<BigFloat>> = reps.iter().map(geometry::mid).collect();
    let hull = convex_hull(&exact);
    let vpt = |v: &XPoint<BigFloat>| reps[exact.iter().position(|p| p == v).unwrap()].clone();
    let xm = geometry::mid(x);
    if let HullLocation::Inside { coeffs } = point_in_hull(&xm, &hull, &BigFloat::zero(), bits) {
        let weights: Vec<(Pt, CertInterval)> = coeffs.into_iter().map(|(i, l)| (vpt(&hull.vertices[i]), l)).collect();
        let r = residual(x, &weights, bits);
        return (weights, r);
    }
    // Otherwise the best combination sits on an edge or at a vertex.
    let verts: Vec<Pt> = hull.vertices.iter().map(vpt).collect();
    let mut best: Option<(Vec<(Pt, CertInterval)>, CertInterval)> = None;
    let mut consider = |w: Vec<(Pt, CertInterval)>| {
        let r = residual(x, &w, bits);
        if best.as_ref().map_or(true, |b| r.hi() < b.1.hi()) {
            best = Some((w, r));
        }
    };
    for v in &verts {
        consider(vec![(v.clone(), CertInterval::one(bits))]);
    }
    let m = verts.len();
    let edges: Vec<(usize, usize)> = if m == 2 { vec![(0, 1)] } else { (0..m).map(|i| (i, (i + 1) % m)).collect() };
    if m >= 2 {
        for (i, j) in edges {
            let ab = geometry::sub(&verts[j], &verts[i]);
            let ax = geometry::sub(x, &verts[i]);
            let len2 = geometry::norm2(&ab);
            if !len2.is_positive() {
                continue;
            }
            let t = geometry::dot(&ax, &ab).div(&len2).unwrap();
            let tm = t.mid();
            if tm.is_negative() || tm > BigFloat::one() {
                continue;
            }
            let t = CertInterval::point(tm, bits);
            consider(vec![(verts[i].clone(), CertInterval::one(bits).sub(&t)), (verts[j].clone(), t)]);
        }
    }
    best.unwrap()
}

fn residual(x: &Pt, weights: &[(Pt, CertInterval)], bits: u32) -> CertInterval {
    let mut acc = [CertInterval::zero(bits), CertInterval::zero(bits)];
    for (w, l) in weights {
        acc = geometry::add(&acc, &geometry::scale(w, l));
    }
    geometry::dist(&acc, x)
}

/// Separation test: the nearest point `h` of the hull to `x` gives the
/// direction `u = h - x`; returns the certified minimum of `u·(w - x)/|u|`.
fn separation(x: &Pt, reps: &[Pt], fit: &(Vec<(Pt, CertInterval)>, CertInterval), bits: u32) -> Option<([f64; 2], CertInterval)> {
    let mut h = [CertInterval::zero(bits), CertInterval::zero(bits)];
    for (w, l) in &fit.0 {
        h = geometry::add(&h, &geometry::scale(w, l));
    }
    let u = geometry::sub(&geometry::mid(&h).map(|c| CertInterval::point(c, bits)), x);
    let u = [CertInterval::point(u[0].mid(), bits), CertInterval::point(u[1].mid(), bits)];
    let nu = geometry::norm2(&u).sqrt_clamped();
    if !nu.is_positive() {
        return None;
    }
    let mut worst: Option<CertInterval> = None;
    for w in reps {
        let s = geometry::dot(&u, &geometry::sub(w, x)).div(&nu).unwrap();
        worst = Some(match worst {
            None => s,
            Some(cur) => cur.min(&s),
        });
    }
    Some((geometry::to_f64(&u), worst?))
}

fn criticality_with(engine: &Engine, x: &Pt, eps: f64) -> Result<CriticalityVerdict, DistanceError> {
    let bits = engine.bits;
    let d = engine.distance(x, eps / 8.0)?;
    if d.value.lo().is_zero() {
        return Err(DistanceError::OnAttractor);
    }
    // η schedule from coarse to the floor 4·eps.
    let etas = [64.0 * eps, 16.0 * eps, 4.0 * eps];
    let mut last_fit = None;
    for &eta in &etas {
        let ns = engine.near_set(x, eta, eta / 4.0)?;
        let reps = ns.representatives();
        let fit = hull_fit(x, &reps, bits);
        // Each representative stands for a cylinder of diameter <= eta/4.
        let slack = BigFloat::from_f64_exact(eta / 4.0);
        if fit.1.lo() > &slack {
            if let Some((dir, margin)) = separation(x, &reps, &fit, bits) {
                if margin.lo() > &slack {
                    let margin = margin.sub(&CertInterval::point(slack, bits));
                    return Ok(CriticalityVerdict {
                        status: Status::NotCritical,
                        certificate: Certificate::Separating { direction: dir, margin },
                        eta,
                        eps,
                        distance: d.value,
                    });
                }
            }
        }
        let tol = BigFloat::from_f64_exact(eta / 4.0 + eps);
        if fit.1.hi() > &tol {
            return Ok(CriticalityVerdict {
                status: Status::Undecided,
                certificate: Certificate::None,
                eta,
                eps,
                distance: d.value,
            });
        }
        last_fit = Some((fit, eta, tol));
    }
    let ((weights, _), eta, tol) = last_fit.unwrap();
    Ok(CriticalityVerdict {
        status: Status::Critical,
        certificate: Certificate::Convex { weights, residual: CertInterval::point(tol, bits) },
        eta,
        eps,
        distance: d.value,
    })
}

/// Free-function form of [`Engine::distance`].
pub fn distance_to_attractor(ifs: &Ifs, x: &Pt, eps: f64, bits: u32) -> Result<DistanceResult, DistanceError> {
    Engine::new(ifs, bits).distance(x, eps)
}

pub fn near_set(ifs: &Ifs, x: &Pt, eta: f64, eps: f64, bits: u32) -> Result<NearSet, DistanceError> {
    Engine::new(ifs, bits).near_set(x, eta, eps)
}

pub fn criticality(ifs: &Ifs, x: &Pt, eps: f64, bits: u32) -> Result<CriticalityVerdict, DistanceError> {
    Engine::new(ifs, bits).criticality(x, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cantor, unit_segment};
    use crate::precision::rat;

    fn p(x: (i64, i64), y: (i64, i64)) -> Pt {
        geometry::pt_rational(&rat(x.0, x.1), &rat(y.0, y.1), 128)
    }

    #[test]
    fn cantor_gap_distances() {
        let e = Engine::new(&cantor(), 128);
        let d = e.distance(&p((1, 2), (0, 1)), 1e-9).unwrap();
        assert!(d.value.contains_rational(&rat(1, 6)));
        assert!(d.value.width().to_f64() <= 1e-9);
        let d = e.distance(&p((1, 6), (0, 1)), 1e-9).unwrap();
        assert!(d.value.contains_rational(&rat(1, 18)));
        let d = e.distance(&p((0, 1), (0, 1)), 1e-9).unwrap();
        assert!(d.value.contains(&BigFloat::zero()));
    }

    #[test]
    fn near_set_two_clusters() {
        let e = Engine::new(&cantor(), 128);
        let ns = e.near_set(&p((1, 2), (0, 1)), 1e-3, 5e-4).unwrap();
        assert_eq!(ns.clusters.len(), 2);
        let r = ns.representatives();
        assert!((r[0][0].to_f64() - 1.0 / 3.0).abs() < 2e-3);
        assert!((r[1][0].to_f64() - 2.0 / 3.0).abs() < 2e-3);
        // Far away the η-band is wide, so the clusters come in mirror pairs
        // and the innermost pair sits at 1/3 and 2/3.
        let far = e.near_set(&p((1, 2), (10, 1)), 1e-3, 5e-4).unwrap();
        assert_eq!(far.clusters.len() % 2, 0);
        let xs: Vec<f64> = far.representatives().iter().map(|r| r[0].to_f64()).collect();
        assert!(xs.iter().any(|x| (x - 1.0 / 3.0).abs() < 1e-3));
        assert!(xs.iter().any(|x| (x - 2.0 / 3.0).abs() < 1e-3));
        assert!(xs.iter().all(|x| (x - 0.5).abs() < 0.22));
    }

    #[test]
    fn criticality_examples() {
        let e = Engine::new(&cantor(), 128);
        let x = p((1, 2), (0, 1));
        let v = e.criticality(&x, 1e-6).unwrap();
        assert_eq!(v.status, Status::Critical);
        assert!(v.validate(&x));
        if let Certificate::Convex { weights, .. } = &v.certificate {
            assert_eq!(weights.len(), 2);
            for (_, l) in weights {
                assert!((l.to_f64() - 0.5).abs() < 1e-3);
            }
        }
        let y = p((1, 2), (1, 2));
        let v = e.criticality(&y, 1e-6).unwrap();
        assert_eq!(v.status, Status::NotCritical);
        assert!(v.validate(&y));
        let seg = Engine::new(&unit_segment(), 128);
        assert_eq!(seg.criticality(&x, 1e-6).unwrap_err(), DistanceError::OnAttractor);
    }
}
