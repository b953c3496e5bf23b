//! Hull structure of attractors: census across depths, edge directions,
//! a sampled polytope constant and the well-cut predicate for disks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, convex_hull, Ball, Pt, Tri, XPoint};
use crate::ifs::{cloud_at_depth, compose_word, Cloud, Ifs, IfsError, Word};
use crate::precision::{trig, AngleRep, BigFloat, CertInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error("{} hull edges matched no direction", .0.len())]
    NoMatch(Vec<EdgeMatch>),
    #[error("hull census has not stabilized")]
    NotPolytopeRegime,
}

/// Relative tolerance below which a hull vertex is treated as lying on the
/// chord through its neighbors.
const FLAT_TOL: f64 = 1e-12;

fn f(p: &XPoint<BigFloat>) -> [f64; 2] {
    [p[0].to_f64(), p[1].to_f64()]
}

/// Hull vertices of a cloud in counter-clockwise order, with numerically
/// flat vertices removed.
pub fn cloud_hull(cloud: &Cloud) -> Vec<[f64; 2]> {
    let exact = cloud.exact_points();
    let hull = convex_hull(&exact);
    let mut v: Vec<[f64; 2]> = hull.vertices.iter().map(f).collect();
    let scale = v.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = FLAT_TOL * scale;
    let mut changed = v.len() > 2;
    while changed && v.len() > 2 {
        changed = false;
        let n = v.len();
        for i in 0..n {
            let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            if seg_dist(b, a, c) <= tol {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    v
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Edges of a vertex loop; a two-vertex hull has the single edge.
fn edges(v: &[[f64; 2]]) -> Vec<([f64; 2], [f64; 2])> {
    match v.len() {
        0 | 1 => vec![],
        2 => vec![(v[0], v[1])],
        n => (0..n).map(|i| (v[i], v[(i + 1) % n])).collect(),
    }
}

/// Direction of `b - a` reduced to `[0, π)`.
fn direction(a: [f64; 2], b: [f64; 2]) -> f64 {
    let t = (b[1] - a[1]).atan2(b[0] - a[0]).rem_euclid(std::f64::consts::PI);
    if t >= std::f64::consts::PI {
        0.0
    } else {
        t
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusRow {
    pub depth: u32,
    pub vertices: usize,
    /// Edge directions mod π, sorted.
    pub directions: Vec<f64>,
    /// Largest distance from a vertex to the previous depth's vertex set.
    pub displacement: f64,
    #[serde(skip)]
    pub hull: Vec<[f64; 2]>,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HullCensus {
    pub rows: Vec<CensusRow>,
    /// First depth of a run of three depths with equal vertex count and
    /// matching directions.
    pub stabilized_at: Option<u32>,
}

const DIR_TOL: f64 = 1e-6;

fn same_shape(a: &CensusRow, b: &CensusRow) -> bool {
    a.vertices == b.vertices
        && a.directions.iter().zip(&b.directions).all(|(x, y)| {
            let d = (x - y).abs();
            d.min(std::f64::consts::PI - d) <= DIR_TOL
        })
}

pub fn hull_census(ifs: &Ifs, max_depth: u32, bits: u32, cap: u64) -> Result<HullCensus, HullError> {
    assert!(max_depth >= 1, "max_depth must be at least 1");
    let mut rows: Vec<CensusRow> = Vec::new();
    for depth in 1..=max_depth {
        let cloud = cloud_at_depth(ifs, depth, bits, cap)?;
        let hull = cloud_hull(&cloud);
        let mut directions: Vec<f64> = edges(&hull).iter().map(|(a, b)| direction(*a, *b)).collect();
        directions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let displacement = match rows.last() {
            None => 0.0,
            Some(prev) => hull
                .iter()
                .map(|p| prev.hull.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max),
        };
        rows.push(CensusRow { depth, vertices: hull.len(), directions, displacement, hull, slack: cloud.slack.to_f64() });
    }
    let stabilized_at = rows
        .windows(3)
        .find(|w| same_shape(&w[0], &w[1]) && same_shape(&w[1], &w[2]))
        .map(|w| w[0].depth);
    Ok(HullCensus { rows, stabilized_at })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeMatch {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub direction: f64,
    /// Best `k`, and the distance mod π from `k·alpha`.
    pub k: u32,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeReport {
    pub depth: u32,
    pub slack: f64,
    pub matched: Vec<EdgeMatch>,
    /// Edges no longer than the slack, not tested.
    pub short_edges: usize,
}

/// Matches every hull edge longer than the cloud slack to a direction
/// `k·alpha mod π`, `0 <= k <= k_max`.
pub fn edge_directions_match(
    ifs: &Ifs,
    depth: u32,
    alpha: &AngleRep,
    k_max: u32,
    tol: f64,
    bits: u32,
    cap: u64,
) -> Result<EdgeReport, HullError> {
    let cloud = cloud_at_depth(ifs, depth, bits, cap)?;
    let slack = cloud.slack.to_f64();
    let hull = cloud_hull(&cloud);
    let pi = std::f64::consts::PI;
    let targets: Vec<f64> = (0..=k_max)
        .map(|k| {
            let a = AngleRep::mod_2pi(&alpha.mul_int(k as i64));
            a.value(bits).to_f64().rem_euclid(pi)
        })
        .collect();
    let mut matched = Vec::new();
    let mut missed = Vec::new();
    let mut short_edges = 0;
    for (a, b) in edges(&hull) {
        if (b[0] - a[0]).hypot(b[1] - a[1]) <= slack {
            short_edges += 1;
            continue;
        }
        let dir = direction(a, b);
        let (k, residual) = targets
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let d = (dir - t).abs();
                (k as u32, d.min(pi - d))
            })
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        let m = EdgeMatch { from: a, to: b, direction: dir, k, residual };
        if residual <= tol {
            matched.push(m);
        } else {
            missed.push(m);
        }
    }
    if !missed.is_empty() {
        return Err(HullError::NoMatch(missed));
    }
    Ok(EdgeReport { depth, slack, matched, short_edges })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    /// `None` when every sample was skipped.
    pub gamma_hat: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
    pub witness: Option<[f64; 2]>,
}

/// Sampled minimum of `dist(x, ∂co K) / dist(x, K ∩ ∂co K)` over cloud
/// points `x`. Sample `i` draws from its own generator seeded by
/// `(seed, i)`, so the result does not depend on scheduling.
pub fn gamma_estimate(ifs: &Ifs, depth: u32, samples: usize, seed: u64, bits: u32, cap: u64) -> Result<GammaEstimate, HullError> {
    assert!(samples >= 1, "need at least one sample");
    let census = hull_census(ifs, depth.max(3), bits, cap)?;
    if census.stabilized_at.is_none() {
        return Err(HullError::NotPolytopeRegime);
    }
    let cloud = cloud_at_depth(ifs, depth, bits, cap)?;
    let pts = cloud.f64_points();
    let slack = cloud.slack.to_f64();
    let hull = cloud_hull(&cloud);
    let es = edges(&hull);
    let to_boundary = |p: [f64; 2]| es.iter().map(|(a, b)| seg_dist(p, *a, *b)).fold(f64::INFINITY, f64::min);
    let on_boundary: Vec<[f64; 2]> = pts.iter().copied().filter(|p| to_boundary(*p) <= slack).collect();
    let ratios: Vec<Option<(f64, [f64; 2])>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = pts[rng.gen_range(0..pts.len())];
            let num = to_boundary(x);
            if num <= slack {
                return None;
            }
            let den = on_boundary.iter().map(|q| (x[0] - q[0]).hypot(x[1] - q[1])).fold(f64::INFINITY, f64::min);
            Some((num / den, x))
        })
        .collect();
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    let best = ratios.into_iter().flatten().fold(None, |acc: Option<(f64, [f64; 2])>, c| match acc {
        Some(a) if a.0 <= c.0 => Some(a),
        _ => Some(c),
    });
    Ok(GammaEstimate { gamma_hat: best.map(|b| b.0), samples, skipped, witness: best.map(|b| b.1) })
}

/// Does `disk` cut the approximate hull of `K_I` well: it meets the hull
/// boundary along a single edge and its tangent directions at the two
/// crossing points differ by at most `eps`.
pub fn cuts_well_disk(ifs: &Ifs, word: &Word, disk: &Ball, eps: f64, depth: u32, bits: u32, cap: u64) -> Result<Tri, HullError> {
    let m = compose_word(ifs, word, bits)?;
    let cloud = cloud_at_depth(ifs, depth, bits, cap)?;
    let ratio = BigFloat::from_rational(&m.ratio, 64, crate::precision::Round::Up).to_f64();
    let slack = cloud.slack.to_f64() * ratio;
    let mapped: Vec<Pt> = cloud.points.iter().map(|p| m.numeric.apply(p)).collect();
    let exact: Vec<XPoint<BigFloat>> = mapped.iter().map(geometry::mid).collect();
    let hull: Vec<[f64; 2]> = convex_hull(&exact).vertices.iter().map(f).collect();
    let c = geometry::to_f64(&disk.center);
    let r = disk.radius.to_f64();
    let near: Vec<(([f64; 2], [f64; 2]), f64)> = edges(&hull)
        .into_iter()
        .map(|e| (e, seg_dist(c, e.0, e.1)))
        .filter(|(_, d)| *d <= r + slack)
        .collect();
    if near.is_empty() {
        return Ok(Tri::No);
    }
    let clear: Vec<_> = near.iter().filter(|(_, d)| *d < r - slack).collect();
    let vertex_inside = hull.iter().any(|v| (v[0] - c[0]).hypot(v[1] - c[1]) < r - slack);
    if clear.len() > 1 || vertex_inside {
        return Ok(Tri::No);
    }
    if clear.len() != 1 || near.len() != 1 {
        return Ok(Tri::Undecided);
    }
    // Tangents at the two crossings differ by the angle the chord subtends.
    let ((a, b), _) = near[0];
    let pa = geometry::pt_f64(a[0], a[1], bits);
    let pb = geometry::pt_f64(b[0], b[1], bits);
    let ab = geometry::sub(&pb, &pa);
    let h = geometry::cross(&ab, &geometry::sub(&disk.center, &pa)).abs().div(&geometry::norm2(&ab).sqrt_clamped());
    let Ok(h) = h else { return Ok(Tri::Undecided) };
    let cosv = h.div(&disk.radius).map_err(|_| HullError::NotPolytopeRegime);
    let Ok(cosv) = cosv else { return Ok(Tri::Undecided) };
    let angle = trig::acos(&cosv.min(&CertInterval::one(bits)), bits).mul_pow2(1);
    let e = CertInterval::from_f64(eps, bits);
    Ok(if angle.le(&e) {
        Tri::Yes
    } else if e.lt(&angle) {
        Tri::No
    } else {
        Tri::Undecided
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cantor, rotation_pair, sierpinski, DEFAULT_NODE_CAP};
    use crate::precision::{rat, BigFloat};

    #[test]
    fn cantor_hull_is_segment() {
        let c = hull_census(&cantor(), 5, 128, DEFAULT_NODE_CAP).unwrap();
        assert!(c.rows.iter().all(|r| r.vertices == 2));
        assert_eq!(c.stabilized_at, Some(1));
    }

    #[test]
    fn rotation_census() {
        let rational = rotation_pair(rat(1, 5), AngleRep::from_pi(rat(2, 3)));
        let c = hull_census(&rational, 8, 128, DEFAULT_NODE_CAP).unwrap();
        assert!(c.stabilized_at.is_some_and(|d| d <= 6), "{:?}", c.rows.iter().map(|r| r.vertices).collect::<Vec<_>>());
        let irr = rotation_pair(rat(1, 5), AngleRep::from_rational(rat(1, 1)));
        let c = hull_census(&irr, 8, 128, DEFAULT_NODE_CAP).unwrap();
        let v: Vec<usize> = c.rows.iter().map(|r| r.vertices).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    }

    #[test]
    fn edge_directions() {
        let alpha = AngleRep::from_rational(rat(1, 1));
        let irr = rotation_pair(rat(1, 5), alpha.clone());
        let rep = edge_directions_match(&irr, 6, &alpha, 12, 1e-3, 128, DEFAULT_NODE_CAP).unwrap();
        assert!(!rep.matched.is_empty());
        let zero = AngleRep::zero();
        let flat = rotation_pair(rat(1, 5), zero.clone());
        let rep = edge_directions_match(&flat, 4, &zero, 0, 1e-9, 128, DEFAULT_NODE_CAP).unwrap();
        assert!(rep.matched.iter().all(|m| m.k == 0));
    }

    #[test]
    fn gamma_sierpinski_positive() {
        let g = gamma_estimate(&sierpinski(), 5, 200, 7, 64, DEFAULT_NODE_CAP).unwrap();
        assert!(g.gamma_hat.unwrap() > 0.0);
        let again = gamma_estimate(&sierpinski(), 5, 200, 7, 64, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(g.gamma_hat, again.gamma_hat);
    }

    #[test]
    fn disks() {
        let ifs = rotation_pair(rat(1, 5), AngleRep::from_rational(rat(1, 1)));
        let far = Ball::new(geometry::pt_f64(50.0, 50.0, 128), CertInterval::from_i64(1, 128));
        assert_eq!(cuts_well_disk(&ifs, &Word::empty(), &far, 1e-2, 5, 128, DEFAULT_NODE_CAP).unwrap(), Tri::No);
        let big = Ball::new(geometry::pt_f64(0.0, 0.0, 128), CertInterval::point(BigFloat::one(), 128));
        assert_eq!(cuts_well_disk(&ifs, &Word::empty(), &big, 1e-2, 5, 128, DEFAULT_NODE_CAP).unwrap(), Tri::No);

        // A disk of diameter 0.8 dipping slightly across the longest edge,
        // which bridges the two level-one copies.
        let hull = cloud_hull(&cloud_at_depth(&ifs, 7, 128, DEFAULT_NODE_CAP).unwrap());
        let (a, b) = edges(&hull)
            .into_iter()
            .max_by(|x, y| seg_len(x).partial_cmp(&seg_len(y)).unwrap())
            .unwrap();
        let len = seg_len(&(a, b));
        let (nx, ny) = ((b[1] - a[1]) / len, -(b[0] - a[0]) / len);
        let r = 0.4;
        let dip = 1e-4;
        let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let center = geometry::pt_f64(m[0] + nx * (r - dip), m[1] + ny * (r - dip), 128);
        let tangent = Ball::new(center, CertInterval::from_f64(r, 128));
        assert_eq!(cuts_well_disk(&ifs, &Word::empty(), &tangent, 0.1, 7, 128, DEFAULT_NODE_CAP).unwrap(), Tri::Yes);
        assert_eq!(cuts_well_disk(&ifs, &Word::empty(), &tangent, 0.01, 7, 128, DEFAULT_NODE_CAP).unwrap(), Tri::No);
        let crossing = Ball::new(geometry::pt_f64(a[0], a[1], 128), CertInterval::from_f64(len / 4.0, 128));
        assert_eq!(cuts_well_disk(&ifs, &Word::empty(), &crossing, 1e-2, 7, 128, DEFAULT_NODE_CAP).unwrap(), Tri::No);
    }

    fn seg_len(e: &([f64; 2], [f64; 2])) -> f64 {
        (e.1[0] - e.0[0]).hypot(e.1[1] - e.0[1])
    }
}
