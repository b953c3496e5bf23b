use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{compose_word, Ifs, IfsError, NumericMap, Word};
use crate::geometry::{self, convex_hull, Ball, Pt, XPoint};
use crate::precision::{BigFloat, CertInterval, Round};

/// Default cap on the number of cylinders any expansion may create.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// A ball with rational data known to contain the attractor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootBall {
    pub center: [BigRational; 2],
    pub radius: BigRational,
}

fn sqrt_up(x: &BigRational) -> BigRational {
    if x.is_zero() {
        return BigRational::zero();
    }
    BigFloat::from_rational(x, 96, Round::Up).sqrt(64, Round::Up).to_rational()
}

impl RootBall {
    /// Centered at the origin with radius `max|v_i| / (1 - max r_i)`.
    pub fn standard(ifs: &Ifs) -> Self {
        let vmax = ifs
            .maps()
            .iter()
            .map(|m| {
                let [x, y] = &m.translation;
                if y.is_zero() {
                    x.abs()
                } else if x.is_zero() {
                    y.abs()
                } else {
                    sqrt_up(&(x * x + y * y))
                }
            })
            .max()
            .unwrap();
        let radius = vmax / (BigRational::one() - ifs.max_ratio());
        RootBall { center: [BigRational::zero(), BigRational::zero()], radius }
    }

    pub fn to_ball(&self, bits: u32) -> Ball {
        Ball::new(
            geometry::pt_rational(&self.center[0], &self.center[1], bits),
            CertInterval::from_rational(&self.radius, bits),
        )
    }
}

/// A ball containing the cylinder `K_I = ϕ_I(K)`.
#[derive(Clone, Debug)]
pub struct CylinderBall {
    pub word: Word,
    pub center: Pt,
    pub radius: CertInterval,
}

/// Image of `root` under `ϕ_I`.
pub fn cylinder_ball(ifs: &Ifs, word: &Word, root: &RootBall, bits: u32) -> Result<CylinderBall, IfsError> {
    let m = compose_word(ifs, word, bits)?;
    let c = geometry::pt_rational(&root.center[0], &root.center[1], bits);
    let radius = CertInterval::from_rational(&(&m.ratio * &root.radius), bits);
    Ok(CylinderBall { word: word.clone(), center: m.numeric.apply(&c), radius })
}

fn check_budget(k: usize, depth: u32, cap: u64) -> Result<(), IfsError> {
    let needed = (k as u128).checked_pow(depth).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(IfsError::BudgetExceeded { needed, cap });
    }
    Ok(())
}

/// All words of length `depth` with their composed maps, in `≺` order.
pub fn expand_level(ifs: &Ifs, depth: u32, bits: u32, cap: u64) -> Result<Vec<(Word, NumericMap)>, IfsError> {
    check_budget(ifs.len(), depth, cap)?;
    let maps = ifs.numeric(bits);
    let order = ifs.label_order();
    let mut level = vec![(Word::empty(), NumericMap::identity(bits))];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * order.len());
        for (w, m) in &level {
            for &i in &order {
                next.push((w.with(ifs.labels()[i]), m.compose(&maps[i])));
            }
        }
        level = next;
    }
    Ok(level)
}

/// A finite sample of the attractor: one point of each depth-`depth`
/// cylinder. Every point lies in `K`, and `K` is within `slack` of the sample.
#[derive(Clone, Debug)]
pub struct Cloud {
    pub depth: u32,
    pub words: Vec<Word>,
    pub points: Vec<Pt>,
    pub slack: BigFloat,
}

impl Cloud {
    /// Exact representatives (interval midpoints).
    pub fn exact_points(&self) -> Vec<XPoint<BigFloat>> {
        self.points.iter().map(geometry::mid).collect()
    }

    pub fn f64_points(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(geometry::to_f64).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Smallest depth at which every cylinder ball has diameter at most `eps`.
pub fn cloud_depth(ifs: &Ifs, eps: &BigRational, root: &RootBall) -> u32 {
    let r = ifs.max_ratio();
    let mut diam = &root.radius * BigInt::from(2);
    let mut d = 0;
    while &diam > eps {
        diam *= &r;
        d += 1;
    }
    d
}

/// Sample of `K` at the first depth where cylinder diameters are `<= eps`.
pub fn attractor_cloud(ifs: &Ifs, eps: &BigRational, bits: u32, cap: u64) -> Result<Cloud, IfsError> {
    assert!(eps.is_positive(), "eps must be positive");
    let root = RootBall::standard(ifs);
    let depth = cloud_depth(ifs, eps, &root);
    cloud_at_depth(ifs, depth, bits, cap)
}

pub fn cloud_at_depth(ifs: &Ifs, depth: u32, bits: u32, cap: u64) -> Result<Cloud, IfsError> {
    let root = RootBall::standard(ifs);
    let anchor = ifs.anchor(bits);
    let level = expand_level(ifs, depth, bits, cap)?;
    let mut words = Vec::with_capacity(level.len());
    let mut points = Vec::with_capacity(level.len());
    let mut rad = BigFloat::zero();
    for (w, m) in level {
        let p = m.apply(&anchor);
        rad = rad.max_ref(&geometry::rad(&p)).clone();
        words.push(w);
        points.push(p);
    }
    let diam = &root.radius * BigInt::from(2) * num_traits::pow(ifs.max_ratio(), depth as usize);
    let slack = BigFloat::from_rational(&diam, 64, Round::Up).add(&rad.mul_pow2(1), 64, Round::Up);
    Ok(Cloud { depth, words, points, slack })
}

/// `Σ(δ)`: words with `r_I · diam ≤ δ < r_{I|_{|I|-1}} · diam`, in `≺` order.
/// `diam` is the diameter (or an upper bound for it) used for the scale test.
pub fn sigma_delta(ifs: &Ifs, delta: &BigRational, diam: &BigRational) -> Vec<Word> {
    assert!(delta.is_positive(), "delta must be positive");
    let order = ifs.label_order();
    let mut out = Vec::new();
    let mut stack = vec![(Word::empty(), BigRational::one())];
    while let Some((w, r)) = stack.pop() {
        if &(&r * diam) <= delta && !w.is_empty() {
            out.push(w);
            continue;
        }
        for &i in order.iter().rev() {
            stack.push((w.with(ifs.labels()[i]), &r * &ifs.maps()[i].ratio));
        }
    }
    out
}

/// Enclosure of `diam K` with width at most about `eps`.
pub fn diam_certified(ifs: &Ifs, eps: &BigRational, bits: u32, cap: u64) -> Result<CertInterval, IfsError> {
    let cloud = attractor_cloud(ifs, &(eps / BigInt::from(4)), bits, cap)?;
    let exact = cloud.exact_points();
    let hull = convex_hull(&exact);
    let idx: Vec<usize> = hull.vertices.iter().map(|v| exact.iter().position(|p| p == v).unwrap()).collect();
    let mut lo = BigFloat::zero();
    let mut hi = BigFloat::zero();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d = geometry::dist(&cloud.points[i], &cloud.points[j]);
            lo = lo.max_ref(d.lo()).clone();
            hi = hi.max_ref(d.hi()).clone();
        }
    }
    // Pairs off the midpoint hull can only exceed `hi` by rounding radii.
    let pad = cloud.slack.mul_pow2(1);
    let hi = hi.add(&pad, bits, Round::Up);
    Ok(CertInterval::new(lo, hi, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cantor, unit_segment};
    use crate::precision::rat;

    #[test]
    fn cantor_cloud_depth_five() {
        let c = attractor_cloud(&cantor(), &rat(1, 100), 128, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(c.depth, 5);
        assert_eq!(c.len(), 32);
        assert!(c.slack.to_f64() <= 0.01);
    }

    #[test]
    fn coarse_eps_gives_one_point() {
        let c = attractor_cloud(&cantor(), &rat(5, 1), 64, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn cylinder_ball_examples() {
        let root = RootBall { center: [rat(1, 2), rat(0, 1)], radius: rat(1, 2) };
        let b = cylinder_ball(&cantor(), &Word::single(1), &root, 64).unwrap();
        assert!(b.center[0].contains_rational(&rat(1, 6)));
        assert!(b.radius.contains_rational(&rat(1, 6)));
        let e = cylinder_ball(&cantor(), &Word::empty(), &root, 64).unwrap();
        assert!(e.radius.contains_rational(&rat(1, 2)));
    }

    #[test]
    fn sigma_delta_examples() {
        let one = rat(1, 1);
        let s = sigma_delta(&cantor(), &rat(1, 3), &one);
        assert_eq!(s, vec![Word::single(1), Word::single(2)]);
        let s = sigma_delta(&cantor(), &rat(1, 9), &one);
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|w| w.len() == 2));
        let s = sigma_delta(&cantor(), &rat(99, 100), &one);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn diameters() {
        let d = diam_certified(&cantor(), &rat(1, 1000), 128, DEFAULT_NODE_CAP).unwrap();
        assert!(d.contains(&BigFloat::one()));
        assert!(d.width().to_f64() <= 1e-3);
        let d = diam_certified(&unit_segment(), &rat(1, 1000), 128, DEFAULT_NODE_CAP).unwrap();
        assert!(d.contains(&BigFloat::one()));
    }

    #[test]
    fn budget_is_enforced() {
        let e = expand_level(&cantor(), 30, 64, 1000).unwrap_err();
        assert!(matches!(e, IfsError::BudgetExceeded { .. }));
    }
}
