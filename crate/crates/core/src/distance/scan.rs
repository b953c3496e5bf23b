use serde::Serialize;

use super::{DistanceError, Engine, Status};
use crate::geometry::{self, Pt};
use crate::precision::{rat, BigFloat, CertInterval, Round};

#[derive(Clone, Debug)]
pub struct ScanEntry {
    /// Parameter along the segment, in `[0, 1]`.
    pub t: f64,
    pub point: Pt,
    pub value: CertInterval,
    pub status: Status,
}

fn along(a: &Pt, b: &Pt, t: f64) -> Pt {
    along_exact(a, b, &CertInterval::from_f64(t, a[0].bits()))
}

fn along_exact(a: &Pt, b: &Pt, t: &CertInterval) -> Pt {
    geometry::add(a, &geometry::scale(&geometry::sub(b, a), t))
}

/// Target width for refined critical values.
const VALUE_WIDTH: f64 = 5e-10;

/// Samples `steps` equally spaced points of segment `[a, b]` (both ends
/// included), classifies each, and refines every local maximum of the
/// distance along the segment by golden-section search. Returns the
/// CRITICAL and UNDECIDED entries ordered by `t`.
pub fn critical_scan(engine: &Engine, a: &Pt, b: &Pt, steps: usize, eps: f64) -> Result<Vec<ScanEntry>, DistanceError> {
    assert!(steps >= 2, "need at least two samples");
    let len = geometry::dist(a, b).to_f64();
    let ts: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();
    let bits = engine.bits();
    let xs: Vec<Pt> = (0..steps)
        .map(|i| along_exact(a, b, &CertInterval::from_rational(&rat(i as i64, (steps - 1) as i64), bits)))
        .collect();
    let mut f = Vec::with_capacity(steps);
    for x in &xs {
        f.push(engine.distance(x, eps)?.value);
    }
    // Samples within this distance of K are below the scan resolution.
    let floor = BigFloat::from_f64_exact(4.0 * eps);
    let mut out = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        if f[i].hi() <= &floor {
            continue;
        }
        let x = xs[i].clone();
        match engine.criticality(&x, eps) {
            Ok(v) if v.status != Status::NotCritical => out.push(ScanEntry { t, point: x, value: f[i].clone(), status: v.status }),
            Ok(_) | Err(DistanceError::OnAttractor) => {}
            Err(e) => return Err(e),
        }
    }
    let fm: Vec<f64> = f.iter().map(|v| v.to_f64()).collect();
    let tol = 4.0 * eps;
    let mut i = 0;
    while i < steps {
        let mut j = i;
        while j + 1 < steps && (fm[j + 1] - fm[i]).abs() <= tol {
            j += 1;
        }
        let left_ok = i == 0 || fm[i - 1] < fm[i] - tol;
        let right_ok = j + 1 == steps || fm[j + 1] < fm[j] - tol;
        if left_ok && right_ok && fm[i] > tol && i > 0 && j + 1 < steps {
            let (lo, hi) = (ts[i - 1], ts[j + 1]);
            let e = refine_max(engine, a, b, lo, hi, len)?;
            match engine.criticality(&e.point, eps) {
                Ok(v) if v.status != Status::NotCritical => out.push(ScanEntry { status: v.status, ..e }),
                Ok(_) | Err(DistanceError::OnAttractor) => {}
                Err(err) => return Err(err),
            }
        }
        i = j + 1;
    }
    out.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap());
    Ok(out)
}

/// Golden-section search for the maximum of the distance on `[lo, hi]`,
/// assuming it is unimodal there. The value interval uses the 1-Lipschitz
/// bound on the final bracket.
fn refine_max(engine: &Engine, a: &Pt, b: &Pt, mut lo: f64, mut hi: f64, len: f64) -> Result<ScanEntry, DistanceError> {
    let fine = VALUE_WIDTH / 8.0;
    let eval = |t: f64| engine.distance(&along(a, b, t), fine).map(|d| d.value);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while (hi - lo) * len > VALUE_WIDTH / 2.0 && hi - lo > 4.0 * f64::EPSILON {
        if f1.to_f64() < f2.to_f64() {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1)?;
        }
    }
    let (flo, fhi) = (eval(lo)?, eval(hi)?);
    let bits = engine.bits();
    let reach = BigFloat::from_f64_exact(len).mul(&BigFloat::from_f64_exact(hi - lo), 64, Round::Up);
    let upper = flo
        .hi()
        .add(fhi.hi(), bits, Round::Up)
        .add(&reach, bits, Round::Up)
        .mul_pow2(-1);
    let t = (lo + hi) / 2.0;
    let mid = eval(t)?;
    let lower = mid.lo().max_ref(f1.lo()).max_ref(f2.lo()).clone();
    let value = CertInterval::new(lower.clone().min_ref(&upper).clone(), upper, bits);
    Ok(ScanEntry { t, point: along(a, b, t), value, status: Status::Undecided })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Isolation {
    /// No value lies in `(r - gap, r)`.
    IsolatedBelow { gap: f64 },
    /// A strictly increasing chain of distinct values reaches within
    /// `resolution` of `r`.
    Violation { chain: usize },
    Undecided,
}

/// Decides whether `r` is isolated from below among `values` at the given
/// resolution. Values overlapping `r` with width at most `resolution` are
/// taken to be `r` itself.
pub fn isolation_check(values: &[CertInterval], r: &CertInterval, resolution: f64) -> Isolation {
    let res = BigFloat::from_f64_exact(resolution);
    let mut below: Vec<&CertInterval> = Vec::new();
    for v in values {
        if v.hi() < r.lo() {
            below.push(v);
        } else if v.overlaps(r) {
            if v.width() > res || v.lo() < &r.lo().sub(&res, 64, Round::Down) {
                return Isolation::Undecided;
            }
        }
    }
    if below.is_empty() {
        return Isolation::Undecided;
    }
    below.sort_by(|x, y| x.lo().cmp(y.lo()));
    let top = below.last().unwrap();
    let gap = r.lo().sub(top.hi(), 64, Round::Down);
    if gap > res {
        return Isolation::IsolatedBelow { gap: gap.to_f64() };
    }
    // Longest chain of certifiably increasing values ending at `top`.
    let mut chain = 1;
    let mut cur = *top;
    for v in below.iter().rev().skip(1) {
        if v.hi() < cur.lo() {
            chain += 1;
            cur = v;
        }
    }
    if chain >= 3 {
        Isolation::Violation { chain }
    } else {
        Isolation::Undecided
    }
}
