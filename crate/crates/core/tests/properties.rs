use critval_core::construction::{build_kalpha, series, AlphaBox, KAlphaConfig};
use critval_core::distance::Engine;
use critval_core::geometry::{convex_hull, dist, orient, point_in_hull, pt_rational, XPoint};
use critval_core::ifs::{cantor, compose_word, Word};
use critval_core::precision::{format_rational, parse_rational, rat, AngleRep, CertInterval};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

const BITS: u32 = 128;

fn small_rat() -> impl Strategy<Value = BigRational> {
    (-10_000i64..10_000, 1i64..1000).prop_map(|(n, d)| rat(n, d))
}

fn symbols(max: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(prop::sample::select(vec![-2, -1, 1, 2]), 0..max)
}

fn pm_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(prop::sample::select(vec![-1, 1]), 0..max).prop_map(|tail| {
        let mut s = vec![2];
        s.extend(tail);
        Word::from_symbols(&s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interval_ops_enclose_exact(a in small_rat(), b in small_rat()) {
        let (ia, ib) = (CertInterval::from_rational(&a, BITS), CertInterval::from_rational(&b, BITS));
        prop_assert!(ia.add(&ib).contains_rational(&(&a + &b)));
        prop_assert!(ia.sub(&ib).contains_rational(&(&a - &b)));
        prop_assert!(ia.mul(&ib).contains_rational(&(&a * &b)));
        if !b.is_zero() {
            prop_assert!(ia.div(&ib).unwrap().contains_rational(&(&a / &b)));
        }
        let s = ia.abs().sqrt().unwrap();
        prop_assert!(s.sqr().contains_rational(&a.abs()));
    }

    #[test]
    fn rational_text_round_trip(a in small_rat()) {
        prop_assert_eq!(parse_rational(&format_rational(&a)).unwrap(), a);
    }

    #[test]
    fn word_round_trips(s in symbols(24), t in symbols(8)) {
        let w = Word::from_symbols(&s);
        prop_assert_eq!(w.symbols(), s.clone());
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w.clone());
        prop_assert_eq!(Word::from_runs(w.runs()), w.clone());
        let n = s.len() as u64 / 2;
        prop_assert_eq!(w.prefix(n).concat(&w.suffix_from(n)), w.clone());
        let v = Word::from_symbols(&t);
        prop_assert_eq!(w.cmp(&v), s.cmp(&t));
        prop_assert_eq!(w.concat(&v).len(), w.len() + v.len());
    }

    #[test]
    fn angle_mod_2pi_canonical(c in small_rat(), r in (-100i64..100, 1i64..100)) {
        let a = AngleRep::new(c, AngleRep::from_rational(rat(r.0, r.1)).remainder);
        let m = a.mod_2pi();
        prop_assert_eq!(m.mod_2pi(), m.clone());
        prop_assert!(!m.pi_coeff.is_negative() && m.pi_coeff < rat(2, 1));
        let k = (&a.pi_coeff - &m.pi_coeff) / rat(2, 1);
        prop_assert!(k.is_integer());
        prop_assert_eq!(m.remainder, a.remainder);
    }

    #[test]
    fn m_diff_antisymmetric(a in pm_word(10), b in pm_word(10), al in 1i64..3000) {
        let q = rat(1, 10);
        let bx = AlphaBox::point(AngleRep::from_rational(rat(al, 1000)));
        let ab = series::m_diff(&q, &bx, &a, &b, 256).unwrap();
        let ba = series::m_diff(&q, &bx, &b, &a, 256).unwrap();
        prop_assert!(ab.overlaps(&ba.neg()));
        let direct = series::m_closed(&q, &bx, &a, 256).unwrap().sub(&series::m_closed(&q, &bx, &b, 256).unwrap());
        prop_assert!(ab.overlaps(&direct));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lower_copies_are_point_reflections(s in symbols(6), al in 0i64..2000) {
        // phi_{-w}(z) = -phi_w(-z): same linear part, opposite translation.
        let cfg = KAlphaConfig::new(rat(1, 10), AngleRep::from_rational(rat(al, 1000))).unwrap();
        let ifs = build_kalpha(&cfg);
        let w = Word::from_symbols(&s);
        let neg = Word::from_symbols(&s.iter().map(|x| -x).collect::<Vec<_>>());
        let f = compose_word(&ifs, &w, BITS).unwrap();
        let g = compose_word(&ifs, &neg, BITS).unwrap();
        prop_assert_eq!(&f.ratio, &g.ratio);
        prop_assert_eq!(f.rotation.mod_2pi(), g.rotation.mod_2pi());
        for i in 0..2 {
            prop_assert!(f.translation[i].overlaps(&g.translation[i].neg()));
        }
    }

    #[test]
    fn distance_is_one_lipschitz(x in (-2000i64..3000, -1000i64..1000), y in (-2000i64..3000, -1000i64..1000)) {
        let engine = Engine::new(&cantor(), BITS);
        let px = pt_rational(&rat(x.0, 1000), &rat(x.1, 1000), BITS);
        let py = pt_rational(&rat(y.0, 1000), &rat(y.1, 1000), BITS);
        let dx = engine.distance(&px, 1e-6).unwrap().value;
        let dy = engine.distance(&py, 1e-6).unwrap().value;
        let gap = dist(&px, &py);
        prop_assert!(dx.sub(&dy).abs().lo() <= gap.hi());
        // 0 lies in the Cantor set.
        let origin = pt_rational(&BigRational::zero(), &BigRational::zero(), BITS);
        prop_assert!(dx.lo() <= dist(&px, &origin).hi());
    }

    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec((-50i64..50, -50i64..50), 1..30)) {
        let pts: Vec<XPoint<BigRational>> = pts.iter().map(|&(a, b)| [rat(a, 7), rat(b, 7)]).collect();
        let hull = convex_hull(&pts);
        for v in &hull.vertices {
            prop_assert!(pts.contains(v));
        }
        if hull.len() >= 3 {
            let n = hull.len();
            for i in 0..n {
                let o = orient(&hull.vertices[i], &hull.vertices[(i + 1) % n], &hull.vertices[(i + 2) % n]);
                prop_assert!(o.is_positive());
            }
        }
        for p in &pts {
            prop_assert!(point_in_hull(p, &hull, &BigRational::zero(), BITS).is_inside());
        }
    }
}
