use critval_core::construction::{
    build_kalpha, certificate_check, critical_family, m_value, refine, series, AlphaBox, Branches, CertificateStatus,
    KAlphaConfig, RefinementState, Verdict,
};
use critval_core::ifs::{cloud_at_depth, Word, DEFAULT_NODE_CAP};
use critval_core::precision::{rat, AngleRep};

fn two_steps() -> (KAlphaConfig, RefinementState) {
    let cfg = KAlphaConfig::default();
    let s1 = refine(&RefinementState::fresh(&cfg), &cfg, 512).unwrap();
    let s2 = refine(&s1, &cfg, 512).unwrap();
    (cfg, s2)
}

#[test]
fn second_step_invariants() {
    let (_, s) = two_steps();
    let k = s.k_seq();
    assert_eq!(k, vec![2, 628_318_532]);
    assert!(k[1] > 2 * k[0] + 1);
    assert!(s.steps[1].interval.inside(&s.steps[0].interval, 1024) == Some(true));
    assert!(s.all_hold(), "{:#?}", s.steps[1].checks);
    for p in RefinementState::prefixes(2) {
        let w = s.phi(&p).unwrap();
        assert_eq!(w.len(), k[1] + 1);
        assert!(s.phi(&p.prefix(1)).unwrap().is_prefix_of(w));
    }
    // Φ(+1, -1) = (2, -1, +1, then -1 while sin > 0, +1 while sin < 0, -1).
    let half = (k[1] - 2) / 2;
    let want = Word::from_runs(&[(2, 1), (-1, 1), (1, 1), (-1, half - 1), (1, half), (-1, 1)]);
    assert_eq!(s.phi(&Word::from_symbols(&[1, -1])), Some(&want));
}

#[test]
fn family_and_certificate() {
    let (cfg, s) = two_steps();
    let fam = critical_family(&s, 2, &cfg, 512).unwrap();
    assert_eq!(fam.m_values.len(), 4);
    assert_eq!(fam.separations.len(), 6);
    assert!(fam.separations.iter().all(|p| p.separation.is_positive()));
    assert!(fam.separations.iter().all(|p| p.implied == Verdict::Holds));
    let one = critical_family(&s, 1, &cfg, 512).unwrap();
    assert_eq!((one.m_values.len(), one.separations.len()), (2, 1));
    let k2 = s.k_seq()[1];
    let c = certificate_check(&s, &Word::single(-1), k2 + 1, &cfg, 512).unwrap();
    assert_eq!(c.status, CertificateStatus::TouchingCertified, "{:?}", c.checks);
}

#[test]
fn monotone_along_chains() {
    let (cfg, s) = two_steps();
    let bx = s.interval();
    for p in RefinementState::prefixes(2) {
        let a = s.phi(&p.prefix(1)).unwrap();
        let b = s.phi(&p).unwrap();
        let d = series::m_diff(&cfg.q, &bx, b, a, 512).unwrap();
        let cap = series::qpow(&cfg.q, s.k_seq()[1] + 1, 512).scale(&rat(11, 1));
        assert!(!d.lo().is_negative() && d.le(&cap));
    }
}

#[test]
fn point_reflection_of_lower_copy() {
    // ϕ_{-i}(z) = -ϕ_i(-z), so K_{-I} = -K_I.
    let cfg = KAlphaConfig::new(rat(1, 10), AngleRep::from_rational(rat(1, 3))).unwrap();
    let ifs = build_kalpha(&cfg);
    let cloud = cloud_at_depth(&ifs, 5, 64, DEFAULT_NODE_CAP).unwrap();
    let pts = cloud.f64_points();
    let words = &cloud.words;
    // Cloud points are anchor images, so mirrored words agree up to the slack.
    let tol = 2.0 * cloud.slack.to_f64();
    let find = |w: &[i32]| -> Vec<[f64; 2]> {
        words.iter().zip(&pts).filter(|(x, _)| x.symbols().starts_with(w)).map(|(_, p)| *p).collect()
    };
    let up = find(&[2, 1]);
    let down = find(&[-2, -1]);
    assert!(tol < 1e-4);
    assert_eq!(up.len(), down.len());
    for p in &up {
        assert!(down.iter().any(|d| (d[0] + p[0]).abs() < tol && (d[1] + p[1]).abs() < tol));
    }
}

#[test]
fn axis_mirror_only_without_rotation() {
    let cfg = KAlphaConfig::default();
    let up = m_value(&cfg, &Word::from_symbols(&[2, 1]), Branches::Full, 128).unwrap();
    let ifs = build_kalpha(&cfg);
    let cloud = cloud_at_depth(&ifs, 4, 64, DEFAULT_NODE_CAP).unwrap();
    let top = cloud
        .words
        .iter()
        .zip(cloud.f64_points())
        .filter(|(w, _)| w.symbols().starts_with(&[-2, 1]))
        .map(|(_, p)| p[1])
        .fold(f64::MIN, f64::max);
    assert!((top + up.value.to_f64()).abs() < 1e-9);
    let tilted = KAlphaConfig::new(rat(1, 1000), AngleRep::from_rational(rat(1, 2))).unwrap();
    let box_ = AlphaBox::point(tilted.alpha.clone());
    let m = series::m_closed(&tilted.q, &box_, &Word::from_symbols(&[2, 1, 1]), 128).unwrap();
    assert!(m.is_positive());
}
