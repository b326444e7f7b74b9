use berkdyn::berkovich::{BerkMap, TypeIPoint};
use berkdyn::family::parse_family;
use berkdyn::puiseux::{q, qi, Q};
use berkdyn::tree::*;

fn map(src: &str) -> BerkMap {
    parse_family(src).unwrap().to_map().unwrap()
}

fn fixed_summary(r: &AnalysisReport) -> Vec<(Q, usize)> {
    let mut v: Vec<(Q, usize)> = r
        .fixed_points
        .iter()
        .filter(|p| p.degree >= 2)
        .map(|p| {
            assert!(p.point.is_on_axis());
            (p.point.radius(), p.degree)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn mcmullen_report() {
    let f = map("z^2 + t/z^3");
    let r = analyze(&f, &AnalysisOptions::default()).unwrap();
    assert_eq!(fixed_summary(&r), vec![(qi(0), 2), (q(1, 4), 3)]);

    let m = r.interval_model.as_ref().unwrap();
    assert_eq!((m.a, m.b), (qi(0), q(1, 3)));
    let pieces: Vec<_> = m.pieces.iter().map(|p| (p.start, p.end, p.slope)).collect();
    assert_eq!(pieces, vec![(qi(0), q(1, 6), 2), (q(2, 9), q(1, 3), -3)]);
    assert_eq!(m.reciprocal_sum(), q(5, 6));
    assert!(matches!(r.verdict, Some(Verdict::Nested { reciprocal_sum }) if reciprocal_sum == q(5, 6)));

    assert_eq!(r.q_max_used, 3);
    for e in &r.periodic_ends {
        assert!(!e.unresolved, "unresolved cycle of period {}", e.period);
        if e.cycle.iter().all(|c| matches!(c, TypeIPoint::Finite(_))) {
            assert_eq!(e.translation_length, Some(qi(0)));
        }
    }

    let n = r.normalization_radius.as_ref().unwrap();
    assert_eq!(n.value, q(1, 11));
    assert_eq!(n.basepoint.radius(), q(2, 11));
    assert!(n.fibers_complete);
    assert!(r.checks.iter().all(|c| c.passed));
}

#[test]
fn escaping_family_report() {
    let f = map("z^2 + 1/t");
    let r = analyze(&f, &AnalysisOptions::default()).unwrap();
    assert!(r.fixed_points.is_empty());
    assert!(r.interval_model.is_none());
    let fixed: Vec<_> = r
        .periodic_ends
        .iter()
        .filter(|e| e.period == 1 && e.classification == EndClass::Repelling)
        .collect();
    assert_eq!(fixed.len(), 2);
    assert!(fixed.iter().all(|e| e.translation_length == Some(q(1, 2))));
    match r.verdict {
        Some(Verdict::UnboundedSpectrum { witness_length, witness_period }) => {
            assert_eq!((witness_length, witness_period), (q(1, 2), 1));
        }
        ref other => panic!("unexpected verdict {other:?}"),
    }
    assert_eq!(r.normalization_radius.as_ref().unwrap().value, q(1, 2));
}

#[test]
fn degree_twelve_model() {
    let f = map("z^2/(1-z^2) + t/z^10");
    let sk = build_skeleton(&f, qi(4)).unwrap();
    let (fixed, _) = fixed_points_with_degree(&f, &sk).unwrap();
    let mut degrees: Vec<_> =
        fixed.iter().filter(|p| p.degree >= 2).map(|p| (p.point.radius(), p.degree)).collect();
    degrees.sort();
    assert_eq!(degrees, vec![(qi(0), 2), (q(1, 11), 10)]);

    let ends = periodic_ends(&f, max_period(12), qi(1)).unwrap();
    assert!(ends.iter().all(|e| !e.unresolved));
    assert!(ends.iter().all(|e| e.classification != EndClass::Repelling));

    let m = extract_interval_model(&f, &sk, qi(0), 6, &ends).unwrap();
    let mut d = m.degrees();
    d.sort();
    assert_eq!(d, vec![2, 10]);
    assert_eq!(m.reciprocal_sum(), q(3, 5));
    assert!(matches!(nestedness_verdict(Some(&m), &ends).unwrap(), Verdict::Nested { .. }));
}

#[test]
fn square_map_is_trivial() {
    let f = map("z^2");
    let r = analyze(&f, &AnalysisOptions::default()).unwrap();
    assert_eq!(r.normalization_radius.as_ref().unwrap().value, qi(0));
    assert!(r.periodic_ends.iter().all(|e| e.translation_length.is_none_or(|l| l == qi(0))));
}

#[test]
fn iterate_cap_clamps_period() {
    let f = map("z^2/(1-z^2) + t/z^10");
    assert_eq!(max_period(12), 2);
    assert!(periodic_ends(&f, 3, qi(1)).is_err());
}
