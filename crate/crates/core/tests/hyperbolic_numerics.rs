use berkdyn::berkovich::{BerkMap, TypeIIPoint};
use berkdyn::cpoly::CPoly;
use berkdyn::family::parse_family;
use berkdyn::hyperbolic::*;
use berkdyn::puiseux::{q, qi, PuiseuxSeries, C64};
use berkdyn::tree::periodic_ends;

fn map(src: &str) -> BerkMap {
    parse_family(src).unwrap().to_map().unwrap()
}

fn real(t: f64) -> C64 {
    C64::new(t, 0.0)
}

fn ladder(lo: i32, hi: i32) -> Vec<C64> {
    (lo..=hi).map(|k| real(10f64.powi(-k))).collect()
}

#[test]
fn affine_extension_is_an_isometry() {
    let p = HPoint::new(C64::new(0.4, -1.0), 0.3).unwrap();
    let r = HPoint::new(C64::new(-2.0, 0.5), 2.5).unwrap();
    let (a, b) = (C64::new(1.5, -0.7), C64::new(3.0, 1.0));
    let d0 = h3_distance(&p, &r);
    let d1 = h3_distance(&moebius_extend(a, b, &p).unwrap(), &moebius_extend(a, b, &r).unwrap());
    assert!((d0 - d1).abs() < 1e-12);
    assert!(moebius_extend(C64::new(0.0, 0.0), b, &p).is_err());
    let fifth = real(1e-5).powf(0.2);
    let img = moebius_extend(fifth, C64::new(0.0, 0.0), &HPoint::origin()).unwrap();
    assert!((img.h - 0.1).abs() < 1e-15);
}

#[test]
fn map_with_equal_numerator_and_denominator_degree() {
    let f = ComplexMap::new(
        CPoly::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0)]),
        CPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
    )
    .unwrap();
    let y = f.map(&Proj::infinity());
    assert!((y.value().unwrap() - C64::new(2.0, 0.0)).norm() < 1e-14);
    assert!(f.map(&Proj::finite(C64::new(0.0, 0.0))).value().is_none());
}

#[test]
fn residuals_on_the_ladder() {
    let n = DEFAULT_SAMPLES;
    let g = TypeIIPoint::gauss();
    assert!(equivalence_residual(&map("z^2"), &g, real(1e-6), n).unwrap() < 0.01);
    assert!(equivalence_residual(&map("z^2 + 1/t"), &g, real(1e-6), n).unwrap() < 0.05);
    let f = map("z^2 + t/z^3");
    let x = TypeIIPoint::new(&PuiseuxSeries::zero(), q(1, 5));
    let r: Vec<f64> = [1e-4, 1e-6, 1e-8].iter().map(|&t| equivalence_residual(&f, &x, real(t), n).unwrap()).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn quadrature_doubling_is_stable() {
    let f = ComplexMap::from_family(&map("z^2 + t/z^3"), real(1e-6)).unwrap();
    let x = HPoint::new(C64::new(0.0, 0.0), 1e-6f64.powf(0.2)).unwrap();
    let a = barycentric_extension_eval(&f, &x, DEFAULT_SAMPLES).unwrap();
    let b = barycentric_extension_eval(&f, &x, 2 * DEFAULT_SAMPLES).unwrap();
    assert!(h3_distance(&a, &b) < 1e-4);
}

#[test]
fn escaping_fixed_points_have_slope_one_half() {
    let f = map("z^2 + 1/t");
    let ends = periodic_ends(&f, 1, qi(1)).unwrap();
    let r = numeric_multiplier_spectrum(&f, 1, &ladder(3, 8), &ends).unwrap();
    assert_eq!(r.unmatched, 0);
    assert_eq!(r.fits.len(), 2);
    for fit in &r.fits {
        assert!((fit.slope - 0.5).abs() < 0.025);
        assert_eq!(fit.predicted, Some(0.5));
    }
    assert!(r.root_counts.iter().all(|c| c.expected == c.found && c.found == 2));
}

#[test]
fn mcmullen_multipliers_stay_bounded() {
    let f = map("z^2 + t/z^3");
    let ends = periodic_ends(&f, 1, qi(1)).unwrap();
    let r = numeric_multiplier_spectrum(&f, 1, &ladder(3, 8), &ends).unwrap();
    assert_eq!(r.fits.len(), 5);
    assert!(r.fits.iter().all(|fit| fit.slope.abs() < 0.05), "{:?}", r.fits);
}

#[test]
fn constant_family_has_flat_spectrum() {
    let f = map("z^2");
    let ends = periodic_ends(&f, 1, qi(1)).unwrap();
    let r = numeric_multiplier_spectrum(&f, 1, &ladder(3, 6), &ends).unwrap();
    assert!(r.fits.iter().all(|fit| fit.slope.abs() < 1e-12));
}

#[test]
fn preimage_radius_examples() {
    let r = numeric_preimage_radius(&map("z^2 + t/z^3"), real(1e-6), DEFAULT_SAMPLES).unwrap();
    assert!(r.complete);
    assert!((r.normalized - 1.0 / 3.0).abs() < 0.02, "{}", r.normalized);
    let r = numeric_preimage_radius(&map("z^3"), real(1e-6), DEFAULT_SAMPLES).unwrap();
    assert!(r.max_distance < 1e-3);
}

#[test]
fn lipschitz_probe_examples() {
    let m = ComplexMap::affine(C64::new(2.0, 1.0), C64::new(-1.0, 0.0)).unwrap();
    let pts = probe_points(&[HPoint::origin()], 6, 1.0, 3);
    let r = lipschitz_probe(&m, &pts, 4000).unwrap();
    assert!((r.max - 1.0).abs() < 1e-3, "{}", r.max);
    let sq = ComplexMap::new(
        CPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
        CPoly::constant(C64::new(1.0, 0.0)),
    )
    .unwrap();
    let r = lipschitz_probe(&sq, &probe_points(&[HPoint::origin()], 20, 2.0, 5), 4000).unwrap();
    assert!(r.max.is_finite() && r.max <= 20.0);
}
