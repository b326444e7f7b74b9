//! Randomized law checks shared by the property test target and the
//! acceptance report. Every suite runs `CASES` accepted cases from a fixed seed.

use berkdyn::berkovich::*;
use berkdyn::hyperbolic::{ball_distance, ball_moebius, conformal_barycenter, h3_distance, moebius_extend, BallPoint, HPoint};
use berkdyn::ppoly::PuiseuxPolynomial;
use berkdyn::puiseux::{q, qi, PuiseuxSeries, Q, C64};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const CASES: u32 = 1000;

fn runner() -> TestRunner {
    let config = Config { cases: CASES, max_local_rejects: 100_000, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn exponent() -> impl Strategy<Value = Q> {
    (-4i64..=8, prop::sample::select(vec![1i64, 2, 3, 6])).prop_map(|(n, d)| q(n, d))
}

fn coefficient() -> impl Strategy<Value = C64> {
    (-3i32..=3, -2i32..=2).prop_map(|(a, b)| C64::new(a as f64, b as f64))
}

fn series() -> impl Strategy<Value = PuiseuxSeries> {
    prop::collection::vec((exponent(), coefficient()), 0..4).prop_map(|t| PuiseuxSeries::from_terms(t, None))
}

fn nonzero_series() -> impl Strategy<Value = PuiseuxSeries> {
    series().prop_filter("nonzero", |s| !s.is_zero())
}

fn point() -> impl Strategy<Value = TypeIIPoint> {
    (series(), exponent()).prop_map(|(c, r)| TypeIIPoint::new(&c, r))
}

fn polynomial(max_degree: usize) -> impl Strategy<Value = PuiseuxPolynomial> {
    prop::collection::vec(series(), 1..=max_degree + 1).prop_map(PuiseuxPolynomial::new)
}

fn map() -> impl Strategy<Value = BerkMap> {
    (polynomial(3), polynomial(3))
        .prop_filter_map("degenerate map", |(n, d)| BerkMap::new(n, d).ok().filter(|f| f.degree() >= 1))
}

fn close(a: &PuiseuxSeries, b: &PuiseuxSeries) -> bool {
    a.approx_eq_to(b, qi(12), 1e-9)
}

fn finish<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn field_laws() -> Result<(), String> {
    finish(runner().run(&(series(), series(), series()), |(a, b, c)| {
        prop_assert!(close(&a.add(&b), &b.add(&a)));
        prop_assert!(close(&a.mul(&b), &b.mul(&a)));
        prop_assert!(close(&a.add(&b).add(&c), &a.add(&b.add(&c))));
        prop_assert!(close(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        prop_assert!(close(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c))));
        prop_assert!(a.sub(&a).is_zero());
        prop_assert!(close(&a.mul(&PuiseuxSeries::one()), &a));
        Ok(())
    }))
}

/// Inversion keeps six orders past the leading term; coefficients there are
/// trusted to the cancellation tolerance, not to machine precision.
pub fn inverse_and_division() -> Result<(), String> {
    finish(runner().run(&(nonzero_series(), series()), |(a, b)| {
        let v = a.valuation().unwrap();
        let inv = a.invert_to(qi(6)).unwrap();
        let prod = a.mul(&inv);
        prop_assert!(prod.approx_eq_to(&PuiseuxSeries::one(), qi(6), 1e-6), "{a} * {inv} = {prod}");
        prop_assert_eq!(inv.valuation(), Some(-v));
        if let Some(vb) = b.valuation() {
            prop_assert_eq!(b.div(&a).unwrap().valuation(), Some(vb - v));
        }
        Ok(())
    }))
}

pub fn valuation_laws() -> Result<(), String> {
    finish(runner().run(&(series(), series()), |(a, b)| {
        match (a.valuation(), b.valuation()) {
            (Some(va), Some(vb)) => {
                prop_assert_eq!(a.mul(&b).valuation(), Some(va + vb));
                if let Some(vs) = a.add(&b).valuation() {
                    prop_assert!(vs >= va.min(vb));
                    if va != vb {
                        prop_assert_eq!(vs, va.min(vb));
                    }
                }
            }
            _ => prop_assert!(a.mul(&b).is_zero()),
        }
        Ok(())
    }))
}

pub fn tree_metric_axioms() -> Result<(), String> {
    finish(runner().run(&(point(), point(), point(), point()), |(x, y, z, w)| {
        let d = |a: &TypeIIPoint, b: &TypeIIPoint| tree_distance(a, b);
        prop_assert_eq!(d(&x, &x), qi(0));
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &y) >= qi(0));
        prop_assert_eq!(d(&x, &y) == qi(0), x == y);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        let mut sums = [d(&x, &y) + d(&z, &w), d(&x, &z) + d(&y, &w), d(&x, &w) + d(&y, &z)];
        sums.sort();
        prop_assert_eq!(sums[1], sums[2], "four-point condition");
        Ok(())
    }))
}

pub fn gauss_multiplicativity() -> Result<(), String> {
    finish(runner().run(&(point(), polynomial(3), polynomial(3)), |(x, p, r)| {
        let pr = p.mul(&r);
        match (seminorm_at(&x, &p), seminorm_at(&x, &r)) {
            (Some(a), Some(b)) => prop_assert_eq!(seminorm_at(&x, &pr), Some(a + b)),
            _ => prop_assert!(pr.is_zero()),
        }
        Ok(())
    }))
}

pub fn tangent_multiplicities() -> Result<(), String> {
    finish(runner().run(&(map(), point(), coefficient()), |(f, x, w)| {
        let red = reduction_at(&f, &x);
        prop_assume!(red.is_ok(), "reduction needs a deeper expansion");
        let red = red.unwrap();
        let deg = local_degree(&f, &x).unwrap();
        prop_assert_eq!(deg, red.degree());
        prop_assert!(deg >= 1 && deg <= f.degree());
        let target = Direction::Finite(w * C64::new(0.37, 0.11) + C64::new(0.05, -0.02));
        let fiber = red.fiber(target).unwrap();
        let total: usize = fiber.iter().map(|(v, _)| red.multiplicity(*v)).sum();
        prop_assert_eq!(total, deg, "f = ({}) / ({}) at {}", f.numerator(), f.denominator(), x);
        Ok(())
    }))
}

pub fn preimage_degrees() -> Result<(), String> {
    finish(runner().run(&(map(), point()), |(f, y)| {
        let pre = match preimages(&f, &y) {
            Ok(pre) => pre,
            Err(e) => {
                prop_assert!(matches!(e, berkdyn::error::Error::Precision(_)), "{e}");
                return Err(TestCaseError::reject("fiber needs a deeper expansion"));
            }
        };
        let total: usize = pre.iter().map(|p| p.1).sum();
        prop_assert_eq!(total, f.degree(), "f = ({}) / ({}), y = {}", f.numerator(), f.denominator(), y);
        for (x, _) in &pre {
            prop_assert_eq!(apply_map(&f, x).unwrap(), y.clone());
        }
        Ok(())
    }))
}

fn ball_vec() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..0.9).prop_filter_map("zero", |(a, b, c, r)| {
        let n = (a * a + b * b + c * c).sqrt();
        (n > 1e-3).then(|| [r * a / n, r * b / n, r * c / n])
    })
}

fn sphere_vec() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map("zero", |(a, b, c)| {
        let n = (a * a + b * b + c * c).sqrt();
        (n > 1e-3).then(|| [a / n, b / n, c / n])
    })
}

fn hpoint() -> impl Strategy<Value = HPoint> {
    (-3.0f64..3.0, -3.0f64..3.0, -4.0f64..4.0).prop_map(|(x, y, lh)| HPoint::new(C64::new(x, y), lh.exp()).unwrap())
}

pub fn moebius_isometry() -> Result<(), String> {
    finish(runner().run(&(ball_vec(), ball_vec(), ball_vec()), |(a, x, y)| {
        let ball = |v: [f64; 3]| BallPoint::new(v).unwrap();
        let d = ball_distance(&ball(x), &ball(y));
        let moved = ball_distance(&ball(ball_moebius(a, x)), &ball(ball_moebius(a, y)));
        prop_assert!((d - moved).abs() <= 1e-12 * d.max(1.0), "{d} vs {moved}");
        let back = ball_moebius([-a[0], -a[1], -a[2]], ball_moebius(a, x));
        prop_assert!((0..3).all(|i| (back[i] - x[i]).abs() < 1e-12));
        Ok(())
    }))?;
    finish(runner().run(&(hpoint(), hpoint(), coefficient(), hpoint()), |(p, r, a, b)| {
        prop_assume!(a.norm() > 0.0);
        let a = a * C64::new(0.7, 0.2);
        let d = h3_distance(&p, &r);
        let moved = h3_distance(&moebius_extend(a, b.z, &p).unwrap(), &moebius_extend(a, b.z, &r).unwrap());
        prop_assert!((d - moved).abs() <= 1e-12 * d.max(1.0), "{d} vs {moved}");
        let round = p.to_ball().to_half_space();
        prop_assert!(h3_distance(&p, &round) <= 1e-12 * (1.0 + p.z.norm() + p.h + 1.0 / p.h));
        Ok(())
    }))
}

pub fn barycenter_equivariance() -> Result<(), String> {
    let atoms = prop::collection::vec((sphere_vec(), 1.0f64..4.0), 4..24);
    finish(runner().run(&(atoms, ball_vec()), |(pts, a)| {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let samples: Vec<_> = pts.iter().map(|(u, w)| (*u, w / total)).collect();
        prop_assume!(samples.iter().all(|s| s.1 < 0.4));
        let moved: Vec<_> = samples.iter().map(|(u, w)| (ball_moebius(a, *u), *w)).collect();
        let b0 = conformal_barycenter(&samples).unwrap();
        let b1 = conformal_barycenter(&moved).unwrap();
        let expected = BallPoint::new(ball_moebius(a, b0.b)).unwrap();
        let dist = ball_distance(&expected, &b1);
        prop_assert!(dist < 1e-7, "distance {dist}");
        Ok(())
    }))
}

#[allow(dead_code)]
pub type Suite = (&'static str, fn() -> Result<(), String>);

#[allow(dead_code)]
pub const SUITES: [Suite; 9] = [
    ("field laws", field_laws),
    ("inverse and division", inverse_and_division),
    ("valuation laws", valuation_laws),
    ("tree-metric axioms", tree_metric_axioms),
    ("Gauss multiplicativity", gauss_multiplicativity),
    ("tangent multiplicities sum to the local degree", tangent_multiplicities),
    ("preimage degrees sum to d", preimage_degrees),
    ("Möbius isometry", moebius_isometry),
    ("barycenter equivariance", barycenter_equivariance),
];
