//! Hyperbolic 3-space, conformal barycenters and the barycentric extension
//! of a complex rational map at a fixed parameter value.
//!
//! Points of the upper half-space are `(z, h)` with `h > 0`; the basepoint is
//! `(0, 1)`. The ball model is reached through the inversion in the sphere of
//! radius `√2` about `(0, 0, −1)`, which sends the basepoint to the origin and
//! the boundary plane to the unit sphere by stereographic projection.

use nalgebra::{Matrix3, Vector3};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::berkovich::{BerkMap, TypeIIPoint, TypeIPoint};
use crate::cpoly::CPoly;
use crate::error::{Error, Result};
use crate::puiseux::C64;
use crate::tree::PeriodicEndRecord;

pub const DEFAULT_SAMPLES: usize = 20_000;
pub const BARYCENTER_TOL: f64 = 1e-10;
pub const BARYCENTER_MAX_ITER: usize = 500;
const BALL_MARGIN: f64 = 1e-12;
const MAX_STEP: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HPoint {
    #[serde(serialize_with = "ser_c64")]
    pub z: C64,
    pub h: f64,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl HPoint {
    pub fn new(z: C64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain(format!("({z}, {h}) is not a point of H^3")));
        }
        Ok(Self { z, h })
    }

    pub fn origin() -> Self {
        Self { z: C64::zero(), h: 1.0 }
    }

    pub fn to_ball(&self) -> BallPoint {
        let (x, y, h) = (self.z.re, self.z.im, self.h);
        let d = x * x + y * y + (h + 1.0) * (h + 1.0);
        BallPoint { b: [2.0 * x / d, 2.0 * y / d, (1.0 - x * x - y * y - h * h) / d] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallPoint {
    pub b: [f64; 3],
}

impl BallPoint {
    pub fn new(b: [f64; 3]) -> Result<Self> {
        if norm(b) >= 1.0 - BALL_MARGIN || b.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("{b:?} lies outside the open ball")));
        }
        Ok(Self { b })
    }

    pub fn to_half_space(&self) -> HPoint {
        let [x, y, w] = self.b;
        let d = x * x + y * y + (w + 1.0) * (w + 1.0);
        let r2 = x * x + y * y + w * w;
        HPoint { z: C64::new(2.0 * x / d, 2.0 * y / d), h: (1.0 - r2) / d }
    }
}

/// Hyperbolic distance in the upper half-space model.
pub fn h3_distance(p: &HPoint, q: &HPoint) -> f64 {
    let dz = (p.z - q.z).norm_sqr();
    let dh = p.h - q.h;
    let s = ((dz + dh * dh).sqrt()) / (2.0 * (p.h * q.h).sqrt());
    2.0 * s.asinh()
}

pub fn ball_distance(a: &BallPoint, b: &BallPoint) -> f64 {
    h3_distance(&a.to_half_space(), &b.to_half_space())
}

/// Extension of `z ↦ Az + B` to the upper half-space.
pub fn moebius_extend(a: C64, b: C64, p: &HPoint) -> Result<HPoint> {
    if a.norm() == 0.0 {
        return Err(Error::Domain("affine map with A = 0".into()));
    }
    Ok(HPoint { z: a * p.z + b, h: a.norm() * p.h })
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// The ball isometry sending `a` to the origin; its inverse is `ball_moebius(−a, ·)`.
pub fn ball_moebius(a: [f64; 3], x: [f64; 3]) -> [f64; 3] {
    let a2 = dot(a, a);
    let x2 = dot(x, x);
    let xa = [x[0] - a[0], x[1] - a[1], x[2] - a[2]];
    let xa2 = dot(xa, xa);
    let den = 1.0 - 2.0 * dot(a, x) + a2 * x2;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = ((1.0 - a2) * xa[i] - xa2 * a[i]) / den;
    }
    out
}

/// A point of the Riemann sphere in homogeneous coordinates `[a : b]`,
/// scaled so that `max(|a|, |b|) = 1`.
#[derive(Clone, Copy, Debug)]
pub struct Proj {
    pub a: C64,
    pub b: C64,
}

impl Proj {
    pub fn new(a: C64, b: C64) -> Self {
        let m = a.norm().max(b.norm());
        if m == 0.0 || !m.is_finite() {
            return Self { a, b };
        }
        Self { a: a / m, b: b / m }
    }

    pub fn finite(z: C64) -> Self {
        Self::new(z, C64::one())
    }

    pub fn infinity() -> Self {
        Self { a: C64::one(), b: C64::zero() }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.a.norm().max(self.b.norm()) > 0.5)
    }

    /// The affine value, or `None` at `∞`.
    pub fn value(&self) -> Option<C64> {
        if self.b.norm() == 0.0 {
            None
        } else {
            Some(self.a / self.b)
        }
    }

    /// Inverse stereographic image on the unit sphere.
    pub fn to_sphere(&self) -> [f64; 3] {
        let (a, b) = (self.a, self.b);
        let s = a.norm_sqr() + b.norm_sqr();
        let ab = a * b.conj();
        [2.0 * ab.re / s, 2.0 * ab.im / s, (b.norm_sqr() - a.norm_sqr()) / s]
    }

    pub fn from_sphere(u: [f64; 3]) -> Self {
        if u[2] >= 0.0 {
            Self::new(C64::new(u[0], u[1]), C64::new(1.0 + u[2], 0.0))
        } else {
            Self::new(C64::new(1.0 - u[2], 0.0), C64::new(u[0], -u[1]))
        }
    }
}

/// Chordal distance on the Riemann sphere (diameter 2).
pub fn chordal(p: &Proj, q: &Proj) -> f64 {
    let num = (p.a * q.b - p.b * q.a).norm();
    let den = (p.a.norm_sqr() + p.b.norm_sqr()).sqrt() * (q.a.norm_sqr() + q.b.norm_sqr()).sqrt();
    2.0 * num / den
}

/// A rational map `P/Q` over `C` at a fixed parameter value.
#[derive(Clone, Debug)]
pub struct ComplexMap {
    pub num: CPoly,
    pub den: CPoly,
    degree: usize,
}

impl ComplexMap {
    pub fn new(num: CPoly, den: CPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let degree = num.degree().max(den.degree());
        if degree == 0 && num.is_zero() {
            return Err(Error::Domain("zero map".into()));
        }
        Ok(Self { num, den, degree })
    }

    pub fn from_family(f: &BerkMap, t0: C64) -> Result<Self> {
        let (p, q) = f.at(t0)?;
        Self::new(p, q)
    }

    pub fn affine(a: C64, b: C64) -> Result<Self> {
        Self::new(CPoly::new(vec![b, a]), CPoly::constant(C64::one()))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn map(&self, p: &Proj) -> Proj {
        let d = self.degree;
        if p.a.norm() <= p.b.norm() {
            let r = p.a / p.b;
            Proj::new(self.num.eval(r), self.den.eval(r))
        } else {
            let w = p.b / p.a;
            Proj::new(reversed_eval(&self.num, d, w), reversed_eval(&self.den, d, w))
        }
    }

    pub fn eval(&self, z: C64) -> Proj {
        self.map(&Proj::finite(z))
    }

    pub fn derivative_at(&self, z: C64) -> C64 {
        let p = self.num.eval(z);
        let q = self.den.eval(z);
        let dp = self.num.derivative().eval(z);
        let dq = self.den.derivative().eval(z);
        (dp * q - p * dq) / (q * q)
    }

    /// Numerator and denominator of the `q`-th iterate.
    pub fn iterate(&self, q: usize) -> (CPoly, CPoly) {
        let mut p = CPoly::new(vec![C64::zero(), C64::one()]);
        let mut r = CPoly::constant(C64::one());
        for _ in 0..q {
            let (np, nr) = (homogeneous(&self.num, self.degree, &p, &r), homogeneous(&self.den, self.degree, &p, &r));
            let s = np.max_norm().max(nr.max_norm());
            p = np.scale(C64::new(1.0 / s, 0.0));
            r = nr.scale(C64::new(1.0 / s, 0.0));
        }
        (p, r)
    }
}

fn reversed_eval(p: &CPoly, d: usize, w: C64) -> C64 {
    let mut acc = C64::zero();
    for i in 0..=d {
        let c = p.coeffs.get(i).copied().unwrap_or_else(C64::zero);
        acc = acc * w + c;
    }
    acc
}

/// `Σ c_i a^i b^(d−i)` as a polynomial.
fn homogeneous(c: &CPoly, d: usize, a: &CPoly, b: &CPoly) -> CPoly {
    let mut pa = vec![CPoly::constant(C64::one())];
    let mut pb = vec![CPoly::constant(C64::one())];
    for i in 1..=d {
        pa.push(pa[i - 1].mul(a));
        pb.push(pb[i - 1].mul(b));
    }
    let mut out = CPoly::constant(C64::zero());
    for (i, &ci) in c.coeffs.iter().enumerate() {
        if ci.norm() != 0.0 {
            out = out.add(&pa[i].mul(&pb[d - i]).scale(ci));
        }
    }
    out
}

/// Nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let w = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - w * w).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), w]
        })
        .collect()
}

/// First and second moments `(Σ w v, Σ w v vᵀ)`, summed pairwise.
fn moments<F: Fn(usize) -> ([f64; 3], f64) + Sync>(lo: usize, hi: usize, item: &F) -> [f64; 9] {
    if hi - lo <= 64 {
        let mut acc = [0.0; 9];
        for i in lo..hi {
            let (v, w) = item(i);
            acc[0] += w * v[0];
            acc[1] += w * v[1];
            acc[2] += w * v[2];
            acc[3] += w * v[0] * v[0];
            acc[4] += w * v[1] * v[1];
            acc[5] += w * v[2] * v[2];
            acc[6] += w * v[0] * v[1];
            acc[7] += w * v[0] * v[2];
            acc[8] += w * v[1] * v[2];
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let (l, r) = if hi - lo > 4096 {
        rayon::join(|| moments(lo, mid, item), || moments(mid, hi, item))
    } else {
        (moments(lo, mid, item), moments(mid, hi, item))
    };
    let mut out = [0.0; 9];
    for i in 0..9 {
        out[i] = l[i] + r[i];
    }
    out
}

/// Outcome of a balancing run.
#[derive(Clone, Debug)]
pub struct Balanced<F> {
    pub frame: F,
    pub residual: f64,
    pub iterations: usize,
}

/// Moves `frame` until the pulled-back samples have mean zero.
///
/// `pull(frame, i)` is sample `i` seen from `frame` together with its weight;
/// `advance(frame, δ)` is the frame recentred at the ball point `δ` of the
/// current view.
///
/// `floor(frame)` is the smallest residual the frame can resolve in double
/// precision; the effective tolerance is the larger of it and `tol`.
fn balance<F, P, A, L>(n: usize, frame: F, pull: P, advance: A, floor: L, tol: f64) -> Result<Balanced<F>>
where
    F: Clone + Sync,
    P: Fn(&F, usize) -> ([f64; 3], f64) + Sync,
    A: Fn(&F, [f64; 3]) -> F,
    L: Fn(&F) -> f64,
{
    let eval = |fr: &F| moments(0, n, &|i| pull(fr, i));
    let mut frame = frame;
    let mut mom = eval(&frame);
    let mut res = norm([mom[0], mom[1], mom[2]]);
    for iter in 0..BARYCENTER_MAX_ITER {
        if res < tol.max(floor(&frame)) {
            return Ok(Balanced { frame, residual: res, iterations: iter });
        }
        let m = Vector3::new(mom[0], mom[1], mom[2]);
        let second = Matrix3::new(mom[3], mom[6], mom[7], mom[6], mom[4], mom[8], mom[7], mom[8], mom[5]);
        let jac = (Matrix3::identity() - second) * 2.0;
        let mut step = jac.lu().solve(&m).unwrap_or(m * 0.75);
        if step.norm() > MAX_STEP {
            step *= MAX_STEP / step.norm();
        }
        let mut lambda = 1.0;
        loop {
            let s = step * lambda;
            let cand = advance(&frame, [s[0], s[1], s[2]]);
            let cm = eval(&cand);
            let cr = norm([cm[0], cm[1], cm[2]]);
            if cr < res {
                frame = cand;
                mom = cm;
                res = cr;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::Precision(format!(
                    "barycenter stalled after {iter} iterations (residual {res:.3e})"
                )));
            }
        }
    }
    if res < tol.max(floor(&frame)) {
        return Ok(Balanced { frame, residual: res, iterations: BARYCENTER_MAX_ITER });
    }
    Err(Error::Numerical(format!(
        "barycenter did not converge in {BARYCENTER_MAX_ITER} iterations (residual {res:.3e})"
    )))
}

fn check_atoms(samples: &[([f64; 3], f64)]) -> Result<()> {
    let mut sorted: Vec<_> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut i = 0;
    while i < sorted.len() {
        let mut w = sorted[i].1;
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            w += sorted[j].1;
            j += 1;
        }
        if w >= 0.5 {
            return Err(Error::Domain(format!("atom of weight {w} at {:?}", sorted[i].0)));
        }
        i = j;
    }
    Ok(())
}

/// The point of the ball about which the weighted samples are balanced.
pub fn conformal_barycenter(samples: &[([f64; 3], f64)]) -> Result<BallPoint> {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if samples.is_empty() || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("sample weights sum to {total}, not 1")));
    }
    check_atoms(samples)?;
    let pull = |b: &[f64; 3], i: usize| (ball_moebius(*b, samples[i].0), samples[i].1);
    let advance = |b: &[f64; 3], d: [f64; 3]| ball_moebius([-b[0], -b[1], -b[2]], d);
    let out = balance(samples.len(), [0.0; 3], pull, advance, |_: &[f64; 3]| 0.0, BARYCENTER_TOL)?;
    BallPoint::new(out.frame)
}

/// `(A, B)` for the affine map `z ↦ Az + B`, which carries `(0, 1)` to `(B, |A|)`.
#[derive(Clone, Copy, Debug)]
struct Frame {
    a: C64,
    b: C64,
}

impl Frame {
    fn at(p: &HPoint) -> Self {
        Self { a: C64::new(p.h, 0.0), b: p.z }
    }

    fn point(&self) -> HPoint {
        HPoint { z: self.b, h: self.a.norm() }
    }

    fn apply(&self, p: &Proj) -> Proj {
        Proj::new(self.a * p.a + self.b * p.b, p.b)
    }

    fn pull(&self, p: &Proj) -> Proj {
        Proj::new(p.a - self.b * p.b, self.a * p.b)
    }

    fn advance(&self, d: [f64; 3]) -> Self {
        let q = BallPoint { b: d }.to_half_space();
        Self { a: self.a * q.h, b: self.b + self.a * q.z }
    }
}

/// The conformal barycenter of equally weighted points of the Riemann sphere,
/// computed in moving affine frames so that far-away answers keep full precision.
fn sphere_barycenter(points: &[Proj], start: &HPoint, tol: f64) -> Result<HPoint> {
    let w = 1.0 / points.len() as f64;
    let pull = |fr: &Frame, i: usize| (fr.pull(&points[i]).to_sphere(), w);
    let advance = |fr: &Frame, d: [f64; 3]| fr.advance(d);
    let floor = |fr: &Frame| 1e3 * f64::EPSILON * (1.0 + fr.b.norm() / fr.a.norm());
    let out = balance(points.len(), Frame::at(start), pull, advance, floor, tol)?;
    Ok(out.frame.point())
}

/// Sphere quadrature reused across evaluations.
#[derive(Clone, Debug)]
pub struct Quadrature {
    nodes: Vec<Proj>,
}

impl Quadrature {
    pub fn new(n: usize) -> Self {
        Self { nodes: fibonacci_sphere(n).into_iter().map(Proj::from_sphere).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycenter of `f_* (M_x)_* μ`, the iteration started from `start`
    /// or from a guess read off the pushed samples.
    pub fn extension(&self, f: &ComplexMap, x: &HPoint, start: Option<&HPoint>, tol: f64) -> Result<HPoint> {
        let mx = Frame::at(x);
        let pushed: Vec<Proj> = self
            .nodes
            .iter()
            .map(|u| f.map(&mx.apply(u)))
            .filter(|p| !p.is_degenerate())
            .collect();
        if pushed.len() < self.nodes.len() {
            return Err(Error::Precision(format!(
                "{} samples hit a common zero of numerator and denominator",
                self.nodes.len() - pushed.len()
            )));
        }
        let guess = match start {
            Some(p) => *p,
            None => spread_start(&pushed, f.eval(x.z).value()),
        };
        sphere_barycenter(&pushed, &guess, tol)
    }
}

/// `𝓔f(x)` with an `n_samples`-point Fibonacci quadrature.
pub fn barycentric_extension_eval(f: &ComplexMap, x: &HPoint, n_samples: usize) -> Result<HPoint> {
    Quadrature::new(n_samples).extension(f, x, None, BARYCENTER_TOL)
}

/// A starting guess: the image of the center of `x`, with the median
/// distance of the pushed samples from it as height.
fn spread_start(pushed: &[Proj], anchor: Option<C64>) -> HPoint {
    let w = anchor.filter(|w| w.norm().is_finite()).unwrap_or_else(C64::zero);
    let mut d: Vec<f64> = pushed.iter().filter_map(|p| p.value()).map(|y| (y - w).norm()).collect();
    if d.len() * 2 < pushed.len() {
        return HPoint::origin();
    }
    let mid = d.len() / 2;
    d.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let h = d[mid];
    if h > 0.0 && h.is_finite() {
        HPoint { z: w, h }
    } else {
        HPoint { z: w, h: 1.0 }
    }
}

/// `Φ(x)`: the image of `(0, 1)` under `z ↦ t0^r z + c(t0)`.
pub fn realize(x: &TypeIIPoint, t0: C64) -> Result<HPoint> {
    let z = x.center().evaluate(t0)?;
    let r = x.radius();
    let e = *r.numer() as f64 / *r.denom() as f64;
    HPoint::new(z, t0.norm().powf(e))
}

/// Distance between `𝓔f_{t0}(Φ(x))` and `Φ(F(x))`, scaled by `1/(−log|t0|)`.
pub fn equivalence_residual(f: &BerkMap, x: &TypeIIPoint, t0: C64, n_samples: usize) -> Result<f64> {
    let scale = -t0.norm().ln();
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("|t0| = {} must lie in (0, 1)", t0.norm())));
    }
    let ft = ComplexMap::from_family(f, t0)?;
    let image = crate::berkovich::apply_map(f, x)?;
    let target = realize(&image, t0)?;
    let px = realize(x, t0)?;
    let got = Quadrature::new(n_samples).extension(&ft, &px, None, BARYCENTER_TOL)?;
    Ok(h3_distance(&got, &target) / scale)
}

/// Ball coordinates of `p` as seen from `x` (the chart inverse to `chart`).
fn local_coords(x: &HPoint, p: &HPoint) -> [f64; 3] {
    HPoint { z: (p.z - x.z) / x.h, h: p.h / x.h }.to_ball().b
}

/// The point with ball coordinates `d` as seen from `x`.
fn chart(x: &HPoint, d: [f64; 3]) -> HPoint {
    let q = BallPoint { b: d }.to_half_space();
    HPoint { z: x.z + q.z * x.h, h: q.h * x.h }
}

fn jacobian<G: Fn([f64; 3]) -> Result<[f64; 3]>>(g: G, eps: f64) -> Result<Matrix3<f64>> {
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = eps;
        let plus = g(e)?;
        e[j] = -eps;
        let minus = g(e)?;
        for i in 0..3 {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * eps);
        }
    }
    Ok(jac)
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub max: f64,
    pub argmax: HPoint,
    pub values: Vec<f64>,
}

/// Deterministic sample points within hyperbolic distance `radius` of each center.
pub fn probe_points(centers: &[HPoint], per_center: usize, radius: f64, seed: u64) -> Vec<HPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(centers.len() * per_center);
    for c in centers {
        for _ in 0..per_center {
            let v = loop {
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let n = norm(v);
                if n > 1e-3 && n <= 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            let r: f64 = radius * rng.gen_range(0.0f64..1.0).cbrt();
            let k = (r / 2.0).tanh();
            out.push(chart(c, [k * v[0], k * v[1], k * v[2]]));
        }
    }
    out
}

/// Largest finite-difference operator norm of `𝓔f` over `points`.
pub fn lipschitz_probe(f: &ComplexMap, points: &[HPoint], n_samples: usize) -> Result<LipschitzReport> {
    use rayon::prelude::*;
    let quad = Quadrature::new(n_samples);
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let y = quad.extension(f, x, None, 1e-12)?;
            let g = |d: [f64; 3]| -> Result<[f64; 3]> {
                let img = quad.extension(f, &chart(x, d), Some(&y), 1e-12)?;
                Ok(local_coords(&y, &img))
            };
            let jac = jacobian(g, 1e-4)?;
            Ok(jac.svd(false, false).singular_values.max())
        })
        .collect::<Result<_>>()?;
    let (k, &max) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::Domain("no probe points".into()))?;
    Ok(LipschitzReport { max, argmax: points[k], values })
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierSample {
    pub period: usize,
    #[serde(serialize_with = "ser_c64")]
    pub t: C64,
    #[serde(serialize_with = "ser_c64")]
    pub z0: C64,
    #[serde(serialize_with = "ser_c64")]
    pub multiplier: C64,
    pub cycle_id: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub cycle_id: usize,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootCount {
    #[serde(serialize_with = "ser_c64")]
    pub t: C64,
    pub expected: usize,
    pub found: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub period: usize,
    pub samples: Vec<MultiplierSample>,
    pub fits: Vec<SlopeFit>,
    pub root_counts: Vec<RootCount>,
    pub unmatched: usize,
    pub flags: Vec<String>,
}

pub const ITERATE_DEGREE_CAP: usize = 700;

fn orbit(f: &ComplexMap, z: &Proj, n: usize) -> Vec<Proj> {
    let mut out = vec![*z];
    for k in 0..n {
        out.push(f.map(&out[k]));
    }
    out
}

/// `(f^q)'(z)`: the chain rule along a finite orbit, a central difference otherwise.
fn cycle_multiplier(f: &ComplexMap, orb: &[Proj], q: usize) -> C64 {
    let pts: Vec<Option<C64>> = orb[..q].iter().map(|p| p.value()).collect();
    if pts.iter().all(|p| p.is_some_and(|z| f.den.eval(z).norm() > 0.0)) {
        return pts.iter().map(|p| f.derivative_at(p.unwrap())).product();
    }
    let z0 = pts[0].unwrap_or_else(C64::zero);
    let h = 1e-6 * z0.norm().max(1.0);
    let fq = |z: C64| orbit(f, &Proj::finite(z), q)[q].value().unwrap_or(C64::new(f64::INFINITY, 0.0));
    (fq(z0 + h) - fq(z0 - h)) / (2.0 * h)
}

fn record_points(e: &PeriodicEndRecord, t0: C64) -> Option<Vec<Proj>> {
    e.cycle
        .iter()
        .map(|p| match p {
            TypeIPoint::Finite(s) => s.evaluate(t0).ok().map(Proj::finite),
            TypeIPoint::Infinity => Some(Proj::infinity()),
        })
        .collect()
}

/// Period-`q` cycles of `f_t` along a ladder of parameters, matched to the
/// algebraic cycles in `ends`, with the slope of `log|multiplier|` against `−log|t|`.
pub fn numeric_multiplier_spectrum(
    f: &BerkMap,
    q: usize,
    t_values: &[C64],
    ends: &[PeriodicEndRecord],
) -> Result<SpectrumReport> {
    if q == 0 {
        return Err(Error::Domain("period must be positive".into()));
    }
    let d = f.degree();
    let deg_q = (d as f64).powi(q as i32);
    if deg_q > ITERATE_DEGREE_CAP as f64 {
        return Err(Error::Size(format!("iterate degree {d}^{q} exceeds {ITERATE_DEGREE_CAP}")));
    }
    let mut samples = Vec::new();
    let mut root_counts = Vec::new();
    let mut flags = Vec::new();
    let mut unmatched = 0;
    for &t0 in t_values {
        let ft = ComplexMap::from_family(f, t0)?;
        let (p, r) = ft.iterate(q);
        let zr = r.mul(&CPoly::new(vec![C64::zero(), C64::one()]));
        let eq = p.sub(&zr).cleaned(1e-14);
        let roots = match eq.roots() {
            Ok(r) => r,
            Err(e) => {
                flags.push(format!("t = {t0}: root finding failed ({e})"));
                continue;
            }
        };
        root_counts.push(RootCount { t: t0, expected: eq.degree(), found: roots.len() });
        let pts: Vec<Proj> = roots.iter().map(|&z| Proj::finite(z)).collect();
        let mut used = vec![false; pts.len()];
        let mut cycles: Vec<(Proj, C64)> = Vec::new();
        for i in 0..pts.len() {
            if used[i] {
                continue;
            }
            let orb = orbit(&ft, &pts[i], q);
            let err = chordal(&orb[q], &orb[0]);
            if err > 1e-6 {
                flags.push(format!("t = {t0}: root {} misses the iterate equation by {err:.1e}", roots[i]));
            }
            used[i] = true;
            let lower = (1..q).any(|j| q.is_multiple_of(j) && chordal(&orb[j], &orb[0]) < 1e-8);
            for o in &orb[1..q] {
                if let Some(k) = (0..pts.len())
                    .filter(|&k| !used[k])
                    .min_by(|&a, &b| chordal(&pts[a], o).partial_cmp(&chordal(&pts[b], o)).unwrap())
                {
                    if chordal(&pts[k], o) < 1e-6 {
                        used[k] = true;
                    }
                }
            }
            if !lower {
                cycles.push((pts[i], cycle_multiplier(&ft, &orb, q)));
            }
        }
        let algebraic: Vec<(usize, Vec<Proj>)> = ends
            .iter()
            .enumerate()
            .filter(|(_, e)| e.period == q && !e.unresolved)
            .filter_map(|(k, e)| record_points(e, t0).map(|v| (k, v)))
            .collect();
        let mut scored: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, (z, _)) in cycles.iter().enumerate() {
            let mut dist: Vec<(f64, usize)> = algebraic
                .iter()
                .map(|(k, v)| (v.iter().map(|p| chordal(p, z)).fold(f64::INFINITY, f64::min), *k))
                .collect();
            dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if let Some(&(best, k)) = dist.first() {
                let second = dist.get(1).map_or(f64::INFINITY, |x| x.0);
                if best < 0.05 && best < 0.25 * second {
                    scored.push((best, ci, k));
                }
            }
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut assigned: Vec<Option<usize>> = vec![None; cycles.len()];
        let mut taken = std::collections::HashSet::new();
        for (_, ci, k) in scored {
            if assigned[ci].is_none() && taken.insert(k) {
                assigned[ci] = Some(k);
            }
        }
        for ((z, m), id) in cycles.into_iter().zip(assigned) {
            if id.is_none() {
                unmatched += 1;
            }
            samples.push(MultiplierSample {
                period: q,
                t: t0,
                z0: z.value().unwrap_or_else(C64::zero),
                multiplier: m,
                cycle_id: id,
            });
        }
    }
    let mut ids: Vec<usize> = samples.iter().filter_map(|s| s.cycle_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut fits = Vec::new();
    for id in ids {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.cycle_id == Some(id) && s.multiplier.norm() > 0.0 && s.multiplier.norm().is_finite())
            .map(|s| (-s.t.norm().ln(), s.multiplier.norm().ln()))
            .collect();
        if pts.len() < 2 {
            flags.push(format!("cycle {id}: fewer than two usable multipliers"));
            continue;
        }
        let (slope, intercept) = least_squares(&pts);
        let predicted = ends[id].translation_length.map(|l| *l.numer() as f64 / *l.denom() as f64);
        fits.push(SlopeFit { cycle_id: id, slope, intercept, points: pts.len(), predicted });
    }
    Ok(SpectrumReport { period: q, samples, fits, root_counts, unmatched, flags })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, Serialize)]
pub struct PreimageRadiusReport {
    pub max_distance: f64,
    /// `max_distance / (−log|t0|)`.
    pub normalized: f64,
    pub solutions: Vec<HPoint>,
    pub seeds: usize,
    pub complete: bool,
    pub warnings: Vec<String>,
}

/// Solves `𝓔f_{t0}(y) = (0, 1)` by damped Newton from the realized tree
/// preimages of the Gauss point.
pub fn numeric_preimage_radius(f: &BerkMap, t0: C64, n_samples: usize) -> Result<PreimageRadiusReport> {
    let scale = -t0.norm().ln();
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("|t0| = {} must lie in (0, 1)", t0.norm())));
    }
    let ft = ComplexMap::from_family(f, t0)?;
    let quad = Quadrature::new(n_samples);
    let seeds: Vec<HPoint> = crate::berkovich::preimages(f, &TypeIIPoint::gauss())?
        .iter()
        .map(|(x, _)| realize(x, t0))
        .collect::<Result<_>>()?;
    let mut solutions: Vec<HPoint> = Vec::new();
    let mut warnings = Vec::new();
    for seed in &seeds {
        match solve_preimage(&ft, &quad, seed) {
            Ok(y) => {
                if !solutions.iter().any(|s| h3_distance(s, &y) < 1e-4) {
                    solutions.push(y);
                }
            }
            Err(e) => warnings.push(format!("seed {:?}: {e}", (seed.z, seed.h))),
        }
    }
    let complete = solutions.len() >= seeds.len();
    if !complete {
        warnings.push(format!("{} solutions for {} algebraic seeds", solutions.len(), seeds.len()));
    }
    let o = HPoint::origin();
    let max_distance = solutions.iter().map(|y| h3_distance(&o, y)).fold(0.0, f64::max);
    Ok(PreimageRadiusReport { max_distance, normalized: max_distance / scale, solutions, seeds: seeds.len(), complete, warnings })
}

fn solve_preimage(f: &ComplexMap, quad: &Quadrature, seed: &HPoint) -> Result<HPoint> {
    let o = HPoint::origin();
    let residual = |y: &HPoint| -> Result<[f64; 3]> { Ok(quad.extension(f, y, Some(&o), 1e-12)?.to_ball().b) };
    let mut y = *seed;
    let mut g = residual(&y)?;
    for _ in 0..60 {
        if norm(g) < 1e-8 {
            return Ok(y);
        }
        let jac = jacobian(|d| residual(&chart(&y, d)), 1e-5)?;
        let rhs = -Vector3::new(g[0], g[1], g[2]);
        let mut step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular Jacobian".into()))?;
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        let mut lambda = 1.0;
        loop {
            let cand = chart(&y, [lambda * step[0], lambda * step[1], lambda * step[2]]);
            let cg = residual(&cand)?;
            if norm(cg) < norm(g) {
                y = cand;
                g = cg;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::Numerical(format!("Newton stalled at residual {:.3e}", norm(g))));
            }
        }
    }
    if norm(g) < 1e-8 {
        return Ok(y);
    }
    Err(Error::Numerical(format!("Newton did not converge (residual {:.3e})", norm(g))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::parse_family;
    use crate::puiseux::{q, qi, PuiseuxSeries};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vertical_distances() {
        let o = HPoint::origin();
        let e = HPoint::new(C64::zero(), std::f64::consts::E).unwrap();
        assert!((h3_distance(&o, &e) - 1.0).abs() < 1e-14);
        let p = HPoint::new(C64::zero(), 1e-7).unwrap();
        assert!((h3_distance(&o, &p) - 7.0 * 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn model_conversions_round_trip() {
        for p in [HPoint::origin(), HPoint { z: c(3.0, -2.0), h: 0.25 }, HPoint { z: c(-0.1, 0.4), h: 7.0 }] {
            let back = p.to_ball().to_half_space();
            assert!(h3_distance(&p, &back) < 1e-12);
        }
        assert!(norm(HPoint::origin().to_ball().b) < 1e-15);
    }

    #[test]
    fn ball_moebius_inverse() {
        let a = [0.3, -0.2, 0.5];
        let x = [0.1, 0.6, -0.3];
        assert!(norm(ball_moebius(a, a)) < 1e-15);
        let y = ball_moebius([-a[0], -a[1], -a[2]], ball_moebius(a, x));
        assert!((0..3).all(|i| (y[i] - x[i]).abs() < 1e-13));
    }

    #[test]
    fn uniform_and_symmetric_samples_balance_at_origin() {
        let n = DEFAULT_SAMPLES;
        let s: Vec<_> = fibonacci_sphere(n).into_iter().map(|u| (u, 1.0 / n as f64)).collect();
        assert!(norm(conformal_barycenter(&s).unwrap().b) < 1e-6);
        let tri: Vec<_> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                ([a.cos(), a.sin(), 0.0], 1.0 / 3.0)
            })
            .collect();
        assert!(norm(conformal_barycenter(&tri).unwrap().b) < 1e-10);
    }

    #[test]
    fn heavy_atom_is_rejected() {
        let s = vec![([0.0, 0.0, 1.0], 0.5), ([1.0, 0.0, 0.0], 0.25), ([0.0, 1.0, 0.0], 0.25)];
        assert!(matches!(conformal_barycenter(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn barycenter_is_equivariant() {
        let s: Vec<_> = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -0.6, -0.8]]
            .iter()
            .zip([0.4, 0.3, 0.2, 0.1])
            .map(|(u, w)| (*u, w))
            .collect();
        let b = conformal_barycenter(&s).unwrap();
        let g = [0.2, -0.4, 0.1];
        let moved: Vec<_> = s.iter().map(|(u, w)| (ball_moebius(g, *u), *w)).collect();
        let b2 = conformal_barycenter(&moved).unwrap();
        let expected = BallPoint { b: ball_moebius(g, b.b) };
        assert!(ball_distance(&b2, &expected) < 1e-8);
    }

    #[test]
    fn extension_of_affine_and_power_maps() {
        let a = c(0.3, 1.1);
        let b = c(-2.0, 0.5);
        let f = ComplexMap::affine(a, b).unwrap();
        let got = barycentric_extension_eval(&f, &HPoint::origin(), DEFAULT_SAMPLES).unwrap();
        let d = h3_distance(&got, &HPoint { z: b, h: a.norm() });
        assert!(d < 1e-5, "{d}");
        let cube = ComplexMap::new(CPoly::new(vec![C64::zero(), C64::zero(), C64::zero(), C64::one()]), CPoly::constant(C64::one())).unwrap();
        let got = barycentric_extension_eval(&cube, &HPoint::origin(), 4000).unwrap();
        assert!(h3_distance(&got, &HPoint::origin()) < 1e-4);
    }

    #[test]
    fn escaping_map_lands_near_its_center() {
        let t0 = c(1e-4, 0.0);
        let fam = parse_family("z^2 + 1/t").unwrap().to_map().unwrap();
        let f = ComplexMap::from_family(&fam, t0).unwrap();
        let got = barycentric_extension_eval(&f, &HPoint::origin(), DEFAULT_SAMPLES).unwrap();
        let target = HPoint { z: c(1e4, 0.0), h: 1.0 };
        assert!(h3_distance(&got, &target) < 0.1 * 4.0 * 10f64.ln(), "{got:?}");
    }

    #[test]
    fn realize_examples() {
        let t0 = c(1e-5, 0.0);
        assert_eq!(realize(&TypeIIPoint::gauss(), t0).unwrap(), HPoint::origin());
        let p = realize(&TypeIIPoint::new(&PuiseuxSeries::zero(), q(1, 5)), t0).unwrap();
        assert!((p.h - 0.1).abs() < 1e-15 && p.z.norm() == 0.0);
        let center = PuiseuxSeries::monomial(C64::one(), qi(-1));
        let p = realize(&TypeIIPoint::new(&center, qi(0)), c(1e-3, 0.0)).unwrap();
        assert!((p.z - c(1e3, 0.0)).norm() < 1e-9 && p.h == 1.0);
    }

    #[test]
    fn residual_of_the_square_map() {
        let fam = parse_family("z^2").unwrap().to_map().unwrap();
        let r = equivalence_residual(&fam, &TypeIIPoint::gauss(), c(1e-6, 0.0), 4000).unwrap();
        assert!(r < 0.01);
    }
}
