//! Type II points of the Berkovich line over the Puiseux field and the
//! action of rational maps on them.
//!
//! A point is a closed ball `B(center, |t|^radius)` in the affine chart;
//! `radius` is a valuation, so larger values mean smaller balls. The Gauss
//! point is `B(0, 1)`.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::cpoly::CPoly;
use crate::error::{Error, Result};
use crate::newton::newton_puiseux_roots;
use crate::ppoly::PuiseuxPolynomial;
use crate::puiseux::{qi, PuiseuxSeries, Q, C64, DEFAULT_ORDER, MAX_DENOMINATOR};

/// Relative tolerance for comparing float coefficients of centers.
pub const CENTER_TOL: f64 = 1e-7;
/// Relative tolerance for residue-field common-root cancellation.
pub const RESIDUE_GCD_TOL: f64 = 1e-7;

/// The exponent where two series first differ, i.e. `ν(a - b)`. Each
/// coefficient difference is measured against the largest coefficient seen
/// so far. `None` means they agree on every stored term.
pub fn diff_valuation(a: &PuiseuxSeries, b: &PuiseuxSeries, tol: f64) -> Option<Q> {
    let mut exps: Vec<Q> = a.terms().iter().chain(b.terms()).map(|t| t.0).collect();
    exps.sort();
    exps.dedup();
    let mut scale = 0.0f64;
    for e in exps {
        let (x, y) = (a.coefficient(e), b.coefficient(e));
        scale = scale.max(x.norm()).max(y.norm());
        if (x - y).norm() > tol * scale {
            return Some(e);
        }
    }
    None
}

/// Classical point: an element of the Puiseux field or infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum TypeIPoint {
    Finite(PuiseuxSeries),
    Infinity,
}

impl fmt::Display for TypeIPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeIPoint::Finite(s) => write!(f, "{s}"),
            TypeIPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// The closed ball `B(center, |t|^radius)`.
#[derive(Clone, Debug)]
pub struct TypeIIPoint {
    center: PuiseuxSeries,
    radius: Q,
}

impl TypeIIPoint {
    /// Builds the canonical representative: the center keeps only the
    /// terms below the radius exponent.
    pub fn new(center: &PuiseuxSeries, radius: Q) -> Self {
        Self { center: center.head(radius), radius }
    }

    pub fn gauss() -> Self {
        Self::new(&PuiseuxSeries::zero(), Q::zero())
    }

    /// `ζ(0, s)`, the point at parameter `s` on the axis from infinity to zero.
    pub fn on_axis(s: Q) -> Self {
        Self::new(&PuiseuxSeries::zero(), s)
    }

    pub fn center(&self) -> &PuiseuxSeries {
        &self.center
    }

    pub fn radius(&self) -> Q {
        self.radius
    }

    /// Whether the ball of `self` contains the classical point `a`.
    pub fn contains(&self, a: &PuiseuxSeries) -> bool {
        match diff_valuation(&self.center, &a.head(self.radius), CENTER_TOL) {
            None => true,
            Some(v) => v >= self.radius,
        }
    }

    /// Whether `self` lies below `other` (its ball is contained in `other`'s).
    pub fn is_below(&self, other: &TypeIIPoint) -> bool {
        self.radius >= other.radius && other.contains(&self.center)
    }

    /// Lies on the axis joining 0 and infinity.
    pub fn is_on_axis(&self) -> bool {
        self.contains(&PuiseuxSeries::zero())
    }
}

impl PartialEq for TypeIIPoint {
    fn eq(&self, other: &Self) -> bool {
        self.radius == other.radius && self.contains(&other.center)
    }
}

impl fmt::Display for TypeIIPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ζ({}, {})", self.center, crate::puiseux::fmt_exponent(self.radius))
    }
}

#[derive(Serialize)]
struct PointRepr {
    center: String,
    radius: String,
}

impl Serialize for TypeIIPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr { center: self.center.to_string(), radius: self.radius.to_string() }.serialize(s)
    }
}

/// Tree distance in ν-units: `q_x + q_y - 2 min(q_x, q_y, ν(c_x - c_y))`.
pub fn tree_distance(x: &TypeIIPoint, y: &TypeIIPoint) -> Q {
    let join = join_radius(x, y);
    x.radius + y.radius - join * qi(2)
}

/// Radius exponent of the smallest ball containing both points.
pub fn join_radius(x: &TypeIIPoint, y: &TypeIIPoint) -> Q {
    let m = x.radius.min(y.radius);
    match diff_valuation(&x.center, &y.center, CENTER_TOL) {
        None => m,
        Some(v) => m.min(v),
    }
}

/// Minimum coefficient valuation; `None` for the zero polynomial.
pub fn gauss_seminorm(p: &PuiseuxPolynomial) -> Option<Q> {
    p.gauss_valuation()
}

/// `[p]_x` in valuation form: the Gauss valuation of `p(center + t^q w)`.
pub fn seminorm_at(x: &TypeIIPoint, p: &PuiseuxPolynomial) -> Option<Q> {
    p.recenter(&x.center, x.radius).gauss_valuation()
}

/// A degree-`d` rational map with Puiseux coefficients.
#[derive(Clone, Debug)]
pub struct BerkMap {
    num: PuiseuxPolynomial,
    den: PuiseuxPolynomial,
    degree: usize,
}

impl BerkMap {
    /// Normalizes jointly so the smallest coefficient valuation is zero.
    pub fn new(num: PuiseuxPolynomial, den: PuiseuxPolynomial) -> Result<Self> {
        if num.is_zero() || den.is_zero() {
            return Err(Error::Domain("numerator and denominator must be nonzero".into()));
        }
        if num.coeff(0).is_zero() && den.coeff(0).is_zero() {
            return Err(Error::Domain("numerator and denominator share the factor z".into()));
        }
        let m = match (num.gauss_valuation(), den.gauss_valuation()) {
            (Some(a), Some(b)) => a.min(b),
            _ => unreachable!(),
        };
        let num = num.shift_t(-m);
        let den = den.shift_t(-m);
        let degree = num.degree().max(den.degree());
        let f = Self { num, den, degree };
        f.check_coprime()?;
        Ok(f)
    }

    pub fn numerator(&self) -> &PuiseuxPolynomial {
        &self.num
    }

    pub fn denominator(&self) -> &PuiseuxPolynomial {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Common roots at a generic parameter value indicate an uncancelled factor.
    fn check_coprime(&self) -> Result<()> {
        let t0 = C64::new(0.0123, 0.0047);
        let p = self.num.evaluate_at(t0)?;
        let q = self.den.evaluate_at(t0)?;
        if p.degree() == 0 || q.degree() == 0 {
            return Ok(());
        }
        let rp = p.roots()?;
        let rq = q.roots()?;
        for a in &rp {
            for b in &rq {
                if (a - b).norm() <= 1e-7 * a.norm().max(1.0) {
                    return Err(Error::Domain(format!(
                        "numerator and denominator share a root near {a} at t = {t0}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `f(z)` as a Puiseux series.
    pub fn eval(&self, z: &PuiseuxSeries) -> Result<PuiseuxSeries> {
        let p = self.num.eval(z);
        let q = self.den.eval(z);
        p.div(&q)
    }

    /// `f(z)` computed to relative order `rel` beyond the denominator's leading term.
    pub fn eval_to(&self, z: &PuiseuxSeries, rel: Q) -> Result<PuiseuxSeries> {
        let p = self.num.eval(z);
        let q = self.den.eval(z);
        Ok(p.mul(&q.invert_to(rel)?))
    }

    /// Numerator of `f(z) - z`.
    pub fn fixed_point_polynomial(&self) -> PuiseuxPolynomial {
        self.num.sub(&self.den.mul(&PuiseuxPolynomial::z()))
    }

    /// Numerator of the derivative, `P'Q - PQ'`.
    pub fn wronskian(&self) -> PuiseuxPolynomial {
        self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()))
    }

    /// Homogeneous composition `self ∘ other`: returns `(P(F,G), Q(F,G))`
    /// with the homogenizing degree `self.degree`.
    pub fn compose(&self, other: &BerkMap) -> Result<BerkMap> {
        let d = self.degree;
        let (f, g) = (&other.num, &other.den);
        let mut g_pows = vec![PuiseuxPolynomial::constant(PuiseuxSeries::one())];
        for _ in 0..d {
            let last = g_pows.last().unwrap().mul(g);
            g_pows.push(last);
        }
        let homog = |p: &PuiseuxPolynomial| {
            let mut acc = PuiseuxPolynomial::zero();
            let mut f_pow = PuiseuxPolynomial::constant(PuiseuxSeries::one());
            for i in 0..=d {
                let c = p.coeff(i);
                if !c.is_zero() {
                    acc = acc.add(&f_pow.mul(&g_pows[d - i]).scale(&c));
                }
                if i < d {
                    f_pow = f_pow.mul(f);
                }
            }
            acc
        };
        let num = homog(&self.num);
        let den = homog(&self.den);
        let m = match (num.gauss_valuation(), den.gauss_valuation()) {
            (Some(a), Some(b)) => a.min(b),
            _ => return Err(Error::Domain("degenerate composition".into())),
        };
        let (num, den) = (num.shift_t(-m), den.shift_t(-m));
        let degree = num.degree().max(den.degree());
        Ok(BerkMap { num, den, degree })
    }

    /// The q-th iterate (homogeneous composition, no cancellation).
    pub fn iterate(&self, q: usize) -> Result<BerkMap> {
        let mut g = self.clone();
        for _ in 1..q {
            g = self.compose(&g)?;
        }
        Ok(g)
    }

    /// Numerical specialization `(P_{t0}, Q_{t0})`.
    pub fn at(&self, t0: C64) -> Result<(CPoly, CPoly)> {
        Ok((self.num.evaluate_at(t0)?, self.den.evaluate_at(t0)?))
    }
}

/// A rational map over the residue field `C`, common factors removed.
#[derive(Clone, Debug)]
pub struct ResidueRationalMap {
    pub num: CPoly,
    pub den: CPoly,
}

/// A tangent direction at a type II point: a point of the residue line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Direction {
    Finite(C64),
    Infinity,
}

impl ResidueRationalMap {
    /// Cancels common roots (relative tolerance) between numerator and denominator.
    pub fn new(num: CPoly, den: CPoly) -> Result<Self> {
        let mut num = num.cleaned(1e-12);
        let mut den = den.cleaned(1e-12);
        if num.is_zero() || den.is_zero() {
            return Err(Error::Numerical("zero polynomial in residue map".into()));
        }
        // exact common z-powers first
        let z = num.zero_order().min(den.zero_order());
        if z > 0 {
            num = CPoly::new(num.coeffs[z..].to_vec());
            den = CPoly::new(den.coeffs[z..].to_vec());
        }
        if num.degree() > 0 && den.degree() > 0 {
            let rn = num.roots()?;
            let mut rd = den.roots()?;
            for a in rn {
                if let Some(pos) = rd
                    .iter()
                    .position(|b| (a - b).norm() <= RESIDUE_GCD_TOL * a.norm().max(1.0) * 10.0)
                {
                    let b = rd.swap_remove(pos);
                    let mid = (a + b) * 0.5;
                    num = num.deflate(mid);
                    den = den.deflate(mid);
                }
            }
        }
        Ok(Self { num, den })
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, v: Direction) -> Direction {
        match v {
            Direction::Finite(z) => {
                let d = self.den.eval(z);
                let n = self.num.eval(z);
                if d.norm() <= 1e-12 * n.norm() || (d.norm() == 0.0 && n.norm() == 0.0) {
                    Direction::Infinity
                } else {
                    Direction::Finite(n / d)
                }
            }
            Direction::Infinity => {
                let (a, b) = (self.num.degree(), self.den.degree());
                if a > b {
                    Direction::Infinity
                } else if a < b {
                    Direction::Finite(C64::zero())
                } else {
                    Direction::Finite(self.num.leading() / self.den.leading())
                }
            }
        }
    }

    /// Local multiplicity at `v`.
    pub fn multiplicity(&self, v: Direction) -> usize {
        let image = self.eval(v);
        match (v, image) {
            (Direction::Finite(z), Direction::Infinity) => vanishing_order(&self.den, z),
            (Direction::Finite(z), Direction::Finite(c)) => {
                vanishing_order(&self.num.sub(&self.den.scale(c)), z)
            }
            (Direction::Infinity, Direction::Infinity) => self.num.degree() - self.den.degree(),
            (Direction::Infinity, Direction::Finite(c)) => {
                let (a, b) = (self.num.degree(), self.den.degree());
                if a < b {
                    b - a
                } else {
                    let h = self.num.sub(&self.den.scale(c)).cleaned(1e-9);
                    a - h.degree().min(a)
                }
            }
        }
    }

    /// Preimages of a direction, with multiplicities.
    pub fn fiber(&self, w: Direction) -> Result<Vec<(Direction, usize)>> {
        let (h, deg_total) = match w {
            Direction::Finite(c) => (self.num.sub(&self.den.scale(c)).cleaned(1e-12), self.degree()),
            Direction::Infinity => (self.den.clone(), self.degree()),
        };
        let mut out: Vec<(Direction, usize)> = crate::cpoly::cluster(&h.roots()?, 1e-5)
            .into_iter()
            .map(|(z, m)| (Direction::Finite(z), m))
            .collect();
        let finite: usize = out.iter().map(|x| x.1).sum();
        if finite < deg_total {
            out.push((Direction::Infinity, deg_total - finite));
        }
        Ok(out)
    }
}

/// Order of vanishing of `p` at `z`: the first Taylor coefficient `c_k` with
/// `|c_k| r^k` above `1e-6 Σ |a_j| r^j`, where `r = max(|z|, 1)`.
fn vanishing_order(p: &CPoly, z: C64) -> usize {
    let r = z.norm().max(1.0);
    let scale: f64 = p.coeffs.iter().enumerate().map(|(j, a)| a.norm() * r.powi(j as i32)).sum();
    let mut d = p.clone();
    let mut fact = 1.0;
    for k in 0..=p.degree() {
        if k > 0 {
            fact *= k as f64;
        }
        if (d.eval(z) / fact).norm() * r.powi(k as i32) > 1e-6 * scale {
            return k;
        }
        d = d.derivative();
    }
    p.degree()
}

/// Image of `x` and the reduction of `f` at `x` in the matching coordinates.
pub fn image_and_reduction(f: &BerkMap, x: &TypeIIPoint) -> Result<(TypeIIPoint, ResidueRationalMap)> {
    let pn = f.num.recenter(&x.center, x.radius);
    let qd = f.den.recenter(&x.center, x.radius);
    let vq = qd
        .gauss_valuation()
        .ok_or_else(|| Error::Precision(format!("denominator vanishes at {x}")))?;
    let q_red = qd.reduction();
    let cap = 4 * DEFAULT_ORDER as usize * MAX_DENOMINATOR.min(60) as usize;
    let mut a = PuiseuxSeries::zero();
    let mut na = pn.clone();
    for _ in 0..cap {
        let vn = na.gauss_valuation().ok_or_else(|| {
            Error::Precision(format!("image of {x} lost all precision at center {a}"))
        })?;
        if let Some(tr) = na.truncation() {
            if tr <= vn {
                return Err(Error::Precision(format!("image of {x} beyond truncation (center {a})")));
            }
        }
        let r = vn - vq;
        let n_red = na.reduction();
        if let Some(c) = proportional(&n_red, &q_red) {
            let lift = PuiseuxSeries::monomial(c, r);
            a = a.add(&lift);
            na = na.sub(&qd.scale(&lift));
            continue;
        }
        let red = ResidueRationalMap::new(n_red, q_red.clone())?;
        if red.is_constant() {
            return Err(Error::Numerical(format!(
                "residue map at {x} is numerically constant after cancellation"
            )));
        }
        return Ok((TypeIIPoint::new(&a, r), red));
    }
    Err(Error::Precision(format!(
        "recentering did not terminate at {x}; partial center {a}"
    )))
}

/// If `n = c·d` (relative tolerance), returns `c`.
fn proportional(n: &CPoly, d: &CPoly) -> Option<C64> {
    let n = n.cleaned(1e-10);
    let d = d.cleaned(1e-10);
    if n.degree() != d.degree() {
        return None;
    }
    let c = n.leading() / d.leading();
    let res = n.sub(&d.scale(c));
    if res.max_norm() <= 1e-9 * n.max_norm().max(d.max_norm() * c.norm()) {
        Some(c)
    } else {
        None
    }
}

pub fn apply_map(f: &BerkMap, x: &TypeIIPoint) -> Result<TypeIIPoint> {
    image_and_reduction(f, x).map(|r| r.0)
}

pub fn reduction_at(f: &BerkMap, x: &TypeIIPoint) -> Result<ResidueRationalMap> {
    image_and_reduction(f, x).map(|r| r.1)
}

pub fn local_degree(f: &BerkMap, x: &TypeIIPoint) -> Result<usize> {
    reduction_at(f, x).map(|r| r.degree())
}

/// `(D_x f (v), multiplicity)`.
pub fn tangent_map(f: &BerkMap, x: &TypeIIPoint, v: Direction) -> Result<(Direction, usize)> {
    let red = reduction_at(f, x)?;
    Ok((red.eval(v), red.multiplicity(v)))
}

/// Critical points over the Puiseux field with multiplicities summing to `2d - 2`.
pub fn critical_ends(f: &BerkMap, order: Q) -> Result<Vec<(TypeIPoint, usize)>> {
    let w = f.wronskian();
    let mut out: Vec<(TypeIPoint, usize)> = Vec::new();
    if !w.is_zero() {
        for r in newton_puiseux_roots(&w, order)? {
            out.push((TypeIPoint::Finite(r.value), r.multiplicity));
        }
    }
    let total = 2 * f.degree() - 2;
    let finite = if w.is_zero() { 0 } else { w.degree() };
    if finite < total {
        out.push((TypeIPoint::Infinity, total - finite));
    }
    Ok(out)
}

/// A concave tropical polynomial `min_k (α_k + k s)`; lines flagged unknown
/// come from coefficients only known as `O(t^T)`.
#[derive(Clone, Debug)]
pub(crate) struct Tropical {
    lines: Vec<(Q, i64, bool)>,
}

impl Tropical {
    pub(crate) fn eval(&self, s: Q) -> Option<Q> {
        self.lines
            .iter()
            .filter(|l| l.2)
            .map(|&(a, k, _)| a + s * qi(k))
            .min()
    }

    /// True when an unknown line could attain the minimum at `s`.
    pub(crate) fn uncertain_at(&self, s: Q) -> bool {
        match self.eval(s) {
            None => self.lines.iter().any(|l| !l.2),
            Some(m) => self.lines.iter().any(|&(a, k, known)| !known && a + s * qi(k) <= m),
        }
    }

    pub(crate) fn breakpoints(&self) -> Vec<Q> {
        let known: Vec<_> = self.lines.iter().filter(|l| l.2).collect();
        let mut out = Vec::new();
        for i in 0..known.len() {
            for j in i + 1..known.len() {
                let (a1, k1, _) = *known[i];
                let (a2, k2, _) = *known[j];
                if k1 != k2 {
                    let s = (a2 - a1) / qi(k1 - k2);
                    let v = a1 + s * qi(k1);
                    if self.eval(s) == Some(v) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }
}

/// One half of a path: the points `ζ(base, s)` for `s > lo` (or all `s` when
/// `lo` is `None`), together with the tropical data of `P - cQ` and `Q` there.
struct HalfPath {
    base: PuiseuxSeries,
    lo: Option<Q>,
    num: Tropical,
    den: Tropical,
}

impl HalfPath {
    fn g(&self, s: Q) -> Option<Q> {
        match (self.num.eval(s), self.den.eval(s)) {
            (Some(a), Some(b)) => Some(a - b),
            (None, Some(_)) => None,
            _ => Some(qi(i64::MIN / 4)),
        }
    }

    fn inside(&self, s: Q, level: Q) -> bool {
        match self.g(s) {
            None => true,
            Some(v) => v >= level,
        }
    }

    /// Interior transition points and the membership just above `lo`.
    fn transitions(&self, level: Q) -> Result<(Vec<Q>, bool)> {
        let mut crit: Vec<Q> = self.num.breakpoints();
        crit.extend(self.den.breakpoints());
        if let Some(lo) = self.lo {
            crit.push(lo);
        }
        crit.sort();
        crit.dedup();
        // crossings of g = level within each linear piece
        let mut pts = crit.clone();
        let n = crit.len();
        let mut probe = Vec::new();
        if n == 0 {
            probe.push((qi(-1), qi(1)));
        } else {
            probe.push((crit[0] - qi(1), crit[0]));
            for w in crit.windows(2) {
                probe.push((w[0], w[1]));
            }
            probe.push((crit[n - 1], crit[n - 1] + qi(1)));
        }
        for (a, b) in probe {
            if let (Some(ga), Some(gb)) = (self.g(a), self.g(b)) {
                if ga != gb {
                    let s = a + (level - ga) * (b - a) / (gb - ga);
                    let (lo_s, hi_s) = (a.min(b), a.max(b));
                    let is_first = n == 0 || b == crit[0];
                    let is_last = n == 0 || a == crit[n - 1];
                    let ok = (s >= lo_s || is_first) && (s <= hi_s || is_last);
                    if ok {
                        pts.push(s);
                    }
                }
            }
        }
        pts.sort();
        pts.dedup();
        if let Some(lo) = self.lo {
            pts.retain(|&s| s >= lo);
        }
        let mid = |i: usize| -> Q {
            match (i, pts.len()) {
                (_, 0) => qi(0),
                (0, _) => pts[0] - qi(1),
                (i, l) if i == l => pts[l - 1] + qi(1),
                (i, _) => (pts[i - 1] + pts[i]) / qi(2),
            }
        };
        let mut out = Vec::new();
        let start = if self.lo.is_some() { 1 } else { 0 };
        for i in start..pts.len() {
            let left = self.inside(mid(i), level);
            let right = self.inside(mid(i + 1), level);
            if left != right {
                let s = pts[i];
                if self.num.uncertain_at(s) || self.den.uncertain_at(s) {
                    return Err(Error::Precision(format!(
                        "fiber transition at s = {s} depends on unresolved coefficients"
                    )));
                }
                out.push(s);
            }
        }
        let first_inside = if self.lo.is_some() {
            self.inside(mid(1), level)
        } else {
            self.inside(mid(0), level)
        };
        Ok((out, first_inside))
    }
}

/// Tropical data of `p(base + w)` for a `base` known modulo `t^order`.
///
/// The coefficient of `w^k` is only determined up to
/// `min_{j>k} (α_j + (j - k) order)`, so it is evaluated with that cap.
fn shifted_tropical(p: &PuiseuxPolynomial, base: &PuiseuxSeries, order: Q) -> Tropical {
    let n = p.degree();
    let r = base.head(order);
    let mut bounds: Vec<Option<Q>> = vec![None; n + 1];
    let mut lines = Vec::with_capacity(n + 1);
    for k in (0..=n).rev() {
        let cap = (k + 1..=n).filter_map(|j| bounds[j].map(|a| a + order * qi((j - k) as i64))).min();
        let mut binom = 1.0f64;
        let mut coeffs = Vec::with_capacity(n + 1 - k);
        for i in k..=n {
            coeffs.push(p.coeffs()[i].scale(C64::new(binom, 0.0)));
            binom = binom * (i + 1) as f64 / (i + 1 - k) as f64;
        }
        let mut c = PuiseuxPolynomial::new(coeffs).eval_truncated(&r, cap);
        if let Some(t) = cap {
            c = c.truncate(t);
        }
        match (c.valuation(), c.truncation()) {
            (Some(v), _) => {
                bounds[k] = Some(v);
                lines.push((v, k as i64, true));
            }
            (None, Some(t)) => {
                bounds[k] = Some(t);
                lines.push((t, k as i64, false));
            }
            (None, None) => {}
        }
    }
    lines.reverse();
    Tropical { lines }
}

/// A generic residue direction used to probe fibers.
const PROBE_DIRECTION: C64 = C64::new(0.618_033_988_749_894_9, 0.381_966_011_250_105_1);

/// All preimages of `y` with their local degrees.
///
/// Every preimage separates a root of `f = c + t^q u` (for a generic residue
/// `u`) from a pole, so it is a boundary point of `f^{-1}(B(c, t^q))` on
/// such a path. The local degrees of a complete fiber sum to `deg f`.
/// Root expansions start one unit past the target radius and deepen on
/// precision failures.
pub fn preimages(f: &BerkMap, y: &TypeIIPoint) -> Result<Vec<(TypeIIPoint, usize)>> {
    let mut ord = y.radius.max(Q::zero()) + qi(1);
    let mut last_err = None;
    for _ in 0..6 {
        match preimages_at_order(f, y, ord) {
            Ok(v) => return Ok(v),
            Err(e @ Error::Precision(_)) => {
                last_err = Some(e);
                ord += qi(1);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn preimages_at_order(f: &BerkMap, y: &TypeIIPoint, order: Q) -> Result<Vec<(TypeIIPoint, usize)>> {
    let c = y.center.clone();
    let probe = c.add(&PuiseuxSeries::monomial(PROBE_DIRECTION, y.radius));
    let level = y.radius;
    let target = f.num.sub(&f.den.scale(&probe));
    let starts = newton_puiseux_roots(&target, order)?;
    let mut poles: Vec<Option<PuiseuxSeries>> = newton_puiseux_roots(&f.den, order)?
        .into_iter()
        .map(|r| Some(r.value))
        .collect();
    if f.num.degree() > f.den.degree() {
        poles.push(None);
    }
    let pc = f.num.sub(&f.den.scale(&c));
    let shifted = |base: &PuiseuxSeries| {
        (shifted_tropical(&pc, base, order), shifted_tropical(&f.den, base, order))
    };
    let start_data: Vec<_> = starts.iter().map(|r| shifted(&r.value)).collect();
    let pole_data: Vec<_> = poles.iter().map(|p| p.as_ref().map(shifted)).collect();
    let half = |base: &PuiseuxSeries, data: &(Tropical, Tropical), lo: Option<Q>| HalfPath {
        base: base.clone(),
        lo,
        num: data.0.clone(),
        den: data.1.clone(),
    };
    let mut found: Vec<TypeIIPoint> = Vec::new();
    let push = |p: &PuiseuxSeries, s: Q, found: &mut Vec<TypeIIPoint>| -> Result<()> {
        if let Some(tr) = p.truncation() {
            if tr < s {
                return Err(Error::Precision(format!("root precision {tr} below fiber point {s}")));
            }
        }
        let x = TypeIIPoint::new(p, s);
        if !found.contains(&x) {
            found.push(x);
        }
        Ok(())
    };
    for (st, sd) in starts.iter().zip(&start_data) {
        let r1 = &st.value;
        for (pole, pd) in poles.iter().zip(&pole_data) {
            match (pole, pd) {
                (None, _) | (_, None) => {
                    let h = half(r1, sd, None);
                    for s in h.transitions(level)?.0 {
                        push(&h.base, s, &mut found)?;
                    }
                }
                (Some(r2), Some(pd)) => {
                    let m = diff_valuation(r1, r2, CENTER_TOL).ok_or_else(|| {
                        Error::Precision("fiber root coincides with a pole".into())
                    })?;
                    let h1 = half(r1, sd, Some(m));
                    let h2 = half(r2, pd, Some(m));
                    let (t1, in1) = h1.transitions(level)?;
                    let (t2, in2) = h2.transitions(level)?;
                    for s in t1 {
                        push(&h1.base, s, &mut found)?;
                    }
                    for s in t2 {
                        push(&h2.base, s, &mut found)?;
                    }
                    if in1 != in2 {
                        push(r1, m, &mut found)?;
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for x in found {
        let (img, red) = image_and_reduction(f, &x)?;
        if img != *y {
            return Err(Error::Precision(format!("fiber point {x} maps to {img}, not {y}")));
        }
        out.push((x, red.degree()));
    }
    let total: usize = out.iter().map(|p| p.1).sum();
    if total != f.degree() {
        return Err(Error::Precision(format!("fiber of {y} has total degree {total}, not {}", f.degree())));
    }
    Ok(out)
}
