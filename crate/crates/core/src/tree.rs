//! Global dynamics on the finite tree spanned by the special ends of a map.
//!
//! Every ray `ζ(r, s)` lies on the geodesic from infinity to the end `r`.
//! Along such a line the image `F(ζ(r, s)) = ζ(a, R)` is summarized by two
//! exact PL functions of `s`: the coordinate `min(R, ν(a - r))` of its
//! projection to the line and its distance `R - min(R, ν(a - r))` off it.

use std::cell::RefCell;
use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::berkovich::{
    apply_map, diff_valuation, local_degree, preimages, tree_distance, BerkMap, TypeIIPoint,
    TypeIPoint, CENTER_TOL,
};
use crate::error::{Error, Result};
use crate::newton::newton_puiseux_roots;
use crate::pl::{fit_pl, ser_q, IntervalPiece, LinearPiece, PLIntervalModel, PlFunction, Side};
use crate::ppoly::PuiseuxPolynomial;
use crate::puiseux::{fmt_exponent, qi, PuiseuxSeries, Q};

/// Largest iterate degree handled by `periodic_ends`.
pub const ITERATE_DEGREE_CAP: usize = 700;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Zero,
    Infinity,
    Fixed,
    Critical,
}

#[derive(Clone, Debug)]
pub struct SkeletonEnd {
    pub point: TypeIPoint,
    pub kinds: Vec<EndKind>,
}

/// The part `s ≥ start` of the line toward `end` (the whole line when `start` is `None`).
#[derive(Clone, Debug)]
pub struct Ray {
    pub end: usize,
    pub base: PuiseuxSeries,
    pub start: Option<Q>,
    pub parent: Option<usize>,
    /// Sampled window `[lo, hi]` in the line coordinate.
    pub lo: Q,
    pub hi: Q,
    pub projection: PlFunction,
    pub offset: PlFunction,
}

impl Ray {
    pub fn point(&self, s: Q) -> TypeIIPoint {
        TypeIIPoint::new(&self.base, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum NodeRef {
    Vertex(usize),
    End(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub from: NodeRef,
    pub to: NodeRef,
    /// `None` for edges running out to an end.
    #[serde(serialize_with = "ser_opt_q")]
    pub length: Option<Q>,
    pub ray: usize,
}

pub(crate) fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug)]
pub struct Skeleton {
    pub ends: Vec<SkeletonEnd>,
    pub rays: Vec<Ray>,
    pub vertices: Vec<TypeIIPoint>,
    pub edges: Vec<Edge>,
}

impl Skeleton {
    pub fn axis(&self) -> &Ray {
        &self.rays[0]
    }
}

/// Line coordinate and off-line distance of `y` relative to the line toward `r`.
fn line_coordinates(y: &TypeIIPoint, r: &PuiseuxSeries) -> Result<(Q, Q)> {
    let big_r = y.radius();
    if y.contains(r) {
        if let Some(tr) = r.truncation() {
            if tr <= big_r {
                return Err(Error::Precision(format!(
                    "end known to order {} cannot place {y}",
                    fmt_exponent(tr)
                )));
            }
        }
        return Ok((big_r, Q::zero()));
    }
    let v = diff_valuation(y.center(), &r.head(big_r), CENTER_TOL).unwrap_or(big_r);
    Ok((v, big_r - v))
}

/// Sampling step along the line toward `base`: about `1/(4d)`, with a
/// denominator divisible by the ramification of `base`.
fn line_step(f: &BerkMap, base: &PuiseuxSeries) -> Q {
    let e = base.ramification().max(1);
    let fine = 4 * f.degree() as i64;
    Q::new(1, e * ((fine + e - 1) / e))
}

fn sample_line(f: &BerkMap, base: &PuiseuxSeries, lo: Q, hi: Q, step: Q) -> Result<(PlFunction, PlFunction)> {
    let memo: RefCell<HashMap<Q, (Q, Q)>> = RefCell::new(HashMap::new());
    let eval = |s: Q| -> Result<(Q, Q)> {
        if let Some(v) = memo.borrow().get(&s) {
            return Ok(*v);
        }
        let y = apply_map(f, &TypeIIPoint::new(base, s))?;
        let v = line_coordinates(&y, base)?;
        memo.borrow_mut().insert(s, v);
        Ok(v)
    };
    let projection = fit_pl(|s| eval(s).map(|v| v.0), lo, hi, step)?;
    let offset = fit_pl(|s| eval(s).map(|v| v.1), lo, hi, step)?;
    Ok((projection, offset))
}

fn push_end(ends: &mut Vec<SkeletonEnd>, p: TypeIPoint, kind: EndKind) {
    let same = |a: &TypeIPoint, b: &TypeIPoint| match (a, b) {
        (TypeIPoint::Infinity, TypeIPoint::Infinity) => true,
        (TypeIPoint::Finite(x), TypeIPoint::Finite(y)) => diff_valuation(x, y, CENTER_TOL)
            .is_none_or(|v| v >= x.truncation().unwrap_or(v + qi(1)).min(y.truncation().unwrap_or(v + qi(1)))),
        _ => false,
    };
    if let Some(e) = ends.iter_mut().find(|e| same(&e.point, &p)) {
        if !e.kinds.contains(&kind) {
            e.kinds.push(kind);
        }
    } else {
        ends.push(SkeletonEnd { point: p, kinds: vec![kind] });
    }
}

/// Hull of 0, infinity, the classical fixed points, and the critical points.
pub fn build_skeleton(f: &BerkMap, order: Q) -> Result<Skeleton> {
    let mut ends = Vec::new();
    push_end(&mut ends, TypeIPoint::Finite(PuiseuxSeries::zero()), EndKind::Zero);
    push_end(&mut ends, TypeIPoint::Infinity, EndKind::Infinity);
    for r in newton_puiseux_roots(&f.fixed_point_polynomial(), order)? {
        push_end(&mut ends, TypeIPoint::Finite(r.value), EndKind::Fixed);
    }
    for (p, _) in crate::berkovich::critical_ends(f, order)? {
        push_end(&mut ends, p, EndKind::Critical);
    }

    // joins of every finite end with the ends before it
    let zero_idx = 0;
    let mut bases: Vec<(usize, PuiseuxSeries, Option<Q>, Option<usize>)> =
        vec![(zero_idx, PuiseuxSeries::zero(), None, None)];
    for (i, e) in ends.iter().enumerate() {
        let r = match &e.point {
            TypeIPoint::Finite(r) if i != zero_idx => r,
            _ => continue,
        };
        let mut best: Option<(Q, usize)> = None;
        for (k, (_, b, _, _)) in bases.iter().enumerate() {
            let v = diff_valuation(r, b, CENTER_TOL).unwrap_or_else(|| r.truncation().unwrap_or(order));
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, k));
            }
        }
        let (s_join, parent) = best.unwrap();
        bases.push((i, r.clone(), Some(s_join), Some(parent)));
    }

    let mut marks: Vec<Q> = vec![Q::zero()];
    for (_, b, s, _) in &bases {
        if let Some(s) = s {
            marks.push(*s);
        }
        if let Some(v) = b.valuation() {
            marks.push(v);
        }
    }
    let lo_all = *marks.iter().min().unwrap() - qi(1);
    let hi_all = *marks.iter().max().unwrap() + qi(1);

    let rays: Result<Vec<Ray>> = bases
        .par_iter()
        .map(|(end, base, start, parent)| {
            let lo = start.unwrap_or(lo_all);
            let mut hi = hi_all.max(lo + qi(1));
            if let Some(tr) = base.truncation() {
                hi = hi.min(tr - qi(1)).max(lo);
            }
            let (projection, offset) = sample_line(f, base, lo, hi, line_step(f, base))?;
            Ok(Ray { end: *end, base: base.clone(), start: *start, parent: *parent, lo, hi, projection, offset })
        })
        .collect();
    let rays = rays?;

    // vertices: the Gauss point and all junctions
    let mut vertices: Vec<TypeIIPoint> = vec![TypeIIPoint::gauss()];
    for r in &rays[1..] {
        let v = r.point(r.start.unwrap());
        if !vertices.contains(&v) {
            vertices.push(v);
        }
    }
    let mut edges = Vec::new();
    for (ri, ray) in rays.iter().enumerate() {
        let mut on: Vec<(Q, usize)> = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| match ray.start {
                None => v.is_on_axis(),
                Some(s) => v.radius() >= s && v.contains(&ray.base),
            })
            .map(|(i, v)| (v.radius(), i))
            .collect();
        on.sort();
        on.dedup_by_key(|x| x.1);
        if ray.start.is_none() {
            edges.push(Edge { from: NodeRef::End(1), to: NodeRef::Vertex(on[0].1), length: None, ray: ri });
        }
        for w in on.windows(2) {
            edges.push(Edge {
                from: NodeRef::Vertex(w[0].1),
                to: NodeRef::Vertex(w[1].1),
                length: Some(w[1].0 - w[0].0),
                ray: ri,
            });
        }
        if let Some(last) = on.last() {
            edges.push(Edge { from: NodeRef::Vertex(last.1), to: NodeRef::End(ray.end), length: None, ray: ri });
        }
    }
    edges.retain(|e| e.length.is_none_or(|l| l > Q::zero()));
    Ok(Skeleton { ends, rays, vertices, edges })
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub point: TypeIIPoint,
    pub degree: usize,
}

/// A segment of a ray fixed pointwise; `to = None` means it runs to the end.
#[derive(Clone, Debug, Serialize)]
pub struct FixedSegment {
    pub ray: usize,
    #[serde(serialize_with = "ser_q")]
    pub from: Q,
    #[serde(serialize_with = "ser_opt_q")]
    pub to: Option<Q>,
}

/// Isolated fixed points together with the endpoints of pointwise-fixed segments.
pub fn fixed_points_with_degree(f: &BerkMap, sk: &Skeleton) -> Result<(Vec<FixedPoint>, Vec<FixedSegment>)> {
    let mut pts: Vec<TypeIIPoint> = Vec::new();
    let mut segs = Vec::new();
    for (ri, ray) in sk.rays.iter().enumerate() {
        let id = PlFunction {
            pieces: vec![LinearPiece { start: ray.lo, end: ray.hi, slope: Q::one(), intercept: Q::zero() }],
        };
        let g = ray.projection.sub(&id);
        let (roots, flat) = g.solve(Q::zero());
        for s in roots {
            if ray.offset.eval(s).is_zero() {
                pts.push(ray.point(s));
            }
        }
        for (a, b) in flat {
            let (_, off_flat) = ray.offset.solve(Q::zero());
            for (u, v) in off_flat {
                let (x, y) = (a.max(u), b.min(v));
                if x < y {
                    let to = if y == ray.hi { None } else { Some(y) };
                    segs.push(FixedSegment { ray: ri, from: x, to });
                    pts.push(ray.point(x));
                    if let Some(y) = to {
                        pts.push(ray.point(y));
                    }
                } else if x == y {
                    pts.push(ray.point(x));
                }
            }
        }
    }
    let mut out: Vec<FixedPoint> = Vec::new();
    for x in pts {
        if out.iter().any(|o| o.point == x) {
            continue;
        }
        if apply_map(f, &x)? != x {
            return Err(Error::Precision(format!("candidate fixed point {x} is not fixed")));
        }
        let degree = local_degree(f, &x)?;
        out.push(FixedPoint { point: x, degree });
    }
    out.sort_by_key(|a| a.point.radius());
    Ok((out, segs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndClass {
    Attracting,
    Indifferent,
    Repelling,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicEndRecord {
    pub period: usize,
    #[serde(serialize_with = "ser_points")]
    pub cycle: Vec<TypeIPoint>,
    /// `None` when the multiplier vanishes to working precision.
    #[serde(serialize_with = "ser_opt_q")]
    pub multiplier_valuation: Option<Q>,
    #[serde(serialize_with = "ser_opt_q")]
    pub translation_length: Option<Q>,
    pub classification: EndClass,
    /// Some root of the cycle is an unseparated cluster.
    pub unresolved: bool,
}

fn ser_points<S: serde::Serializer>(x: &[TypeIPoint], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(x.iter().map(|p| p.to_string()))
}

/// Largest period whose iterate stays within the degree cap.
pub fn max_period(d: usize) -> usize {
    let mut q = 0;
    let mut deg = 1usize;
    while deg.saturating_mul(d) < ITERATE_DEGREE_CAP {
        deg *= d;
        q += 1;
    }
    q.max(1)
}

/// `Ok(None)` for an exactly vanishing multiplier, `Err` when precision runs out.
fn multiplier_valuation(f: &BerkMap, w: &PuiseuxPolynomial, z: &PuiseuxSeries) -> std::result::Result<Option<Q>, ()> {
    let wz = w.eval(z);
    let den = f.denominator().eval(z).valuation().ok_or(())?;
    match wz.valuation() {
        Some(v) => Ok(Some(v - den * qi(2))),
        None if wz.is_exact() => Ok(None),
        None => Err(()),
    }
}

/// Cycles of periodic points with period up to `q_max`.
///
/// Roots are expanded to `order` and deepened (up to three more units) while
/// some cycle fails to close or has an undetermined multiplier.
pub fn periodic_ends(f: &BerkMap, q_max: usize, order: Q) -> Result<Vec<PeriodicEndRecord>> {
    if q_max == 0 {
        return Err(Error::Domain("q_max must be at least 1".into()));
    }
    let cap = max_period(f.degree());
    if q_max > cap {
        return Err(Error::Size(format!(
            "iterate degree {}^{q_max} exceeds {ITERATE_DEGREE_CAP}; use q_max <= {cap}",
            f.degree()
        )));
    }
    let mut out = Vec::new();
    let mut g = f.clone();
    for q in 1..=q_max {
        if q > 1 {
            g = f.compose(&g)?;
        }
        if q == 1 {
            out.extend(infinity_record(f));
        }
        let mut ord = order;
        let mut records = cycles_of_period(f, &g, q, ord)?;
        for _ in 0..3 {
            if !records.iter().any(|r| r.unresolved) {
                break;
            }
            ord += qi(1);
            records = cycles_of_period(f, &g, q, ord)?;
        }
        out.extend(records);
    }
    Ok(out)
}

/// Fixed end at infinity, when there is one, with its multiplier valuation.
fn infinity_record(f: &BerkMap) -> Option<PeriodicEndRecord> {
    let (p, q) = (f.numerator(), f.denominator());
    if p.degree() <= q.degree() {
        return None;
    }
    let val = if p.degree() == q.degree() + 1 {
        match (q.leading().valuation(), p.leading().valuation()) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        }
    } else {
        None
    };
    let translation_length = val.map(|v| -v);
    Some(PeriodicEndRecord {
        period: 1,
        cycle: vec![TypeIPoint::Infinity],
        multiplier_valuation: val,
        translation_length,
        classification: classify(translation_length),
        unresolved: false,
    })
}

/// Derivative valuation at infinity in the chart `1/z`, for finite `f(∞)`.
fn infinity_step_valuation(f: &BerkMap) -> std::result::Result<Option<Q>, ()> {
    let (p, q) = (f.numerator(), f.denominator());
    let lead_q = q.leading();
    let shifted = if p.degree() == q.degree() {
        let a = p.leading().div(lead_q).map_err(|_| ())?;
        p.sub(&q.scale(&a))
    } else {
        p.clone()
    };
    // f(1/w) - f(∞) vanishes to order deg Q - deg(P - aQ) at w = 0
    let below = q.degree().checked_sub(1).ok_or(())?;
    let b = shifted.coeff(below);
    if below > shifted.degree() || (b.is_zero() && b.is_exact()) {
        return Ok(None);
    }
    match (b.valuation(), lead_q.valuation()) {
        (Some(x), Some(y)) => Ok(Some(x - y)),
        _ => Err(()),
    }
}

/// Derivative valuation of `1/f` at a simple pole `r`.
fn pole_step_valuation(f: &BerkMap, r: &PuiseuxSeries) -> std::result::Result<Option<Q>, ()> {
    let dq = f.denominator().derivative().eval(r).valuation().ok_or(())?;
    let pr = f.numerator().eval(r).valuation().ok_or(())?;
    Ok(Some(dq - pr))
}

fn classify(translation_length: Option<Q>) -> EndClass {
    match translation_length {
        None => EndClass::Attracting,
        Some(l) if l > Q::zero() => EndClass::Repelling,
        Some(l) if l < Q::zero() => EndClass::Attracting,
        _ => EndClass::Indifferent,
    }
}

fn cycles_of_period(f: &BerkMap, g: &BerkMap, q: usize, order: Q) -> Result<Vec<PeriodicEndRecord>> {
    let w = f.wronskian();
    let roots = newton_puiseux_roots(&g.fixed_point_polynomial(), order)?;
    let n = roots.len();
    // index n stands for the point at infinity
    let inf = n;
    let nearest = |y: &PuiseuxSeries| {
        let closeness =
            |j: usize| diff_valuation(y, &roots[j].value, CENTER_TOL).unwrap_or(qi(i64::MAX / 4));
        (0..n).max_by_key(|&j| closeness(j))
    };
    let mut image = vec![usize::MAX; n + 1];
    for (i, r) in roots.iter().enumerate() {
        if f.denominator().eval(&r.value).valuation().is_none() {
            image[i] = inf;
            continue;
        }
        let Ok(y) = f.eval_to(&r.value, order) else { continue };
        image[i] = nearest(&y).unwrap();
    }
    let (pn, qd) = (f.numerator(), f.denominator());
    if pn.degree() <= qd.degree() && n > 0 {
        let at_inf = if pn.degree() == qd.degree() {
            pn.leading().div(qd.leading())
        } else {
            Ok(PuiseuxSeries::zero())
        };
        if let Ok(y) = at_inf {
            image[inf] = nearest(&y).unwrap();
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; n + 1];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut cycle = vec![i];
        seen[i] = true;
        let mut j = image[i];
        while j != usize::MAX && j != i && cycle.len() <= q {
            cycle.push(j);
            seen[j] = true;
            j = image[j];
        }
        let closed = j == i;
        if closed && cycle.len() != q {
            continue;
        }
        let mut val: Option<Q> = Some(Q::zero());
        let mut unknown = false;
        let mut add = |m: std::result::Result<Option<Q>, ()>| match m {
            Ok(Some(b)) => val = val.map(|a| a + b),
            Ok(None) => val = None,
            Err(()) => unknown = true,
        };
        for (pos, &k) in cycle.iter().enumerate() {
            let next = cycle[(pos + 1) % cycle.len()];
            if k == inf {
                add(infinity_step_valuation(f));
            } else if next == inf {
                add(pole_step_valuation(f, &roots[k].value));
            } else {
                add(multiplier_valuation(f, &w, &roots[k].value));
            }
        }
        let unresolved = unknown || !closed || cycle.iter().any(|&k| k != inf && roots[k].is_cluster());
        let translation_length = val.map(|v| -v);
        out.push(PeriodicEndRecord {
            period: q,
            cycle: cycle
                .iter()
                .map(|&k| if k == inf { TypeIPoint::Infinity } else { TypeIPoint::Finite(roots[k].value.clone()) })
                .collect(),
            multiplier_valuation: val,
            translation_length,
            classification: classify(translation_length),
            unresolved,
        });
    }
    Ok(out)
}

/// Axis preimages of `ζ(0, σ)` read off the PL data.
pub fn axis_preimages(sk: &Skeleton, sigma: Q) -> Vec<Q> {
    let axis = sk.axis();
    let (pts, segs) = axis.projection.solve(sigma);
    let mut out: Vec<Q> = pts.into_iter().filter(|&s| axis.offset.eval(s).is_zero()).collect();
    let (off_pts, off_segs) = axis.offset.solve(Q::zero());
    for (a, b) in segs {
        out.extend(off_pts.iter().copied().filter(|&s| s >= a && s <= b));
        for &(u, v) in &off_segs {
            if a.max(u) <= b.min(v) {
                out.push(a.max(u));
                out.push(b.min(v));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Invariant interval of the axis map through the fixed point `ζ(0, s0)`.
pub fn extract_interval_model(
    f: &BerkMap,
    sk: &Skeleton,
    s0: Q,
    depth: usize,
    ends: &[PeriodicEndRecord],
) -> Result<PLIntervalModel> {
    if ends.iter().any(|e| e.classification == EndClass::Repelling) {
        return Err(Error::Classification("repelling ends present".into()));
    }
    let axis = sk.axis();
    let mut set = vec![s0];
    let mut frontier = vec![s0];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &p in &frontier {
            for s in axis_preimages(sk, p) {
                if !set.contains(&s) {
                    set.push(s);
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    let a = *set.iter().min().unwrap();
    let b = *set.iter().max().unwrap();
    if a <= axis.lo || b >= axis.hi {
        return Err(Error::Precision("preimages leave the sampled axis window".into()));
    }
    if a == b {
        return Err(Error::Classification(format!("the fixed point at s = {a} has no other axis preimages")));
    }
    // subintervals of [a, b] mapped into [a, b] along the axis
    let mut cuts: Vec<Q> = axis.projection.breakpoints();
    cuts.extend(axis.offset.breakpoints());
    for v in [a, b] {
        cuts.extend(axis_preimages(sk, v));
    }
    cuts.push(a);
    cuts.push(b);
    cuts.retain(|&c| c >= a && c <= b);
    cuts.sort();
    cuts.dedup();
    let inside = |s: Q| {
        let y = axis.projection.eval(s);
        axis.offset.eval(s).is_zero() && y >= a && y <= b
    };
    let mut pieces: Vec<IntervalPiece> = Vec::new();
    let mut gap_exits = Vec::new();
    let mut pending_gap: Option<Q> = None;
    for w in cuts.windows(2) {
        let m = (w[0] + w[1]) / qi(2);
        if inside(m) {
            let slope = (axis.projection.eval(w[1]) - axis.projection.eval(w[0])) / (w[1] - w[0]);
            if !slope.is_integer() {
                return Err(Error::Precision(format!("non-integer slope {slope} on the axis")));
            }
            let slope = slope.to_integer();
            if let Some(g) = pending_gap.take() {
                let y = axis.projection.eval(g);
                gap_exits.push(if y >= b { Side::Upper } else { Side::Lower });
            }
            match pieces.last_mut() {
                Some(p) if p.end == w[0] && p.slope == slope => p.end = w[1],
                _ => pieces.push(IntervalPiece { start: w[0], end: w[1], slope }),
            }
        } else if !pieces.is_empty() {
            pending_gap.get_or_insert(m);
        }
    }
    let model = PLIntervalModel { a, b, pieces, gap_exits };
    model.validate(Some(f.degree() as i64))?;
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE", tag = "verdict")]
pub enum Verdict {
    Nested {
        #[serde(serialize_with = "ser_q")]
        reciprocal_sum: Q,
    },
    LattesLikeBoundary,
    UnboundedSpectrum {
        #[serde(serialize_with = "ser_q")]
        witness_length: Q,
        witness_period: usize,
    },
}

pub fn nestedness_verdict(model: Option<&PLIntervalModel>, ends: &[PeriodicEndRecord]) -> Result<Verdict> {
    if let Some(e) = ends
        .iter()
        .filter(|e| e.classification == EndClass::Repelling)
        .min_by_key(|e| (e.period, e.translation_length))
    {
        return Ok(Verdict::UnboundedSpectrum {
            witness_length: e.translation_length.unwrap(),
            witness_period: e.period,
        });
    }
    let model = model.ok_or_else(|| Error::Classification("no interval model and no repelling ends".into()))?;
    let sum = model.reciprocal_sum();
    if sum < Q::one() {
        Ok(Verdict::Nested { reciprocal_sum: sum })
    } else if sum == Q::one() {
        Ok(Verdict::LattesLikeBoundary)
    } else {
        Err(Error::Classification(format!("reciprocal sum {sum} exceeds one")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationRadius {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub basepoint: TypeIIPoint,
    /// Every sampled fiber had local degrees summing to `d`.
    pub fibers_complete: bool,
}

/// `max` distance from `x` to its preimages, with the fiber's degree total.
pub fn preimage_spread(f: &BerkMap, x: &TypeIIPoint) -> Result<(Q, usize)> {
    let pre = preimages(f, x)?;
    let total = pre.iter().map(|p| p.1).sum();
    let spread = pre.iter().map(|(y, _)| tree_distance(x, y)).max().unwrap_or(Q::zero());
    Ok((spread, total))
}

/// Min-max of preimage distances over the rays toward `0`, `∞` and the fixed ends.
pub fn normalization_radius(f: &BerkMap, sk: &Skeleton) -> Result<NormalizationRadius> {
    let rep = conjugacy_classes(f, sk);
    let d = f.degree();
    let core: Vec<bool> = sk
        .rays
        .iter()
        .map(|r| sk.ends[r.end].kinds.iter().any(|k| *k != EndKind::Critical))
        .collect();
    let reps: Vec<usize> = (0..sk.rays.len()).filter(|&i| rep[i] == i && core[i]).collect();
    let fits: Result<Vec<(usize, PlFunction, bool)>> = reps
        .par_iter()
        .map(|&ri| {
            let ray = &sk.rays[ri];
            let members = (0..sk.rays.len()).filter(|&j| rep[j] == ri && core[j]);
            let lo = members.clone().map(|j| sk.rays[j].lo).min().unwrap();
            let hi = members.map(|j| sk.rays[j].hi).max().unwrap();
            let complete = RefCell::new(true);
            let rho = fit_pl(
                |s| {
                    let (v, total) = preimage_spread(f, &ray.point(s))?;
                    if total != d {
                        *complete.borrow_mut() = false;
                    }
                    Ok(v)
                },
                lo,
                hi,
                line_step(f, &ray.base),
            )?;
            Ok((ri, rho, complete.into_inner()))
        })
        .collect();
    let fits = fits?;
    let complete = fits.iter().all(|r| r.2);
    let mut best: Option<(Q, Q, usize)> = None;
    for (j, ray) in sk.rays.iter().enumerate().filter(|(j, _)| core[*j]) {
        let (ri, rho, _) = fits.iter().find(|x| x.0 == rep[j]).unwrap();
        let (s, v) = rho.minimum_on(ray.lo, ray.hi);
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, s, *ri));
        }
    }
    let (value, s, ri) = best.unwrap();
    Ok(NormalizationRadius { value, basepoint: sk.rays[ri].point(s), fibers_complete: complete })
}

/// Representative ray for each ray, identifying rays whose bases are Galois
/// conjugate. Conjugation commutes with a map whose coefficients lie in
/// `C((t))`, so it carries fibers to fibers isometrically.
fn conjugacy_classes(f: &BerkMap, sk: &Skeleton) -> Vec<usize> {
    let n = sk.rays.len();
    let mut rep: Vec<usize> = (0..n).collect();
    if f.numerator().ramification() != 1 || f.denominator().ramification() != 1 {
        return rep;
    }
    for j in 0..n {
        'search: for i in 0..j {
            if rep[i] != i {
                continue;
            }
            let depth = sk.rays[i].hi.max(sk.rays[j].hi);
            let (a, b) = (sk.rays[i].base.head(depth), sk.rays[j].base.head(depth));
            let order = num_integer::lcm(a.ramification(), b.ramification());
            for k in 0..order {
                match diff_valuation(&a.galois_conjugate(k), &b, CENTER_TOL) {
                    Some(v) if v < depth => continue,
                    _ => {
                        rep[j] = i;
                        break 'search;
                    }
                }
            }
        }
    }
    rep
}

/// Predicted modulus growth per unit of `-log|t|`, before the `1/2π` factor.
pub fn predicted_modulus_growth(x: &TypeIIPoint, y: &TypeIIPoint) -> Q {
    tree_distance(x, y)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisOptions {
    pub q_max: usize,
    pub depth: usize,
    /// Expansion order for the skeleton ends.
    #[serde(serialize_with = "ser_q")]
    pub order: Q,
    /// Starting expansion order for periodic points.
    #[serde(serialize_with = "ser_q")]
    pub ends_order: Q,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { q_max: 3, depth: 6, order: qi(4), ends_order: qi(1) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub degree: usize,
    pub q_max_used: usize,
    pub fixed_points: Vec<FixedPoint>,
    pub fixed_segments: Vec<FixedSegment>,
    pub periodic_ends: Vec<PeriodicEndRecord>,
    pub interval_model: Option<PLIntervalModel>,
    pub interval_model_absence: Option<String>,
    pub verdict: Option<Verdict>,
    pub verdict_error: Option<String>,
    pub normalization_radius: Option<NormalizationRadius>,
    pub normalization_error: Option<String>,
    pub checks: Vec<InvariantCheck>,
    pub notes: Vec<String>,
}

/// Axis coordinate of the fixed point of degree ≥ 2 closest to the Gauss point.
pub fn model_basepoint(fixed: &[FixedPoint]) -> Option<Q> {
    fixed
        .iter()
        .filter(|p| p.degree >= 2 && p.point.is_on_axis())
        .min_by_key(|p| (p.point.radius().abs(), p.point.radius()))
        .map(|p| p.point.radius())
}

pub fn analyze(f: &BerkMap, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    analyze_staged(f, opts).map_err(|(_, e)| e)
}

/// Like [`analyze`], naming the stage that failed.
pub fn analyze_staged(f: &BerkMap, opts: &AnalysisOptions) -> std::result::Result<AnalysisReport, (&'static str, Error)> {
    let mut notes = Vec::new();
    let cap = max_period(f.degree());
    let q_max = if opts.q_max > cap {
        notes.push(format!("q_max lowered from {} to {cap} by the iterate degree cap", opts.q_max));
        cap
    } else {
        opts.q_max
    };
    let sk = build_skeleton(f, opts.order).map_err(|e| ("skeleton", e))?;
    let (fixed_points, fixed_segments) = fixed_points_with_degree(f, &sk).map_err(|e| ("fixed_points", e))?;
    let ends = periodic_ends(f, q_max, opts.ends_order).map_err(|e| ("periodic_ends", e))?;
    let (interval_model, interval_model_absence) = match model_basepoint(&fixed_points) {
        None => (None, Some("no fixed point of degree >= 2 on the axis".to_string())),
        Some(x0) => match extract_interval_model(f, &sk, x0, opts.depth, &ends) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    let (verdict, verdict_error) = match nestedness_verdict(interval_model.as_ref(), &ends) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (normalization_radius, normalization_error) = match normalization_radius(f, &sk) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut checks = Vec::new();
    checks.push(InvariantCheck {
        name: "fixed points verified by apply_map".into(),
        passed: true,
        detail: format!("{} points", fixed_points.len()),
    });
    let repelling = ends.iter().any(|e| e.classification == EndClass::Repelling);
    checks.push(InvariantCheck {
        name: "verdict consistent with end table".into(),
        passed: match &verdict {
            Some(Verdict::Nested { .. }) | Some(Verdict::LattesLikeBoundary) => !repelling,
            Some(Verdict::UnboundedSpectrum { .. }) => repelling,
            None => true,
        },
        detail: format!("repelling ends present: {repelling}"),
    });
    if let Some(m) = &interval_model {
        let mut ok = true;
        for p in &m.pieces {
            for s in [p.start, p.end] {
                let y = sk.axis().projection.eval(s);
                let back = axis_preimages(&sk, y);
                ok &= back.contains(&s);
            }
        }
        checks.push(InvariantCheck {
            name: "piece endpoints return under PL inversion".into(),
            passed: ok,
            detail: format!("{} pieces", m.pieces.len()),
        });
    }
    if let Some(r) = &normalization_radius {
        let (g, total) = preimage_spread(f, &TypeIIPoint::gauss()).map_err(|e| ("checks", e))?;
        checks.push(InvariantCheck {
            name: "normalization radius bounded by Gauss-point spread".into(),
            passed: r.value <= g,
            detail: format!("{} <= {}", r.value, g),
        });
        checks.push(InvariantCheck {
            name: "fiber degrees sum to d".into(),
            passed: r.fibers_complete && total == f.degree(),
            detail: format!("Gauss fiber total {total}"),
        });
    }
    Ok(AnalysisReport {
        degree: f.degree(),
        q_max_used: q_max,
        fixed_points,
        fixed_segments,
        periodic_ends: ends,
        interval_model,
        interval_model_absence,
        verdict,
        verdict_error,
        normalization_radius,
        normalization_error,
        checks,
        notes,
    })
}
