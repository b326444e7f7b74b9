//! Exact piecewise-linear functions on the rationals, and interval models.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::puiseux::{qi, Q};

/// Affine on `[start, end]`: `value = intercept + slope * s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LinearPiece {
    #[serde(serialize_with = "ser_q")]
    pub start: Q,
    #[serde(serialize_with = "ser_q")]
    pub end: Q,
    #[serde(serialize_with = "ser_q")]
    pub slope: Q,
    #[serde(serialize_with = "ser_q")]
    pub intercept: Q,
}

pub(crate) fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl LinearPiece {
    pub fn eval(&self, s: Q) -> Q {
        self.intercept + self.slope * s
    }

    fn through(start: Q, end: Q, v0: Q, v1: Q) -> Self {
        let slope = (v1 - v0) / (end - start);
        Self { start, end, slope, intercept: v0 - slope * start }
    }

    fn same_line(&self, o: &Self) -> bool {
        self.slope == o.slope && self.intercept == o.intercept
    }
}

/// A continuous PL function on a closed interval, extended affinely beyond it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlFunction {
    pub pieces: Vec<LinearPiece>,
}

impl PlFunction {
    pub fn domain(&self) -> (Q, Q) {
        (self.pieces[0].start, self.pieces.last().unwrap().end)
    }

    fn piece_at(&self, s: Q) -> &LinearPiece {
        self.pieces
            .iter()
            .find(|p| s <= p.end)
            .unwrap_or_else(|| self.pieces.last().unwrap())
    }

    pub fn eval(&self, s: Q) -> Q {
        self.piece_at(s).eval(s)
    }

    pub fn breakpoints(&self) -> Vec<Q> {
        self.pieces.windows(2).map(|w| w[0].end).collect()
    }

    /// All `s` in the domain with `f(s) = value`; constant pieces at that
    /// value are returned as intervals.
    pub fn solve(&self, value: Q) -> (Vec<Q>, Vec<(Q, Q)>) {
        let mut pts = Vec::new();
        let mut segs = Vec::new();
        for p in &self.pieces {
            if p.slope.is_zero() {
                if p.intercept == value {
                    segs.push((p.start, p.end));
                }
                continue;
            }
            let s = (value - p.intercept) / p.slope;
            if s >= p.start && s <= p.end && !pts.contains(&s) {
                pts.push(s);
            }
        }
        pts.retain(|s| !segs.iter().any(|&(a, b)| *s >= a && *s <= b));
        (pts, segs)
    }

    /// Pointwise difference on the common breakpoint refinement.
    pub fn sub(&self, o: &PlFunction) -> PlFunction {
        let (lo, hi) = self.domain();
        let mut cuts: Vec<Q> = self.breakpoints();
        cuts.extend(o.breakpoints().into_iter().filter(|&c| c > lo && c < hi));
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort();
        cuts.dedup();
        let mut pieces: Vec<LinearPiece> = cuts
            .windows(2)
            .map(|w| {
                let m = (w[0] + w[1]) / qi(2);
                let (a, b) = (self.piece_at(m), o.piece_at(m));
                LinearPiece {
                    start: w[0],
                    end: w[1],
                    slope: a.slope - b.slope,
                    intercept: a.intercept - b.intercept,
                }
            })
            .collect();
        merge(&mut pieces);
        PlFunction { pieces }
    }

    pub fn minimum(&self) -> (Q, Q) {
        let mut best = (self.pieces[0].start, self.pieces[0].eval(self.pieces[0].start));
        for p in &self.pieces {
            for s in [p.start, p.end] {
                let v = p.eval(s);
                if v < best.1 {
                    best = (s, v);
                }
            }
        }
        best
    }

    /// Minimum over `[lo, hi]` (clamped to the domain), at the smallest argument.
    pub fn minimum_on(&self, lo: Q, hi: Q) -> (Q, Q) {
        let (a, b) = self.domain();
        let (lo, hi) = (lo.max(a), hi.min(b));
        let mut cands = vec![lo, hi];
        cands.extend(self.breakpoints().into_iter().filter(|&s| s > lo && s < hi));
        cands.sort();
        let mut best = (lo, self.eval(lo));
        for s in cands {
            let v = self.eval(s);
            if v < best.1 {
                best = (s, v);
            }
        }
        best
    }
}

fn merge(pieces: &mut Vec<LinearPiece>) {
    let mut out: Vec<LinearPiece> = Vec::with_capacity(pieces.len());
    for p in pieces.drain(..) {
        match out.last_mut() {
            Some(last) if last.same_line(&p) => last.end = p.end,
            _ => out.push(p),
        }
    }
    *pieces = out;
}

const MAX_REFINE: u32 = 12;
/// Kink candidates with larger denominators are treated as spurious.
const MAX_KINK_DENOMINATOR: i64 = 2520;

/// Recovers an exact PL function on `[lo, hi]` from evaluations at multiples
/// of `step`.
///
/// Lines are read from runs of at least two collinear grid cells; between
/// consecutive lines the kink is their intersection, confirmed by one extra
/// evaluation. Regions that resist this are resampled at double density.
pub fn fit_pl<F>(f: F, lo: Q, hi: Q, step: Q) -> Result<PlFunction>
where
    F: Fn(Q) -> Result<Q>,
{
    if hi <= lo {
        let v = f(lo)?;
        return Ok(PlFunction {
            pieces: vec![LinearPiece { start: lo, end: lo, slope: Q::zero(), intercept: v }],
        });
    }
    // sample on multiples of `step` covering [lo, hi], then clip
    let k0 = (lo / step).floor().to_integer();
    let k1 = (hi / step).ceil().to_integer().max(k0 + 2);
    let mut pts = Vec::with_capacity((k1 - k0) as usize + 1);
    for k in k0..=k1 {
        let x = step * qi(k);
        pts.push((x, f(x)?));
    }
    let mut pieces = fit_region(&f, &pts, 0)?;
    merge(&mut pieces);
    for p in pieces.iter_mut() {
        p.start = p.start.max(lo);
        p.end = p.end.min(hi);
    }
    pieces.retain(|p| p.start < p.end);
    Ok(PlFunction { pieces })
}

fn fit_region<F>(f: &F, pts: &[(Q, Q)], depth: u32) -> Result<Vec<LinearPiece>>
where
    F: Fn(Q) -> Result<Q>,
{
    let cells: Vec<LinearPiece> =
        pts.windows(2).map(|w| LinearPiece::through(w[0].0, w[1].0, w[0].1, w[1].1)).collect();
    // maximal runs of equal slope, as index ranges over cells
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < cells.len() {
        let mut j = i + 1;
        while j < cells.len() && cells[j].same_line(&cells[i]) {
            j += 1;
        }
        if j - i >= 2 {
            runs.push((i, j));
        }
        i = j;
    }
    let line = |r: (usize, usize)| LinearPiece { start: pts[r.0].0, end: pts[r.1].0, ..cells[r.0] };
    let mut out = Vec::new();
    let mut cursor = 0usize;
    let mut prev: Option<LinearPiece> = None;
    let last = pts.len() - 1;
    for k in 0..=runs.len() {
        let next = runs.get(k).copied();
        let gap_end = next.map_or(last, |r| r.0);
        if gap_end > cursor {
            let right = next.map(line);
            out.extend(fill_gap(f, &pts[cursor..=gap_end], prev, right, depth)?);
        }
        if let Some(r) = next {
            out.push(line(r));
            prev = Some(line(r));
            cursor = r.1;
        }
    }
    Ok(out)
}

/// Pieces covering the points of a gap, given the lines on either side.
fn kink_holds<F>(f: &F, p: Q, expected: Q) -> Result<bool>
where
    F: Fn(Q) -> Result<Q>,
{
    match f(p) {
        Ok(v) => Ok(v == expected),
        Err(Error::Precision(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

fn fill_gap<F>(
    f: &F,
    pts: &[(Q, Q)],
    left: Option<LinearPiece>,
    right: Option<LinearPiece>,
    depth: u32,
) -> Result<Vec<LinearPiece>>
where
    F: Fn(Q) -> Result<Q>,
{
    let (a, b) = (pts[0].0, pts[pts.len() - 1].0);
    if let (Some(l), Some(r)) = (left, right) {
        if l.slope != r.slope {
            let p = (r.intercept - l.intercept) / (l.slope - r.slope);
            let on_lines = pts.iter().all(|&(x, v)| if x <= p { l.eval(x) == v } else { r.eval(x) == v });
            if p >= a && p <= b && on_lines && *p.denom() <= MAX_KINK_DENOMINATOR && kink_holds(f, p, l.eval(p))? {
                let mut v = Vec::new();
                if p > a {
                    v.push(LinearPiece { start: a, end: p, ..l });
                }
                if p < b {
                    v.push(LinearPiece { start: p, end: b, ..r });
                }
                return Ok(v);
            }
        }
    }
    if depth >= MAX_REFINE {
        if pts.len() == 2 {
            return Ok(vec![LinearPiece::through(a, b, pts[0].1, pts[1].1)]);
        }
        return Err(Error::Precision(format!(
            "samples on [{a}, {b}] do not lie on a piecewise-linear graph"
        )));
    }
    let mut fine = Vec::with_capacity(2 * pts.len());
    for w in pts.windows(2) {
        fine.push(w[0]);
        let m = (w[0].0 + w[1].0) / qi(2);
        fine.push((m, f(m)?));
    }
    fine.push(pts[pts.len() - 1]);
    let mut ext = Vec::with_capacity(fine.len() + 2);
    if let Some(l) = left {
        let x = a - (fine[1].0 - a);
        ext.push((x, l.eval(x)));
    }
    ext.extend(fine.iter().copied());
    if let Some(r) = right {
        let x = b + (b - fine[fine.len() - 2].0);
        ext.push((x, r.eval(x)));
    }
    let mut sub = fit_region(f, &ext, depth + 1)?;
    // drop the synthetic neighbours again
    for p in sub.iter_mut() {
        p.start = p.start.max(a);
        p.end = p.end.min(b);
    }
    sub.retain(|p| p.start < p.end);
    Ok(sub)
}

/// One branch `[start, end]` mapped affinely onto the model interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalPiece {
    #[serde(serialize_with = "ser_q")]
    pub start: Q,
    #[serde(serialize_with = "ser_q")]
    pub end: Q,
    pub slope: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PLIntervalModel {
    #[serde(serialize_with = "ser_q")]
    pub a: Q,
    #[serde(serialize_with = "ser_q")]
    pub b: Q,
    pub pieces: Vec<IntervalPiece>,
    /// Endpoint through which each gap between consecutive pieces exits.
    pub gap_exits: Vec<Side>,
}

impl PLIntervalModel {
    /// Pieces of lengths `(b - a)/d_i`, slopes `+d_1, -d_2, ...`, with the
    /// leftover length split evenly between the gaps.
    pub fn standard(a: Q, b: Q, degrees: &[i64]) -> Result<Self> {
        if degrees.is_empty() || b <= a {
            return Err(Error::Domain("model needs a nonempty interval and at least one piece".into()));
        }
        let len = b - a;
        let used: Q = degrees.iter().map(|&d| len / qi(d)).sum();
        if used > len {
            return Err(Error::Domain("pieces do not fit: sum of 1/d_i exceeds 1".into()));
        }
        let gap = if degrees.len() > 1 { (len - used) / qi(degrees.len() as i64 - 1) } else { Q::zero() };
        let mut pieces = Vec::new();
        let mut x = a;
        for (i, &d) in degrees.iter().enumerate() {
            let end = x + len / qi(d);
            let slope = if i % 2 == 0 { d } else { -d };
            pieces.push(IntervalPiece { start: x, end, slope });
            x = end + gap;
        }
        if let Some(last) = pieces.last_mut() {
            last.end = b;
        }
        let gap_exits = pieces[..pieces.len() - 1]
            .iter()
            .map(|p| if p.slope > 0 { Side::Upper } else { Side::Lower })
            .collect();
        let m = Self { a, b, pieces, gap_exits };
        m.validate(None)?;
        Ok(m)
    }

    pub fn k(&self) -> usize {
        self.pieces.len()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.pieces.iter().map(|p| p.slope.abs()).collect()
    }

    pub fn degree_sum(&self) -> i64 {
        self.degrees().iter().sum()
    }

    pub fn reciprocal_sum(&self) -> Q {
        self.degrees().iter().map(|&d| Q::new(1, d)).sum()
    }

    /// Image of `s` under the piece containing it, if any.
    pub fn map(&self, s: Q) -> Option<Q> {
        let p = self.pieces.iter().find(|p| s >= p.start && s <= p.end)?;
        Some(self.piece_map(p, s))
    }

    fn piece_map(&self, p: &IntervalPiece, s: Q) -> Q {
        if p.slope > 0 {
            self.a + qi(p.slope) * (s - p.start)
        } else {
            self.b + qi(p.slope) * (s - p.start)
        }
    }

    /// Inverse of piece `p` applied to `y ∈ [a, b]`.
    fn piece_inverse(&self, p: &IntervalPiece, y: Q) -> Q {
        if p.slope > 0 {
            p.start + (y - self.a) / qi(p.slope)
        } else {
            p.start + (y - self.b) / qi(p.slope)
        }
    }

    /// Checks ordering, endpoint coverage, surjectivity, alternation, slope
    /// sizes, and optionally the degree sum.
    pub fn validate(&self, total_degree: Option<i64>) -> Result<()> {
        let bad = |m: String| Err(Error::Classification(m));
        if self.pieces.is_empty() {
            return bad("interval model has no pieces".into());
        }
        if self.pieces[0].start != self.a || self.pieces.last().unwrap().end != self.b {
            return bad("pieces must start at a and end at b".into());
        }
        for w in self.pieces.windows(2) {
            if w[0].end > w[1].start {
                return bad(format!("pieces overlap near {}", w[0].end));
            }
            if w[0].slope.signum() == w[1].slope.signum() {
                return bad(format!("slopes do not alternate at {}", w[0].end));
            }
        }
        for p in &self.pieces {
            if p.slope.abs() < 2 {
                return bad(format!("piece [{}, {}] has slope {}", p.start, p.end, p.slope));
            }
            let (u, v) = (self.piece_map(p, p.start), self.piece_map(p, p.end));
            if u.min(v) != self.a || u.max(v) != self.b {
                return bad(format!("piece [{}, {}] does not map onto [a, b]", p.start, p.end));
            }
        }
        if self.gap_exits.len() + 1 != self.pieces.len() {
            return bad("one exit side per gap is required".into());
        }
        if let Some(d) = total_degree {
            if self.degree_sum() != d {
                return bad(format!("slope sum {} differs from degree {d}", self.degree_sum()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PlStep {
    #[serde(serialize_with = "ser_q")]
    Point(Q),
    Exit(Side),
}

/// Orbit of `s` for `n` steps; stops once the orbit falls into a gap.
pub fn pl_iterate(model: &PLIntervalModel, s: Q, n: usize) -> Vec<PlStep> {
    let mut out = vec![PlStep::Point(s)];
    let mut x = s;
    for _ in 0..n {
        match model.map(x) {
            Some(y) => {
                out.push(PlStep::Point(y));
                x = y;
            }
            None => {
                let gap = model.pieces.windows(2).position(|w| x > w[0].end && x < w[1].start);
                if let Some(g) = gap {
                    out.push(PlStep::Exit(model.gap_exits[g]));
                }
                break;
            }
        }
    }
    out
}

/// Closed intervals surviving `depth` steps, in increasing order.
pub fn pl_cantor_intervals(model: &PLIntervalModel, depth: usize) -> Vec<(Q, Q)> {
    let mut cur = vec![(model.a, model.b)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(cur.len() * model.k());
        for p in &model.pieces {
            for &(u, v) in &cur {
                let (x, y) = (model.piece_inverse(p, u), model.piece_inverse(p, v));
                next.push((x.min(y), x.max(y)));
            }
        }
        next.sort();
        cur = next;
    }
    cur
}

pub fn interval_length(iv: (Q, Q)) -> Q {
    iv.1 - iv.0
}

/// Whether Σ 1/d_i is strictly below, equal to, or above one.
pub fn reciprocal_sum_vs_one(model: &PLIntervalModel) -> std::cmp::Ordering {
    model.reciprocal_sum().cmp(&Q::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puiseux::q;

    fn mcmullen_model() -> PLIntervalModel {
        PLIntervalModel {
            a: qi(0),
            b: q(1, 3),
            pieces: vec![
                IntervalPiece { start: qi(0), end: q(1, 6), slope: 2 },
                IntervalPiece { start: q(2, 9), end: q(1, 3), slope: -3 },
            ],
            gap_exits: vec![Side::Upper],
        }
    }

    #[test]
    fn fit_recovers_tropical_minimum() {
        let f = |s: Q| Ok((s * qi(2)).min(qi(1) - s * qi(3)));
        let pl = fit_pl(f, qi(-1), qi(1), q(1, 7)).unwrap();
        assert_eq!(pl.breakpoints(), vec![q(1, 5)]);
        assert_eq!(pl.pieces[0].slope, qi(2));
        assert_eq!(pl.pieces[1].slope, qi(-3));
    }

    #[test]
    fn fit_resolves_close_kinks() {
        let f = |s: Q| Ok((s * qi(2)).min(q(1, 3)).max(s - q(1, 10)));
        let pl = fit_pl(f, qi(0), qi(1), q(1, 3)).unwrap();
        assert_eq!(pl.breakpoints(), vec![q(1, 6), q(13, 30)]);
    }

    #[test]
    fn mcmullen_orbit() {
        let m = mcmullen_model();
        m.validate(Some(5)).unwrap();
        let orbit = pl_iterate(&m, q(2, 9), 3);
        assert_eq!(
            orbit,
            vec![PlStep::Point(q(2, 9)), PlStep::Point(q(1, 3)), PlStep::Point(qi(0)), PlStep::Point(qi(0))]
        );
        assert_eq!(pl_iterate(&m, q(1, 5), 2), vec![PlStep::Point(q(1, 5)), PlStep::Exit(Side::Upper)]);
    }

    #[test]
    fn figure_model_counts() {
        let m = PLIntervalModel::standard(qi(0), qi(1), &[5, 4, 3]).unwrap();
        assert_eq!(m.degree_sum(), 12);
        assert_eq!(m.reciprocal_sum(), q(47, 60));
        let d1 = pl_cantor_intervals(&m, 1);
        assert_eq!(d1.iter().map(|&iv| interval_length(iv)).collect::<Vec<_>>(), vec![q(1, 5), q(1, 4), q(1, 3)]);
        assert_eq!(pl_cantor_intervals(&m, 5).len(), 243);
        assert_eq!(pl_cantor_intervals(&m, 0), vec![(qi(0), qi(1))]);
    }
}
