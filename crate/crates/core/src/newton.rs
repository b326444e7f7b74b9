//! Newton polygons and Newton–Puiseux root expansion.

use num_traits::One;
use rayon::prelude::*;

use crate::cpoly::CPoly;
use crate::error::{Error, Result};
use crate::ppoly::PuiseuxPolynomial;
use crate::puiseux::{qi, PuiseuxSeries, Q, C64, MAX_DENOMINATOR};

/// Relative radius used to group numerically coincident residue roots.
const RESIDUE_CLUSTER_TOL: f64 = 1e-3;
const MAX_NEWTON_STEPS: usize = 80;
const MAX_DEPTH: usize = 64;

/// One edge of the lower convex hull of `{(i, ν(c_i))}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygonSegment {
    pub slope: Q,
    /// Number of roots with valuation `-slope`, with multiplicity.
    pub length: usize,
    /// Index of the left vertex.
    pub start: usize,
}

impl NewtonPolygonSegment {
    pub fn root_valuation(&self) -> Q {
        -self.slope
    }
}

/// Lower convex hull of the coefficient valuations, collinear vertices merged.
pub fn newton_polygon(p: &PuiseuxPolynomial) -> Result<Vec<NewtonPolygonSegment>> {
    if p.is_zero() {
        return Err(Error::Domain("Newton polygon of the zero polynomial".into()));
    }
    let pts: Vec<(usize, Q)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation().map(|v| (i, v)))
        .collect();
    let mut segs = Vec::new();
    let mut cur = 0usize;
    while cur + 1 < pts.len() {
        let (i0, _) = pts[cur];
        let mut best = cur + 1;
        let mut best_slope = slope(pts[cur], pts[cur + 1]);
        for k in cur + 2..pts.len() {
            let s = slope(pts[cur], pts[k]);
            // ties resolve to the farthest point so collinear vertices merge
            if s <= best_slope {
                best_slope = s;
                best = k;
            }
        }
        let (i1, _) = pts[best];
        segs.push(NewtonPolygonSegment { slope: best_slope, length: i1 - i0, start: i0 });
        cur = best;
    }
    check_unknown_coefficients(p, &pts, &segs)?;
    Ok(segs)
}

fn slope(a: (usize, Q), b: (usize, Q)) -> Q {
    (b.1 - a.1) / Q::from_integer((b.0 - a.0) as i64)
}

/// A coefficient that is only known as `O(t^T)` must lie above the hull.
fn check_unknown_coefficients(
    p: &PuiseuxPolynomial,
    pts: &[(usize, Q)],
    segs: &[NewtonPolygonSegment],
) -> Result<()> {
    for (i, c) in p.coeffs().iter().enumerate() {
        if !c.is_zero() {
            continue;
        }
        let Some(t) = c.truncation() else { continue };
        let height = segs.iter().find(|s| s.start <= i && i <= s.start + s.length).map(|s| {
            let v0 = pts.iter().find(|(j, _)| *j == s.start).unwrap().1;
            v0 + s.slope * Q::from_integer((i - s.start) as i64)
        });
        if let Some(h) = height {
            if t <= h {
                return Err(Error::Precision(format!(
                    "coefficient of z^{i} is unresolved (O(t^{t})) below the Newton polygon"
                )));
            }
        }
    }
    Ok(())
}

/// A root over the Puiseux field. Multiplicity above one marks a cluster
/// that could not be separated at the working order.
#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxRoot {
    pub value: PuiseuxSeries,
    pub multiplicity: usize,
}

impl PuiseuxRoot {
    pub fn is_cluster(&self) -> bool {
        self.multiplicity > 1
    }
}

/// All roots of `p` expanded to exponents below `order`.
pub fn newton_puiseux_roots(p: &PuiseuxPolynomial, order: Q) -> Result<Vec<PuiseuxRoot>> {
    if p.is_zero() {
        return Err(Error::Domain("roots of the zero polynomial".into()));
    }
    let mut out = Vec::new();
    expand(p, &PuiseuxSeries::zero(), None, order, 0, &mut out)?;
    let total: usize = out.iter().map(|r| r.multiplicity).sum();
    if total != p.degree() {
        return Err(Error::Numerical(format!(
            "root count {total} does not match degree {}",
            p.degree()
        )));
    }
    Ok(out)
}

/// Roots of `p(w)` (with `ν(w) > floor` when given), reported as `base + w`.
fn expand(
    p: &PuiseuxPolynomial,
    base: &PuiseuxSeries,
    floor: Option<Q>,
    order: Q,
    depth: usize,
    out: &mut Vec<PuiseuxRoot>,
) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Precision("Newton–Puiseux recursion too deep".into()));
    }
    let m = p.zero_order();
    if m > 0 {
        let value = if p.is_exact() { base.clone() } else { base.truncate(order) };
        out.push(PuiseuxRoot { value, multiplicity: m });
    }
    let reduced = p.div_z_pow(m);
    if reduced.degree() == 0 {
        return Ok(());
    }
    let segs = newton_polygon(&reduced)?;
    for seg in segs {
        let gamma = seg.root_valuation();
        if let Some(f) = floor {
            if gamma <= f {
                continue;
            }
        }
        if *gamma.denom() > MAX_DENOMINATOR {
            return Err(Error::Precision(format!(
                "exponent denominator {} exceeds the ramification bound",
                gamma.denom()
            )));
        }
        if gamma >= order {
            out.push(PuiseuxRoot { value: base.truncate(order), multiplicity: seg.length });
            continue;
        }
        let residue = residue_polynomial(&reduced, &seg);
        let clusters = residue_roots(&residue, &seg)?;
        let found: Result<Vec<Vec<PuiseuxRoot>>> = clusters
            .par_iter()
            .map(|&(y, mult)| {
                let term = PuiseuxSeries::monomial(y, gamma);
                let mut local = Vec::new();
                if mult == 1 {
                    let w = newton_refine(&reduced, term, order)?;
                    local.push(PuiseuxRoot { value: base.add(&w).truncate(order), multiplicity: 1 });
                } else {
                    let shifted = reduced.taylor_shift(&term);
                    expand(&shifted, &base.add(&term), Some(gamma), order, depth + 1, &mut local)?;
                }
                Ok(local)
            })
            .collect();
        out.extend(found?.into_iter().flatten());
    }
    Ok(())
}

/// `Σ lc(c_i) y^{i - start}` over the points lying on the segment.
fn residue_polynomial(p: &PuiseuxPolynomial, seg: &NewtonPolygonSegment) -> CPoly {
    let v0 = p.coeff(seg.start).valuation().unwrap();
    let coeffs = (0..=seg.length)
        .map(|k| {
            let i = seg.start + k;
            let h = v0 + seg.slope * Q::from_integer(k as i64);
            p.coeff(i).coefficient(h)
        })
        .collect();
    CPoly::new(coeffs)
}

fn residue_roots(r: &CPoly, seg: &NewtonPolygonSegment) -> Result<Vec<(C64, usize)>> {
    let roots = r.roots().map_err(|e| {
        Error::Numerical(format!("residue equation for slope {} failed: {e}", seg.slope))
    })?;
    if roots.iter().any(|z| !z.norm().is_finite() || z.norm() == 0.0) {
        return Err(Error::Numerical(format!(
            "ill-conditioned residue equation on the segment of slope {} (length {})",
            seg.slope, seg.length
        )));
    }
    let mut clusters = crate::cpoly::cluster(&roots, RESIDUE_CLUSTER_TOL);
    // An m-fold cluster center is a simple root of the (m-1)-th derivative.
    for (z, m) in clusters.iter_mut() {
        if *m > 1 {
            let mut d = r.clone();
            for _ in 0..(*m - 1) {
                d = d.derivative();
            }
            let dd = d.derivative();
            for _ in 0..20 {
                let f = d.eval(*z);
                let g = dd.eval(*z);
                if g.norm() == 0.0 {
                    break;
                }
                let step = f / g;
                *z -= step;
                if step.norm() < 1e-16 * z.norm() {
                    break;
                }
            }
        }
    }
    Ok(clusters)
}

/// Lower bound `min_i (ν(c_i) + i ν(z))` for `ν(p(z))`.
fn valuation_floor(p: &PuiseuxPolynomial, z: &PuiseuxSeries) -> Option<Q> {
    let vz = z.valuation_bound().unwrap_or(qi(0));
    p.coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation_bound().map(|v| v + vz * qi(i as i64)))
        .min()
}

/// t-adic Newton iteration from an isolated first approximation.
fn newton_refine(p: &PuiseuxPolynomial, start: PuiseuxSeries, order: Q) -> Result<PuiseuxSeries> {
    let dp = p.derivative();
    let mut z = start;
    let mut precision = order;
    for _ in 0..MAX_NEWTON_STEPS {
        let floor = valuation_floor(&dp, &z);
        let mut extra = Q::one();
        let mut d = dp.eval_truncated(&z, floor.map(|l| l + extra));
        for _ in 0..8 {
            let Some(l) = floor else { break };
            if d.valuation().is_some() || d.truncation().is_some_and(|t| t < l + extra) {
                break;
            }
            extra *= qi(2);
            d = dp.eval_truncated(&z, Some(l + extra));
        }
        let Some(vd) = d.valuation() else {
            return Err(Error::Numerical("derivative vanishes at an isolated root".into()));
        };
        let cap = order + vd;
        let val = p.eval_truncated(&z, Some(cap));
        if val.is_zero() {
            if let Some(t) = val.truncation() {
                if t < cap {
                    precision = precision.min(t - vd);
                }
            }
            break;
        }
        let rel = (cap - val.valuation().unwrap()).max(Q::one());
        let d = dp.eval_truncated(&z, Some(vd + rel));
        let corr = val.mul(&d.invert_to(rel)?);
        let vc = corr.valuation().unwrap_or(order);
        z = z.sub(&corr).head(order);
        if vc >= order {
            break;
        }
    }
    Ok(z.truncate(precision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puiseux::{q, qi};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn s(terms: &[(Q, f64)]) -> PuiseuxSeries {
        PuiseuxSeries::from_terms(terms.iter().map(|&(e, x)| (e, c(x, 0.0))), None)
    }

    fn mcmullen_fixed() -> PuiseuxPolynomial {
        // z^5 - z^4 + t
        PuiseuxPolynomial::new(vec![
            s(&[(qi(1), 1.0)]),
            PuiseuxSeries::zero(),
            PuiseuxSeries::zero(),
            PuiseuxSeries::zero(),
            s(&[(qi(0), -1.0)]),
            s(&[(qi(0), 1.0)]),
        ])
    }

    #[test]
    fn polygon_of_fixed_point_equation() {
        let segs = newton_polygon(&mcmullen_fixed()).unwrap();
        assert_eq!(
            segs,
            vec![
                NewtonPolygonSegment { slope: q(-1, 4), length: 4, start: 0 },
                NewtonPolygonSegment { slope: qi(0), length: 1, start: 4 },
            ]
        );
    }

    #[test]
    fn polygon_simple_cases() {
        let p = PuiseuxPolynomial::new(vec![s(&[(qi(1), -1.0)]), PuiseuxSeries::zero(), PuiseuxSeries::one()]);
        let segs = newton_polygon(&p).unwrap();
        assert_eq!(segs, vec![NewtonPolygonSegment { slope: q(-1, 2), length: 2, start: 0 }]);
        let lin = PuiseuxPolynomial::new(vec![s(&[(qi(0), -1.0)]), PuiseuxSeries::one()]);
        assert_eq!(newton_polygon(&lin).unwrap()[0].slope, qi(0));
        assert!(newton_polygon(&PuiseuxPolynomial::zero()).is_err());
    }

    #[test]
    fn collinear_vertices_merge() {
        // 1 + t^{-1} z + t^{-2} z^2: all three points on one line
        let p = PuiseuxPolynomial::new(vec![s(&[(qi(0), 1.0)]), s(&[(qi(-1), 1.0)]), s(&[(qi(-2), 1.0)])]);
        let segs = newton_polygon(&p).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].length, 2);
    }

    #[test]
    fn square_roots_of_t() {
        let p = PuiseuxPolynomial::new(vec![s(&[(qi(1), -1.0)]), PuiseuxSeries::zero(), PuiseuxSeries::one()]);
        let roots = newton_puiseux_roots(&p, qi(4)).unwrap();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(r.value.valuation(), Some(q(1, 2)));
            assert!((r.value.leading_coefficient().norm() - 1.0).abs() < 1e-12);
            assert_eq!(r.value.terms().len(), 1);
        }
    }

    #[test]
    fn fixed_points_of_mcmullen_map() {
        let p = mcmullen_fixed();
        let roots = newton_puiseux_roots(&p, qi(3)).unwrap();
        assert_eq!(roots.len(), 5);
        let near_one: Vec<_> = roots.iter().filter(|r| r.value.valuation() == Some(qi(0))).collect();
        assert_eq!(near_one.len(), 1);
        // z = 1 - t + O(t^2)
        assert!((near_one[0].value.coefficient(qi(0)) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((near_one[0].value.coefficient(qi(1)) - c(-1.0, 0.0)).norm() < 1e-12);
        let small: Vec<_> = roots.iter().filter(|r| r.value.valuation() == Some(q(1, 4))).collect();
        assert_eq!(small.len(), 4);
        for r in small {
            let z = r.value.leading_coefficient();
            assert!((z.powi(4) - c(1.0, 0.0)).norm() < 1e-10);
            let v = p.eval(&r.value);
            assert!(v.valuation_bound().unwrap() >= qi(3));
        }
    }
}
