//! Truncated Puiseux series over the complex numbers.
//!
//! Exponents are exact rationals, coefficients are `Complex64`. A series
//! either carries a truncation order `T` (everything at exponent `>= T` is
//! unknown) or is exact, in which case it is a finite sum of monomials.
//! The zero series is the exact series with no terms.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = Rational64;
pub type C64 = Complex64;

/// Relative magnitude below which a cancelled coefficient is treated as zero.
pub const COEFF_TOL: f64 = 1e-9;
/// Default relative truncation order used by inversion.
pub const DEFAULT_ORDER: i64 = 6;
/// Largest exponent denominator accepted by the root expander.
pub const MAX_DENOMINATOR: i64 = 5040;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

fn min_opt(a: Option<Q>, b: Option<Q>) -> Option<Q> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// Accumulates contributions per exponent and applies the cancellation rule.
#[derive(Default)]
pub(crate) struct TermAccumulator {
    raw: Vec<(Q, C64)>,
    denom: i64,
}

impl TermAccumulator {
    pub(crate) fn push(&mut self, e: Q, c: C64) {
        let d = *e.denom();
        self.denom = if self.denom == 0 { d } else { self.denom.lcm(&d) };
        self.raw.push((e, c));
    }

    pub(crate) fn finish(self, trunc: Option<Q>) -> PuiseuxSeries {
        let l = self.denom.max(1);
        let mut keyed: Vec<(i64, C64)> =
            self.raw.into_iter().map(|(e, c)| (e.numer() * (l / e.denom()), c)).collect();
        keyed.sort_unstable_by_key(|x| x.0);
        let mut terms = Vec::new();
        let mut i = 0;
        while i < keyed.len() {
            let key = keyed[i].0;
            let (mut sum, mut scale) = (C64::zero(), 0.0f64);
            while i < keyed.len() && keyed[i].0 == key {
                sum += keyed[i].1;
                scale = scale.max(keyed[i].1.norm());
                i += 1;
            }
            let e = Q::new(key, l);
            if trunc.is_none_or(|t| e < t) && sum.norm() > COEFF_TOL * scale && sum.norm() > 0.0 {
                terms.push((e, sum));
            }
        }
        PuiseuxSeries { terms, trunc }
    }
}

/// A truncated Puiseux series `Σ c_j t^{e_j} + O(t^T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxSeries {
    terms: Vec<(Q, C64)>,
    trunc: Option<Q>,
}

impl PuiseuxSeries {
    pub fn zero() -> Self {
        Self { terms: Vec::new(), trunc: None }
    }

    pub fn one() -> Self {
        Self::constant(C64::one())
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(c, Q::zero())
    }

    pub fn real(c: f64) -> Self {
        Self::constant(C64::new(c, 0.0))
    }

    pub fn monomial(c: C64, e: Q) -> Self {
        if c.norm() == 0.0 {
            return Self::zero();
        }
        Self { terms: vec![(e, c)], trunc: None }
    }

    /// `t^e`
    pub fn t_pow(e: Q) -> Self {
        Self::monomial(C64::one(), e)
    }

    /// `O(t^order)`: nothing known below `order`.
    pub fn big_o(order: Q) -> Self {
        Self { terms: Vec::new(), trunc: Some(order) }
    }

    /// Builds a series from arbitrary (possibly unsorted, repeated) terms.
    pub fn from_terms<I: IntoIterator<Item = (Q, C64)>>(terms: I, trunc: Option<Q>) -> Self {
        let mut acc = TermAccumulator::default();
        for (e, c) in terms {
            acc.push(e, c);
        }
        acc.finish(trunc)
    }

    pub fn terms(&self) -> &[(Q, C64)] {
        &self.terms
    }

    /// Truncation order; `None` means the series is exact.
    pub fn truncation(&self) -> Option<Q> {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    /// True when no term is stored (exact zero or `O(t^T)`).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Valuation: exponent of the first stored term, `None` for +∞.
    pub fn valuation(&self) -> Option<Q> {
        self.terms.first().map(|t| t.0)
    }

    /// Valuation lower bound, using the truncation order for `O(t^T)`.
    pub fn valuation_bound(&self) -> Option<Q> {
        self.valuation().or(self.trunc)
    }

    pub fn leading(&self) -> Option<(Q, C64)> {
        self.terms.first().copied()
    }

    pub fn leading_coefficient(&self) -> C64 {
        self.leading().map_or(C64::zero(), |t| t.1)
    }

    /// Coefficient of `t^e` (zero if absent).
    pub fn coefficient(&self, e: Q) -> C64 {
        self.terms
            .iter()
            .find(|(x, _)| *x == e)
            .map_or(C64::zero(), |t| t.1)
    }

    /// Largest exponent denominator appearing in the stored terms.
    pub fn ramification(&self) -> i64 {
        self.terms.iter().fold(1, |l, (e, _)| l.lcm(e.denom()))
    }

    /// Image under `t^e ↦ exp(2πi k e) t^e`, a field automorphism over `C((t))`.
    pub fn galois_conjugate(&self, k: i64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|&(e, c)| {
                let turn = (e * Q::from_integer(k)).fract();
                let angle = std::f64::consts::TAU * (*turn.numer() as f64 / *turn.denom() as f64);
                (e, c * C64::from_polar(1.0, angle))
            })
            .collect();
        Self { terms, trunc: self.trunc }
    }

    /// Drops every term at exponent `>= order` and records the truncation.
    pub fn truncate(&self, order: Q) -> Self {
        let trunc = min_opt(self.trunc, Some(order));
        let terms = self.terms.iter().filter(|(e, _)| *e < order).copied().collect();
        Self { terms, trunc }
    }

    /// Keeps only the terms with exponent `< order` and marks the result exact.
    pub fn head(&self, order: Q) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| *e < order).copied().collect();
        Self { terms, trunc: None }
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|&(e, c)| (e, -c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        if k.norm() == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|&(e, c)| (e, c * k)).collect(),
            trunc: self.trunc,
        }
    }

    /// Multiplies by `t^shift`.
    pub fn shift(&self, shift: Q) -> Self {
        Self {
            terms: self.terms.iter().map(|&(e, c)| (e + shift, c)).collect(),
            trunc: self.trunc.map(|t| t + shift),
        }
    }

    pub fn mul_monomial(&self, c: C64, e: Q) -> Self {
        self.scale(c).shift(e)
    }

    pub fn add(&self, other: &Self) -> Self {
        let trunc = min_opt(self.trunc, other.trunc);
        let mut acc = TermAccumulator::default();
        for &(e, c) in self.terms.iter().chain(other.terms.iter()) {
            acc.push(e, c);
        }
        acc.finish(trunc)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_truncated(other, None)
    }

    /// Cauchy product, optionally discarding everything at exponent `>= cap`.
    pub fn mul_truncated(&self, other: &Self, cap: Option<Q>) -> Self {
        let va = self.valuation_bound();
        let vb = other.valuation_bound();
        // Exact zero absorbs everything.
        if (self.is_zero() && self.is_exact()) || (other.is_zero() && other.is_exact()) {
            return Self::zero();
        }
        let from_a = match (self.trunc, vb) {
            (Some(t), Some(v)) => Some(t + v),
            _ => None,
        };
        let from_b = match (other.trunc, va) {
            (Some(t), Some(v)) => Some(t + v),
            _ => None,
        };
        let trunc = min_opt(min_opt(from_a, from_b), cap);
        let mut l = 1i64;
        for &(e, _) in self.terms.iter().chain(other.terms.iter()) {
            l = l.lcm(e.denom());
        }
        if let Some(t) = trunc {
            l = l.lcm(t.denom());
        }
        let key = |e: &Q| e.numer() * (l / e.denom());
        let a: Vec<(i64, C64)> = self.terms.iter().map(|(e, c)| (key(e), *c)).collect();
        let b: Vec<(i64, C64)> = other.terms.iter().map(|(e, c)| (key(e), *c)).collect();
        let cut = trunc.map(|t| key(&t));
        let vb_key = b.first().map_or(0, |x| x.0);
        let mut prods: Vec<(i64, C64)> = Vec::with_capacity(a.len() * b.len());
        for &(ka, ca) in &a {
            if cut.is_some_and(|t| ka + vb_key >= t) {
                break;
            }
            for &(kb, cb) in &b {
                let k = ka + kb;
                if cut.is_some_and(|t| k >= t) {
                    break;
                }
                prods.push((k, ca * cb));
            }
        }
        prods.sort_unstable_by_key(|x| x.0);
        let mut terms = Vec::new();
        let mut i = 0;
        while i < prods.len() {
            let k = prods[i].0;
            let (mut sum, mut scale) = (C64::zero(), 0.0f64);
            while i < prods.len() && prods[i].0 == k {
                sum += prods[i].1;
                scale = scale.max(prods[i].1.norm());
                i += 1;
            }
            if sum.norm() > COEFF_TOL * scale && sum.norm() > 0.0 {
                terms.push((Q::new(k, l), sum));
            }
        }
        PuiseuxSeries { terms, trunc }
    }

    /// Multiplicative inverse, known to `rel_order` beyond the leading term.
    pub fn invert_to(&self, rel_order: Q) -> Result<Self> {
        let (v, c0) = self
            .leading()
            .ok_or_else(|| Error::Domain("inversion of the zero series".into()))?;
        let rel = match self.trunc {
            Some(t) => rel_order.min(t - v),
            None => rel_order,
        };
        // self = c0 t^v (1 + u), ν(u) > 0
        let inv_c0 = C64::one() / c0;
        let u = Self {
            terms: self.terms[1..]
                .iter()
                .map(|&(e, c)| (e - v, c * inv_c0))
                .filter(|(e, _)| *e < rel)
                .collect(),
            trunc: None,
        };
        let mut result = Self::one();
        if let Some(du) = u.valuation() {
            let neg_u = u.neg();
            let mut power = Self::one();
            let mut k = 0i64;
            loop {
                k += 1;
                if du * qi(k) >= rel {
                    break;
                }
                power = power.mul_truncated(&neg_u, Some(rel));
                if power.is_zero() {
                    break;
                }
                result = result.add(&power);
            }
        }
        let result = Self { terms: result.terms, trunc: Some(rel) };
        Ok(result.mul_monomial(inv_c0, -v))
    }

    pub fn invert(&self) -> Result<Self> {
        self.invert_to(qi(DEFAULT_ORDER))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.invert()?))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Numerical realization `Σ c_j t0^{e_j}` on the principal branch.
    pub fn evaluate(&self, t0: C64) -> Result<C64> {
        if t0.norm() == 0.0 {
            if self.terms.iter().any(|(e, _)| e.is_negative()) {
                return Err(Error::Domain("evaluation at t = 0 with negative exponents".into()));
            }
            return Ok(self.coefficient(Q::zero()));
        }
        let log_t = t0.ln();
        let mut sum = C64::zero();
        for &(e, c) in &self.terms {
            let ef = *e.numer() as f64 / *e.denom() as f64;
            sum += c * (log_t * ef).exp();
        }
        Ok(sum)
    }

    /// Equality of the known parts up to (exclusive) exponent `order`,
    /// comparing coefficients with relative tolerance `tol`.
    pub fn approx_eq_to(&self, other: &Self, order: Q, tol: f64) -> bool {
        let d = self.sub(other);
        d.terms.iter().all(|(e, c)| {
            if *e >= order {
                return true;
            }
            let scale = self.coefficient(*e).norm().max(other.coefficient(*e).norm()).max(1.0);
            c.norm() <= tol * scale
        })
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return match self.trunc {
                None => write!(f, "0"),
                Some(t) => write!(f, "O(t^{})", fmt_exponent(t)),
            };
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_coefficient(c))?;
            if !e.is_zero() {
                write!(f, "*t^{}", fmt_exponent(e))?;
            }
        }
        if let Some(t) = self.trunc {
            write!(f, " + O(t^{})", fmt_exponent(t))?;
        }
        Ok(())
    }
}

pub fn fmt_exponent(e: Q) -> String {
    if e.is_integer() {
        format!("{}", e.numer())
    } else {
        format!("({}/{})", e.numer(), e.denom())
    }
}

fn fmt_coefficient(c: C64) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let (re, im) = (clean(c.re), clean(c.im));
    if im == 0.0 {
        format!("{}", re)
    } else if re == 0.0 {
        format!("({}i)", im)
    } else {
        format!("({}{}{}i)", re, if im < 0.0 { "-" } else { "+" }, im.abs())
    }
}

/// Compares two extended valuations where `None` is +∞.
pub fn cmp_val(a: Option<Q>, b: Option<Q>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

pub fn min_val(a: Option<Q>, b: Option<Q>) -> Option<Q> {
    match cmp_val(a, b) {
        Ordering::Greater => b,
        _ => a,
    }
}

pub fn q_to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn cancellation_leaves_half_power() {
        let a = PuiseuxSeries::from_terms([(q(1, 2), c(1.0)), (qi(0), c(1.0))], None);
        let s = a.add(&PuiseuxSeries::real(-1.0));
        assert_eq!(s, PuiseuxSeries::t_pow(q(1, 2)));
    }

    #[test]
    fn add_identity_and_sum() {
        let a = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(1.0))], None);
        assert_eq!(a.add(&PuiseuxSeries::zero()), a);
        let b = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(-1.0))], None);
        assert_eq!(a.add(&b), PuiseuxSeries::real(2.0));
    }

    #[test]
    fn products() {
        let p = PuiseuxSeries::t_pow(q(1, 2)).mul(&PuiseuxSeries::t_pow(q(1, 3)));
        assert_eq!(p, PuiseuxSeries::t_pow(q(5, 6)));
        let a = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(1.0))], None);
        let b = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(-1.0))], None);
        let expect = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(2), c(-1.0))], None);
        assert_eq!(a.mul(&b), expect);
        assert!(a.mul(&PuiseuxSeries::zero()).is_zero());
    }

    #[test]
    fn truncated_product_order() {
        let a = PuiseuxSeries::from_terms([(qi(1), c(1.0))], Some(qi(3)));
        let b = PuiseuxSeries::from_terms([(q(1, 2), c(2.0))], Some(qi(2)));
        let p = a.mul(&b);
        // min(3 + 1/2, 2 + 1)
        assert_eq!(p.truncation(), Some(qi(3)));
        assert_eq!(p.valuation(), Some(q(3, 2)));
    }

    #[test]
    fn inversions() {
        let a = PuiseuxSeries::t_pow(qi(-1));
        assert_eq!(a.invert().unwrap().head(qi(100)), PuiseuxSeries::t_pow(qi(1)));
        let one_minus_t = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(-1.0))], None);
        let inv = one_minus_t.invert().unwrap();
        assert_eq!(inv.truncation(), Some(qi(6)));
        for k in 0..6 {
            assert!((inv.coefficient(qi(k)) - c(1.0)).norm() < 1e-12);
        }
        let half = PuiseuxSeries::real(2.0).invert().unwrap();
        assert!((half.coefficient(qi(0)) - c(0.5)).norm() < 1e-15);
        assert!(PuiseuxSeries::zero().invert().is_err());
    }

    #[test]
    fn valuations() {
        let a = PuiseuxSeries::from_terms([(qi(2), c(3.0)), (qi(3), c(1.0))], None);
        assert_eq!(a.valuation(), Some(qi(2)));
        assert_eq!(PuiseuxSeries::t_pow(q(-1, 2)).valuation(), Some(q(-1, 2)));
        assert_eq!(PuiseuxSeries::zero().valuation(), None);
    }

    #[test]
    fn evaluations() {
        let a = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (qi(1), c(2.0))], None);
        assert!((a.evaluate(c(0.01)).unwrap() - c(1.02)).norm() < 1e-14);
        let b = PuiseuxSeries::t_pow(q(1, 2));
        assert!((b.evaluate(c(1e-4)).unwrap() - c(1e-2)).norm() < 1e-16);
        let d = PuiseuxSeries::t_pow(qi(-1));
        assert!((d.evaluate(c(1e-3)).unwrap() - c(1e3)).norm() < 1e-9);
        assert!(d.evaluate(c(0.0)).is_err());
    }

    #[test]
    fn display_form() {
        let a = PuiseuxSeries::from_terms([(q(2, 4), c(3.0)), (qi(-1), c(1.0))], None);
        assert_eq!(a.to_string(), "1*t^-1 + 3*t^(1/2)");
        assert_eq!(PuiseuxSeries::big_o(qi(2)).to_string(), "O(t^2)");
    }
}
