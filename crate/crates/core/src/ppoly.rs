//! Polynomials in `z` whose coefficients are Puiseux series in `t`.

use num_traits::Zero;

use crate::cpoly::CPoly;
use crate::puiseux::{min_val, PuiseuxSeries, TermAccumulator, Q, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxPolynomial {
    coeffs: Vec<PuiseuxSeries>,
}

impl PuiseuxPolynomial {
    pub fn new(mut coeffs: Vec<PuiseuxSeries>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(PuiseuxSeries::zero());
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    pub fn constant(c: PuiseuxSeries) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `z`.
    pub fn z() -> Self {
        Self::new(vec![PuiseuxSeries::zero(), PuiseuxSeries::one()])
    }

    /// `c * z^k`
    pub fn monomial(c: PuiseuxSeries, k: usize) -> Self {
        let mut v = vec![PuiseuxSeries::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// Builds from complex coefficients (exact constant series).
    pub fn from_complex(coeffs: &[C64]) -> Self {
        Self::new(coeffs.iter().map(|&c| PuiseuxSeries::constant(c)).collect())
    }

    pub fn coeffs(&self) -> &[PuiseuxSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PuiseuxSeries {
        self.coeffs.get(i).cloned().unwrap_or_else(PuiseuxSeries::zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Order of vanishing at `z = 0`.
    pub fn zero_order(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.is_zero()).count()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.neg()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &PuiseuxSeries) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(k)).collect())
    }

    /// Multiplies every coefficient by `t^e`.
    pub fn shift_t(&self, e: Q) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.shift(e)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![PuiseuxSeries::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() && a.is_exact() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() && b.is_exact() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(PuiseuxSeries::one());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.scale(C64::new(i as f64, 0.0)))
                .collect(),
        )
    }

    /// Evaluates at a series by Horner's rule.
    pub fn eval(&self, z: &PuiseuxSeries) -> PuiseuxSeries {
        self.eval_truncated(z, None)
    }

    /// Horner evaluation keeping only what can influence exponents `< cap`.
    pub fn eval_truncated(&self, z: &PuiseuxSeries, cap: Option<Q>) -> PuiseuxSeries {
        let vz = z.valuation_bound();
        let n = self.degree();
        let mut acc = PuiseuxSeries::zero();
        for i in (0..=n).rev() {
            let local_cap = match (cap, vz) {
                (Some(c), Some(v)) => Some(c - v * Q::from_integer(i as i64)),
                (Some(c), None) => Some(c),
                _ => None,
            };
            let prod = if i == n { PuiseuxSeries::zero() } else { acc.mul_truncated(z, local_cap) };
            acc = prod.add(&self.coeffs[i]);
            if let Some(lc) = local_cap {
                acc = acc.truncate(lc);
            }
        }
        acc
    }

    /// Composition with another polynomial: `self(g(w))`.
    pub fn compose(&self, g: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(g).add(&Self::constant(c.clone()));
        }
        acc
    }

    /// `self(center + t^e * w)` as a polynomial in `w` (Taylor shift, then scaling).
    pub fn recenter(&self, center: &PuiseuxSeries, e: Q) -> Self {
        let shifted = self.taylor_shift(center);
        Self::new(
            shifted
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.shift(e * Q::from_integer(k as i64)))
                .collect(),
        )
    }

    /// `self(center + w)`.
    pub fn taylor_shift(&self, center: &PuiseuxSeries) -> Self {
        if center.is_zero() && center.is_exact() {
            return self.clone();
        }
        // Σ_k w^k Σ_{i≥k} C(i,k) c_i center^{i-k}
        let n = self.degree();
        let mut powers = vec![PuiseuxSeries::one()];
        for j in 1..=n {
            let next = powers[j - 1].mul(center);
            powers.push(next);
        }
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = TermAccumulator::default();
            let mut trunc: Option<Q> = None;
            let mut binom = 1.0f64;
            for i in k..=n {
                let c = &self.coeffs[i];
                if !(c.is_zero() && c.is_exact()) {
                    let term = c.mul(&powers[i - k]);
                    for &(e, x) in term.terms() {
                        acc.push(e, x * binom);
                    }
                    if let Some(t) = term.truncation() {
                        trunc = Some(trunc.map_or(t, |u| u.min(t)));
                    }
                }
                binom = binom * (i + 1) as f64 / (i + 1 - k) as f64;
            }
            out.push(acc.finish(trunc));
        }
        Self::new(out)
    }

    /// Minimum coefficient valuation (Gauss norm in valuation form); `None` for zero.
    pub fn gauss_valuation(&self) -> Option<Q> {
        self.coeffs.iter().fold(None, |acc, c| min_val(acc, c.valuation()))
    }

    /// Lowest truncation order among the coefficients.
    pub fn truncation(&self) -> Option<Q> {
        self.coeffs
            .iter()
            .filter_map(|c| c.truncation())
            .min()
    }

    /// Reduction: coefficient of `t^v` in each coefficient, with `v` the Gauss valuation.
    pub fn reduction(&self) -> CPoly {
        match self.gauss_valuation() {
            None => CPoly::constant(C64::zero()),
            Some(v) => CPoly::new(self.coeffs.iter().map(|c| c.coefficient(v)).collect()),
        }
    }

    /// Numerical specialization at a parameter value.
    pub fn evaluate_at(&self, t0: C64) -> crate::error::Result<CPoly> {
        let v: crate::error::Result<Vec<C64>> = self.coeffs.iter().map(|c| c.evaluate(t0)).collect();
        Ok(CPoly::new(v?))
    }

    /// Largest exponent denominator among all coefficients.
    pub fn ramification(&self) -> i64 {
        self.coeffs.iter().map(|c| c.ramification()).fold(1, num_integer::lcm)
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_exact())
    }

    /// Truncates every coefficient at absolute exponent `order`.
    pub fn truncate(&self, order: Q) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.truncate(order)).collect())
    }

    pub fn leading(&self) -> &PuiseuxSeries {
        self.coeffs.last().unwrap()
    }

    pub fn has_constant_zero(&self) -> bool {
        self.coeffs[0].is_zero() && self.coeffs[0].is_exact() && !self.is_zero()
    }

    /// Divides by `z^k` (the caller guarantees the low coefficients vanish).
    pub fn div_z_pow(&self, k: usize) -> Self {
        Self::new(self.coeffs[k.min(self.coeffs.len() - 1)..].to_vec())
    }

    pub fn zero_coefficient_count(&self) -> usize {
        self.coeffs.iter().filter(|c| c.is_zero()).count()
    }
}

impl std::fmt::Display for PuiseuxPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({})", c)?,
                1 => write!(f, "({})*z", c)?,
                _ => write!(f, "({})*z^{}", c, i)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puiseux::{q, qi};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        // p(z) = z^3 - 2z + t
        let p = PuiseuxPolynomial::new(vec![
            PuiseuxSeries::t_pow(qi(1)),
            PuiseuxSeries::real(-2.0),
            PuiseuxSeries::zero(),
            PuiseuxSeries::one(),
        ]);
        let center = PuiseuxSeries::from_terms([(qi(0), c(1.0)), (q(1, 2), c(3.0))], None);
        let sh = p.recenter(&center, q(1, 3));
        // sh(w) at w = 1 equals p(center + t^{1/3})
        let x = center.add(&PuiseuxSeries::t_pow(q(1, 3)));
        let direct = p.eval(&x);
        let via = sh.eval(&PuiseuxSeries::one());
        assert!(direct.approx_eq_to(&via, qi(10), 1e-12));
    }

    #[test]
    fn truncated_horner_agrees_below_cap() {
        let p = PuiseuxPolynomial::new(vec![
            PuiseuxSeries::one(),
            PuiseuxSeries::t_pow(q(-1, 2)),
            PuiseuxSeries::real(3.0),
        ]);
        let z = PuiseuxSeries::from_terms([(q(1, 4), c(1.0)), (qi(1), c(2.0))], None);
        let full = p.eval(&z);
        let cut = p.eval_truncated(&z, Some(qi(1)));
        assert!(full.approx_eq_to(&cut, qi(1), 1e-14));
        assert_eq!(cut.truncation(), Some(qi(1)));
    }

    #[test]
    fn reduction_takes_minimal_valuation_layer() {
        let p = PuiseuxPolynomial::new(vec![
            PuiseuxSeries::t_pow(qi(1)),
            PuiseuxSeries::zero(),
            PuiseuxSeries::from_terms([(qi(1), c(2.0)), (qi(2), c(5.0))], None),
        ]);
        assert_eq!(p.gauss_valuation(), Some(qi(1)));
        let r = p.reduction();
        assert_eq!(r.coeffs, vec![c(1.0), c(0.0), c(2.0)]);
    }
}
