//! Dense polynomials with `Complex64` coefficients and their roots.
//!
//! Roots come from the eigenvalues of the companion matrix, followed by a
//! few Newton polishing steps on the original coefficients.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::puiseux::C64;

/// Coefficients in increasing degree; trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoly {
    pub coeffs: Vec<C64>,
}

impl CPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::zero());
        }
        Self { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients that are negligible relative to the largest one.
    pub fn cleaned(&self, rel_tol: f64) -> Self {
        let m = self.max_norm();
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| if c.norm() <= rel_tol * m { C64::zero() } else { c })
                .collect(),
        )
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::zero(), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::constant(C64::zero());
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or_else(C64::zero);
        Self::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![C64::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Multiplicity of `z = 0` as a root.
    pub fn zero_order(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.norm() == 0.0).count()
    }

    /// Divides by `(z - r)` with synthetic division, dropping the remainder.
    pub fn deflate(&self, r: C64) -> Self {
        let n = self.degree();
        if n == 0 {
            return self.clone();
        }
        let mut out = vec![C64::zero(); n];
        let mut acc = C64::zero();
        for i in (1..=n).rev() {
            acc = acc * r + self.coeffs[i];
            out[i - 1] = acc;
        }
        Self::new(out)
    }

    /// All roots with multiplicity (as a flat list).
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::Domain("roots of the zero polynomial".into()));
        }
        let z0 = self.zero_order();
        let mut roots = vec![C64::zero(); z0];
        let reduced = Self::new(self.coeffs[z0..].to_vec());
        let n = reduced.degree();
        if n == 0 {
            return Ok(roots);
        }
        if n == 1 {
            roots.push(-reduced.coeffs[0] / reduced.coeffs[1]);
            return Ok(roots);
        }
        // Rescale z = s w so the coefficient magnitudes are balanced.
        let a0 = reduced.coeffs[0].norm();
        let an = reduced.leading().norm();
        let s = (a0 / an).powf(1.0 / n as f64);
        let scaled: Vec<C64> = reduced
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * s.powi(i as i32))
            .collect();
        let lead = scaled[n];
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -scaled[i] / lead;
        }
        let eig = eigenvalues(m)?;
        let deriv = reduced.derivative();
        for w in eig {
            let mut z = w * s;
            // Newton polishing; stop as soon as a step does not help.
            for _ in 0..8 {
                let fz = reduced.eval(z);
                let dz = deriv.eval(z);
                if dz.norm() == 0.0 || !fz.norm().is_finite() {
                    break;
                }
                let step = fz / dz;
                let cand = z - step;
                if reduced.eval(cand).norm() < fz.norm() {
                    z = cand;
                } else {
                    break;
                }
                if step.norm() <= 1e-15 * z.norm().max(1e-300) {
                    break;
                }
            }
            roots.push(z);
        }
        Ok(roots)
    }

    /// Roots grouped into clusters `(center, multiplicity)`.
    ///
    /// Two roots are clustered when they lie within `rel_tol * max(1, |z|)`
    /// of each other (single linkage). The center is the cluster mean.
    pub fn clustered_roots(&self, rel_tol: f64) -> Result<Vec<(C64, usize)>> {
        let roots = self.roots()?;
        Ok(cluster(&roots, rel_tol))
    }
}

pub fn cluster(roots: &[C64], rel_tol: f64) -> Vec<(C64, usize)> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        let mut j = i;
        while l[j] != r {
            let nx = l[j];
            l[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
            if (roots[i] - roots[j]).norm() <= rel_tol * scale {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += roots[i];
                g.2 += 1;
            }
            None => groups.push((r, roots[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, s, m)| (s / m as f64, m))
        .collect()
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts and periodic exceptional shifts.
fn eigenvalues(mut h: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut eig = vec![C64::zero(); n];
    let mut hi = n;
    let mut iter_since_deflation = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        if hi == 1 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Find the active block [lo, hi).
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = C64::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eig[hi - 1] = h[(hi - 1, hi - 1)];
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        total += 1;
        iter_since_deflation += 1;
        if total > 100 * n + 1000 {
            return Err(Error::Numerical(format!("companion eigenvalue iteration failed (n = {n})")));
        }
        let a = h[(hi - 2, hi - 2)];
        let b = h[(hi - 2, hi - 1)];
        let c = h[(hi - 1, hi - 2)];
        let d = h[(hi - 1, hi - 1)];
        let mu = if iter_since_deflation % 11 == 10 {
            // exceptional shift
            d + C64::new(0.75, 0.5) * h[(hi - 1, hi - 2)].norm()
        } else {
            let tr = a + d;
            let det = a * d - b * c;
            let disc = (tr * tr * 0.25 - det).sqrt();
            let l1 = tr * 0.5 + disc;
            let l2 = tr * 0.5 - disc;
            if (l1 - d).norm() < (l2 - d).norm() { l1 } else { l2 }
        };
        for i in lo..hi {
            h[(i, i)] -= mu;
        }
        // QR by Givens rotations, then RQ.
        let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
        for k in lo..hi - 1 {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::zero())
            } else {
                (x / r, y / r)
            };
            // G = [[conj(cs), conj(sn)], [-sn, cs]]
            for j in k..n {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = cs.conj() * u + sn.conj() * v;
                h[(k + 1, j)] = -sn * u + cs * v;
            }
            rots.push((cs, sn));
        }
        for (idx, k) in (lo..hi - 1).enumerate() {
            let (cs, sn) = rots[idx];
            let top = (k + 2).min(hi);
            for i in 0..top {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * cs + v * sn;
                h[(i, k + 1)] = -u * sn.conj() + v * cs.conj();
            }
        }
        for i in lo..hi {
            h[(i, i)] += mu;
        }
    }
    Ok(eig)
}
