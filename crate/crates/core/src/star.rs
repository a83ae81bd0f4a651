//! Polynomials in commuting variables and their adjoints: elements of the
//! free commutative unital *-algebra on `r` generators.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::random::{self, Rng64};
use crate::scalar::{Real, C};

/// Per variable `(a, b)`: the monomial contains `xᵃ (x*)ᵇ`.
pub type Monomial = Vec<(u32, u32)>;

#[derive(Debug, Clone, PartialEq)]
pub struct StarPoly<T> {
    nvars: usize,
    terms: BTreeMap<Monomial, C<T>>,
}

impl<T: Real> StarPoly<T> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C<T>) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![(0, 0); nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![(0, 0); nvars];
        m[i].0 = 1;
        let mut p = Self::zero(nvars);
        p.add_term(m, C::one());
        p
    }

    pub fn var_star(nvars: usize, i: usize) -> Self {
        Self::var(nvars, i).adjoint()
    }

    pub fn monomial(nvars: usize, exps: Monomial, c: C<T>) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C<T>)> {
        self.terms.iter()
    }

    fn add_term(&mut self, m: Monomial, c: C<T>) {
        let entry = self.terms.entry(m).or_insert_with(C::zero);
        *entry += c;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), *c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.iter().zip(mb).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect();
                out.add_term(m, *ca * *cb);
            }
        }
        out
    }

    /// Conjugates coefficients and swaps `x` with `x*`.
    pub fn adjoint(&self) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.iter().map(|&(a, b)| (b, a)).collect(), c.conj()))
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().map(|(a, b)| a + b).sum())
            .max()
            .unwrap_or(0)
    }

    /// Value at a character, given by the generator values `χ(xᵢ)`.
    pub fn eval_scalar(&self, values: &[C<T>]) -> C<T> {
        self.terms.iter().fold(C::zero(), |acc, (m, c)| {
            let v = m.iter().zip(values).fold(C::one(), |p, (&(a, b), v)| {
                p * v.powu(a) * v.conj().powu(b)
            });
            acc + *c * v
        })
    }

    /// Value on commuting normal matrices.
    pub fn eval_matrices(&self, mats: &[Matrix<T>]) -> Result<Matrix<T>> {
        if mats.len() != self.nvars {
            return Err(Error::DimMismatch {
                expected: self.nvars,
                actual: mats.len(),
            });
        }
        let n = mats.first().map_or(1, Matrix::rows);
        let adj: Vec<Matrix<T>> = mats.iter().map(Matrix::adjoint).collect();
        let mut out = Matrix::zeros(n, n);
        for (m, c) in &self.terms {
            let mut prod = Matrix::identity(n);
            for (i, &(a, b)) in m.iter().enumerate() {
                for _ in 0..a {
                    prod = &prod * &mats[i];
                }
                for _ in 0..b {
                    prod = &prod * &adj[i];
                }
            }
            out = &out + &prod.scale(*c);
        }
        Ok(out)
    }

    /// Random polynomial with up to `max_terms` monomials of total degree at
    /// most `max_degree` and Gaussian coefficients.
    pub fn random(nvars: usize, max_degree: u32, max_terms: usize, rng: &mut Rng64) -> Self {
        let count = rng.random_range(1..=max_terms.max(1));
        let mut p = Self::zero(nvars);
        for _ in 0..count {
            let mut m = vec![(0u32, 0u32); nvars];
            if nvars > 0 {
                let deg = rng.random_range(0..=max_degree);
                for _ in 0..deg {
                    let i = rng.random_range(0..nvars);
                    if rng.random_bool(0.5) {
                        m[i].0 += 1;
                    } else {
                        m[i].1 += 1;
                    }
                }
            }
            p.add_term(m, random::complex_normal(rng));
        }
        p
    }
}
