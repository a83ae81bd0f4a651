//! Limiting sequences: Riemann sums `S_ℓ(A) = Σ ζ_{k,ℓ} R_{k,ℓ}` over nested
//! dyadic partitions of an interval containing the spectrum.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::spectral::{eig_hermitian, op_norm, Hermitian, Projection, SpectralDecomposition};

const MAX_REFINEMENTS: usize = 8;

/// Where in each cell `[λ_{k−1}, λ_k]` the sample point `ζ_k` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZetaRule {
    #[default]
    RightEndpoint,
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct Cell<T> {
    /// 1-based cell index in the partition at this term's level
    pub k: usize,
    pub zeta: T,
    pub projection: Projection<T>,
}

/// One Riemann sum. The partition is `λ_k = origin + k·width` for
/// `k = 0..=2^level`; only cells carrying spectrum are stored.
#[derive(Debug, Clone)]
pub struct LimitingTerm<T> {
    pub ell: usize,
    pub level: u32,
    pub origin: T,
    pub width: T,
    pub cells: Vec<Cell<T>>,
    /// `‖A − S_ℓ(A)‖`, measured
    pub error: T,
}

impl<T: Real> LimitingTerm<T> {
    pub fn mesh(&self) -> T {
        self.width
    }

    pub fn point(&self, k: usize) -> T {
        self.origin + self.width * T::lit(k as f64)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (T, &Projection<T>)> {
        self.cells.iter().map(|c| (c.zeta, &c.projection))
    }

    pub fn sum(&self, dim: usize) -> Matrix<T> {
        self.pairs()
            .fold(Matrix::zeros(dim, dim), |acc, (z, p)| &acc + &p.matrix().scale_real(z))
    }
}

#[derive(Debug, Clone)]
pub struct LimitingSequence<T> {
    source: Hermitian<T>,
    spectrum: SpectralDecomposition<T>,
    rule: ZetaRule,
    a: T,
    b: T,
    terms: Vec<LimitingTerm<T>>,
}

impl<T: Real> LimitingSequence<T> {
    /// Terms for `ℓ = 1..=ell_max`.
    pub fn new(a: &Hermitian<T>, ell_max: usize, rule: ZetaRule) -> Result<Self> {
        let spectrum = eig_hermitian(a)?;
        let (lo, hi) = (spectrum.min(), spectrum.max());
        let mut seq = Self {
            source: a.clone(),
            spectrum,
            rule,
            a: lo,
            b: hi,
            terms: Vec::with_capacity(ell_max),
        };
        let mut level = 0;
        for ell in 1..=ell_max {
            let term = seq.build_term(ell, level)?;
            level = term.level;
            seq.terms.push(term);
        }
        Ok(seq)
    }

    pub fn source(&self) -> &Hermitian<T> {
        &self.source
    }

    pub fn spectrum(&self) -> &SpectralDecomposition<T> {
        &self.spectrum
    }

    pub fn rule(&self) -> ZetaRule {
        self.rule
    }

    /// `(a, b)`, the extreme eigenvalues.
    pub fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }

    pub fn terms(&self) -> &[LimitingTerm<T>] {
        &self.terms
    }

    /// Stored term for `ℓ` (1-based).
    pub fn term(&self, ell: usize) -> Option<&LimitingTerm<T>> {
        ell.checked_sub(1).and_then(|i| self.terms.get(i))
    }

    /// Term for an arbitrary `ℓ`, on a partition at least as fine as every
    /// stored one so nesting is preserved.
    pub fn term_at(&self, ell: usize) -> Result<LimitingTerm<T>> {
        if let Some(t) = self.term(ell) {
            return Ok(t.clone());
        }
        let floor = self.terms.last().map_or(0, |t| t.level);
        self.build_term(ell, floor)
    }

    fn build_term(&self, ell: usize, min_level: u32) -> Result<LimitingTerm<T>> {
        let len = self.b - self.a + T::one();
        let origin = self.a - T::one();
        let target = (T::one() / T::lit(ell as f64)).min(len);
        let mut level = min_level;
        while len / T::lit(2f64.powi(level as i32)) > target {
            level += 1;
        }
        let bound = T::one() / T::lit(ell as f64);
        let mut term = self.term_on_level(ell, level, origin, len)?;
        let mut refinements = 0;
        while term.error > bound && refinements < MAX_REFINEMENTS {
            level += 1;
            refinements += 1;
            term = self.term_on_level(ell, level, origin, len)?;
        }
        Ok(term)
    }

    fn term_on_level(&self, ell: usize, level: u32, origin: T, len: T) -> Result<LimitingTerm<T>> {
        let count = 1usize << level;
        let width = len / T::lit(count as f64);
        let n = self.source.dim();
        let mut cells: Vec<(usize, Matrix<T>)> = Vec::new();
        for (lambda, p) in &self.spectrum.pairs {
            let pos = ((*lambda - origin) / width).ceil().to_usize().unwrap_or(1);
            let k = pos.clamp(1, count);
            match cells.iter_mut().find(|(j, _)| *j == k) {
                Some((_, m)) => *m = &*m + p.matrix(),
                None => cells.push((k, p.matrix().clone())),
            }
        }
        cells.sort_by_key(|(k, _)| *k);
        let cells: Vec<Cell<T>> = cells
            .into_iter()
            .map(|(k, m)| {
                let right = origin + width * T::lit(k as f64);
                let zeta = match self.rule {
                    ZetaRule::RightEndpoint => right,
                    ZetaRule::Midpoint => right - width / T::lit(2.0),
                };
                Cell {
                    k,
                    zeta,
                    projection: Projection::trusted(m),
                }
            })
            .collect();
        let mut term = LimitingTerm {
            ell,
            level,
            origin,
            width,
            cells,
            error: T::zero(),
        };
        term.error = op_norm(&(self.source.matrix() - &term.sum(n)))?;
        Ok(term)
    }
}

/// Right-endpoint limiting sequence for `ℓ = 1..=ell_max`.
pub fn limiting_sequence<T: Real>(a: &Hermitian<T>, ell_max: usize) -> Result<LimitingSequence<T>> {
    LimitingSequence::new(a, ell_max, ZetaRule::RightEndpoint)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(m: Matrix<f64>) -> Hermitian<f64> {
        Hermitian::new(m).unwrap()
    }

    #[test]
    fn scalar_operator_has_single_cell() {
        let a = herm(Matrix::identity(3).scale_real(2.5));
        let seq = limiting_sequence(&a, 16).unwrap();
        for t in seq.terms() {
            assert_eq!(t.cells.len(), 1);
            assert_eq!(t.cells[0].projection.matrix(), &Matrix::identity(3));
            assert!((t.cells[0].zeta - 2.5).abs() <= t.mesh());
        }
    }

    #[test]
    fn two_point_spectrum_at_four() {
        let seq = limiting_sequence(&herm(Matrix::real_diag(&[0.0, 1.0])), 4).unwrap();
        let t = seq.term(4).unwrap();
        assert_eq!(t.cells.len(), 2);
        assert!(t.mesh() <= 0.25);
        assert!((t.cells[0].zeta - 0.0).abs() <= 0.25);
        assert!((t.cells[1].zeta - 1.0).abs() <= 0.25);
        assert_eq!(t.cells[0].projection.matrix(), &Matrix::real_diag(&[1.0, 0.0]));
        assert_eq!(t.cells[1].projection.matrix(), &Matrix::real_diag(&[0.0, 1.0]));
    }

    #[test]
    fn zero_operator() {
        let seq = limiting_sequence(&herm(Matrix::zeros(2, 2)), 8).unwrap();
        for t in seq.terms() {
            assert_eq!(t.cells.len(), 1);
            assert!(t.cells[0].zeta.abs() <= 1.0 / t.ell as f64);
        }
    }

    #[test]
    fn partitions_are_nested_and_sample_points_in_cells() {
        let mut rng = crate::random::rng(3);
        let a = Hermitian::hermitian_part_of(&crate::random::ginibre::<f64>(&mut rng, 5, 5));
        for rule in [ZetaRule::RightEndpoint, ZetaRule::Midpoint] {
            let seq = LimitingSequence::new(&a, 64, rule).unwrap();
            let mut prev = None;
            for t in seq.terms() {
                assert!(t.error <= 1.0 / t.ell as f64);
                if let Some((level, origin)) = prev {
                    assert!(t.level >= level);
                    assert_eq!(t.origin, origin);
                }
                prev = Some((t.level, t.origin));
                for c in &t.cells {
                    assert!(c.zeta >= t.point(c.k - 1) && c.zeta <= t.point(c.k));
                }
            }
        }
    }

    #[test]
    fn term_beyond_stored_range() {
        let a = herm(Matrix::real_diag(&[-1.0, 0.3, 2.0]));
        let seq = limiting_sequence(&a, 4).unwrap();
        let t = seq.term_at(1000).unwrap();
        assert!(t.error <= 1e-3);
        assert!(t.level >= seq.term(4).unwrap().level);
    }
}
