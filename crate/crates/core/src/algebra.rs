//! Finite-dimensional von Neumann algebras as concrete *-subalgebras of
//! `M_n(ℂ)`, their projection lattices, and linear extension of
//! projection-indexed assignments.

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::joint_diagonalize;
use crate::matrix::{Matrix, MatrixDoc};
use crate::random::{self, Rng64};
use crate::scalar::{Real, C};
use crate::spectral::{eig_hermitian, eigh, re_im, Hermitian, Projection};

/// Relative eigenvalue threshold below which a direction of the constraint
/// Gram matrix counts as null.
const NULL_GRAM_RATIO: f64 = 1e-10;
/// Minimal relative orthogonal component for a vector to count as new.
const INDEPENDENCE_RATIO: f64 = 1e-6;
/// Independence threshold used when choosing spanning subsets for linear
/// extension. Stricter, so the Gram systems stay well conditioned.
const SPAN_RATIO: f64 = 1e-3;
const MAX_ATOMS: usize = 16;

/// *-closed subalgebra of `M_n(ℂ)` containing the identity, stored through a
/// trace-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct VonNeumannAlgebra<T> {
    ambient_dim: usize,
    basis: Vec<Matrix<T>>,
    generators: Vec<Matrix<T>>,
}

impl<T: Real> VonNeumannAlgebra<T> {
    /// `M_n(ℂ)` with the matrix-unit basis.
    pub fn full(n: usize) -> Self {
        let basis: Vec<_> = (0..n * n).map(|k| Matrix::unit(n, k / n, k % n)).collect();
        let generators = (1..n).flat_map(|i| [Matrix::unit(n, i - 1, i), Matrix::unit(n, i, i - 1)]).collect();
        Self {
            ambient_dim: n,
            basis,
            generators,
        }
    }

    /// `ℂ · id_n`.
    pub fn scalars(n: usize) -> Self {
        let b = Matrix::identity(n).scale_real(T::one() / T::lit(n as f64).sqrt());
        Self {
            ambient_dim: n,
            basis: vec![b],
            generators: vec![Matrix::identity(n)],
        }
    }

    /// Diagonal matrices in dimension `n`.
    pub fn diagonals(n: usize) -> Self {
        let basis: Vec<_> = (0..n).map(|i| Matrix::unit(n, i, i)).collect();
        let gen = Matrix::real_diag(&(1..=n).map(|i| i as f64).collect::<Vec<_>>());
        Self {
            ambient_dim: n,
            basis,
            generators: vec![gen],
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix<T>] {
        &self.basis
    }

    pub fn generators(&self) -> &[Matrix<T>] {
        &self.generators
    }

    /// Coordinates `⟨Bⱼ, A⟩` in the orthonormal basis.
    pub fn coords(&self, a: &Matrix<T>) -> Vec<C<T>> {
        self.basis.iter().map(|b| b.inner(a)).collect()
    }

    pub fn from_coords(&self, coords: &[C<T>]) -> Matrix<T> {
        let n = self.ambient_dim;
        self.basis
            .iter()
            .zip(coords)
            .fold(Matrix::zeros(n, n), |acc, (b, c)| &acc + &b.scale(*c))
    }

    /// Orthogonal projection (trace inner product) onto the algebra.
    pub fn project(&self, a: &Matrix<T>) -> Matrix<T> {
        self.from_coords(&self.coords(a))
    }

    /// `‖A − π(A)‖_F / (1 + ‖A‖_F)` where `π` projects onto the algebra.
    pub fn membership_residual(&self, a: &Matrix<T>) -> T {
        if a.rows() != self.ambient_dim || a.cols() != self.ambient_dim {
            return T::infinity();
        }
        (a - &self.project(a)).frob_norm() / (T::one() + a.frob_norm())
    }

    pub fn contains(&self, a: &Matrix<T>) -> bool {
        self.membership_residual(a) <= T::tolerances().alg
    }

    /// Largest commutator between basis elements, relative to the unit
    /// scale of the orthonormal basis.
    pub fn abelian_residual(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                worst = worst.max(a.commutator(b).frob_norm());
            }
        }
        worst
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian_residual() <= T::tolerances().alg
    }

    /// Worst membership residual of products and adjoints of basis elements
    /// and of the identity.
    pub fn closure_residual(&self) -> T {
        let n = self.ambient_dim;
        let mut worst = self.membership_residual(&Matrix::identity(n));
        for a in &self.basis {
            worst = worst.max(self.membership_residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.membership_residual(&(a * b)));
            }
        }
        worst
    }

    /// Random element with Gaussian coordinates.
    pub fn random_element(&self, rng: &mut Rng64) -> Matrix<T> {
        let coords: Vec<C<T>> = (0..self.dim()).map(|_| random::complex_normal(rng)).collect();
        self.from_coords(&coords)
    }

    pub fn random_hermitian(&self, rng: &mut Rng64) -> Hermitian<T> {
        Hermitian::hermitian_part_of(&self.random_element(rng))
    }

    pub fn to_doc(&self) -> AlgebraDoc {
        AlgebraDoc {
            ambient_dim: self.ambient_dim,
            generators: self.generators.iter().map(Matrix::to_doc).collect(),
        }
    }

    pub fn from_doc(doc: &AlgebraDoc) -> Result<Self> {
        let gens = doc
            .generators
            .iter()
            .map(Matrix::from_doc)
            .collect::<Result<Vec<_>>>()?;
        bicommutant(&gens, doc.ambient_dim)
    }
}

/// Algebra descriptor: generators plus ambient dimension. The basis is
/// recomputed deterministically on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub ambient_dim: usize,
    pub generators: Vec<MatrixDoc>,
}

fn check_shapes<T: Real>(mats: &[Matrix<T>], n: usize) -> Result<()> {
    for m in mats {
        if m.rows() != n || m.cols() != n {
            return Err(Error::shape(format!("{n}x{n}"), m.shape_str()));
        }
    }
    Ok(())
}

/// Row-major vectorization index of the matrix unit `E_ab`.
fn unvec<T: Real>(v: &[C<T>], n: usize) -> Matrix<T> {
    Matrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Basis of `{X : SX = XS for all S in set}`, canonically ordered: matrix
/// units projected onto the solution space, Gram–Schmidt in row-major order.
fn commutant_basis<T: Real>(set: &[Matrix<T>], n: usize) -> Result<Vec<Matrix<T>>> {
    let nn = n * n;
    // Gram matrix Σ_S L_S* L_S of the maps L_S(X) = SX − XS.
    let mut gram = Matrix::<T>::zeros(nn, nn);
    for s in set {
        let cols: Vec<Matrix<T>> = (0..nn)
            .map(|k| {
                let e = Matrix::unit(n, k / n, k % n);
                s.commutator(&e)
            })
            .collect();
        for a in 0..nn {
            for b in a..nn {
                let v = cols[a].inner(&cols[b]);
                gram[(a, b)] += v;
                if a != b {
                    gram[(b, a)] += v.conj();
                }
            }
        }
    }
    let eb = eigh(&Hermitian::hermitian_part_of(&gram))?;
    let top = eb.values.last().copied().unwrap_or(T::zero()).max(T::zero());
    let scale = set.iter().fold(T::zero(), |acc, s| acc + s.frob_norm().powi(2));
    let cut = top.max(scale) * T::lit(NULL_GRAM_RATIO);
    let null: Vec<Vec<C<T>>> = (0..nn)
        .filter(|&k| eb.values[k] <= cut)
        .map(|k| eb.vectors.column(k))
        .collect();
    let rank = null.len();
    let mut accepted: Vec<Vec<C<T>>> = Vec::with_capacity(rank);
    for k in 0..nn {
        if accepted.len() == rank {
            break;
        }
        // Π e_k = Σ_v conj(v_k) v
        let mut w = vec![C::<T>::zero(); nn];
        for v in &null {
            let coef = v[k].conj();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += coef * vi;
            }
        }
        if let Some(u) = orthonormalize(&w, &accepted) {
            accepted.push(u);
        }
    }
    Ok(accepted.iter().map(|v| canonical_phase(unvec(v, n))).collect())
}

/// Gram–Schmidt step; `None` when `w` is dependent on `basis`.
fn orthonormalize<T: Real>(w: &[C<T>], basis: &[Vec<C<T>>]) -> Option<Vec<C<T>>> {
    let start = crate::matrix::vec_norm(w);
    if start <= T::lit(INDEPENDENCE_RATIO) {
        return None;
    }
    let mut w = w.to_vec();
    for _ in 0..2 {
        for u in basis {
            let p = crate::matrix::vec_inner(&w, u);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= p * ui;
            }
        }
    }
    let norm = crate::matrix::vec_norm(&w);
    if norm <= start * T::lit(INDEPENDENCE_RATIO) {
        return None;
    }
    Some(w.into_iter().map(|z| z / norm).collect())
}

/// Rotates a basis matrix so its largest entry (first in row-major order on
/// ties) is real positive; makes bases reproducible across runs.
fn canonical_phase<T: Real>(m: Matrix<T>) -> Matrix<T> {
    let max = m.max_abs();
    let pivot = m
        .data()
        .iter()
        .copied()
        .find(|z| z.norm() >= max * T::lit(1.0 - 1e-9));
    match pivot {
        Some(z) if !z.is_zero() => {
            let phase = z.conj() / z.norm();
            m.scale(phase)
        }
        _ => m,
    }
}

/// Commutant of a set of matrices (the set is closed under adjoints first).
pub fn commutant_of<T: Real>(set: &[Matrix<T>], n: usize) -> Result<VonNeumannAlgebra<T>> {
    check_shapes(set, n)?;
    let mut closed: Vec<Matrix<T>> = Vec::with_capacity(2 * set.len());
    for s in set {
        closed.push(s.clone());
        if s.hermitian_residual() > T::epsilon() {
            closed.push(s.adjoint());
        }
    }
    let basis = commutant_basis(&closed, n)?;
    Ok(VonNeumannAlgebra {
        ambient_dim: n,
        generators: basis.clone(),
        basis,
    })
}

pub fn commutant<T: Real>(w: &VonNeumannAlgebra<T>) -> Result<VonNeumannAlgebra<T>> {
    commutant_of(&w.basis, w.ambient_dim)
}

/// `{generators}''`, the smallest von Neumann algebra containing the generators.
pub fn bicommutant<T: Real>(generators: &[Matrix<T>], n: usize) -> Result<VonNeumannAlgebra<T>> {
    check_shapes(generators, n)?;
    let first = commutant_of(generators, n)?;
    let second = commutant_of(&first.basis, n)?;
    Ok(VonNeumannAlgebra {
        ambient_dim: n,
        basis: second.basis,
        generators: generators.to_vec(),
    })
}

/// Hermitian projections of an algebra, each verified to lie inside it.
#[derive(Debug, Clone)]
pub struct ProjectionFamily<T> {
    pub algebra: VonNeumannAlgebra<T>,
    pub members: Vec<Projection<T>>,
    pub spans_algebra: bool,
}

impl<T: Real> ProjectionFamily<T> {
    /// Validates membership and computes whether the members span the algebra.
    pub fn new(algebra: VonNeumannAlgebra<T>, members: Vec<Projection<T>>) -> Result<Self> {
        for p in &members {
            let r = algebra.membership_residual(p.matrix());
            if r > T::tolerances().alg {
                return Err(Error::AlgebraMismatch {
                    residual: r.to_f64_lossy(),
                });
            }
        }
        let mats: Vec<&Matrix<T>> = members.iter().map(Projection::matrix).collect();
        let rank = independent_subset(&mats, 0..mats.len(), INDEPENDENCE_RATIO).len();
        let spans_algebra = rank == algebra.dim();
        Ok(Self {
            algebra,
            members,
            spans_algebra,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn matrices(&self) -> Vec<&Matrix<T>> {
        self.members.iter().map(Projection::matrix).collect()
    }
}

/// All `2^m` projections of an abelian algebra with `m` minimal projections,
/// in bitmask order over the minimal projections.
pub fn enumerate_projections_abelian<T: Real>(w: &VonNeumannAlgebra<T>) -> Result<ProjectionFamily<T>> {
    let residual = w.abelian_residual();
    if residual > T::tolerances().alg {
        return Err(Error::NotAbelian {
            residual: residual.to_f64_lossy(),
        });
    }
    let atoms = minimal_projections_abelian(w)?;
    let m = atoms.len();
    if m > MAX_ATOMS {
        return Err(Error::TooLarge {
            what: "minimal projection count",
            size: m,
            limit: MAX_ATOMS,
        });
    }
    let n = w.ambient_dim;
    let members = (0..1usize << m)
        .map(|mask| {
            let sum = (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .fold(Matrix::zeros(n, n), |acc, i| &acc + atoms[i].matrix());
            Projection::trusted(sum)
        })
        .collect();
    ProjectionFamily::new(w.clone(), members)
}

/// Minimal projections of an abelian algebra: the joint eigenprojections of
/// its basis.
pub fn minimal_projections_abelian<T: Real>(w: &VonNeumannAlgebra<T>) -> Result<Vec<Projection<T>>> {
    let atlas = joint_diagonalize(w.basis(), w.ambient_dim)?;
    Ok(atlas.points.into_iter().map(|p| p.projection).collect())
}

/// Eigenprojections of the real and imaginary parts of each basis element,
/// pruned to a linearly independent spanning subset.
pub fn spanning_projections<T: Real>(w: &VonNeumannAlgebra<T>) -> Result<Vec<Projection<T>>> {
    let mut candidates: Vec<Projection<T>> = Vec::new();
    for b in w.basis() {
        let (re, im) = re_im(b);
        for h in [re, im] {
            for (_, p) in eig_hermitian(&h)?.pairs {
                candidates.push(p);
            }
        }
    }
    let mats: Vec<&Matrix<T>> = candidates.iter().map(Projection::matrix).collect();
    let keep = independent_subset(&mats, 0..mats.len(), SPAN_RATIO);
    Ok(keep.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Seeded projection sample: `id`, then `0`, then a spanning subset, then
/// spectral projections `χ_[t,∞)(H)` of random hermitian `H ∈ W` at random
/// thresholds. Truncated to `n` members.
pub fn sample_projections<T: Real>(
    w: &VonNeumannAlgebra<T>,
    n: usize,
    seed: u64,
) -> Result<ProjectionFamily<T>> {
    let dim = w.ambient_dim;
    let mut rng = random::rng(seed);
    let mut members = vec![Projection::identity(dim), Projection::zero(dim)];
    members.extend(spanning_projections(w)?);
    members.truncate(n.max(1));
    while members.len() < n {
        members.push(random_spectral_projection(w, &mut rng)?);
    }
    ProjectionFamily::new(w.clone(), members)
}

/// `χ_[t,∞)(H)` for a random hermitian `H` in the algebra and a threshold
/// strictly inside its spectral range when the spectrum is not a point.
pub fn random_spectral_projection<T: Real>(
    w: &VonNeumannAlgebra<T>,
    rng: &mut Rng64,
) -> Result<Projection<T>> {
    let h = w.random_hermitian(rng);
    let sd = eig_hermitian(&h)?;
    let (lo, hi) = (sd.min(), sd.max());
    let t = if sd.pairs.len() > 1 {
        let u: f64 = rng.random_range(0.0..1.0);
        // strictly between the lowest and highest eigenvalue
        let lo2 = sd.pairs[0].0;
        let hi2 = sd.pairs[sd.pairs.len() - 1].0;
        lo2 + (hi2 - lo2) * T::lit(0.05 + 0.9 * u)
    } else if rng.random_bool(0.5) {
        lo
    } else {
        hi + T::one()
    };
    let n = w.ambient_dim;
    let p = sd
        .pairs
        .iter()
        .filter(|(l, _)| *l >= t)
        .fold(Matrix::zeros(n, n), |acc, (_, p)| &acc + p.matrix());
    Ok(Projection::trusted(p.hermitian_part()))
}

/// Greedy linearly independent subset (over ℂ, trace inner product) visiting
/// indices in the given order.
pub fn independent_subset<T: Real>(
    mats: &[&Matrix<T>],
    order: impl IntoIterator<Item = usize>,
    ratio: f64,
) -> Vec<usize> {
    let mut basis: Vec<Vec<C<T>>> = Vec::new();
    let mut picked = Vec::new();
    for i in order {
        let v = mats[i].data().to_vec();
        let norm = crate::matrix::vec_norm(&v);
        if norm <= T::epsilon() {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &basis {
                let p = crate::matrix::vec_inner(&w, u);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= p * ui;
                }
            }
        }
        let rest = crate::matrix::vec_norm(&w);
        if rest > norm * T::lit(ratio) {
            basis.push(w.into_iter().map(|z| z / rest).collect());
            picked.push(i);
        }
    }
    picked
}

/// Linear extension of projection-indexed assignments.
///
/// Holds two independent spanning subsets of the family, chosen greedily in
/// forward and reverse order. Every extension is computed in both and the
/// results compared, which certifies that the assignment respects the linear
/// relations among the members.
#[derive(Debug, Clone)]
pub struct LinearExtender<T> {
    family: ProjectionFamily<T>,
    primary: SpanSystem<T>,
    secondary: SpanSystem<T>,
}

#[derive(Debug, Clone)]
struct SpanSystem<T> {
    indices: Vec<usize>,
    gram: Matrix<T>,
}

impl<T: Real> SpanSystem<T> {
    fn new(mats: &[&Matrix<T>], indices: Vec<usize>) -> Self {
        let k = indices.len();
        let gram = Matrix::from_fn(k, k, |a, b| mats[indices[a]].inner(mats[indices[b]]));
        Self { indices, gram }
    }

    fn coords(&self, mats: &[&Matrix<T>], a: &Matrix<T>) -> Option<Vec<C<T>>> {
        let rhs: Vec<C<T>> = self.indices.iter().map(|&i| mats[i].inner(a)).collect();
        self.gram.solve(&rhs)
    }
}

impl<T: Real> LinearExtender<T> {
    pub fn new(family: ProjectionFamily<T>) -> Result<Self> {
        let mats = family.matrices();
        let len = mats.len();
        let dim = family.algebra.dim();
        let fwd = independent_subset(&mats, 0..len, SPAN_RATIO);
        let rev = independent_subset(&mats, (0..len).rev(), SPAN_RATIO);
        if fwd.len() < dim || rev.len() < dim {
            return Err(Error::NotSpanning {
                rank: fwd.len().min(rev.len()),
                dim,
            });
        }
        let primary = SpanSystem::new(&mats, fwd);
        let secondary = SpanSystem::new(&mats, rev);
        Ok(Self {
            family,
            primary,
            secondary,
        })
    }

    pub fn family(&self) -> &ProjectionFamily<T> {
        &self.family
    }

    pub fn primary_indices(&self) -> &[usize] {
        &self.primary.indices
    }

    pub fn secondary_indices(&self) -> &[usize] {
        &self.secondary.indices
    }

    /// Coefficients `c` with `A = Σ cᵢ P_{idx[i]}` in the primary (or
    /// secondary) subset, plus the relative residual of that expansion.
    pub fn decompose(&self, a: &Matrix<T>, secondary: bool) -> Result<(Vec<(usize, C<T>)>, T)> {
        let mats = self.family.matrices();
        let sys = if secondary { &self.secondary } else { &self.primary };
        let coords = sys.coords(&mats, a).ok_or(Error::NotSpanning {
            rank: sys.indices.len(),
            dim: self.family.algebra.dim(),
        })?;
        let n = a.rows();
        let rebuilt = sys
            .indices
            .iter()
            .zip(&coords)
            .fold(Matrix::zeros(n, n), |acc, (&i, c)| &acc + &mats[i].scale(*c));
        let residual = (a - &rebuilt).frob_norm() / (T::one() + a.frob_norm());
        Ok((sys.indices.iter().copied().zip(coords).collect(), residual))
    }

    /// Writes `A = Σ cᵢ Pᵢ` and returns `Σ cᵢ · assignment(Pᵢ)`, after checking
    /// that the two spanning subsets agree within the extension tolerance.
    pub fn extend(&self, assignment: &[Matrix<T>], a: &Matrix<T>) -> Result<Matrix<T>> {
        let (x, y) = self.extend_both(assignment, a)?;
        let gap = x.rel_dist(&y);
        if gap > T::tolerances().ext {
            return Err(Error::InconsistentAssignment {
                residual: gap.to_f64_lossy(),
            });
        }
        Ok(x)
    }

    /// Extensions through the primary and the secondary subset, unchecked.
    pub fn extend_both(&self, assignment: &[Matrix<T>], a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
        if assignment.len() != self.family.len() {
            return Err(Error::DimMismatch {
                expected: self.family.len(),
                actual: assignment.len(),
            });
        }
        let tol = T::tolerances().alg;
        let r = self.family.algebra.membership_residual(a);
        if r > tol {
            return Err(Error::NotInSpan {
                residual: r.to_f64_lossy(),
            });
        }
        let combine = |secondary: bool| -> Result<Matrix<T>> {
            let (coefs, residual) = self.decompose(a, secondary)?;
            if residual > tol {
                return Err(Error::NotInSpan {
                    residual: residual.to_f64_lossy(),
                });
            }
            let (r0, c0) = (assignment[0].rows(), assignment[0].cols());
            Ok(coefs
                .iter()
                .fold(Matrix::zeros(r0, c0), |acc, (i, c)| &acc + &assignment[*i].scale(*c)))
        };
        Ok((combine(false)?, combine(true)?))
    }
}

/// One-shot form of [`LinearExtender::extend`].
pub fn linear_extend<T: Real>(
    family: &ProjectionFamily<T>,
    assignment: &[Matrix<T>],
    a: &Matrix<T>,
) -> Result<Matrix<T>> {
    LinearExtender::new(family.clone())?.extend(assignment, a)
}


#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    #[test]
    fn bicommutant_of_identity_is_scalars() {
        let w = bicommutant(&[M::identity(3)], 3).unwrap();
        assert_eq!(w.dim(), 1);
        assert!(w.contains(&M::identity(3).scale_real(2.5)));
        assert!(!w.contains(&M::real_diag(&[1.0, 0.0, 0.0])));
    }

    #[test]
    fn bicommutant_of_rounded_scalar() {
        let mut g = M::identity(2).scale(C::new(0.48, 0.51));
        g[(0, 1)] = C::new(1.1e-16, 1.7e-16);
        g[(1, 0)] = C::new(1.7e-16, 1.2e-16);
        let w = bicommutant(&[g], 2).unwrap();
        assert_eq!(w.dim(), 1);
        assert!(w.membership_residual(&M::identity(2)) < 1e-14);
    }

    #[test]
    fn bicommutant_of_multiplicity_free_diagonal() {
        let w = bicommutant(&[M::real_diag(&[1.0, 2.0])], 2).unwrap();
        assert_eq!(w.dim(), 2);
        assert!(w.contains(&M::real_diag(&[-4.0, 7.0])));
        assert!(w.is_abelian());
    }

    #[test]
    fn bicommutant_of_matrix_unit_is_full() {
        let w = bicommutant(&[M::unit(2, 0, 1)], 2).unwrap();
        assert_eq!(w.dim(), 4);
        assert!(w.closure_residual() < 1e-12);
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant(&VonNeumannAlgebra::<f64>::full(3)).unwrap().dim(), 1);
        assert_eq!(commutant(&VonNeumannAlgebra::<f64>::scalars(3)).unwrap().dim(), 9);
        let d = commutant(&VonNeumannAlgebra::<f64>::diagonals(3)).unwrap();
        assert_eq!(d.dim(), 3);
        for b in d.basis() {
            assert!(VonNeumannAlgebra::<f64>::diagonals(3).contains(b));
        }
    }

    #[test]
    fn basis_is_trace_orthonormal() {
        let mut rng = random::rng(5);
        let g = random::hermitian::<f64>(&mut rng, 3);
        let block = M::real_diag(&[1.0, 1.0, 0.0]);
        let w = bicommutant(&[&g * &block, block.clone()], 3).unwrap();
        for (i, a) in w.basis().iter().enumerate() {
            for (j, b) in w.basis().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).re - expect).abs() < 1e-10 && a.inner(b).im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn enumerate_small_abelian() {
        let f = enumerate_projections_abelian(&VonNeumannAlgebra::<f64>::scalars(2)).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.members[0].matrix().frob_norm() < 1e-14);
        assert!(f.members[1].matrix().approx_eq(&M::identity(2), 1e-12).unwrap());

        let f = enumerate_projections_abelian(&VonNeumannAlgebra::<f64>::diagonals(2)).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f.spans_algebra);
        let f = enumerate_projections_abelian(&VonNeumannAlgebra::<f64>::diagonals(3)).unwrap();
        assert_eq!(f.len(), 8);
        for p in &f.members {
            assert!(crate::spectral::projection_residual(p.matrix()) < 1e-12);
        }
    }

    #[test]
    fn enumerate_rejects_non_abelian() {
        assert!(matches!(
            enumerate_projections_abelian(&VonNeumannAlgebra::<f64>::full(2)),
            Err(Error::NotAbelian { .. })
        ));
    }

    #[test]
    fn sampling_contains_identity_and_is_deterministic() {
        let w = VonNeumannAlgebra::<f64>::full(2);
        let one = sample_projections(&w, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.members[0].matrix(), &M::identity(2));

        let a = sample_projections(&w, 12, 42).unwrap();
        let b = sample_projections(&w, 12, 42).unwrap();
        assert!(a.spans_algebra);
        for (p, q) in a.members.iter().zip(&b.members) {
            assert_eq!(p, q);
        }
        let tail = a.members.last().unwrap();
        assert_eq!(tail.rank(), 1);
        assert!(crate::spectral::projection_residual(tail.matrix()) < 1e-8);
    }

    #[test]
    fn sampling_diagonals_gives_indicator_diagonals() {
        let w = VonNeumannAlgebra::<f64>::diagonals(3);
        let f = sample_projections(&w, 10, 9).unwrap();
        for p in &f.members {
            let m = p.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    let z = m[(i, j)];
                    if i == j {
                        assert!(z.re.abs() < 1e-12 || (z.re - 1.0).abs() < 1e-12);
                    } else {
                        assert!(z.norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn linear_extension_examples() {
        let w = VonNeumannAlgebra::<f64>::diagonals(2);
        let p1 = Projection::new(M::real_diag(&[1.0, 0.0])).unwrap();
        let p2 = Projection::new(M::real_diag(&[0.0, 1.0])).unwrap();
        let family = ProjectionFamily::new(w, vec![p1.clone(), p2]).unwrap();
        let x1 = M::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let x2 = M::from_real_rows(&[&[0.0, -1.0], &[5.0, 1.0]]);
        let assignment = vec![x1.clone(), x2.clone()];
        let out = linear_extend(&family, &assignment, &M::real_diag(&[2.0, 3.0])).unwrap();
        let expect = &x1.scale_real(2.0) + &x2.scale_real(3.0);
        assert!(out.approx_eq(&expect, 1e-13).unwrap());
        assert!(linear_extend(&family, &assignment, p1.matrix()).unwrap().approx_eq(&x1, 1e-13).unwrap());
        assert!(linear_extend(&family, &assignment, &M::zeros(2, 2)).unwrap().frob_norm() < 1e-14);
    }

    #[test]
    fn inconsistent_assignment_is_detected() {
        // id = P1 + P2 but the assignment breaks additivity
        let w = VonNeumannAlgebra::<f64>::diagonals(2);
        let members = vec![
            Projection::new(M::identity(2)).unwrap(),
            Projection::new(M::real_diag(&[1.0, 0.0])).unwrap(),
            Projection::new(M::real_diag(&[0.0, 1.0])).unwrap(),
        ];
        let family = ProjectionFamily::new(w, members).unwrap();
        let assignment = vec![M::identity(1), M::identity(1), M::identity(1)];
        let r = linear_extend(&family, &assignment, &M::real_diag(&[0.0, 1.0]));
        assert!(matches!(r, Err(Error::InconsistentAssignment { .. })));
    }

    #[test]
    fn outside_of_span_is_rejected() {
        let w = VonNeumannAlgebra::<f64>::diagonals(2);
        let f = enumerate_projections_abelian(&w).unwrap();
        let assignment: Vec<M> = f.members.iter().map(|p| p.matrix().clone()).collect();
        let r = linear_extend(&f, &assignment, &M::unit(2, 0, 1));
        assert!(matches!(r, Err(Error::NotInSpan { .. })));
    }

    #[test]
    fn descriptor_round_trip() {
        let w = bicommutant(&[M::real_diag(&[1.0, 1.0, 2.0])], 3).unwrap();
        let doc = w.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let back = VonNeumannAlgebra::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(w.dim(), back.dim());
        for (a, b) in w.basis().iter().zip(back.basis()) {
            assert!(a.approx_eq(b, 1e-12).unwrap());
        }
    }
}
