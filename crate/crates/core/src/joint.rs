//! Joint diagonalization of commuting normal matrices.
//!
//! The joint eigenprojections of `N₁, …, N_r` are exactly the characters of
//! the commutative *-algebra they generate: each atom carries the tuple
//! `(χ(N₁), …, χ(N_r))`.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::random;
use crate::scalar::{Real, C};
use crate::spectral::{eig_hermitian, eigh, re_im, Hermitian, Projection};

const COMBINATION_SEED: u64 = 0x6a_6f69_6e74;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterPoint<T> {
    pub values: Vec<C<T>>,
    pub projection: Projection<T>,
}

/// Joint eigenprojections with their eigenvalue tuples, sorted
/// lexicographically by tuple (real part before imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterAtlas<T> {
    pub dim: usize,
    pub points: Vec<CharacterPoint<T>>,
}

impl<T: Real> CharacterAtlas<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ f(values) P` over all atoms.
    pub fn integrate(&self, f: impl Fn(&[C<T>]) -> C<T>) -> Matrix<T> {
        self.points
            .iter()
            .fold(Matrix::zeros(self.dim, self.dim), |acc, p| {
                &acc + &p.projection.matrix().scale(f(&p.values))
            })
    }

    /// `Σ λᵢ(atom) P(atom)`, which reproduces generator `i`.
    pub fn reconstruct(&self, i: usize) -> Matrix<T> {
        self.integrate(|v| v[i])
    }

    /// Index of the atom whose tuple is within `tol` of `values`.
    pub fn find(&self, values: &[C<T>], tol: T) -> Option<usize> {
        self.points.iter().position(|p| {
            p.values.len() == values.len()
                && p.values.iter().zip(values).all(|(a, b)| (*a - *b).norm() <= tol)
        })
    }
}

fn check_inputs<T: Real>(normals: &[Matrix<T>], n: usize) -> Result<()> {
    let tol = T::tolerances().alg;
    for m in normals {
        if m.rows() != n || m.cols() != n {
            return Err(Error::shape(format!("{n}x{n}"), m.shape_str()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let r = m.normality_residual();
        if r > tol {
            return Err(Error::NotNormal {
                residual: r.to_f64_lossy(),
            });
        }
    }
    for (i, a) in normals.iter().enumerate() {
        for b in &normals[i + 1..] {
            let scale = T::one() + a.frob_norm() * b.frob_norm();
            let r = a
                .commutator(b)
                .frob_norm()
                .max(a.commutator(&b.adjoint()).frob_norm())
                / scale;
            if r > tol {
                return Err(Error::NotCommuting {
                    residual: r.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// Orthonormal basis of the range of a projection.
pub fn range_basis<T: Real>(p: &Projection<T>) -> Result<Vec<Vec<C<T>>>> {
    let eb = eigh(&Hermitian::hermitian_part_of(p.matrix()))?;
    Ok((0..p.dim())
        .filter(|&k| eb.values[k] > T::lit(0.5))
        .map(|k| eb.vectors.column(k))
        .collect())
}

/// Joint eigenprojections of pairwise commuting normal matrices.
///
/// A generic hermitian combination of the generators is diagonalized first;
/// any eigenspace on which some generator is not yet scalar is then split
/// further by compressing the real and imaginary parts of each generator.
pub fn joint_diagonalize<T: Real>(normals: &[Matrix<T>], n: usize) -> Result<CharacterAtlas<T>> {
    check_inputs(normals, n)?;
    if normals.is_empty() {
        return Ok(CharacterAtlas {
            dim: n,
            points: vec![CharacterPoint {
                values: Vec::new(),
                projection: Projection::identity(n),
            }],
        });
    }
    let tol = T::tolerances();
    let mut rng = random::rng(COMBINATION_SEED);
    let mut h = Matrix::<T>::zeros(n, n);
    for m in normals {
        let norm = m.frob_norm();
        if norm.is_zero() {
            continue;
        }
        let m = m.scale_real(T::one() / norm);
        let r: T = random::uniform(&mut rng, 0.5, 1.5);
        let s: T = random::uniform(&mut rng, 0.5, 1.5);
        let sym = &m + &m.adjoint();
        let anti = (&m - &m.adjoint()).scale(Complex::new(T::zero(), s));
        h = &(&h + &sym.scale_real(r)) + &anti;
    }
    let sd = eig_hermitian(&Hermitian::hermitian_part_of(&h))?;

    let mut subspaces: Vec<Vec<Vec<C<T>>>> = Vec::new();
    for (_, p) in &sd.pairs {
        let basis = range_basis(p)?;
        if is_joint_eigenspace(normals, &basis, tol.recon) {
            subspaces.push(basis);
        } else {
            subspaces.extend(split_subspace(normals, basis)?);
        }
    }

    let mut points: Vec<CharacterPoint<T>> = subspaces
        .into_iter()
        .map(|basis| {
            let p = Projection::from_orthonormal(n, &basis);
            let rank = T::lit(basis.len() as f64);
            let values = normals
                .iter()
                .map(|m| (m * p.matrix()).trace() / rank)
                .collect();
            CharacterPoint { values, projection: p }
        })
        .collect();
    points.sort_by(|a, b| compare_tuples(&a.values, &b.values));
    Ok(CharacterAtlas { dim: n, points: merge_equal(points, normals, n) })
}

fn compare_tuples<T: Real>(a: &[C<T>], b: &[C<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Joins atoms whose tuples agree within the cluster threshold.
fn merge_equal<T: Real>(points: Vec<CharacterPoint<T>>, normals: &[Matrix<T>], n: usize) -> Vec<CharacterPoint<T>> {
    let radius = normals.iter().fold(T::zero(), |acc, m| acc.max(m.frob_norm()));
    let gap = T::tolerances().cluster * (T::one() + radius);
    let mut out: Vec<CharacterPoint<T>> = Vec::with_capacity(points.len());
    let mut ranks: Vec<T> = Vec::new();
    for p in points {
        let rank = T::lit(p.projection.rank() as f64);
        let hit = out.iter().position(|q| {
            q.values.iter().zip(&p.values).all(|(a, b)| (*a - *b).norm() < gap)
        });
        match hit {
            Some(i) => {
                let total = ranks[i] + rank;
                let merged = &out[i].projection.matrix().clone() + p.projection.matrix();
                out[i].values = out[i]
                    .values
                    .iter()
                    .zip(&p.values)
                    .map(|(a, b)| (a.scale(ranks[i]) + b.scale(rank)) / total)
                    .collect();
                out[i].projection = Projection::from_orthonormal(n, &range_basis(&Projection::trusted(merged)).unwrap_or_default());
                ranks[i] = total;
            }
            None => {
                out.push(p);
                ranks.push(rank);
            }
        }
    }
    out
}

fn compress<T: Real>(m: &Matrix<T>, basis: &[Vec<C<T>>]) -> Matrix<T> {
    let images: Vec<Vec<C<T>>> = basis.iter().map(|v| m.matvec(v)).collect();
    Matrix::from_fn(basis.len(), basis.len(), |i, j| {
        crate::matrix::vec_inner(&images[j], &basis[i])
    })
}

fn is_joint_eigenspace<T: Real>(normals: &[Matrix<T>], basis: &[Vec<C<T>>], tol: T) -> bool {
    normals.iter().all(|m| {
        let k = compress(m, basis);
        let r = basis.len();
        let mean = k.trace() / T::lit(r as f64);
        let mut dev = T::zero();
        for v in basis {
            let mv = m.matvec(v);
            dev += mv
                .iter()
                .zip(v)
                .map(|(a, b)| (*a - *b * mean).norm_sqr())
                .fold(T::zero(), |x, y| x + y);
        }
        dev.sqrt() <= tol * (T::one() + m.frob_norm())
    })
}

/// Splits a subspace into joint eigenspaces by successive diagonalization of
/// the compressed real and imaginary parts of each generator.
fn split_subspace<T: Real>(normals: &[Matrix<T>], basis: Vec<Vec<C<T>>>) -> Result<Vec<Vec<Vec<C<T>>>>> {
    let mut current = vec![basis];
    for m in normals {
        let (re, im) = re_im(m);
        for part in [re, im] {
            let gap = T::tolerances().cluster * (T::one() + part.matrix().frob_norm());
            let mut next = Vec::new();
            for sub in current {
                if sub.len() == 1 {
                    next.push(sub);
                    continue;
                }
                let k = compress(part.matrix(), &sub);
                let eb = eigh(&Hermitian::hermitian_part_of(&k))?;
                let mut group: Vec<Vec<C<T>>> = Vec::new();
                let mut last = None;
                for j in 0..sub.len() {
                    if let Some(l) = last {
                        if eb.values[j] - l >= gap {
                            next.push(std::mem::take(&mut group));
                        }
                    }
                    last = Some(eb.values[j]);
                    let coords = eb.vectors.column(j);
                    let mut v = vec![C::<T>::zero(); sub[0].len()];
                    for (c, b) in coords.iter().zip(&sub) {
                        for (vi, bi) in v.iter_mut().zip(b) {
                            *vi += *c * bi;
                        }
                    }
                    group.push(v);
                }
                next.push(group);
            }
            current = next;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    fn close(a: C<f64>, re: f64, im: f64) -> bool {
        (a - Complex::new(re, im)).norm() < 1e-10
    }

    #[test]
    fn single_diagonal() {
        let atlas = joint_diagonalize(&[M::real_diag(&[1.0, 1.0, 2.0])], 3).unwrap();
        assert_eq!(atlas.len(), 2);
        assert!(close(atlas.points[0].values[0], 1.0, 0.0));
        assert!(atlas.points[0].projection.matrix().approx_eq(&M::real_diag(&[1.0, 1.0, 0.0]), 1e-12).unwrap());
        assert!(close(atlas.points[1].values[0], 2.0, 0.0));
        assert_eq!(atlas.points[1].projection.rank(), 1);
    }

    #[test]
    fn intersected_eigenspaces() {
        let atlas = joint_diagonalize(&[M::identity(2), M::real_diag(&[2.0, 3.0])], 2).unwrap();
        assert_eq!(atlas.len(), 2);
        assert!(close(atlas.points[0].values[0], 1.0, 0.0) && close(atlas.points[0].values[1], 2.0, 0.0));
        assert!(atlas.points[0].projection.matrix().approx_eq(&M::real_diag(&[1.0, 0.0]), 1e-12).unwrap());
        assert!(close(atlas.points[1].values[1], 3.0, 0.0));
    }

    #[test]
    fn empty_list() {
        let atlas = joint_diagonalize::<f64>(&[], 3).unwrap();
        assert_eq!(atlas.len(), 1);
        assert!(atlas.points[0].values.is_empty());
        assert_eq!(atlas.points[0].projection.matrix(), &M::identity(3));
    }

    #[test]
    fn rotated_commuting_family_round_trips() {
        let mut rng = random::rng(11);
        let u = random::unitary::<f64>(&mut rng, 4);
        let conj = |d: &[C<f64>]| &(&u * &M::diag(d)) * &u.adjoint();
        let a = conj(&[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 2.0), Complex::new(0.0, 2.0)]);
        let b = conj(&[Complex::new(5.0, 0.0), Complex::new(-1.0, 0.0), Complex::new(5.0, 0.0), Complex::new(5.0, 0.0)]);
        let atlas = joint_diagonalize(&[a.clone(), b.clone()], 4).unwrap();
        assert_eq!(atlas.len(), 3);
        assert!(atlas.reconstruct(0).approx_eq(&a, 1e-10).unwrap());
        assert!(atlas.reconstruct(1).approx_eq(&b, 1e-10).unwrap());
        let total = atlas.integrate(|_| Complex::new(1.0, 0.0));
        assert!(total.approx_eq(&M::identity(4), 1e-10).unwrap());
    }

    #[test]
    fn unitary_values_on_circle() {
        let u = M::diag(&[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let atlas = joint_diagonalize(&[u], 2).unwrap();
        for p in &atlas.points {
            assert!((p.values[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_normal_and_non_commuting() {
        assert!(matches!(
            joint_diagonalize(&[M::unit(2, 0, 1)], 2),
            Err(Error::NotNormal { .. })
        ));
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let z = M::real_diag(&[1.0, -1.0]);
        assert!(matches!(joint_diagonalize(&[x, z], 2), Err(Error::NotCommuting { .. })));
    }
}
