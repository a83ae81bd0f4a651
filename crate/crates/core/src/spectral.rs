//! Hermitian eigendecomposition and the operator decompositions built on it:
//! spectral projections, real/imaginary and positive/negative parts, square
//! roots and operator norms.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Real, C};

const MAX_SWEEPS: usize = 100;

/// Square matrix with `A = A*` up to the hermiticity tolerance. Construction
/// symmetrizes, so the stored matrix is hermitian to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian<T>(Matrix<T>);

impl<T: Real> Hermitian<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        m.ensure_square()?;
        let residual = m.hermitian_residual();
        if residual > T::tolerances().herm {
            return Err(Error::NonHermitian {
                residual: residual.to_f64_lossy(),
            });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Hermitian part `(A + A*)/2` of any square matrix.
    pub fn hermitian_part_of(m: &Matrix<T>) -> Self {
        Self(m.hermitian_part())
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Hermitian projection `P = P* = P²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T>(Matrix<T>);

impl<T: Real> Projection<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        m.ensure_square()?;
        let residual = projection_residual(&m);
        if residual > T::tolerances().proj {
            return Err(Error::NotProjection {
                residual: residual.to_f64_lossy(),
            });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Wraps a matrix known to be a projection by construction.
    pub(crate) fn trusted(m: Matrix<T>) -> Self {
        Self(m)
    }

    pub fn zero(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    /// Orthogonal projection onto the span of orthonormal vectors.
    pub fn from_orthonormal(n: usize, vectors: &[Vec<C<T>>]) -> Self {
        let mut m = Matrix::zeros(n, n);
        for v in vectors {
            m = &m + &Matrix::outer(v, v);
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round().to_usize().unwrap_or(0)
    }

    pub fn complement(&self) -> Self {
        Self(&Matrix::identity(self.dim()) - &self.0)
    }
}

/// `max(‖P² − P‖_F, ‖P − P*‖_F)`.
pub fn projection_residual<T: Real>(m: &Matrix<T>) -> T {
    let idem = (&(m * m) - m).frob_norm();
    let herm = (m - &m.adjoint()).frob_norm();
    idem.max(herm)
}

/// Raw eigen-decomposition: ascending eigenvalues and the unitary whose
/// columns are the corresponding eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenBasis<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Cyclic complex Jacobi iteration on a hermitian matrix.
///
/// Each rotation factors the pivot as a phase times a real symmetric 2×2
/// problem, so the iteration is the real Jacobi method in a rotated frame.
pub fn eigh<T: Real>(a: &Hermitian<T>) -> Result<EigenBasis<T>> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = Matrix::<T>::identity(n);
    let scale = m.frob_norm();
    if scale.is_zero() {
        return Ok(EigenBasis {
            values: vec![T::zero(); n],
            vectors: v,
        });
    }
    let target = scale * T::epsilon() * T::lit(n as f64);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigSolverFailure {
                sweeps,
                off_diagonal: off.to_f64_lossy(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q, scale);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenBasis { values, vectors })
}

fn off_diagonal_norm<T: Real>(m: &Matrix<T>) -> T {
    let n = m.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate<T: Real>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, scale: T) {
    let n = m.rows();
    let b = m[(p, q)];
    let mag = b.norm();
    if mag <= scale * T::epsilon() * T::lit(1e-3) {
        m[(p, q)] = C::zero();
        m[(q, p)] = C::zero();
        return;
    }
    let e = b / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * mag);
    let t = {
        let s = if theta >= T::zero() { T::one() } else { -T::one() };
        s / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let cth = T::one() / (t * t + T::one()).sqrt();
    let sth = t * cth;
    let (c, s) = (Complex::new(cth, T::zero()), Complex::new(sth, T::zero()));
    let ec = e.conj();
    // V = [[c, s], [-s ē, c ē]] on coordinates (p, q); A ← V* A V.
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = c * akp - s * ec * akq;
        m[(k, q)] = s * akp + c * ec * akq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = c * apk - s * e * aqk;
        m[(q, k)] = s * apk + c * e * aqk;
    }
    m[(p, q)] = C::zero();
    m[(q, p)] = C::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * ec * vkq;
        v[(k, q)] = s * vkp + c * ec * vkq;
    }
}

/// Spectral resolution `A = Σ λᵢ Pᵢ` with strictly increasing eigenvalues and
/// mutually orthogonal eigenprojections summing to the identity.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T> {
    pub pairs: Vec<(T, Projection<T>)>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.pairs.first().map_or(0, |(_, p)| p.dim())
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.pairs.iter().map(|(l, _)| *l).collect()
    }

    pub fn min(&self) -> T {
        self.pairs.first().map_or(T::zero(), |(l, _)| *l)
    }

    pub fn max(&self) -> T {
        self.pairs.last().map_or(T::zero(), |(l, _)| *l)
    }

    /// Spectral radius, which is also the operator norm.
    pub fn radius(&self) -> T {
        self.min().abs().max(self.max().abs())
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.apply(|l| l)
    }

    /// Functional calculus `Σ f(λᵢ) Pᵢ`.
    pub fn apply(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.dim();
        self.pairs.iter().fold(Matrix::zeros(n, n), |acc, (l, p)| {
            &acc + &p.matrix().scale_real(f(*l))
        })
    }

    /// Resolution of identity `E(λ) = Σ_{λᵢ ≤ λ} Pᵢ`.
    pub fn resolution(&self, lambda: T) -> Matrix<T> {
        let n = self.dim();
        self.pairs
            .iter()
            .filter(|(l, _)| *l <= lambda)
            .fold(Matrix::zeros(n, n), |acc, (_, p)| &acc + p.matrix())
    }
}

/// Eigendecomposition with near-degenerate eigenvalues merged into a single
/// projection.
pub fn eig_hermitian<T: Real>(a: &Hermitian<T>) -> Result<SpectralDecomposition<T>> {
    let basis = eigh(a)?;
    let n = a.dim();
    let tol = T::tolerances();
    let radius = basis
        .values
        .iter()
        .fold(T::zero(), |acc, l| acc.max(l.abs()));
    let gap = tol.cluster * (T::one() + radius);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters.last_mut() {
            Some(cl) if basis.values[i] - basis.values[*cl.last().unwrap()] < gap => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let pairs = clusters
        .into_iter()
        .map(|cl| {
            let lambda = cl.iter().fold(T::zero(), |acc, &i| acc + basis.values[i])
                / T::lit(cl.len() as f64);
            let vecs: Vec<Vec<C<T>>> = cl.iter().map(|&i| basis.vectors.column(i)).collect();
            (lambda, Projection::from_orthonormal(n, &vecs))
        })
        .collect();
    Ok(SpectralDecomposition { pairs })
}

/// The four positive parts of `A = re₊ − re₋ + i·im₊ − i·im₋`.
#[derive(Debug, Clone)]
pub struct StarParts<T> {
    pub re_plus: Hermitian<T>,
    pub re_minus: Hermitian<T>,
    pub im_plus: Hermitian<T>,
    pub im_minus: Hermitian<T>,
}

impl<T: Real> StarParts<T> {
    /// Parts paired with the coefficients `i^j` in the order re₊, im₊, re₋, im₋.
    pub fn with_phases(&self) -> [(C<T>, &Hermitian<T>); 4] {
        let one = C::one();
        let i = Complex::new(T::zero(), T::one());
        [
            (one, &self.re_plus),
            (i, &self.im_plus),
            (-one, &self.re_minus),
            (-i, &self.im_minus),
        ]
    }

    pub fn recombine(&self) -> Matrix<T> {
        let n = self.re_plus.dim();
        self.with_phases()
            .iter()
            .fold(Matrix::zeros(n, n), |acc, (ph, h)| &acc + &h.matrix().scale(*ph))
    }
}

/// Positive and negative parts `(A₊, A₋)` of a hermitian operator.
pub fn positive_negative<T: Real>(a: &Hermitian<T>) -> Result<(Hermitian<T>, Hermitian<T>)> {
    let sd = eig_hermitian(a)?;
    let plus = sd.apply(|l| l.max(T::zero()));
    let minus = sd.apply(|l| (-l).max(T::zero()));
    Ok((Hermitian(plus.hermitian_part()), Hermitian(minus.hermitian_part())))
}

/// Real part `(A + A*)/2` and imaginary part `(A − A*)/(2i)`.
pub fn re_im<T: Real>(a: &Matrix<T>) -> (Hermitian<T>, Hermitian<T>) {
    let a_star = a.adjoint();
    let re = (a + &a_star).scale_real(T::lit(0.5));
    let im = (a - &a_star).scale(Complex::new(T::zero(), T::lit(-0.5)));
    (Hermitian(re.hermitian_part()), Hermitian(im.hermitian_part()))
}

pub fn star_decompose<T: Real>(a: &Matrix<T>) -> Result<StarParts<T>> {
    a.ensure_square()?;
    let (re, im) = re_im(a);
    let (re_plus, re_minus) = positive_negative(&re)?;
    let (im_plus, im_minus) = positive_negative(&im)?;
    Ok(StarParts {
        re_plus,
        re_minus,
        im_plus,
        im_minus,
    })
}

/// Positive square root of a positive semidefinite operator.
pub fn positive_sqrt<T: Real>(a: &Hermitian<T>) -> Result<Hermitian<T>> {
    let sd = eig_hermitian(a)?;
    let floor = -T::tolerances().psd * (T::one() + sd.radius());
    if sd.min() < floor {
        return Err(Error::NotPositive {
            min_eigenvalue: sd.min().to_f64_lossy(),
        });
    }
    Ok(Hermitian(sd.apply(|l| l.max(T::zero()).sqrt()).hermitian_part()))
}

/// Minimum eigenvalue of a hermitian operator.
pub fn min_eigenvalue<T: Real>(a: &Hermitian<T>) -> Result<T> {
    Ok(eigh(a)?.values.first().copied().unwrap_or(T::zero()))
}

/// Largest singular value.
pub fn op_norm<T: Real>(a: &Matrix<T>) -> Result<T> {
    let gram = Hermitian::hermitian_part_of(&(&a.adjoint() * a));
    let top = eigh(&gram)?.values.last().copied().unwrap_or(T::zero());
    Ok(top.max(T::zero()).sqrt())
}

pub fn frob_norm<T: Real>(a: &Matrix<T>) -> T {
    a.frob_norm()
}

pub fn approx_eq<T: Real>(a: &Matrix<T>, b: &Matrix<T>, tol: T) -> Result<bool> {
    a.approx_eq(b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    fn herm(m: M) -> Hermitian<f64> {
        Hermitian::new(m).unwrap()
    }

    #[test]
    fn diagonal_with_repeated_eigenvalue() {
        let sd = eig_hermitian(&herm(M::real_diag(&[2.0, 2.0, 5.0]))).unwrap();
        assert_eq!(sd.pairs.len(), 2);
        assert!((sd.pairs[0].0 - 2.0).abs() < 1e-12);
        assert!(sd.pairs[0].1.matrix().approx_eq(&M::real_diag(&[1.0, 1.0, 0.0]), 1e-12).unwrap());
        assert!((sd.pairs[1].0 - 5.0).abs() < 1e-12);
        assert!(sd.pairs[1].1.matrix().approx_eq(&M::real_diag(&[0.0, 0.0, 1.0]), 1e-12).unwrap());
    }

    #[test]
    fn identity_has_single_pair() {
        let sd = eig_hermitian(&herm(M::identity(3))).unwrap();
        assert_eq!(sd.pairs.len(), 1);
        assert_eq!(sd.pairs[0].0, 1.0);
        assert_eq!(sd.pairs[0].1.matrix(), &M::identity(3));
    }

    #[test]
    fn swap_matrix_projections() {
        // characteristic polynomial λ² − 1; eigenvectors (1, ∓1)/√2
        let sd = eig_hermitian(&herm(M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]))).unwrap();
        let p_minus = M::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        let p_plus = M::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!((sd.pairs[0].0 + 1.0).abs() < 1e-14);
        assert!((sd.pairs[1].0 - 1.0).abs() < 1e-14);
        assert!(sd.pairs[0].1.matrix().approx_eq(&p_minus, 1e-13).unwrap());
        assert!(sd.pairs[1].1.matrix().approx_eq(&p_plus, 1e-13).unwrap());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(Hermitian::new(m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = M::from_fn(3, 3, |i, j| {
            let re = (i + j) as f64 * 0.3;
            let im = (i as f64 - j as f64) * 0.7;
            Complex::new(re, im)
        });
        let h = herm(m.clone());
        let sd = eig_hermitian(&h).unwrap();
        assert!(sd.reconstruct().approx_eq(&m, 1e-12).unwrap());
    }

    #[test]
    fn star_decompose_examples() {
        let p = star_decompose(&M::real_diag(&[3.0, -1.0])).unwrap();
        assert!(p.re_plus.matrix().approx_eq(&M::real_diag(&[3.0, 0.0]), 1e-14).unwrap());
        assert!(p.re_minus.matrix().approx_eq(&M::real_diag(&[0.0, 1.0]), 1e-14).unwrap());
        assert!(p.im_plus.matrix().frob_norm() < 1e-14);
        assert!(p.im_minus.matrix().frob_norm() < 1e-14);

        let i2 = M::identity(2).scale(Complex::new(0.0, 1.0));
        let p = star_decompose(&i2).unwrap();
        assert!(p.im_plus.matrix().approx_eq(&M::identity(2), 1e-14).unwrap());
        assert!(p.re_plus.matrix().frob_norm() < 1e-14);

        // PQ for P = diag(1,0), Q = ½[[1,1],[1,1]] is ½[[1,1],[0,0]]
        let pm = M::real_diag(&[1.0, 0.0]);
        let qm = M::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pq = &pm * &qm;
        assert!(pq.approx_eq(&M::from_real_rows(&[&[0.5, 0.5], &[0.0, 0.0]]), 1e-15).unwrap());
        let parts = star_decompose(&pq).unwrap();
        assert!(parts.recombine().approx_eq(&pq, 1e-13).unwrap());
        let (re, im) = re_im(&pq);
        let re_oracle = (&pq + &(&qm * &pm)).scale_real(0.5);
        assert!(re.matrix().approx_eq(&re_oracle, 1e-15).unwrap());
        let im_oracle = (&pq - &(&qm * &pm)).scale(Complex::new(0.0, -0.5));
        assert!(im.matrix().approx_eq(&im_oracle, 1e-15).unwrap());
    }

    #[test]
    fn sqrt_examples() {
        let r = positive_sqrt(&herm(M::real_diag(&[4.0, 9.0]))).unwrap();
        assert!(r.matrix().approx_eq(&M::real_diag(&[2.0, 3.0]), 1e-14).unwrap());
        let r = positive_sqrt(&herm(M::identity(3))).unwrap();
        assert!(r.matrix().approx_eq(&M::identity(3), 1e-14).unwrap());

        let a = M::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let r = positive_sqrt(&herm(a.clone())).unwrap();
        let sd = eig_hermitian(&r).unwrap();
        let ev = sd.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-13 && (ev[1] - 3f64.sqrt()).abs() < 1e-13);
        assert!((r.matrix() * r.matrix()).approx_eq(&a, 1e-13).unwrap());

        assert!(matches!(
            positive_sqrt(&herm(M::real_diag(&[1.0, -1.0]))),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn operator_norms() {
        assert!((op_norm(&M::real_diag(&[1.0, -3.0])).unwrap() - 3.0).abs() < 1e-14);
        let nil = M::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((op_norm(&nil).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_precision_works() {
        let m = Matrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let sd = eig_hermitian(&Hermitian::new(m.clone()).unwrap()).unwrap();
        assert_eq!(sd.pairs.len(), 2);
        assert!(sd.reconstruct().approx_eq(&m, 1e-5).unwrap());
    }
}
