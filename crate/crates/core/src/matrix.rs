//! Dense complex matrices and the shared matrix text format.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("non-empty matrix", format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(rows * cols, data.len()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { C::zero() })
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let entries: Vec<C<T>> = entries.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect();
        Self::diag(&entries)
    }

    /// Builds a matrix from real rows; handy for literals in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n, m, |i, j| Complex::new(T::lit(rows[i][j]), T::zero()))
    }

    /// Matrix unit `E_ij` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        Self::from_fn(n, n, |a, b| if a == i && b == j { C::one() } else { C::zero() })
    }

    /// Rank-one projector `v v*` (not normalized).
    pub fn outer(v: &[C<T>], w: &[C<T>]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C<T>> {
        self.data
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(self.shape_str(), other.shape_str()));
        }
        Ok(())
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::shape("square matrix", self.shape_str()));
        }
        Ok(self.rows)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Trace inner product `tr(self* other)`.
    pub fn inner(&self, other: &Self) -> C<T> {
        self.data
            .iter()
            .zip(&other.data)
            .fold(C::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn frob_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).fold(C::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(T::lit(0.5))
    }

    /// `‖A − A*‖_F / (1 + ‖A‖_F)`.
    pub fn hermitian_residual(&self) -> T {
        (self - &self.adjoint()).frob_norm() / (T::one() + self.frob_norm())
    }

    /// `‖AA* − A*A‖_F / (1 + ‖A‖_F²)`.
    pub fn normality_residual(&self) -> T {
        let a_star = self.adjoint();
        let n = self.frob_norm();
        (&(self * &a_star) - &(&a_star * self)).frob_norm() / (T::one() + n * n)
    }

    /// Relative distance `‖A − B‖_F / (1 + max(‖A‖_F, ‖B‖_F))`.
    pub fn rel_dist(&self, other: &Self) -> T {
        let scale = T::one() + self.frob_norm().max(other.frob_norm());
        (self - other).frob_norm() / scale
    }

    /// `‖A − B‖_F ≤ tol · (1 + max(‖A‖_F, ‖B‖_F))`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> Result<bool> {
        self.ensure_same_shape(other)?;
        Ok(self.rel_dist(other) <= tol)
    }

    /// Solves `self · x = rhs` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot vanishes relative to the matrix scale.
    pub fn solve(&self, rhs: &[C<T>]) -> Option<Vec<C<T>>> {
        let n = self.rows;
        if !self.is_square() || rhs.len() != n {
            return None;
        }
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = self.max_abs().max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::lit(n as f64 * 16.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x * n + col]
                        .norm()
                        .partial_cmp(&a[y * n + col].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[pivot * n + col].norm() <= tiny {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                b.swap(col, pivot);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f.is_zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
                let bc = b[col];
                b[r] -= f * bc;
            }
        }
        let mut x = vec![C::zero(); n];
        for r in (0..n).rev() {
            let mut acc = b[r];
            for k in r + 1..n {
                acc -= a[r * n + k] * x[k];
            }
            x[r] = acc / a[r * n + r];
        }
        Some(x)
    }

    pub fn to_doc(&self) -> MatrixDoc {
        MatrixDoc {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
                .collect(),
        }
    }

    pub fn from_doc(doc: &MatrixDoc) -> Result<Self> {
        let data = doc
            .data
            .iter()
            .map(|[re, im]| {
                Ok(Complex::new(
                    T::from_f64(*re).ok_or(Error::NonFinite)?,
                    T::from_f64(*im).ok_or(Error::NonFinite)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.rows, doc.cols, data)
    }
}

/// Serialized form of a matrix: `{"rows", "cols", "data": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix add shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sub shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![C::zero(); n * p];
        for i in 0..n {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * p..(k + 1) * p];
                let dst = &mut out[i * p..(i + 1) * p];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Matrix { rows: n, cols: p, data: out }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Sum of a slice of equally shaped matrices; `None` for an empty slice.
pub fn sum<'a, T: Real>(items: impl IntoIterator<Item = &'a Matrix<T>>) -> Option<Matrix<T>> {
    let mut iter = items.into_iter();
    let first = iter.next()?.clone();
    Some(iter.fold(first, |acc, m| &acc + m))
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `⟨v, w⟩ = Σ v_i conj(w_i)`, linear in the first argument.
pub fn vec_inner<T: Real>(v: &[C<T>], w: &[C<T>]) -> C<T> {
    v.iter().zip(w).fold(C::zero(), |acc, (a, b)| acc + a * b.conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(M::new(0, 1, vec![]).is_err());
        assert!(M::new(2, 2, vec![C::zero(); 3]).is_err());
        assert_eq!(
            M::new(1, 1, vec![Complex::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn product_and_adjoint() {
        let a = M::from_fn(2, 3, |i, j| Complex::new(i as f64, j as f64));
        let b = a.adjoint();
        let p = &a * &b;
        assert_eq!(p.rows(), 2);
        assert!(p.hermitian_residual() < 1e-15);
        assert_eq!(p.trace(), a.inner(&a));
    }

    #[test]
    fn approx_eq_is_reflexive_and_checks_shape() {
        let a = M::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(a.approx_eq(&a, 0.0).unwrap());
        assert!(a.approx_eq(&M::zeros(2, 3), 1.0).is_err());
    }

    #[test]
    fn solve_small_system() {
        let a = M::from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = a.solve(&[Complex::new(3.0, 0.0), Complex::new(5.0, 0.0)]).unwrap();
        assert!((x[0].re - 0.8).abs() < 1e-14 && (x[1].re - 1.4).abs() < 1e-14);
        assert!(M::zeros(2, 2).solve(&[C::zero(), C::zero()]).is_none());
    }

    #[test]
    fn kron_shape_and_values() {
        let a = M::real_diag(&[1.0, 2.0]);
        let b = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(3, 2)].re, 2.0);
        assert_eq!(k[(0, 2)].re, 0.0);
    }

    #[test]
    fn document_round_trip_is_lossless() {
        let a = M::from_fn(2, 2, |i, j| Complex::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) / 7.0));
        let text = a.to_doc().to_json();
        let back = M::from_doc(&MatrixDoc::from_json(&text).unwrap()).unwrap();
        assert_eq!(a, back);
    }
}
