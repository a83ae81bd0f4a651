//! Seeded random operators. All generators draw from a caller-owned
//! `ChaCha8Rng`, so every scenario is reproducible from its seed.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;
use crate::scalar::{Real, C};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<T: Real>(rng: &mut Rng64) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn complex_normal<T: Real>(rng: &mut Rng64) -> C<T> {
    Complex::new(normal(rng), normal(rng))
}

pub fn uniform<T: Real>(rng: &mut Rng64, lo: f64, hi: f64) -> T {
    T::lit(rng.random_range(lo..hi))
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<T: Real>(rng: &mut Rng64, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Random hermitian matrix `(G + G*)/2`.
pub fn hermitian<T: Real>(rng: &mut Rng64, n: usize) -> Matrix<T> {
    ginibre::<T>(rng, n, n).hermitian_part()
}

/// Haar-ish random unitary via Gram–Schmidt on a Ginibre matrix.
pub fn unitary<T: Real>(rng: &mut Rng64, n: usize) -> Matrix<T> {
    let g = ginibre::<T>(rng, n, n);
    let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for u in &cols {
            let proj = crate::matrix::vec_inner(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = crate::matrix::vec_norm(&v);
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random complex vector of length `n`.
pub fn vector<T: Real>(rng: &mut Rng64, n: usize) -> Vec<C<T>> {
    (0..n).map(|_| complex_normal(rng)).collect()
}
