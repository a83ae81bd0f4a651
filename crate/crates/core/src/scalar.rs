//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type the library is generic over (`f32` or `f64`).
///
/// Each implementation carries its own tolerance table, since the residual
/// levels reachable in single precision are far above the double precision
/// ones.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    fn tolerances() -> Tolerances<Self>;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

pub type C<T> = Complex<T>;

/// Residual thresholds used across the crate. All of them are relative:
/// callers scale by `1 + norm` of the operands involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// hermiticity residual accepted before symmetrization
    pub herm: T,
    /// idempotency / orthogonality of projections
    pub proj: T,
    /// reconstruction of an operator from its parts
    pub recon: T,
    /// eigenvalue accuracy
    pub eig: T,
    /// eigenvalues closer than this (relative) are merged
    pub cluster: T,
    /// allowed negative eigenvalue for "positive" operators
    pub psd: T,
    /// membership in / closure of a *-algebra
    pub alg: T,
    /// agreement of two linear extensions
    pub ext: T,
    /// agreement of a limiting-sequence limit with its exact value
    pub lim: T,
    /// regularity deficit of a scalar measure
    pub meas: T,
}

impl Real for f64 {
    fn tolerances() -> Tolerances<f64> {
        Tolerances {
            herm: 1e-10,
            proj: 1e-8,
            recon: 1e-8,
            eig: 1e-9,
            cluster: 1e-7,
            psd: 1e-9,
            alg: 1e-8,
            ext: 1e-7,
            lim: 1e-5,
            meas: 1e-9,
        }
    }
}

impl Real for f32 {
    fn tolerances() -> Tolerances<f32> {
        Tolerances {
            herm: 1e-5,
            proj: 1e-4,
            recon: 1e-4,
            eig: 1e-4,
            cluster: 1e-3,
            psd: 1e-4,
            alg: 1e-4,
            ext: 1e-3,
            lim: 1e-2,
            meas: 1e-4,
        }
    }
}

