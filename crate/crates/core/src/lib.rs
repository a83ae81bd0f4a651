//! Spectral measures and operator-valued integration on discrete spaces.
//!
//! Every numerical type is generic over a [`Real`] scalar (`f32` or `f64`);
//! the aliases at the crate root fix the scalar to `f64`, which is what the
//! tolerance table is calibrated for.

pub mod algebra;
pub mod error;
pub mod joint;
pub mod labelfn;
pub mod limiting;
pub mod matrix;
pub mod measure;
pub mod nnsm;
pub mod random;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod star;
pub mod unbounded;

pub use error::{Error, Result};
pub use scalar::{Real, Tolerances, C};

pub type ComplexMatrix = matrix::Matrix<f64>;
pub type HermitianOperator = spectral::Hermitian<f64>;
pub type HermitianProjection = spectral::Projection<f64>;
pub type SpectralDecomposition = spectral::SpectralDecomposition<f64>;
pub type VonNeumannAlgebra = algebra::VonNeumannAlgebra<f64>;
pub type ProjectionFamily = algebra::ProjectionFamily<f64>;
pub type LimitingSequence = limiting::LimitingSequence<f64>;
pub type CharacterAtlas = joint::CharacterAtlas<f64>;
pub type SpectralMeasure = measure::SpectralMeasure<f64>;
pub type NonNegSpectralMeasure = nnsm::NonNegSpectralMeasure<f64>;
pub type BlockModel = unbounded::BlockModel<f64>;
pub type DomainVector = unbounded::DomainVector<f64>;
pub type UnboundedField = unbounded::UnboundedField<f64>;
