use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("operator is not hermitian (relative residual {residual:e})")]
    NonHermitian { residual: f64 },
    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    EigSolverFailure { sweeps: usize, off_diagonal: f64 },
    #[error("operator is not positive (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("operator is not a hermitian projection (residual {residual:e})")]
    NotProjection { residual: f64 },
    #[error("algebra is not abelian (commutator residual {residual:e})")]
    NotAbelian { residual: f64 },
    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("operator is not in the span of the family (residual {residual:e})")]
    NotInSpan { residual: f64 },
    #[error("family does not span the algebra ({rank} of {dim} dimensions)")]
    NotSpanning { rank: usize, dim: usize },
    #[error("assignment is not consistent with linear relations (disagreement {residual:e})")]
    InconsistentAssignment { residual: f64 },
    #[error("operators do not commute (residual {residual:e})")]
    NotCommuting { residual: f64 },
    #[error("operator is not normal (residual {residual:e})")]
    NotNormal { residual: f64 },
    #[error("set or measure belongs to a different space: {0}")]
    SpaceMismatch(String),
    #[error("function is unbounded on an infinite set")]
    UnboundedOnSet,
    #[error("set is infinite where a finite set is required")]
    InfiniteSet,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("operator is outside the algebra (residual {residual:e})")]
    AlgebraMismatch { residual: f64 },
    #[error("vector is not in the evaluation domain: {0}")]
    NotInD0(String),
    #[error("invalid document: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(expected: impl std::fmt::Display, actual: impl std::fmt::Display) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
