use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("incompatible bihermitian data: {0}")]
    IncompatibleBihermitian(String),
    #[error("matrix is not a complex structure (residual {0:.3e})")]
    NotComplexStructure(f64),
    #[error("matrix is not antisymmetric (residual {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("non-transverse conjugate projections")]
    NonTransverse,
    #[error("difference is not a graph")]
    NotAGraph,
    #[error("non-complementary graphs")]
    NonComplementary,
    #[error("degenerate metric")]
    DegenerateMetric,
    #[error("non-finite sample at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("rank drop at sample point {0:?}")]
    RankDrop(Vec<f64>),
    #[error("closure mismatch: |dB - Im H| = {0:.3e}")]
    ClosureMismatch(f64),
    #[error("element not in the expected subgroup or subalgebra (residual {0:.3e})")]
    NotInSubgroup(f64),
    #[error("composability violated (residual {0:.3e})")]
    NotComposable(f64),
    #[error("solver did not converge (residual {0:.3e})")]
    NoConvergence(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
