//! Pointwise multilinear algebra of `ℝᴺ`-valued exterior forms.

pub mod basis;
pub mod ellipticity;
pub mod kform;
pub mod operator;

pub use basis::{binomial, FormBasis};
pub use ellipticity::{build_mn, build_mt, legendre_hadamard_constant, LegendreHadamard, LhSearch, NormalSymbol};
pub use kform::{KForm, Signature};
pub use operator::{interior_vector_matrix, wedge_covector_matrix, FormSpace, HomOperator};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch { left: Signature, right: Signature },
    #[error("degree {degree} exceeds ambient dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("expected {expected} coefficients, found {found}")]
    CoefficientLength { expected: usize, found: usize },
    #[error("invalid multi-index {0:?}")]
    InvalidMultiIndex(Vec<usize>),
    #[error("matrix of {found} entries does not fit {rows}x{cols}")]
    MatrixShape { rows: usize, cols: usize, found: usize },
    #[error("operator is not square")]
    NotSquare,
    #[error("operator is singular")]
    Singular,
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
}
