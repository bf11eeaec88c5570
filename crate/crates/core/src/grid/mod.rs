//! Uniform grids on boxes and (half-)balls, discrete forms and finite-difference calculus.

pub mod calculus;
pub mod coefficient;
pub mod domain;
pub mod field;
pub mod hessian;
pub mod io;
pub mod norms;
pub mod pullback;

pub use calculus::{
    codifferential, exterior_derivative, hodge_laplacian, integration_by_parts_residual, integration_by_parts_terms,
    partial_matrix, trace_normal, trace_tangential, BoundaryTrace, Calculus, IbpTerms, Stencil,
};
pub use coefficient::CoefficientField;
pub use domain::{BoundaryFacet, BoundarySelector, DomainKind, FacetKind, GridDomain};
pub use field::DiscreteForm;
pub use hessian::{hessian_normalize, hessian_oscillation, FaceCondition, HessianNormalization, HessianOscillation};
pub use io::{read_container, write_container, write_csv_slice};
pub use norms::{hessian_field, norm, norm_on, second_difference_matrix};
pub use pullback::{interpolate, pullback, roundtrip_error, AffineMap, Composition, Diffeomorphism, GraphFlattening};

use crate::forms::Signature;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid shape: {0}")]
    Shape(String),
    #[error("domain dimension {domain} does not match form dimension {form}")]
    DimensionMismatch { domain: usize, form: usize },
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("signature mismatch: {left} vs {right}")]
    Signature { left: Signature, right: Signature },
    #[error("forms live on different domains")]
    DomainMismatch,
    #[error("{op} is undefined for degree {degree}")]
    Degree { degree: usize, op: &'static str },
    #[error("weight at node {node} is {value}, expected a positive finite value")]
    Weight { node: usize, value: f64 },
    #[error("exponent {0} must satisfy 1 < p < ∞")]
    Exponent(f64),
    #[error("point {point:?} lies outside the grid")]
    Extrapolation { point: Vec<f64> },
    #[error("radius {rho} outside (0, {max}]")]
    Radius { rho: f64, max: f64 },
    #[error("coefficient error: {0}")]
    Coefficient(String),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
