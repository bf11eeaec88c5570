//! Muckenhoupt weights, maximal operators and reflection extensions on
//! rectangular lattices. All constants are suprema over an explicit discrete
//! ball family, not over all Euclidean balls.

pub mod lattice;
pub mod maximal;
pub mod muckenhoupt;

pub use lattice::{prefix_sums, Ball, BallFamily, FamilySpec, RectGrid, Segment};
pub use maximal::{fefferman_stein_ratio, maximal, maximal_ratio, weighted_lp, MaximalKind, MaximalProfile};
pub use muckenhoupt::{
    ap_constant, extend_function_reflection, extend_weight_reflection, half_family, higher_power_exponent, power_weight,
    reflection_bound, reflection_oscillation_ratio, restrict_to_upper, reverse_holder_ratio, HigherPower, ReflectionBound,
    Weight, WeightSpec,
};

/// Default Fefferman–Stein dilation `k₀ = 2√n`.
pub fn default_k0(dim: usize) -> f64 {
    2.0 * (dim as f64).sqrt()
}

#[derive(Debug, thiserror::Error)]
pub enum WeightError {
    #[error("invalid lattice: {0}")]
    Shape(String),
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("exponent {0} unsupported; need p > 1")]
    Exponent(f64),
    #[error("weight at node {node} is {value}, expected positive and finite")]
    NonPositive { node: usize, value: f64 },
    #[error("truncation radius {0} must exceed one cell")]
    Radius(f64),
    #[error("ratio undefined for the zero function")]
    ZeroFunction,
    #[error("function is nonzero at node {node} outside the support ball")]
    Support { node: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
