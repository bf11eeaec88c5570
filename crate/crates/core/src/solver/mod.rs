//! Weak-form Hodge systems on grids: assembly, direct solves, spectra and the
//! constructive chains built from them (decomposition, Maxwell, div-curl).
//!
//! Sign convention: `𝔏ω = d*(A dω) + Bᵀ d d*(Bω)` with `d* = +div` on
//! 1-forms, so `𝔏 = Δ` for identity coefficients. Systems solve
//! `𝔏ω = λBω + f` and spectra report the nonnegative quotient `a(u,u)/b(u,u)`.

pub mod chains;
pub mod manufactured;
pub mod spectrum;
pub mod system;

pub use chains::{
    gaffney_ratio, hodge_decompose, solve_div_curl, solve_maxwell, Decomposition, DivCurlSolution, GaffneyMeasurement,
    MaxwellData, MaxwellSolution,
};
pub use manufactured::{adapted_trig_form, InverseApplied, ManufacturedData};
pub use spectrum::{harmonic_fields, Spectrum, EIGEN_MAX_ITERATIONS, EIGEN_TOLERANCE, HARMONIC_THRESHOLD};
pub use system::{
    pinned_components, write_report, BoundaryData, HodgeSystem, ReportSidecar, SolveOptions, SolveReport, SystemMetadata,
};

use crate::forms::AlgebraError;
use crate::grid::GridError;
use crate::sparse::FactorError;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("degree {0} is not supported here")]
    Degree(usize),
    #[error("coefficient error: {0}")]
    Coefficient(String),
    #[error("load has kernel component {kernel_component:.3e}; the singular system has no solution")]
    Incompatible { kernel_component: f64 },
    #[error("compatibility {what} violated: defect {defect:.3e} > {tolerance:.1e}")]
    Compatibility { what: &'static str, defect: f64, tolerance: f64 },
    #[error("refinement stalled at relative residual {residual:.3e} after {steps} steps")]
    Convergence { residual: f64, steps: usize },
    #[error("eigen iteration cap {iterations} reached, residual {residual:.3e}")]
    EigenConvergence { iterations: usize, residual: f64 },
    #[error("boundary trace {measured:.3e} exceeds {tolerance:.1e}")]
    Trace { measured: f64, tolerance: f64 },
    #[error("ratio undefined for the zero form")]
    ZeroInput,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("serialization failed: {0}")]
    Format(String),
}
