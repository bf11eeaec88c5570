//! Numerical toolkit for Hodge-type elliptic systems on Euclidean grids.
//!
//! - [`forms`]: exterior algebra of `ℝᴺ`-valued forms and ellipticity symbols.
//! - [`grid`]: grid domains, discrete `d`/`d*`, traces, pullbacks, norms.
//! - [`analytic`]: closed-form fields with exact jets for manufactured data.
//! - [`weights`]: Muckenhoupt weights, maximal functions, reflections.
//! - [`solver`]: assembly and solution of tangential/normal Hodge systems.

pub mod analytic;
pub mod forms;
pub mod grid;
pub mod solver;
pub mod sparse;
pub mod weights;

pub use forms::{AlgebraError, FormSpace, HomOperator, KForm, Signature};
pub use grid::{CoefficientField, DiscreteForm, FaceCondition, GridDomain, GridError, Stencil};
pub use solver::{HodgeSystem, SolveReport, SolverError};
