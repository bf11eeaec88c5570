//! Experiment harness for the Hodge-system toolkit: configs, sweeps, CSV/SVG output.

use std::path::PathBuf;

use hodge_core::weights::WeightError;
use hodge_core::{AlgebraError, GridError, SolverError};

pub mod config;
pub mod emit;
pub mod record;
pub mod suites;

pub use config::{ExperimentConfig, Suite};
pub use record::{Row, SweepResult};

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("emit: {0}")]
    Emit(String),
    #[error("experiment {0} produced no rows")]
    EmptySweep(String),
    #[error("lambda = {lambda} lies within {gap:.3e} of the eigenvalue {eigenvalue}")]
    SpectrumProximity { lambda: f64, eigenvalue: f64, gap: f64 },
    #[error("need {needed} dyadic radii in the admissible range, found {found}")]
    DyadicRange { needed: usize, found: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
