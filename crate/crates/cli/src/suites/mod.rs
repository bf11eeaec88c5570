//! Sweep drivers, one module per suite.

use std::sync::Arc;

use hodge_core::analytic::{ConstantMatrix, MatrixField, TrigCoefficient, TrigMode};
use hodge_core::{CoefficientField, GridDomain, Signature};

use crate::config::{CoefficientSpec, DomainSpec, ExperimentConfig, Suite};
use crate::record::SweepResult;
use crate::VerifyError;

pub mod apriori;
pub mod decay;
pub mod identities;
pub mod solver;
pub mod weights;

/// Runs one experiment and collects its rows.
pub fn run(cfg: &ExperimentConfig) -> Result<SweepResult, VerifyError> {
    cfg.validate()?;
    let (rows, plots) = match cfg.suite {
        Suite::Identities => (identities::run(cfg)?, Vec::new()),
        Suite::Weights => (weights::run(cfg)?, Vec::new()),
        Suite::Solver => solver::run(cfg)?,
        Suite::Apriori => (apriori::run(cfg)?, Vec::new()),
        Suite::Decay => decay::run(cfg)?,
    };
    Ok(SweepResult::new(cfg, rows, plots))
}

/// Grid for mesh width `h`.
pub fn build_domain(spec: &DomainSpec, dim: usize, h: f64) -> Result<Arc<GridDomain>, VerifyError> {
    let across = |extent: f64| {
        let cells = (extent / h).round() as usize;
        cells + cells % 2
    };
    let domain = match spec {
        DomainSpec::UnitBox => GridDomain::unit_box(dim, ExperimentConfig::box_nodes(h))?,
        DomainSpec::Boxed { lower, upper } => {
            let shape: Vec<usize> = lower.iter().zip(upper).map(|(l, u)| ((u - l) / h).round() as usize + 1).collect();
            GridDomain::boxed(lower, upper, &shape)?
        }
        DomainSpec::HalfBall { radius } => GridDomain::half_ball(dim, *radius, across(2.0 * radius))?,
        DomainSpec::Ball { radius } => GridDomain::ball(dim, *radius, across(2.0 * radius))?,
    };
    Ok(Arc::new(domain))
}

/// `1.5·I` plus one trigonometric mode of size `amp` (off-diagonal `amp/2`).
pub fn smooth_coefficient(space: Signature, amp: f64) -> TrigCoefficient {
    let l = space.len();
    let mut base = vec![0.0; l * l];
    (0..l).for_each(|i| base[i * l + i] = 1.5);
    let matrix = (0..l * l).map(|e| if e / l == e % l { amp } else { 0.5 * amp }).collect();
    let wave = (0..space.dim).map(|a| 1.0 + a as f64).collect();
    TrigCoefficient { space, base, modes: vec![TrigMode { matrix, wave, phase: 0.3 }] }
}

/// Continuous coefficients `(A on Λᵏ⁺¹, B on Λᵏ)`.
pub fn coefficient_fields(spec: CoefficientSpec, sig: Signature) -> (Arc<dyn MatrixField>, Arc<dyn MatrixField>) {
    let up = sig.with_degree(sig.degree + 1);
    match spec {
        CoefficientSpec::Constant { a, b } => {
            (Arc::new(ConstantMatrix::scaled_identity(up, a)), Arc::new(ConstantMatrix::scaled_identity(sig, b)))
        }
        CoefficientSpec::Smooth { amplitude, .. } => {
            (Arc::new(smooth_coefficient(up, 1.5 * amplitude)), Arc::new(smooth_coefficient(sig, amplitude)))
        }
    }
}

/// Sampled coefficients; a smooth spec must respect its Lipschitz bound.
pub fn sample_coefficients(
    domain: &Arc<GridDomain>,
    spec: CoefficientSpec,
    sig: Signature,
) -> Result<(CoefficientField, CoefficientField), VerifyError> {
    let (a, b) = coefficient_fields(spec, sig);
    let a = CoefficientField::from_field(domain.clone(), a.as_ref())?;
    let b = CoefficientField::from_field(domain.clone(), b.as_ref())?;
    if let CoefficientSpec::Smooth { lipschitz, .. } = spec {
        let measured = a.lipschitz().max(b.lipschitz());
        if measured > lipschitz {
            return Err(VerifyError::Config(format!("coefficient Lipschitz constant {measured:.3} exceeds bound {lipschitz}")));
        }
    }
    Ok((a, b))
}
