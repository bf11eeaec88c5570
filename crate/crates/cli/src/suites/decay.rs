//! Mean-oscillation decay of the Hessian near the flat face and in the interior.

use std::sync::Arc;

use hodge_core::grid::hessian_oscillation;
use hodge_core::solver::{BoundaryData, SolveOptions};
use hodge_core::{DiscreteForm, FaceCondition, GridDomain, HodgeSystem, Signature};
use rayon::prelude::*;

use super::{build_domain, sample_coefficients};
use crate::config::{CoefficientSpec, DomainSpec, ExperimentConfig};
use crate::record::{loglog_slope, max_over_median, Plot, Row, Series};
use crate::VerifyError;

/// Largest radius of the dyadic profile.
const RHO_MAX: f64 = 0.5;
/// Smallest resolvable radius in cells.
const RHO_MIN_CELLS: f64 = 4.0;
/// Outer radii `r` of the reverse-Hölder pairs `(B_{r/2}, B_{3r/4})`.
const HOLDER_RADII: [f64; 3] = [1.0, 0.5, 0.25];
/// Exponent predicted by the continuous estimate.
const REFERENCE_EXPONENT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Geometry {
    HalfBall(FaceCondition),
    Ball,
}

impl Geometry {
    const ALL: [Geometry; 3] = [Geometry::HalfBall(FaceCondition::Tangential), Geometry::HalfBall(FaceCondition::Normal), Geometry::Ball];

    fn name(self) -> &'static str {
        match self {
            Geometry::HalfBall(FaceCondition::Tangential) => "half-ball tangential",
            Geometry::HalfBall(FaceCondition::Normal) => "half-ball normal",
            Geometry::Ball => "ball interior",
        }
    }

    fn bc(self) -> FaceCondition {
        match self {
            Geometry::HalfBall(bc) => bc,
            Geometry::Ball => FaceCondition::Tangential,
        }
    }
}

/// Dyadic radii from [`RHO_MAX`] down to [`RHO_MIN_CELLS`] cells.
pub fn dyadic_radii(h: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut rho = RHO_MAX;
    while rho >= RHO_MIN_CELLS * h * (1.0 - 1e-12) {
        radii.push(rho);
        rho *= 0.5;
    }
    radii
}

/// Smooth lifting data vanishing in the components the flat face pins.
fn lifting(d: &Arc<GridDomain>, sig: Signature, bc: FaceCondition) -> DiscreteForm {
    DiscreteForm::from_fn(d.clone(), sig, |x| {
        let pinned_free = (3.0 * x[1]).sin() * (x[0] + 0.3).exp();
        let other = (2.0 * x[0] + 0.5).cos() * (1.0 + x[1]);
        match bc {
            FaceCondition::Tangential => vec![pinned_free, other],
            FaceCondition::Normal => vec![other, pinned_free],
        }
    })
}

/// One solve: `(ρ, Ψ(ρ))` profile and reverse-Hölder ratios.
struct Profile {
    h: f64,
    points: Vec<(f64, f64)>,
    holder: Vec<f64>,
}

fn profile(cfg: &ExperimentConfig, geometry: Geometry, h: f64) -> Result<Profile, VerifyError> {
    let sig = cfg.degrees.signature();
    let radius = match cfg.domain {
        DomainSpec::HalfBall { radius } | DomainSpec::Ball { radius } => radius,
        _ => return Err(VerifyError::Config("decay suite needs a (half-)ball domain".into())),
    };
    let spec = match geometry {
        Geometry::HalfBall(_) => DomainSpec::HalfBall { radius },
        Geometry::Ball => DomainSpec::Ball { radius },
    };
    let d = build_domain(&spec, sig.dim, h)?;
    let (a, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
    let bc = geometry.bc();
    let sys = HodgeSystem::assemble(&a, &b, 0.0, bc)?;
    let natural_sig = match bc {
        FaceCondition::Tangential => sig.with_degree(sig.degree - 1),
        FaceCondition::Normal => sig.with_degree(sig.degree + 1),
    };
    let data = BoundaryData::lifted(lifting(&d, sig, bc)).with_natural(DiscreteForm::zeros(d.clone(), natural_sig));
    let u = sys.solve_with(&DiscreteForm::zeros(d.clone(), sig), &data, &SolveOptions::default())?.solution;

    let center = vec![0.0; sig.dim];
    let radii = dyadic_radii(d.h());
    let points = hessian_oscillation(&u, &center, &radii)?.iter().map(|o| (o.rho, o.oscillation)).collect();
    let inner: Vec<f64> = HOLDER_RADII.iter().map(|r| 0.5 * r * radius).collect();
    let outer: Vec<f64> = HOLDER_RADII.iter().map(|r| 0.75 * r * radius).collect();
    let l2 = hessian_oscillation(&u, &center, &inner)?;
    let l1 = hessian_oscillation(&u, &center, &outer)?;
    let holder = l2.iter().zip(&l1).map(|(a, b)| a.l2_mean / b.l1_mean).collect();
    Ok(Profile { h: d.h(), points, holder })
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Vec<Row>, Vec<Plot>), VerifyError> {
    if !matches!(cfg.coefficients, CoefficientSpec::Constant { .. }) {
        return Err(VerifyError::Config("decay suite needs constant coefficients".into()));
    }
    if cfg.degrees.dim != 2 || cfg.degrees.degree != 1 || cfg.degrees.multiplicity != 1 {
        return Err(VerifyError::Config("decay suite lifting data are defined for n = 2, k = 1, N = 1".into()));
    }
    let tol = &cfg.tolerances;
    let finest = *cfg.ladder.last().expect("validated ladder");
    let found = dyadic_radii(finest).len();
    if found < tol.min_octaves + 1 {
        return Err(VerifyError::DyadicRange { needed: tol.min_octaves + 1, found });
    }

    let jobs: Vec<(Geometry, f64)> = Geometry::ALL.iter().flat_map(|&g| cfg.ladder.iter().map(move |&h| (g, h))).collect();
    let profiles: Vec<Profile> = jobs.par_iter().map(|&(g, h)| profile(cfg, g, h)).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for geometry in Geometry::ALL {
        let case = geometry.name();
        let of: Vec<&Profile> = jobs.iter().zip(&profiles).filter(|((g, _), _)| *g == geometry).map(|(_, p)| p).collect();
        for p in &of {
            for &(rho, psi) in &p.points {
                rows.push(Row::info("C9.decay_profile", format!("{case} rho={rho}"), "mean_oscillation", Some(p.h), psi));
            }
            if p.points.len() >= 2 {
                rows.push(Row::info("C9.decay_slope", case, "fitted_slope", Some(p.h), loglog_slope(&p.points)));
            }
        }
        let last = of.last().expect("nonempty ladder");
        let slope = loglog_slope(&last.points);
        rows.push(Row::at_least("C9.decay_slope", case, "finest_fitted_slope", None, slope, tol.decay_slope));
        rows.push(Row::info("C9.decay_slope", case, "reference_exponent", None, REFERENCE_EXPONENT));
        rows.push(Row::info("C9.decay_slope", case, "octaves", None, (last.points.len() - 1) as f64));
        series.push(Series { label: case.into(), points: last.points.clone(), slope: Some(slope) });

        for (i, r) in HOLDER_RADII.iter().enumerate() {
            let ratios: Vec<f64> = of.iter().map(|p| p.holder[i]).collect();
            let label = format!("{case} r={r}");
            for (p, &v) in of.iter().zip(&ratios) {
                rows.push(Row::info("C9.reverse_holder", label.as_str(), "l2_over_l1_mean", Some(p.h), v));
            }
            rows.push(Row::at_most("C9.reverse_holder", label, "ladder_max_over_median", None, max_over_median(&ratios), tol.estimate_factor));
        }
    }
    let plot = Plot { name: "decay".into(), x_label: "rho".into(), y_label: "Hessian mean oscillation".into(), series };
    Ok((rows, vec![plot]))
}
