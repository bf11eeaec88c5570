//! Weighted a priori and Gaffney ratios across the mesh ladder and weight family.

use std::sync::Arc;

use hodge_core::analytic::FormField;
use hodge_core::grid::norm;
use hodge_core::solver::{adapted_trig_form, gaffney_ratio, BoundaryData, InverseApplied, ManufacturedData, SolveOptions};
use hodge_core::weights::WeightSpec;
use hodge_core::{CoefficientField, DiscreteForm, FaceCondition, GridDomain, HodgeSystem};
use rayon::prelude::*;

use super::{build_domain, coefficient_fields, sample_coefficients};
use crate::config::ExperimentConfig;
use crate::record::{max_over_median, Row};
use crate::VerifyError;

/// A priori ratio and, for homogeneous data, the Gaffney ratio.
type Measurement = (f64, Option<f64>);

/// Smallest admissible gap between `λ` and the discrete spectrum, relative to `max(μ₁, 1)`.
const SPECTRAL_GAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Case {
    Homogeneous(FaceCondition),
    Lifted(FaceCondition),
}

impl Case {
    const ALL: [Case; 4] = [
        Case::Homogeneous(FaceCondition::Tangential),
        Case::Lifted(FaceCondition::Tangential),
        Case::Homogeneous(FaceCondition::Normal),
        Case::Lifted(FaceCondition::Normal),
    ];

    fn bc(self) -> FaceCondition {
        match self {
            Case::Homogeneous(bc) | Case::Lifted(bc) => bc,
        }
    }

    fn name(self) -> String {
        let bc = match self.bc() {
            FaceCondition::Tangential => "tangential",
            FaceCondition::Normal => "normal",
        };
        match self {
            Case::Homogeneous(_) => format!("{bc} homogeneous"),
            Case::Lifted(_) => format!("{bc} lifted"),
        }
    }
}

fn weight_values(spec: &WeightSpec, d: &GridDomain) -> Result<Vec<f64>, VerifyError> {
    let pts: Vec<Vec<f64>> = (0..d.len()).map(|q| d.coords(q)).collect();
    Ok(spec.sample(&pts, d.spacing())?)
}

/// Rejects `λ` close to the smallest discrete eigenvalue.
fn check_spectrum(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let sig = cfg.degrees.signature();
    let h = cfg.ladder[0];
    let d = build_domain(&cfg.domain, sig.dim, h)?;
    let (a, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
    let mut rows = Vec::new();
    for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
        let mu = HodgeSystem::assemble(&a, &b, 0.0, bc)?.spectrum(1)?.eigenvalues[0];
        let gap = (cfg.lambda - mu).abs() / mu.max(1.0);
        if gap < SPECTRAL_GAP {
            return Err(VerifyError::SpectrumProximity { lambda: cfg.lambda, eigenvalue: mu, gap });
        }
        rows.push(Row::info("C8.spectral_gap", Case::Homogeneous(bc).name(), "relative_gap", Some(h), gap));
    }
    Ok(rows)
}

/// Discrete solution, load and lifting of one case.
struct Solved {
    omega: DiscreteForm,
    load: DiscreteForm,
    lift: Option<DiscreteForm>,
}

fn solve_case(cfg: &ExperimentConfig, case: Case, d: &Arc<GridDomain>) -> Result<Solved, VerifyError> {
    let sig = cfg.degrees.signature();
    let bc = case.bc();
    let (a_field, b_field) = coefficient_fields(cfg.coefficients, sig);
    let (a, b) = sample_coefficients(d, cfg.coefficients, sig)?;
    let sys = HodgeSystem::assemble(&a, &b, cfg.lambda, bc)?;
    match case {
        Case::Homogeneous(_) => {
            let v: Arc<dyn FormField> = Arc::new(adapted_trig_form(sig, bc, cfg.seed));
            let omega: Arc<dyn FormField> = match bc {
                FaceCondition::Tangential => v,
                FaceCondition::Normal => Arc::new(InverseApplied { matrix: b_field.clone(), form: v }),
            };
            let data = ManufacturedData::sample(d.clone(), a_field.as_ref(), b_field.as_ref(), cfg.lambda, bc, omega.as_ref());
            let rep = sys.solve_with(&data.load, &data.boundary_data(), &SolveOptions::default())?;
            Ok(Solved { omega: rep.solution, load: data.load, lift: None })
        }
        Case::Lifted(_) => {
            let lift = DiscreteForm::from_fn(d.clone(), sig, |x| {
                (0..sig.len()).map(|c| (1.0 + x[0] * x[1]) * (x[0] + 0.5 * c as f64).cos() + (2.0 * x[1]).sin()).collect()
            });
            let load = DiscreteForm::from_fn(d.clone(), sig, |x| {
                (0..sig.len()).map(|c| (3.0 * x[0] + c as f64).sin() * (x[1] + 0.2).exp()).collect()
            });
            let rep = sys.solve_with(&load, &BoundaryData::lifted(lift.clone()), &SolveOptions::default())?;
            Ok(Solved { omega: rep.solution, load, lift: Some(lift) })
        }
    }
}

/// `(R, Gaffney)` per weight at one mesh width and case.
fn ratios(cfg: &ExperimentConfig, case: Case, h: f64) -> Result<Vec<Measurement>, VerifyError> {
    let sig = cfg.degrees.signature();
    let d = build_domain(&cfg.domain, sig.dim, h)?;
    let s = solve_case(cfg, case, &d)?;
    // Gaffney pairs d(Iω) with d*(Bω): both essential traces are then the solver's
    let (_, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
    let identity = CoefficientField::identity(d.clone(), sig);
    let p = cfg.p;
    cfg.weights
        .iter()
        .map(|spec| {
            let w = weight_values(spec, &d)?;
            let top = norm(&s.omega, p, Some(&w), 2)?;
            let lift = match &s.lift {
                Some(l) => norm(l, p, Some(&w), 2)?,
                None => 0.0,
            };
            let bottom = norm(&s.omega, p, Some(&w), 0)? + norm(&s.load, p, Some(&w), 0)? + lift;
            let gaffney = match case {
                Case::Homogeneous(bc) => Some(gaffney_ratio(&s.omega, &identity, &b, bc, p, Some(&w), 1e-10)?.ratio),
                Case::Lifted(_) => None,
            };
            Ok((top / bottom, gaffney))
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let mut rows = check_spectrum(cfg)?;
    let factor = cfg.tolerances.estimate_factor;
    let jobs: Vec<(Case, f64)> = Case::ALL.iter().flat_map(|&c| cfg.ladder.iter().map(move |&h| (c, h))).collect();
    let measured: Vec<Vec<Measurement>> =
        jobs.par_iter().map(|&(case, h)| ratios(cfg, case, h)).collect::<Result<_, _>>()?;

    for case in Case::ALL {
        let of_case: Vec<(f64, &Vec<Measurement>)> =
            jobs.iter().zip(&measured).filter(|((c, _), _)| *c == case).map(|((_, h), m)| (*h, m)).collect();
        let mut family_r = Vec::new();
        let mut family_g = Vec::new();
        for (i, spec) in cfg.weights.iter().enumerate() {
            let label = format!("{} {}", case.name(), spec.label());
            let r: Vec<f64> = of_case.iter().map(|(_, m)| m[i].0).collect();
            for (&(h, _), &v) in of_case.iter().zip(&r) {
                rows.push(Row::info("C8.apriori_ratio", label.as_str(), "ratio", Some(h), v));
            }
            rows.push(Row::at_most("C8.apriori_ratio", label.as_str(), "ladder_max_over_median", None, max_over_median(&r), factor));
            family_r.extend(r);
            let g: Vec<f64> = of_case.iter().filter_map(|(_, m)| m[i].1).collect();
            if !g.is_empty() {
                for (&(h, _), &v) in of_case.iter().zip(&g) {
                    rows.push(Row::info("C8.gaffney_ratio", label.as_str(), "ratio", Some(h), v));
                }
                rows.push(Row::at_most("C8.gaffney_ratio", label.as_str(), "ladder_max_over_median", None, max_over_median(&g), factor));
                family_g.extend(g);
            }
        }
        rows.push(Row::at_most("C8.apriori_ratio", case.name(), "family_max_over_median", None, max_over_median(&family_r), factor));
        if !family_g.is_empty() {
            rows.push(Row::at_most("C8.gaffney_ratio", case.name(), "family_max_over_median", None, max_over_median(&family_g), factor));
        }
    }
    Ok(rows)
}
