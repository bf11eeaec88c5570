//! Manufactured convergence, spectra and the constructive chains.

use std::sync::Arc;

use hodge_core::analytic::{FormField, MatrixField};
use hodge_core::grid::Calculus;
use hodge_core::solver::{
    adapted_trig_form, harmonic_fields, hodge_decompose, solve_div_curl, solve_maxwell, InverseApplied, ManufacturedData,
    MaxwellData, SolveOptions,
};
use hodge_core::{CoefficientField, DiscreteForm, FaceCondition, GridDomain, HodgeSystem, Signature, Stencil};
use rayon::prelude::*;

use super::{build_domain, coefficient_fields, sample_coefficients, smooth_coefficient};
use crate::config::{CoefficientSpec, ExperimentConfig};
use crate::record::{loglog_slope, observed_orders, Plot, Row, Series};
use crate::VerifyError;

const CONDITIONS: [FaceCondition; 2] = [FaceCondition::Tangential, FaceCondition::Normal];

fn bc_name(bc: FaceCondition) -> &'static str {
    match bc {
        FaceCondition::Tangential => "tangential",
        FaceCondition::Normal => "normal",
    }
}

/// `InverseApplied` wrapper, or the bare form when no matrix is given.
fn wrapped(form: Arc<dyn FormField>, matrix: Option<Arc<dyn MatrixField>>) -> Arc<dyn FormField> {
    match matrix {
        Some(matrix) => Arc::new(InverseApplied { matrix, form }),
        None => form,
    }
}

fn sample(domain: &Arc<GridDomain>, field: &dyn FormField) -> DiscreteForm {
    DiscreteForm::from_fn(domain.clone(), field.signature(), |x| field.value(x))
}

/// Pushes per-h info rows and the min/max observed order checks.
fn order_rows(rows: &mut Vec<Row>, id: &str, case: &str, quantity: &str, hs: &[f64], values: &[f64], cfg: &ExperimentConfig) {
    for (&h, &v) in hs.iter().zip(values) {
        rows.push(Row::info(id, case, quantity, Some(h), v));
    }
    let orders = observed_orders(hs, values);
    let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rows.push(Row::at_least(id, case, "min_observed_order", None, lo, cfg.tolerances.order_min));
    rows.push(Row::at_most(id, case, "max_observed_order", None, hi, cfg.tolerances.order_max));
}

/// `O(h²)` check for residuals that may already sit at rounding level:
/// passes on the finest grid if the value is below the floor, otherwise
/// requires the minimum observed order.
fn order_or_floor(rows: &mut Vec<Row>, id: &str, case: &str, quantity: &str, hs: &[f64], values: &[f64], cfg: &ExperimentConfig) {
    for (&h, &v) in hs.iter().zip(values) {
        rows.push(Row::info(id, case, quantity, Some(h), v));
    }
    let finest = *values.last().expect("nonempty ladder");
    if finest <= cfg.tolerances.chain_floor {
        rows.push(Row::at_most(id, case, &format!("{quantity}_finest"), None, finest, cfg.tolerances.chain_floor));
    } else {
        let lo = observed_orders(hs, values).into_iter().fold(f64::INFINITY, f64::min);
        rows.push(Row::at_least(id, case, &format!("{quantity}_min_order"), None, lo, cfg.tolerances.order_min));
    }
}

fn convergence(cfg: &ExperimentConfig) -> Result<(Vec<Row>, Plot), VerifyError> {
    let sig = cfg.degrees.signature();
    let (a_field, b_field) = coefficient_fields(cfg.coefficients, sig);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for bc in CONDITIONS {
        let v: Arc<dyn FormField> = Arc::new(adapted_trig_form(sig, bc, cfg.seed));
        let omega = wrapped(v, (bc == FaceCondition::Normal).then(|| b_field.clone()));
        let solves: Vec<(f64, f64)> = cfg
            .ladder
            .par_iter()
            .map(|&h| -> Result<(f64, f64), VerifyError> {
                let d = build_domain(&cfg.domain, sig.dim, h)?;
                let data = ManufacturedData::sample(d.clone(), a_field.as_ref(), b_field.as_ref(), cfg.lambda, bc, omega.as_ref());
                let (a, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
                let sys = HodgeSystem::assemble(&a, &b, cfg.lambda, bc)?;
                let rep = sys.solve_with(&data.load, &data.boundary_data(), &SolveOptions::default())?;
                Ok((rep.solution.sub(&data.exact)?.l2_norm(), rep.algebraic_residual))
            })
            .collect::<Result<_, _>>()?;
        let errors: Vec<f64> = solves.iter().map(|s| s.0).collect();
        let case = format!("{} n={} k={}", bc_name(bc), sig.dim, sig.degree);
        order_rows(&mut rows, "C5.convergence_order", &case, "l2_error", &cfg.ladder, &errors, cfg);
        let worst = solves.iter().map(|s| s.1).fold(0.0, f64::max);
        rows.push(Row::at_most("C5.algebraic_residual", case.as_str(), "max_relative_residual", None, worst, cfg.tolerances.solve));
        let points: Vec<(f64, f64)> = cfg.ladder.iter().copied().zip(errors).collect();
        let slope = loglog_slope(&points);
        rows.push(Row::info("C5.convergence_order", case.as_str(), "fitted_slope", None, slope));
        series.push(Series { label: bc_name(bc).into(), points, slope: Some(slope) });
    }
    let plot = Plot { name: "convergence".into(), x_label: "h".into(), y_label: "L2 error".into(), series };
    Ok((rows, plot))
}

fn relative_kernel_defect(calc: &Calculus, h: &DiscreteForm) -> Result<f64, VerifyError> {
    let sig = h.signature();
    let dh = if sig.degree < sig.dim { calc.d(h)?.l2_norm() } else { 0.0 };
    let ch = if sig.degree > 0 { calc.codiff(h)?.l2_norm() } else { 0.0 };
    Ok((dh + ch) / h.l2_norm())
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let tol = &cfg.tolerances;
    let mut rows = Vec::new();
    let h = cfg.ladder[0];
    let sig = cfg.degrees.signature();
    let d = build_domain(&cfg.domain, sig.dim, h)?;
    for bc in CONDITIONS {
        let (a, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
        let spec = HodgeSystem::assemble(&a, &b, 0.0, bc)?.spectrum(6)?;
        let min = spec.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let case = format!("{} n={} k={}", bc_name(bc), sig.dim, sig.degree);
        rows.push(Row::at_least("C6.spectrum_nonnegative", case.as_str(), "min_eigenvalue_over_scale", Some(h), min / spec.scale, -tol.spectrum));
        rows.push(Row::info("C6.spectrum_nonnegative", case.as_str(), "min_eigenvalue", Some(h), min));
    }

    for n in 2..=3usize {
        let nodes = if n == 2 { ExperimentConfig::box_nodes(h) } else { 9 };
        let d = Arc::new(GridDomain::unit_box(n, nodes)?);
        let calc = Calculus::new(d.clone(), Stencil::Summation);
        for bc in CONDITIONS {
            for k in 1..n {
                let fields = harmonic_fields(d.clone(), Signature::new(n, k, 1), bc)?;
                let case = format!("{} n={n} k={k}", bc_name(bc));
                rows.push(Row::at_most("C6.harmonic_space_empty", case, "kernel_dimension", Some(d.h()), fields.len() as f64, 0.0));
            }
        }
        for (k, bc) in [(0, FaceCondition::Normal), (n, FaceCondition::Tangential)] {
            let sig = Signature::new(n, k, 2);
            let fields = harmonic_fields(d.clone(), sig, bc)?;
            let case = format!("{} n={n} k={k} N=2", bc_name(bc));
            rows.push(Row::info("C6.kernel_fields", case.as_str(), "kernel_dimension", Some(d.h()), fields.len() as f64));
            let mut worst = 0.0f64;
            for f in &fields {
                worst = worst.max(relative_kernel_defect(&calc, f)?);
            }
            rows.push(Row::at_most("C6.kernel_fields", case.as_str(), "max_relative_d_plus_codiff", Some(d.h()), worst, tol.kernel_fields));
        }
    }
    Ok(rows)
}

/// Smooth non-adapted field for the decomposition.
fn decomposition_load(d: &Arc<GridDomain>, sig: Signature) -> DiscreteForm {
    DiscreteForm::from_fn(d.clone(), sig, |x| {
        (0..sig.len()).map(|c| (1.0 + c as f64 + x[0]).sin() * (2.0 * x[1] + 0.3 * c as f64).cos() + x[0] * x[1]).collect()
    })
}

fn chains(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let tol = &cfg.tolerances;
    let sig = cfg.degrees.signature();
    let mut rows = Vec::new();
    let amp = match cfg.coefficients {
        CoefficientSpec::Smooth { amplitude, .. } => amplitude,
        CoefficientSpec::Constant { .. } => 0.0,
    };
    let maxwell_lambda = 1.0;

    for bc in CONDITIONS {
        let name = bc_name(bc);
        let per_h: Vec<ChainPoint> =
            cfg.ladder.par_iter().map(|&h| chain_point(cfg, sig, bc, h, amp, maxwell_lambda)).collect::<Result<_, _>>()?;
        let case = format!("{name} n={} k={}", sig.dim, sig.degree);
        for (p, &h) in per_h.iter().zip(&cfg.ladder) {
            rows.push(Row::at_most("C7.decomposition", case.as_str(), "interior_residual", Some(h), p.decomposition[0], tol.decomposition));
            rows.push(Row::at_most("C7.decomposition", case.as_str(), "orthogonality", Some(h), p.decomposition[1], tol.orthogonality));
            rows.push(Row::info("C7.decomposition", case.as_str(), "weighted_orthogonality", Some(h), p.decomposition[2]));
            rows.push(Row::at_most("C7.maxwell_codiff_alpha", case.as_str(), "relative_codiff_alpha", Some(h), p.maxwell[0], tol.maxwell_codiff));
            rows.push(Row::at_most("C7.div_curl_trace", case.as_str(), "relative_pinned_trace", Some(h), p.div_curl[2], tol.trace));
        }
        let series = |f: &dyn Fn(&ChainPoint) -> f64| per_h.iter().map(f).collect::<Vec<f64>>();
        order_or_floor(&mut rows, "C7.maxwell_residual", &case, "equation_residual", &cfg.ladder, &series(&|p| p.maxwell[1]), cfg);
        order_or_floor(&mut rows, "C7.maxwell_residual", &case, "constraint_residual", &cfg.ladder, &series(&|p| p.maxwell[2]), cfg);
        let sampled = format!("{case} sampled data");
        order_or_floor(&mut rows, "C7.div_curl_residual", &sampled, "curl_residual", &cfg.ladder, &series(&|p| p.div_curl[0]), cfg);
        order_or_floor(&mut rows, "C7.div_curl_residual", &sampled, "div_residual", &cfg.ladder, &series(&|p| p.div_curl[1]), cfg);
    }
    Ok(rows)
}

/// Field supported in `[0.2, 0.8]ⁿ`, so every boundary condition and every
/// nodewise compatibility condition holds exactly.
fn bump_field(d: &Arc<GridDomain>, sig: Signature) -> DiscreteForm {
    DiscreteForm::from_fn(d.clone(), sig, |x| {
        let bubble: f64 = x
            .iter()
            .map(|t| {
                let s = (t - 0.5) / 0.3;
                if s.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            })
            .product();
        (0..sig.len()).map(|c| bubble * (1.0 + x[0] + 0.5 * c as f64).cos() * (2.0 * x[1] - 0.3 * c as f64).exp()).collect()
    })
}

struct ChainPoint {
    /// interior residual, orthogonality, weighted orthogonality
    decomposition: [f64; 3],
    /// codiff α, equation, constraint
    maxwell: [f64; 3],
    /// curl, div, trace
    div_curl: [f64; 3],
}

/// Compatibility defects of sampled div-curl data are `O(h)` relative to
/// `(‖f‖+‖g‖)/h`; the chain then carries the defect into its `O(h²)` residuals.
const SAMPLED_COMPATIBILITY: f64 = 1.0;

fn chain_point(cfg: &ExperimentConfig, sig: Signature, bc: FaceCondition, h: f64, amp: f64, lambda: f64) -> Result<ChainPoint, VerifyError> {
    let d = build_domain(&cfg.domain, sig.dim, h)?;
    let (a, b) = sample_coefficients(&d, cfg.coefficients, sig)?;
    let calc = Calculus::new(d.clone(), Stencil::Summation);
    let sampled = Calculus::new(d.clone(), Stencil::SecondOrder);

    let dec = hodge_decompose(&decomposition_load(&d, sig), &a, &b, bc)?;
    let decomposition = [dec.interior_residual, dec.orthogonality, dec.weighted_orthogonality];

    let exact = bump_field(&d, sig);
    let bw = b.apply(&exact)?;
    let f = calc.codiff(&a.apply(&calc.d(&exact)?)?)?.axpy(-lambda, &bw)?;
    let g = calc.codiff(&bw)?;
    let mx = solve_maxwell(&a, &b, lambda, bc, MaxwellData { f: &f, g: &g, omega0: None }, 1e-6)?;
    let maxwell = [mx.codiff_alpha, mx.equation_residual, mx.constraint_residual];

    let (a_dc, b_dc) = (smooth_coefficient(sig, 1.5 * amp), smooth_coefficient(sig, amp));
    let a_k = CoefficientField::from_field(d.clone(), &a_dc)?;
    let b_k = CoefficientField::from_field(d.clone(), &b_dc)?;
    let v: Arc<dyn FormField> = Arc::new(adapted_trig_form(sig, bc, cfg.seed ^ 0x5c));
    let inverse: Arc<dyn MatrixField> = match bc {
        FaceCondition::Tangential => Arc::new(a_dc),
        FaceCondition::Normal => Arc::new(b_dc),
    };
    let target = sample(&d, wrapped(v, Some(inverse)).as_ref());
    let f = sampled.d(&a_k.apply(&target)?)?;
    let g = sampled.codiff(&b_k.apply(&target)?)?;
    let dc = solve_div_curl(&a_k, &b_k, bc, &f, &g, SAMPLED_COMPATIBILITY)?;
    let div_curl = [dc.curl_residual, dc.div_residual, dc.trace];
    Ok(ChainPoint { decomposition, maxwell, div_curl })
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Vec<Row>, Vec<Plot>), VerifyError> {
    let (mut rows, plot) = convergence(cfg)?;
    rows.extend(spectrum(cfg)?);
    rows.extend(chains(cfg)?);
    Ok((rows, vec![plot]))
}
