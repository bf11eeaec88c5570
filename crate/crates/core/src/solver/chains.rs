use std::sync::Arc;

use super::spectrum::harmonic_fields;
use super::system::{pinned_components, BoundaryData, HodgeSystem, SolveOptions, SolveReport};
use super::SolverError;
use crate::forms::operator::columns_of;
use crate::forms::Signature;
use crate::grid::{norm, Calculus, CoefficientField, DiscreteForm, FaceCondition, GridDomain, Stencil};

fn rel(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

fn summation(domain: &Arc<GridDomain>) -> Calculus {
    Calculus::new(domain.clone(), Stencil::Summation)
}

/// `L²` norm over the rows where `keep` is true.
fn masked_norm(u: &DiscreteForm, keep: &[bool]) -> f64 {
    let q = u.domain().quadrature();
    let l = u.signature().len().max(1);
    u.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(i, v)| q[i / l] * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Rows not fixed by `bc` at degree `sig`, or every row on nodes with a full
/// stencil when `interior` is requested.
fn row_mask(domain: &GridDomain, sig: Signature, bc: FaceCondition, interior: bool) -> Vec<bool> {
    if interior {
        let l = sig.len();
        let mut keep = vec![false; domain.len() * l];
        for p in domain.interior_nodes(1) {
            keep[p * l..(p + 1) * l].iter_mut().for_each(|v| *v = true);
        }
        keep
    } else {
        pinned_components(domain, sig, bc).into_iter().map(|p| !p).collect()
    }
}

/// Output of [`hodge_decompose`]: `f = Bᵀdα + d*(Aβ) + h` with `α = d*(Bθ)`
/// and `β = dθ`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub theta: DiscreteForm,
    pub alpha: Option<DiscreteForm>,
    pub beta: Option<DiscreteForm>,
    pub harmonic: DiscreteForm,
    /// `Bᵀ dα`
    pub exact_part: DiscreteForm,
    /// `d*(Aβ)`
    pub coexact_part: DiscreteForm,
    /// `‖f − h − Bᵀdα − d*(Aβ)‖ / ‖f‖` on nodes with a full stencil.
    pub interior_residual: f64,
    /// Same on the remaining nodes, where pinned rows carry boundary data.
    pub boundary_residual: f64,
    /// `|⟨dα, d*(Aβ)⟩| / ‖f‖²`
    pub orthogonality: f64,
    /// `|⟨Bᵀdα, d*(Aβ)⟩| / ‖f‖²`
    pub weighted_orthogonality: f64,
    pub report: SolveReport,
}

/// Splits `f` by solving the Hodge system for `θ` with load `f − h`.
pub fn hodge_decompose(
    f: &DiscreteForm,
    a: &CoefficientField,
    b: &CoefficientField,
    bc: FaceCondition,
) -> Result<Decomposition, SolverError> {
    let domain = f.domain().clone();
    let sig = f.signature();
    let fields = harmonic_fields(domain.clone(), sig, bc)?;
    let mut h = DiscreteForm::zeros(domain.clone(), sig);
    for field in &fields {
        h = h.axpy(f.l2_inner(field)?, field)?;
    }
    decompose_with_harmonic(f, h, a, b, bc)
}

pub(crate) fn decompose_with_harmonic(
    f: &DiscreteForm,
    h: DiscreteForm,
    a: &CoefficientField,
    b: &CoefficientField,
    bc: FaceCondition,
) -> Result<Decomposition, SolverError> {
    let domain = f.domain().clone();
    let sig = f.signature();
    let system = HodgeSystem::assemble(a, b, 0.0, bc)?;
    let load = f.sub(&h)?;
    let opts = SolveOptions { project_kernel: true, ..SolveOptions::default() };
    let report = system.solve_with(&load, &BoundaryData::homogeneous(), &opts)?;
    let theta = report.solution.clone();
    let calc = summation(&domain);

    let alpha = system.lower_field(&theta);
    let beta = system.upper_field(&theta);
    let d_alpha = alpha.as_ref().map(|al| calc.d(al)).transpose()?;
    let exact_part = match &d_alpha {
        Some(da) => b.transpose().apply(da)?,
        None => DiscreteForm::zeros(domain.clone(), sig),
    };
    let coexact_part = match system.upper_flux(&theta) {
        Some(flux) => calc.codiff(&flux)?,
        None => DiscreteForm::zeros(domain.clone(), sig),
    };
    let residual = load.sub(&exact_part)?.sub(&coexact_part)?;
    let fnorm = f.l2_norm();
    let interior = domain.interior_nodes(1);
    let mut on_boundary = vec![true; domain.len()];
    interior.iter().for_each(|&p| on_boundary[p] = false);
    let boundary: Vec<usize> = (0..domain.len()).filter(|&p| on_boundary[p]).collect();
    let f2 = fnorm * fnorm;
    let orthogonality = match &d_alpha {
        Some(da) => rel(da.l2_inner(&coexact_part)?.abs(), f2),
        None => 0.0,
    };
    let weighted_orthogonality = rel(exact_part.l2_inner(&coexact_part)?.abs(), f2);
    Ok(Decomposition {
        theta,
        alpha,
        beta,
        harmonic: h,
        interior_residual: rel(residual.l2_norm_on(&interior), fnorm),
        boundary_residual: rel(residual.l2_norm_on(&boundary), fnorm),
        orthogonality,
        weighted_orthogonality,
        exact_part,
        coexact_part,
        report,
    })
}

/// Output of [`solve_maxwell`].
#[derive(Debug, Clone)]
pub struct MaxwellSolution {
    pub omega: DiscreteForm,
    pub alpha: DiscreteForm,
    pub beta: DiscreteForm,
    /// `‖d*α‖ / ‖α‖` over the rows the α-system controls.
    pub codiff_alpha: f64,
    /// `‖d*(Bβ)‖ / ‖Bβ‖` over the rows the β-system controls.
    pub codiff_beta: f64,
    /// `‖d*(Adω) − λBω − f‖ / ‖f‖` on nodes at least two layers inside.
    pub equation_residual: f64,
    /// `‖d*(Bω) − g‖ / ‖g‖` on the same nodes.
    pub constraint_residual: f64,
    /// Measured `d*g` and `d*f + λg` defects relative to `(‖f‖ + ‖g‖)/h`.
    pub compatibility: [f64; 2],
    pub alpha_report: SolveReport,
    pub beta_report: SolveReport,
}

/// Data of the Hodge–Maxwell problem `d*(Adω) = λBω + f`, `d*(Bω) = g`,
/// with the essential trace of `ω₀`.
#[derive(Debug, Clone, Copy)]
pub struct MaxwellData<'a> {
    pub f: &'a DiscreteForm,
    pub g: &'a DiscreteForm,
    pub omega0: Option<&'a DiscreteForm>,
}

/// Solves the Maxwell system by an `α`-solve for the constraint followed by a
/// full Hodge solve for the remainder, `ω = β + dα + ω₀`.
pub fn solve_maxwell(
    a: &CoefficientField,
    b: &CoefficientField,
    lambda: f64,
    bc: FaceCondition,
    data: MaxwellData<'_>,
    compatibility_tolerance: f64,
) -> Result<MaxwellSolution, SolverError> {
    let MaxwellData { f, g, omega0 } = data;
    let domain = f.domain().clone();
    let sig = f.signature();
    if sig.degree == 0 {
        return Err(SolverError::Degree(0));
    }
    let low = sig.with_degree(sig.degree - 1);
    if g.signature() != low {
        return Err(SolverError::Grid(crate::grid::GridError::Signature { left: low, right: g.signature() }));
    }
    let calc = summation(&domain);
    let interior = bc == FaceCondition::Normal;

    let scale = (f.l2_norm() + g.l2_norm()) / domain.h();
    let d_g = if low.degree > 0 {
        masked_norm(&calc.codiff(g)?, &row_mask(&domain, low.with_degree(low.degree - 1), bc, interior))
    } else {
        0.0
    };
    let div_f = calc.codiff(f)?.axpy(lambda, g)?;
    let d_f = masked_norm(&div_f, &row_mask(&domain, low, bc, interior));
    let compatibility = [rel(d_g, scale), rel(d_f, scale)];
    for (defect, what) in compatibility.iter().zip(["d*g", "d*f + λg"]) {
        if *defect > compatibility_tolerance {
            return Err(SolverError::Compatibility { what, defect: *defect, tolerance: compatibility_tolerance });
        }
    }

    let identity_low = CoefficientField::identity(domain.clone(), low);
    let alpha_system = HodgeSystem::assemble(b, &identity_low, 0.0, bc)?;
    let mut load_alpha = g.clone();
    if let Some(w0) = omega0 {
        load_alpha = load_alpha.sub(&calc.codiff(&b.apply(w0)?)?)?;
    }
    let alpha_report = alpha_system.solve_with(&load_alpha, &BoundaryData::homogeneous(), &SolveOptions::default())?;
    let alpha = alpha_report.solution.clone();
    let codiff_alpha = match alpha_system.lower_field(&alpha) {
        Some(c) => rel(c.l2_norm(), alpha.l2_norm()),
        None => 0.0,
    };

    let d_alpha = calc.d(&alpha)?;
    let mut f_tilde = f.axpy(lambda, &b.apply(&d_alpha)?)?;
    if let Some(w0) = omega0 {
        f_tilde = f_tilde.axpy(lambda, &b.apply(w0)?)?;
        if sig.degree < sig.dim {
            f_tilde = f_tilde.sub(&calc.codiff(&a.apply(&calc.d(w0)?)?)?)?;
        }
    }
    let beta_system = HodgeSystem::assemble(a, b, lambda, bc)?;
    let beta_report = beta_system.solve_with(&f_tilde, &BoundaryData::homogeneous(), &SolveOptions::default())?;
    let beta = beta_report.solution.clone();
    let codiff_beta = match beta_system.lower_field(&beta) {
        Some(c) => rel(c.l2_norm(), b.apply(&beta)?.l2_norm()),
        None => 0.0,
    };

    let mut omega = beta.add(&d_alpha)?;
    if let Some(w0) = omega0 {
        omega = omega.add(w0)?;
    }
    // rows next to the boundary see the dropped first-order rows of the weak form
    let nodes = domain.interior_nodes(2);
    let mut eq = b.apply(&omega)?.scale(-lambda).sub(f)?;
    if sig.degree < sig.dim {
        eq = eq.add(&calc.codiff(&a.apply(&calc.d(&omega)?)?)?)?;
    }
    let con = calc.codiff(&b.apply(&omega)?)?.sub(g)?;
    let fscale = f.l2_norm_on(&nodes).max(lambda * b.apply(&omega)?.l2_norm_on(&nodes));
    Ok(MaxwellSolution {
        equation_residual: rel(eq.l2_norm_on(&nodes), fscale),
        constraint_residual: rel(con.l2_norm_on(&nodes), g.l2_norm_on(&nodes)),
        omega,
        alpha,
        beta,
        codiff_alpha,
        codiff_beta,
        compatibility,
        alpha_report,
        beta_report,
    })
}

/// Output of [`solve_div_curl`].
#[derive(Debug, Clone)]
pub struct DivCurlSolution {
    pub omega: DiscreteForm,
    /// `‖d(Aω) − f‖ / ‖f‖` on full-stencil nodes.
    pub curl_residual: f64,
    /// `‖d*(Bω) − g‖ / ‖g‖` on full-stencil nodes.
    pub div_residual: f64,
    /// Largest pinned component of `Aω` (tangential) or `Bω` (normal)
    /// relative to its largest component.
    pub trace: f64,
    /// Measured `df` and `d*g` defects relative to `(‖f‖ + ‖g‖)/h`.
    pub compatibility: [f64; 2],
}

/// Solves `d(Aω) = f`, `d*(Bω) = g` with `ν∧(Aω) = 0` (tangential) or
/// `ν⌟(Bω) = 0` (normal), `A` and `B` both on `Λᵏ`.
///
/// The normal problem is mapped by the Hodge star to a tangential one for
/// `∗(Bω)` with coefficients `(I, ∗AB⁻¹∗⁻¹)`.
pub fn solve_div_curl(
    a: &CoefficientField,
    b: &CoefficientField,
    bc: FaceCondition,
    f: &DiscreteForm,
    g: &DiscreteForm,
    compatibility_tolerance: f64,
) -> Result<DivCurlSolution, SolverError> {
    let domain = f.domain().clone();
    let sig = a.space();
    let (n, k) = (sig.dim, sig.degree);
    if k == 0 || k >= n {
        return Err(SolverError::Degree(k));
    }
    if b.space() != sig || f.signature() != sig.with_degree(k + 1) || g.signature() != sig.with_degree(k - 1) {
        return Err(SolverError::Precondition("div-curl needs A, B on Λᵏ, f ∈ Λᵏ⁺¹, g ∈ Λᵏ⁻¹".into()));
    }
    let calc = summation(&domain);
    let scale = (f.l2_norm() + g.l2_norm()) / domain.h();
    let df = if k + 1 < n { calc.d(f)?.l2_norm_on(&domain.interior_nodes(1)) } else { 0.0 };
    let dg = if k > 1 { calc.codiff(g)?.l2_norm_on(&domain.interior_nodes(1)) } else { 0.0 };
    let compatibility = [rel(df, scale), rel(dg, scale)];
    for (defect, what) in compatibility.iter().zip(["df", "d*g"]) {
        if *defect > compatibility_tolerance {
            return Err(SolverError::Compatibility { what, defect: *defect, tolerance: compatibility_tolerance });
        }
    }

    let omega = match bc {
        FaceCondition::Tangential => tangential_div_curl(a, b, f, g)?,
        FaceCondition::Normal => {
            let b_inv = b.inverse()?;
            let dual = sig.with_degree(n - k);
            let a2 = CoefficientField::identity(domain.clone(), dual);
            let b2 = conjugate_by_star(&a.product(&b_inv)?)?;
            let f2 = star(g).scale(sign(n * (k + 1)) * star_square_sign(n, k - 1));
            let g2 = star(f).scale(sign(n * (n - k + 1)) * star_square_sign(n, k));
            let u = tangential_div_curl(&a2, &b2, &f2, &g2)?;
            // Bω = ∗⁻¹u
            let bw = star(&u).scale(star_square_sign(n, n - k));
            b_inv.apply(&bw)?
        }
    };

    let nodes = domain.interior_nodes(1);
    let curl = calc.d(&a.apply(&omega)?)?.sub(f)?;
    let div = calc.codiff(&b.apply(&omega)?)?.sub(g)?;
    let traced = match bc {
        FaceCondition::Tangential => a.apply(&omega)?,
        FaceCondition::Normal => b.apply(&omega)?,
    };
    let mask = pinned_components(&domain, sig, bc);
    let pinned_max = traced.values().iter().zip(&mask).filter(|(_, &p)| p).fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    Ok(DivCurlSolution {
        curl_residual: rel(curl.l2_norm_on(&nodes), f.l2_norm_on(&nodes)),
        div_residual: rel(div.l2_norm_on(&nodes), g.l2_norm_on(&nodes)),
        trace: rel(pinned_max, traced.max_abs()),
        compatibility,
        omega,
    })
}

/// Tangential chain: `f = dα` from the decomposition, then
/// `d*(C dξ) + d d*ξ = g − d*(Cα)` with `C = BA⁻¹`, `ω = A⁻¹(α + dξ)`.
fn tangential_div_curl(
    a: &CoefficientField,
    b: &CoefficientField,
    f: &DiscreteForm,
    g: &DiscreteForm,
) -> Result<DiscreteForm, SolverError> {
    let domain = f.domain().clone();
    let sig = a.space();
    let k = sig.degree;
    let calc = summation(&domain);
    let up = sig.with_degree(k + 1);
    let alpha = if k + 1 == sig.dim {
        // top-degree decomposition potentials carry the trace only weakly
        HodgeSystem::assemble(
            &CoefficientField::identity(domain.clone(), up),
            &CoefficientField::identity(domain.clone(), sig),
            0.0,
            FaceCondition::Tangential,
        )?
        .exact_potential(f)?
    } else {
        let dec = decompose_with_harmonic(
            f,
            DiscreteForm::zeros(domain.clone(), up),
            &CoefficientField::identity(domain.clone(), sig.with_degree(k + 2)),
            &CoefficientField::identity(domain.clone(), up),
            FaceCondition::Tangential,
        )?;
        dec.alpha.expect("degree k+1 ≥ 1 has a lower field")
    };
    let a_inv = a.inverse()?;
    let c = b.product(&a_inv)?;
    let low = sig.with_degree(k - 1);
    let xi_system = HodgeSystem::assemble(&c, &CoefficientField::identity(domain.clone(), low), 0.0, FaceCondition::Tangential)?;
    let load = g.sub(&calc.codiff(&c.apply(&alpha)?)?)?;
    let xi = xi_system.solve_with(&load, &BoundaryData::homogeneous(), &SolveOptions::default())?.solution;
    Ok(a_inv.apply(&alpha.add(&calc.d(&xi)?)?)?)
}

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `∗∗ = (−1)^{j(n−j)}` on `j`-forms.
fn star_square_sign(n: usize, j: usize) -> f64 {
    sign(j * (n - j))
}

fn star(u: &DiscreteForm) -> DiscreteForm {
    let sig = u.signature();
    u.map_nodes(sig.with_degree(sig.dim - sig.degree), |_, x| x.hodge_star())
}

/// `∗ M ∗⁻¹` acting on `Λⁿ⁻ᵏ`.
fn conjugate_by_star(m: &CoefficientField) -> Result<CoefficientField, SolverError> {
    let sig = m.space();
    let dual = sig.with_degree(sig.dim - sig.degree);
    let l = sig.len();
    let s = columns_of(sig, dual, |x| x.hodge_star());
    // the star is orthogonal, so ∗⁻¹ = ∗ᵀ
    let mut values = Vec::with_capacity(m.domain().len() * l * l);
    for p in 0..m.domain().len() {
        let a = m.at(p);
        for i in 0..l {
            for j in 0..l {
                let mut acc = 0.0;
                for r in 0..l {
                    for c in 0..l {
                        acc += s[i * l + r] * a[r * l + c] * s[j * l + c];
                    }
                }
                values.push(acc);
            }
        }
    }
    Ok(CoefficientField::from_values(m.domain().clone(), dual, values)?)
}

/// Measured Gaffney quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaffneyMeasurement {
    pub ratio: f64,
    pub sobolev_norm: f64,
    pub d_norm: f64,
    pub codiff_norm: f64,
    pub lp_norm: f64,
    /// Relative size of the boundary trace that should vanish.
    pub trace: f64,
}

/// `‖ω‖_{W^{1,p}_w} / (‖d(Aω)‖ + ‖d*(Bω)‖ + ‖ω‖)` in `Lᵖ_w`, second-order
/// differences throughout.
pub fn gaffney_ratio(
    omega: &DiscreteForm,
    a: &CoefficientField,
    b: &CoefficientField,
    bc: FaceCondition,
    p: f64,
    weight: Option<&[f64]>,
    trace_tolerance: f64,
) -> Result<GaffneyMeasurement, SolverError> {
    let domain = omega.domain().clone();
    let sig = omega.signature();
    if omega.max_abs() == 0.0 {
        return Err(SolverError::ZeroInput);
    }
    let traced = match bc {
        FaceCondition::Tangential => a.apply(omega)?,
        FaceCondition::Normal => b.apply(omega)?,
    };
    let mask = pinned_components(&domain, sig, bc);
    let pinned_max = traced.values().iter().zip(&mask).filter(|(_, &m)| m).fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    let trace = rel(pinned_max, traced.max_abs());
    if trace > trace_tolerance {
        return Err(SolverError::Trace { measured: trace, tolerance: trace_tolerance });
    }
    let calc = Calculus::new(domain, Stencil::SecondOrder);
    let d_norm = if sig.degree < sig.dim { norm(&calc.d(&a.apply(omega)?)?, p, weight, 0)? } else { 0.0 };
    let codiff_norm = if sig.degree > 0 { norm(&calc.codiff(&b.apply(omega)?)?, p, weight, 0)? } else { 0.0 };
    let lp_norm = norm(omega, p, weight, 0)?;
    let sobolev_norm = norm(omega, p, weight, 1)?;
    Ok(GaffneyMeasurement {
        ratio: sobolev_norm / (d_norm + codiff_norm + lp_norm),
        sobolev_norm,
        d_norm,
        codiff_norm,
        lp_norm,
        trace,
    })
}
