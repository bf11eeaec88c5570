use super::calculus::{Calculus, Stencil};
use super::domain::DomainKind;
use super::field::DiscreteForm;
use super::norms::hessian_field;
use super::GridError;

/// Flat-face boundary condition type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceCondition {
    /// `e_n ∧ u = 0`
    Tangential,
    /// `e_n ⌟ u = 0`
    Normal,
}

/// Result of [`hessian_normalize`].
#[derive(Debug, Clone)]
pub struct HessianNormalization {
    pub normalized: DiscreteForm,
    /// `(‖ū‖/ρ² + ‖∇ū‖/ρ) / ‖D²ū‖` on `B⁺_ρ`; `None` when the Hessian vanishes.
    pub poincare_ratio: Option<f64>,
    /// Largest `|D²u − D²ū|` over the nodes of `B⁺_ρ`.
    pub hessian_deviation: f64,
    /// Active nodes of `B⁺_ρ`.
    pub ball_nodes: Vec<usize>,
}

/// Subtracts the affine corrections that give `ū^ρ` zero `B⁺_ρ` means of value
/// and gradient on the components not fixed by the flat-face condition.
///
/// With the centre `c` of the half-ball as origin: for the tangential
/// condition, components with `n ∉ I` lose `(⨍ ∂_n u_I) x_n` and components with
/// `n ∈ I` lose `⨍u_I + ⟨x − ⨍x, ⨍∇u_I⟩`. The normal condition swaps the cases.
pub fn hessian_normalize(u: &DiscreteForm, rho: f64, bc: FaceCondition, p: f64) -> Result<HessianNormalization, GridError> {
    let domain = u.domain();
    let (radius, center) = match domain.kind() {
        DomainKind::HalfBall { radius, center } => (*radius, center.clone()),
        _ => return Err(GridError::Shape("hessian normalization needs a half-ball domain".into())),
    };
    if !(rho > 0.0 && rho <= 0.75 * radius * (1.0 + 1e-12)) {
        return Err(GridError::Radius { rho, max: 0.75 * radius });
    }
    let n = domain.dim();
    let sig = u.signature();
    let l = sig.len();
    let cb = sig.basis_len();
    let basis = sig.basis();
    let rel = |node: usize| -> Vec<f64> { domain.coords(node).iter().zip(&center).map(|(x, c)| x - c).collect() };
    let ball: Vec<usize> = (0..domain.len())
        .filter(|&q| rel(q).iter().map(|v| v * v).sum::<f64>().sqrt() <= rho * (1.0 + 1e-12))
        .collect();
    let quad = domain.quadrature();
    let mass: f64 = ball.iter().map(|&q| quad[q]).sum();
    let mean = |f: &dyn Fn(usize) -> f64| ball.iter().map(|&q| quad[q] * f(q)).sum::<f64>() / mass;

    let grad = Calculus::new(domain.clone(), Stencil::SecondOrder).gradient(u);
    let mean_x: Vec<f64> = (0..n).map(|a| mean(&|q| rel(q)[a])).collect();
    let top = 1u32 << (n - 1);
    let mut out = u.values().to_vec();
    for j in 0..sig.multiplicity {
        for r in 0..cb {
            let c = j * cb + r;
            let contains_n = basis.mask(r) & top != 0;
            let subtract_normal_only = match bc {
                FaceCondition::Tangential => !contains_n,
                FaceCondition::Normal => contains_n,
            };
            if subtract_normal_only {
                let g = mean(&|q| grad[q * n * l + (n - 1) * l + c]);
                for q in 0..domain.len() {
                    out[q * l + c] -= g * rel(q)[n - 1];
                }
            } else {
                let m0 = mean(&|q| u.values()[q * l + c]);
                let g: Vec<f64> = (0..n).map(|a| mean(&|q| grad[q * n * l + a * l + c])).collect();
                for q in 0..domain.len() {
                    let x = rel(q);
                    let lin: f64 = (0..n).map(|a| (x[a] - mean_x[a]) * g[a]).sum();
                    out[q * l + c] -= m0 + lin;
                }
            }
        }
    }
    let normalized = DiscreteForm::from_values(domain.clone(), sig, out)?;
    let h_u = hessian_field(u);
    let h_bar = hessian_field(&normalized);
    let stride = n * n * l;
    let hessian_deviation = ball
        .iter()
        .flat_map(|&q| (q * stride..(q + 1) * stride).map(|i| (h_u[i] - h_bar[i]).abs()))
        .fold(0.0, f64::max);
    let scale = h_u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(u.max_abs());
    let lp = |data: &[f64], stride: usize| -> f64 {
        ball.iter()
            .map(|&q| quad[q] * data[q * stride..(q + 1) * stride].iter().map(|v| v * v).sum::<f64>().sqrt().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    let grad_bar = Calculus::new(domain.clone(), Stencil::SecondOrder).gradient(&normalized);
    let hess_norm = lp(&h_bar, n * n * l);
    let poincare_ratio = if hess_norm <= 1e-10 * scale.max(1e-300) {
        None
    } else {
        Some((lp(normalized.values(), l) / (rho * rho) + lp(&grad_bar, n * l) / rho) / hess_norm)
    };
    Ok(HessianNormalization { normalized, poincare_ratio, hessian_deviation, ball_nodes: ball })
}

/// Hessian statistics on one ball `B_ρ(c) ∩ Ω`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HessianOscillation {
    pub rho: f64,
    /// `(⨍|∇²u − (∇²u)_ρ|²)^{1/2}`
    pub oscillation: f64,
    /// `(⨍|∇²u|²)^{1/2}`
    pub l2_mean: f64,
    /// `⨍|∇²u|`
    pub l1_mean: f64,
    pub nodes: usize,
}

/// Hessian mean oscillation on the balls `B_ρ(center) ∩ Ω` for each radius.
///
/// Only nodes two steps inside the grid contribute: there the composed
/// centred stencil stays on one parity sublattice, while one-sided boundary
/// closures mix the sublattices of the collocated solver.
pub fn hessian_oscillation(u: &DiscreteForm, center: &[f64], radii: &[f64]) -> Result<Vec<HessianOscillation>, GridError> {
    let domain = u.domain();
    let n = domain.dim();
    if center.len() != n {
        return Err(GridError::Length { expected: n, found: center.len() });
    }
    let stride = n * n * u.signature().len();
    let hess = hessian_field(u);
    let quad = domain.quadrature();
    let deep = domain.interior_nodes(2);
    let dist = |q: usize| domain.coords(q).iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt();
    radii
        .iter()
        .map(|&rho| {
            let ball: Vec<usize> = deep.iter().copied().filter(|&q| dist(q) <= rho * (1.0 + 1e-12)).collect();
            if ball.is_empty() {
                return Err(GridError::Shape(format!("no interior nodes within radius {rho}")));
            }
            let mass: f64 = ball.iter().map(|&q| quad[q]).sum();
            let at = |q: usize| &hess[q * stride..(q + 1) * stride];
            let mean: Vec<f64> =
                (0..stride).map(|i| ball.iter().map(|&q| quad[q] * at(q)[i]).sum::<f64>() / mass).collect();
            let avg = |f: &dyn Fn(&[f64]) -> f64| ball.iter().map(|&q| quad[q] * f(at(q))).sum::<f64>() / mass;
            let oscillation = avg(&|h| h.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum()).sqrt();
            let l2_mean = avg(&|h| h.iter().map(|a| a * a).sum()).sqrt();
            let l1_mean = avg(&|h| h.iter().map(|a| a * a).sum::<f64>().sqrt());
            Ok(HessianOscillation { rho, oscillation, l2_mean, l1_mean, nodes: ball.len() })
        })
        .collect()
}
