use super::calculus::{partial_matrix, Calculus, Stencil};
use super::domain::GridDomain;
use super::field::DiscreteForm;
use super::GridError;
use crate::sparse::CsrMatrix;

/// Compact second-difference matrix for `∂²/∂x_axis²`.
///
/// Interior nodes use `(u₋ − 2u + u₊)/h²`; boundary nodes the one-sided
/// second-order `(2u₀ − 5u₁ + 4u₂ − u₃)/h²` when four nodes are available.
pub fn second_difference_matrix(domain: &GridDomain, axis: usize) -> CsrMatrix {
    let h2 = domain.spacing()[axis].powi(2);
    let mut t = Vec::new();
    for p in 0..domain.len() {
        let lo = domain.neighbor(p, axis, -1);
        let hi = domain.neighbor(p, axis, 1);
        if let (Some(l), Some(r)) = (lo, hi) {
            t.extend([(p, l, 1.0 / h2), (p, p, -2.0 / h2), (p, r, 1.0 / h2)]);
            continue;
        }
        let step: isize = if lo.is_none() { 1 } else { -1 };
        let mut chain = vec![p];
        while chain.len() < 4 {
            match domain.neighbor(*chain.last().expect("nonempty"), axis, step) {
                Some(q) => chain.push(q),
                None => break,
            }
        }
        match chain.len() {
            4 => t.extend([
                (p, chain[0], 2.0 / h2),
                (p, chain[1], -5.0 / h2),
                (p, chain[2], 4.0 / h2),
                (p, chain[3], -1.0 / h2),
            ]),
            3 => t.extend([(p, chain[0], 1.0 / h2), (p, chain[1], -2.0 / h2), (p, chain[2], 1.0 / h2)]),
            _ => {}
        }
    }
    CsrMatrix::from_triplets(domain.len(), domain.len(), t)
}

/// Discrete Hessian per node: `hess[node * n*n*len + (a*n + b) * len + c]`.
///
/// Every entry composes second-order first differences, so the stencil stays
/// on one parity sublattice like the centred operators of the solver.
pub fn hessian_field(u: &DiscreteForm) -> Vec<f64> {
    let domain = u.domain();
    let n = domain.dim();
    let l = u.signature().len();
    let nodes = domain.len();
    let firsts: Vec<CsrMatrix> = (0..n).map(|a| partial_matrix(domain, a, Stencil::SecondOrder)).collect();
    let mut out = vec![0.0; nodes * n * n * l];
    for c in 0..l {
        let comp: Vec<f64> = (0..nodes).map(|p| u.values()[p * l + c]).collect();
        let grads: Vec<Vec<f64>> = firsts.iter().map(|d| d.mul_vec(&comp)).collect();
        for a in 0..n {
            for b in 0..n {
                if b < a {
                    continue;
                }
                let v = firsts[a].mul_vec(&grads[b]);
                for p in 0..nodes {
                    out[p * n * n * l + (a * n + b) * l + c] = v[p];
                    out[p * n * n * l + (b * n + a) * l + c] = v[p];
                }
            }
        }
    }
    out
}

fn check_weight(domain: &GridDomain, weight: Option<&[f64]>) -> Result<(), GridError> {
    if let Some(w) = weight {
        if w.len() != domain.len() {
            return Err(GridError::Length { expected: domain.len(), found: w.len() });
        }
        if let Some(p) = w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(GridError::Weight { node: p, value: w[p] });
        }
    }
    Ok(())
}

/// `Σ_p Q_p w_p |v_p|^p` for per-node vectors of `stride` entries, on a node subset.
fn weighted_sum(domain: &GridDomain, data: &[f64], stride: usize, p: f64, weight: Option<&[f64]>, nodes: Option<&[usize]>) -> f64 {
    let q = domain.quadrature();
    let term = |node: usize| {
        let s: f64 = data[node * stride..(node + 1) * stride].iter().map(|v| v * v).sum();
        let w = weight.map_or(1.0, |w| w[node]);
        q[node] * w * s.sqrt().powf(p)
    };
    match nodes {
        Some(ns) => ns.iter().map(|&n| term(n)).sum(),
        None => (0..domain.len()).map(term).sum(),
    }
}

/// `Lᵖ_w`, `W^{1,p}_w` or `W^{2,p}_w` norm:
/// `‖u‖ᵖ = Σ_{j ≤ order} ‖∇ʲu‖ᵖ_{Lᵖ_w}` with trapezoid quadrature.
pub fn norm(u: &DiscreteForm, p: f64, weight: Option<&[f64]>, order: usize) -> Result<f64, GridError> {
    norm_on(u, p, weight, order, None)
}

/// [`norm`] restricted to a subset of active nodes.
pub fn norm_on(u: &DiscreteForm, p: f64, weight: Option<&[f64]>, order: usize, nodes: Option<&[usize]>) -> Result<f64, GridError> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(GridError::Exponent(p));
    }
    if order > 2 {
        return Err(GridError::Degree { degree: order, op: "norm order" });
    }
    let domain = u.domain();
    check_weight(domain, weight)?;
    let l = u.signature().len();
    let n = domain.dim();
    let mut total = weighted_sum(domain, u.values(), l, p, weight, nodes);
    if order >= 1 {
        let grad = Calculus::new(domain.clone(), Stencil::SecondOrder).gradient(u);
        total += weighted_sum(domain, &grad, n * l, p, weight, nodes);
    }
    if order >= 2 {
        let hess = hessian_field(u);
        total += weighted_sum(domain, &hess, n * n * l, p, weight, nodes);
    }
    Ok(total.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::forms::Signature;

    #[test]
    fn constant_and_linear_norms() {
        let d = Arc::new(GridDomain::unit_box(2, 33).unwrap());
        let sig = Signature::new(2, 0, 1);
        let one = DiscreteForm::from_fn(d.clone(), sig, |_| vec![1.0]);
        assert!((norm(&one, 2.0, None, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm(&one, 2.0, None, 1).unwrap() - 1.0).abs() < 1e-12);
        let x = DiscreteForm::from_fn(d.clone(), sig, |x| vec![x[0]]);
        let h = d.h();
        let exact = (1.0f64 / 3.0).sqrt();
        assert!((norm(&x, 2.0, None, 0).unwrap() - exact).abs() < h * h);
        let w = vec![1.0; d.len()];
        assert_eq!(norm(&x, 2.0, Some(&w), 2).unwrap(), norm(&x, 2.0, None, 2).unwrap());
    }

    #[test]
    fn bad_weight_rejected() {
        let d = Arc::new(GridDomain::unit_box(2, 5).unwrap());
        let u = DiscreteForm::zeros(d.clone(), Signature::new(2, 0, 1));
        let mut w = vec![1.0; d.len()];
        w[3] = 0.0;
        assert!(matches!(norm(&u, 2.0, Some(&w), 0), Err(GridError::Weight { node: 3, .. })));
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let d = Arc::new(GridDomain::unit_box(2, 9).unwrap());
        let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 0, 1), |x| vec![x[0] * x[0] + 3.0 * x[0] * x[1]]);
        let hess = hessian_field(&u);
        for p in 0..d.len() {
            let h = &hess[p * 4..(p + 1) * 4];
            assert!((h[0] - 2.0).abs() < 1e-9 && (h[1] - 3.0).abs() < 1e-9 && h[3].abs() < 1e-9);
        }
    }
}
