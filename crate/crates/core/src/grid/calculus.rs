use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::domain::{BoundarySelector, GridDomain};
use super::field::DiscreteForm;
use super::GridError;
use crate::forms::basis::{full_mask, star_sign, wedge_sign};
use crate::forms::{KForm, Signature};
use crate::sparse::CsrMatrix;

/// Boundary closure of the first-derivative stencil.
///
/// Both use centred differences where both neighbours exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// One-sided second-order differences at boundary nodes.
    SecondOrder,
    /// One-sided first-order differences at boundary nodes. With trapezoid
    /// quadrature this makes `Q D + Dᵀ Q` a pure boundary term, which keeps the
    /// weak forms assembled from it second-order convergent.
    Summation,
}

/// Sparse discrete calculus on one grid with a fixed stencil policy.
#[derive(Debug, Clone)]
pub struct Calculus {
    domain: Arc<GridDomain>,
    stencil: Stencil,
    partials: Vec<CsrMatrix>,
}

impl Calculus {
    pub fn new(domain: Arc<GridDomain>, stencil: Stencil) -> Self {
        let partials = (0..domain.dim()).map(|a| partial_matrix(&domain, a, stencil)).collect();
        Self { domain, stencil, partials }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Scalar `∂/∂x_axis` on active nodes.
    pub fn partial(&self, axis: usize) -> &CsrMatrix {
        &self.partials[axis]
    }

    fn check_dim(&self, sig: Signature) -> Result<(), GridError> {
        if sig.dim != self.domain.dim() {
            return Err(GridError::DimensionMismatch { domain: self.domain.dim(), form: sig.dim });
        }
        Ok(())
    }

    /// Matrix of `d : Λᵏ → Λᵏ⁺¹`, `(du)_{I∪a} = Σ_a sign · ∂_a u_I`.
    pub fn d_matrix(&self, sig: Signature) -> Result<CsrMatrix, GridError> {
        self.check_dim(sig)?;
        if sig.degree >= sig.dim {
            return Err(GridError::Degree { degree: sig.degree, op: "exterior derivative" });
        }
        let out = sig.with_degree(sig.degree + 1);
        let (ib, ob) = (sig.basis(), out.basis());
        let mut triplets = Vec::new();
        for a in 0..sig.dim {
            let mut coupling = Vec::new();
            for (r, &m) in ib.masks().iter().enumerate() {
                if m & (1 << a) != 0 {
                    continue;
                }
                let s = wedge_sign(1 << a, m) as f64;
                let ro = ob.rank_of(m | (1 << a)).expect("degree k+1");
                for j in 0..sig.multiplicity {
                    coupling.push((sig.index(j, r), out.index(j, ro), s));
                }
            }
            lift_scalar(&self.partials[a], sig.len(), out.len(), &coupling, &mut triplets);
        }
        let nodes = self.domain.len();
        Ok(CsrMatrix::from_triplets(nodes * out.len(), nodes * sig.len(), triplets))
    }

    /// Nodewise Hodge star `Λᵏ → Λⁿ⁻ᵏ`.
    pub fn star_matrix(&self, sig: Signature) -> Result<CsrMatrix, GridError> {
        self.check_dim(sig)?;
        Ok(star_matrix(self.domain.len(), sig))
    }

    /// Matrix of `d* = (−1)^{n(k+1)} ∗ d ∗ : Λᵏ → Λᵏ⁻¹` composed literally.
    pub fn codiff_matrix(&self, sig: Signature) -> Result<CsrMatrix, GridError> {
        self.check_dim(sig)?;
        if sig.degree == 0 {
            return Err(GridError::Degree { degree: 0, op: "codifferential" });
        }
        let n = sig.dim;
        let k = sig.degree;
        let s1 = self.star_matrix(sig)?;
        let dm = self.d_matrix(sig.with_degree(n - k))?;
        let s2 = self.star_matrix(sig.with_degree(n - k + 1))?;
        let sign = if (n * (k + 1)).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(s2.matmul(&dm).matmul(&s1).scale(sign))
    }

    pub fn d(&self, u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
        let m = self.d_matrix(u.signature())?;
        DiscreteForm::from_values(self.domain.clone(), u.signature().with_degree(u.degree() + 1), m.mul_vec(u.values()))
    }

    pub fn codiff(&self, u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
        let m = self.codiff_matrix(u.signature())?;
        DiscreteForm::from_values(self.domain.clone(), u.signature().with_degree(u.degree() - 1), m.mul_vec(u.values()))
    }

    /// `d*d u + d d* u`, dropping whichever term does not exist at degree 0 or n.
    pub fn hodge_laplacian(&self, u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
        let sig = u.signature();
        let mut out = DiscreteForm::zeros(self.domain.clone(), sig);
        if sig.degree < sig.dim {
            out = out.add(&self.codiff(&self.d(u)?)?)?;
        }
        if sig.degree > 0 {
            out = out.add(&self.d(&self.codiff(u)?)?)?;
        }
        Ok(out)
    }

    /// `Σ_a ∂_a ∂_a` applied to every coefficient, with `∂_a` this calculus'
    /// first-derivative stencil (a five/seven-point stencil of stride two in
    /// the interior).
    pub fn componentwise_laplacian(&self, u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
        let sig = u.signature();
        self.check_dim(sig)?;
        let l = sig.len();
        let nodes = self.domain.len();
        let mut out = vec![0.0; nodes * l];
        for a in 0..sig.dim {
            let da = &self.partials[a];
            for c in 0..l {
                let comp: Vec<f64> = (0..nodes).map(|p| u.values()[p * l + c]).collect();
                let second = da.mul_vec(&da.mul_vec(&comp));
                for p in 0..nodes {
                    out[p * l + c] += second[p];
                }
            }
        }
        DiscreteForm::from_values(self.domain.clone(), sig, out)
    }

    /// Gradient per node: `grad[node * n * len + a * len + c] = ∂_a u_c`.
    pub fn gradient(&self, u: &DiscreteForm) -> Vec<f64> {
        let l = u.signature().len();
        let n = self.domain.dim();
        let nodes = self.domain.len();
        let mut out = vec![0.0; nodes * n * l];
        for a in 0..n {
            for c in 0..l {
                let comp: Vec<f64> = (0..nodes).map(|p| u.values()[p * l + c]).collect();
                let g = self.partials[a].mul_vec(&comp);
                for p in 0..nodes {
                    out[p * n * l + a * l + c] = g[p];
                }
            }
        }
        out
    }
}

fn star_matrix(nodes: usize, sig: Signature) -> CsrMatrix {
    let n = sig.dim;
    let out = sig.with_degree(n - sig.degree.min(n));
    let (ib, ob) = (sig.basis(), out.basis());
    let full = full_mask(n);
    let mut coupling = Vec::new();
    for (r, &m) in ib.masks().iter().enumerate() {
        let ro = ob.rank_of(full & !m).expect("complement degree");
        let s = star_sign(n, m) as f64;
        for j in 0..sig.multiplicity {
            coupling.push((sig.index(j, r), out.index(j, ro), s));
        }
    }
    let mut triplets = Vec::new();
    for p in 0..nodes {
        for &(ci, co, s) in &coupling {
            triplets.push((p * out.len() + co, p * sig.len() + ci, s));
        }
    }
    CsrMatrix::from_triplets(nodes * out.len(), nodes * sig.len(), triplets)
}

/// Expands a scalar node operator to form coefficients through a coefficient coupling.
fn lift_scalar(
    scalar: &CsrMatrix,
    len_in: usize,
    len_out: usize,
    coupling: &[(usize, usize, f64)],
    triplets: &mut Vec<(usize, usize, f64)>,
) {
    for p in 0..scalar.nrows() {
        for (q, v) in scalar.row(p) {
            for &(ci, co, s) in coupling {
                triplets.push((p * len_out + co, q * len_in + ci, s * v));
            }
        }
    }
}

/// First-derivative matrix along one axis.
pub fn partial_matrix(domain: &GridDomain, axis: usize, stencil: Stencil) -> CsrMatrix {
    let h = domain.spacing()[axis];
    let mut t = Vec::with_capacity(domain.len() * 3);
    for p in 0..domain.len() {
        let lo = domain.neighbor(p, axis, -1);
        let hi = domain.neighbor(p, axis, 1);
        match (lo, hi) {
            (Some(l), Some(r)) => {
                t.push((p, r, 0.5 / h));
                t.push((p, l, -0.5 / h));
            }
            (None, Some(r)) => {
                let r2 = domain.neighbor(r, axis, 1);
                match (stencil, r2) {
                    (Stencil::SecondOrder, Some(r2)) => {
                        t.push((p, p, -1.5 / h));
                        t.push((p, r, 2.0 / h));
                        t.push((p, r2, -0.5 / h));
                    }
                    _ => {
                        t.push((p, p, -1.0 / h));
                        t.push((p, r, 1.0 / h));
                    }
                }
            }
            (Some(l), None) => {
                let l2 = domain.neighbor(l, axis, -1);
                match (stencil, l2) {
                    (Stencil::SecondOrder, Some(l2)) => {
                        t.push((p, p, 1.5 / h));
                        t.push((p, l, -2.0 / h));
                        t.push((p, l2, 0.5 / h));
                    }
                    _ => {
                        t.push((p, p, 1.0 / h));
                        t.push((p, l, -1.0 / h));
                    }
                }
            }
            (None, None) => {}
        }
    }
    CsrMatrix::from_triplets(domain.len(), domain.len(), t)
}

/// `du` with second-order stencils throughout.
pub fn exterior_derivative(u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
    Calculus::new(u.domain().clone(), Stencil::SecondOrder).d(u)
}

/// `d*u = (−1)^{n(k+1)} ∗ d ∗ u` with second-order stencils throughout.
pub fn codifferential(u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
    Calculus::new(u.domain().clone(), Stencil::SecondOrder).codiff(u)
}

/// `(d*d + dd*) u` with second-order stencils throughout.
pub fn hodge_laplacian(u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
    Calculus::new(u.domain().clone(), Stencil::SecondOrder).hodge_laplacian(u)
}

/// Values of a form on selected boundary facets.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    /// Indices into [`GridDomain::facets`].
    pub facets: Vec<usize>,
    pub signature: Signature,
    /// `values[i * signature.len() + c]` for facet `facets[i]`.
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn at(&self, i: usize) -> KForm {
        let l = self.signature.len();
        KForm::from_coeffs(self.signature, self.values[i * l..(i + 1) * l].to_vec()).expect("trace slice length")
    }
}

fn trace_with(
    u: &DiscreteForm,
    selector: BoundarySelector,
    out: Signature,
    op: impl Fn(&KForm, &KForm) -> KForm,
) -> BoundaryTrace {
    let domain = u.domain();
    let mut facets = Vec::new();
    let mut values = Vec::new();
    for (i, f) in domain.facets().iter().enumerate() {
        if !selector.matches(f.kind) {
            continue;
        }
        let nu = KForm::from_vector(&f.normal);
        let y = op(&nu, &u.at(f.node));
        facets.push(i);
        values.extend_from_slice(y.coeffs());
    }
    BoundaryTrace { facets, signature: out, values }
}

/// `ν ∧ u` on the selected facets (empty coefficient lists when `k = n`).
pub fn trace_tangential(u: &DiscreteForm, selector: BoundarySelector) -> BoundaryTrace {
    let out = u.signature().with_degree(u.degree() + 1);
    trace_with(u, selector, out, |nu, x| nu.wedge_or_zero(x).expect("same ambient dimension"))
}

/// `ν ⌟ u` on the selected facets (the zero 0-form when `k = 0`).
pub fn trace_normal(u: &DiscreteForm, selector: BoundarySelector) -> BoundaryTrace {
    let out = u.signature().with_degree(u.degree().saturating_sub(1));
    trace_with(u, selector, out, |nu, x| nu.interior(x).expect("same ambient dimension"))
}

/// `|∫⟨dα, β⟩ + ∫⟨α, d*β⟩ − ∫_∂⟨ν∧α, β⟩|` with second-order stencils,
/// trapezoid volume quadrature and facet boundary quadrature.
pub fn integration_by_parts_residual(alpha: &DiscreteForm, beta: &DiscreteForm) -> Result<f64, GridError> {
    integration_by_parts_terms(alpha, beta).map(|t| (t.volume - t.boundary).abs())
}

/// The two sides of the integration-by-parts identity.
#[derive(Debug, Clone, Copy)]
pub struct IbpTerms {
    pub volume: f64,
    pub boundary: f64,
}

pub fn integration_by_parts_terms(alpha: &DiscreteForm, beta: &DiscreteForm) -> Result<IbpTerms, GridError> {
    if beta.degree() != alpha.degree() + 1 {
        return Err(GridError::Degree { degree: beta.degree(), op: "integration by parts pairing" });
    }
    let calc = Calculus::new(alpha.domain().clone(), Stencil::SecondOrder);
    let volume = calc.d(alpha)?.l2_inner(beta)? + alpha.l2_inner(&calc.codiff(beta)?)?;
    let domain = alpha.domain();
    let trace = trace_tangential(alpha, BoundarySelector::All);
    let mut boundary = 0.0;
    for (i, &fi) in trace.facets.iter().enumerate() {
        let f = &domain.facets()[fi];
        let inner = trace.at(i).inner(&beta.at(f.node)).expect("trace has degree k+1");
        boundary += f.weight * inner;
    }
    Ok(IbpTerms { volume, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;

    fn unit(n: usize, m: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::unit_box(n, m).unwrap())
    }

    #[test]
    fn constants_are_killed() {
        let d = unit(2, 9);
        for stencil in [Stencil::SecondOrder, Stencil::Summation] {
            let c = Calculus::new(d.clone(), stencil);
            let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 2), |_| vec![1.0, -2.0, 3.0, 0.5]);
            assert!(c.d(&u).unwrap().max_abs() < 1e-12);
            assert!(c.codiff(&u).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn linear_field_differentiated_exactly() {
        // u = x₁ dx²  ⇒  du = dx¹∧dx²
        let d = unit(2, 7);
        let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 1), |x| vec![0.0, x[0]]);
        let du = exterior_derivative(&u).unwrap();
        assert!(du.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn codifferential_sign_in_the_plane() {
        // n = 2, k = 1: d*u = ∂₁u₁ + ∂₂u₂, so u = x₁ dx¹ gives 1
        let d = unit(2, 7);
        let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 1), |x| vec![x[0], 0.0]);
        let du = codifferential(&u).unwrap();
        assert!(du.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn degree_errors() {
        let d = unit(2, 5);
        let top = DiscreteForm::zeros(d.clone(), Signature::new(2, 2, 1));
        assert!(exterior_derivative(&top).is_err());
        let scalar = DiscreteForm::zeros(d, Signature::new(2, 0, 1));
        assert!(codifferential(&scalar).is_err());
    }

    #[test]
    fn flat_face_traces() {
        let d = Arc::new(GridDomain::half_ball(2, 1.0, 16).unwrap());
        // u_I = 0 for I ∌ n (here u₁ = 0): ν∧u = 0 on Γ
        let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 1), |x| vec![0.0, 1.0 + x[0]]);
        assert!(trace_tangential(&u, BoundarySelector::Flat).max_abs() == 0.0);
        let v = DiscreteForm::from_fn(d, Signature::new(2, 1, 1), |x| vec![x[0], 0.0]);
        assert!(trace_normal(&v, BoundarySelector::Flat).max_abs() == 0.0);
    }

    #[test]
    fn constant_pairing_has_cancelling_boundary() {
        let d = unit(2, 9);
        let a = DiscreteForm::from_fn(d.clone(), Signature::new(2, 0, 1), |_| vec![2.0]);
        let b = DiscreteForm::from_fn(d, Signature::new(2, 1, 1), |_| vec![1.0, -1.0]);
        let t = integration_by_parts_terms(&a, &b).unwrap();
        assert!(t.volume.abs() < 1e-12 && t.boundary.abs() < 1e-12);
    }
}
