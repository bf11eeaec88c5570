use std::sync::Arc;

use super::domain::GridDomain;
use super::field::DiscreteForm;
use super::GridError;
use crate::analytic::{dense_inverse, MatrixField};
use crate::forms::Signature;
use crate::sparse::CsrMatrix;

/// A matrix coefficient `A(x)` on `Λᵏ⊗ℝᴺ` sampled at every active node.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    domain: Arc<GridDomain>,
    space: Signature,
    /// `values[node * l*l + i*l + j]`
    values: Vec<f64>,
    lipschitz: f64,
    gamma: f64,
    symmetric: bool,
}

impl CoefficientField {
    pub fn from_values(domain: Arc<GridDomain>, space: Signature, values: Vec<f64>) -> Result<Self, GridError> {
        let l = space.len();
        if values.len() != domain.len() * l * l {
            return Err(GridError::Length { expected: domain.len() * l * l, found: values.len() });
        }
        if space.dim != domain.dim() {
            return Err(GridError::DimensionMismatch { domain: domain.dim(), form: space.dim });
        }
        let mut c = Self { domain, space, values, lipschitz: 0.0, gamma: 0.0, symmetric: false };
        c.measure();
        Ok(c)
    }

    pub fn from_field(domain: Arc<GridDomain>, field: &dyn MatrixField) -> Result<Self, GridError> {
        let space = field.space();
        let mut values = Vec::with_capacity(domain.len() * space.len().pow(2));
        for p in 0..domain.len() {
            values.extend(field.value(&domain.coords(p)));
        }
        Self::from_values(domain, space, values)
    }

    pub fn constant(domain: Arc<GridDomain>, space: Signature, matrix: &[f64]) -> Result<Self, GridError> {
        let values = matrix.iter().copied().cycle().take(domain.len() * matrix.len()).collect();
        Self::from_values(domain, space, values)
    }

    pub fn identity(domain: Arc<GridDomain>, space: Signature) -> Self {
        let l = space.len();
        let mut m = vec![0.0; l * l];
        (0..l).for_each(|i| m[i * l + i] = 1.0);
        Self::constant(domain, space, &m).expect("identity has the right shape")
    }

    fn measure(&mut self) {
        let l = self.space.len();
        let e = l * l;
        let mut gamma = f64::INFINITY;
        let mut asym = 0.0f64;
        let mut scale = 0.0f64;
        for p in 0..self.domain.len() {
            let m = self.at(p);
            for i in 0..l {
                for j in 0..l {
                    asym = asym.max((m[i * l + j] - m[j * l + i]).abs());
                    scale = scale.max(m[i * l + j].abs());
                }
            }
            gamma = gamma.min(min_symmetric_eigenvalue(m, l));
        }
        let mut lip = 0.0f64;
        for p in 0..self.domain.len() {
            for a in 0..self.domain.dim() {
                if let Some(q) = self.domain.neighbor(p, a, 1) {
                    let diff: f64 = (0..e).map(|i| (self.values[p * e + i] - self.values[q * e + i]).powi(2)).sum();
                    lip = lip.max(diff.sqrt() / self.domain.spacing()[a]);
                }
            }
        }
        self.gamma = if l == 0 { 1.0 } else { gamma };
        self.symmetric = asym <= 1e-14 * scale.max(1.0);
        self.lipschitz = lip;
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn space(&self) -> Signature {
        self.space
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let e = self.space.len().pow(2);
        &self.values[node * e..(node + 1) * e]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest neighbour difference quotient in the Frobenius norm.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Smallest Rayleigh quotient `⟨Aξ, ξ⟩/|ξ|²` over all nodes.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_elliptic(&self) -> bool {
        self.gamma > 0.0
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_identity(&self) -> bool {
        let l = self.space.len();
        (0..self.domain.len()).all(|p| {
            let m = self.at(p);
            (0..l * l).all(|e| m[e] == if e / l == e % l { 1.0 } else { 0.0 })
        })
    }

    fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self, GridError> {
        let values = (0..self.domain.len()).flat_map(|p| f(self.at(p))).collect();
        Self::from_values(self.domain.clone(), self.space, values)
    }

    pub fn transpose(&self) -> Self {
        let l = self.space.len();
        self.map(|m| (0..l * l).map(|e| m[(e % l) * l + e / l]).collect()).expect("same shape")
    }

    /// Pointwise inverse; requires Legendre ellipticity.
    pub fn inverse(&self) -> Result<Self, GridError> {
        if !self.is_elliptic() {
            return Err(GridError::Coefficient(format!("inverse needs an elliptic coefficient, γ = {:.3e}", self.gamma)));
        }
        let l = self.space.len();
        self.map(|m| dense_inverse(m, l))
    }

    /// Pointwise product `self(x) · other(x)`.
    pub fn product(&self, other: &Self) -> Result<Self, GridError> {
        if self.space != other.space {
            return Err(GridError::Signature { left: self.space, right: other.space });
        }
        let l = self.space.len();
        let e = l * l;
        let values = (0..self.domain.len())
            .flat_map(|p| {
                let (a, b) = (self.at(p), other.at(p));
                (0..e).map(move |idx| (0..l).map(|m| a[(idx / l) * l + m] * b[m * l + idx % l]).sum::<f64>())
            })
            .collect();
        Self::from_values(self.domain.clone(), self.space, values)
    }

    /// `(A u)(x) = A(x) u(x)`.
    pub fn apply(&self, u: &DiscreteForm) -> Result<DiscreteForm, GridError> {
        if u.signature() != self.space {
            return Err(GridError::Signature { left: self.space, right: u.signature() });
        }
        let l = self.space.len();
        let mut out = vec![0.0; u.values().len()];
        for p in 0..self.domain.len() {
            let m = self.at(p);
            let x = u.node_slice(p);
            for i in 0..l {
                out[p * l + i] = (0..l).map(|j| m[i * l + j] * x[j]).sum();
            }
        }
        DiscreteForm::from_values(u.domain().clone(), self.space, out)
    }

    /// Block-diagonal sparse matrix acting on node-major coefficient vectors.
    pub fn block_matrix(&self) -> CsrMatrix {
        let l = self.space.len();
        let mut t = Vec::with_capacity(self.values.len());
        for p in 0..self.domain.len() {
            let m = self.at(p);
            for i in 0..l {
                for j in 0..l {
                    if m[i * l + j] != 0.0 {
                        t.push((p * l + i, p * l + j, m[i * l + j]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.domain.len() * l, self.domain.len() * l, t)
    }
}

fn min_symmetric_eigenvalue(m: &[f64], l: usize) -> f64 {
    if l == 0 {
        return f64::INFINITY;
    }
    let s = faer::Mat::<f64>::from_fn(l, l, |i, j| 0.5 * (m[i * l + j] + m[j * l + i]));
    s.self_adjoint_eigenvalues(faer::Side::Lower)
        .map(|ev| ev.iter().copied().fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{TrigCoefficient, TrigMode};

    #[test]
    fn identity_measures() {
        let d = Arc::new(GridDomain::unit_box(2, 5).unwrap());
        let a = CoefficientField::identity(d, Signature::new(2, 1, 1));
        assert_eq!(a.gamma(), 1.0);
        assert_eq!(a.lipschitz(), 0.0);
        assert!(a.is_symmetric() && a.is_identity());
    }

    #[test]
    fn varying_coefficient_measures() {
        let d = Arc::new(GridDomain::unit_box(2, 33).unwrap());
        let sig = Signature::new(2, 1, 1);
        let field = TrigCoefficient {
            space: sig,
            base: vec![2.0, 0.0, 0.0, 2.0],
            modes: vec![TrigMode { matrix: vec![0.5, 0.0, 0.0, 0.5], wave: vec![1.0, 0.0], phase: 0.0 }],
        };
        let a = CoefficientField::from_field(d, &field).unwrap();
        // 2 + 0.5 sin(x) on [0,1]: min 2, Lipschitz ≈ 0.5·√2
        assert!((a.gamma() - 2.0).abs() < 1e-12);
        assert!((a.lipschitz() - 0.5 * 2f64.sqrt()).abs() < 0.02);
        let inv = a.inverse().unwrap();
        let prod = a.product(&inv).unwrap();
        assert!(prod.values().iter().enumerate().all(|(e, v)| (v - if e % 4 == 0 || e % 4 == 3 { 1.0 } else { 0.0 }).abs() < 1e-14));
    }

    #[test]
    fn indefinite_inverse_rejected() {
        let d = Arc::new(GridDomain::unit_box(2, 3).unwrap());
        let a = CoefficientField::constant(d, Signature::new(2, 1, 1), &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(!a.is_elliptic());
        assert!(matches!(a.inverse(), Err(GridError::Coefficient(_))));
    }
}
