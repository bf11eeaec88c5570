use std::sync::Arc;

use super::domain::GridDomain;
use super::GridError;
use crate::forms::{KForm, Signature};

/// A `Λᵏ⊗ℝᴺ`-valued function on the active nodes of a grid.
///
/// `values[node * sig.len() + c]` holds coefficient `c` of the node's form.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteForm {
    domain: Arc<GridDomain>,
    sig: Signature,
    values: Vec<f64>,
}

impl DiscreteForm {
    pub fn zeros(domain: Arc<GridDomain>, sig: Signature) -> Self {
        let values = vec![0.0; domain.len() * sig.len()];
        Self { domain, sig, values }
    }

    pub fn from_values(domain: Arc<GridDomain>, sig: Signature, values: Vec<f64>) -> Result<Self, GridError> {
        if sig.dim != domain.dim() {
            return Err(GridError::DimensionMismatch { domain: domain.dim(), form: sig.dim });
        }
        if values.len() != domain.len() * sig.len() {
            return Err(GridError::Length { expected: domain.len() * sig.len(), found: values.len() });
        }
        Ok(Self { domain, sig, values })
    }

    /// Samples `f(x)` (returning `sig.len()` coefficients) at every node.
    pub fn from_fn(domain: Arc<GridDomain>, sig: Signature, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(domain.len() * sig.len());
        for p in 0..domain.len() {
            let v = f(&domain.coords(p));
            assert_eq!(v.len(), sig.len(), "sampled coefficient count");
            values.extend(v);
        }
        Self { domain, sig, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn degree(&self) -> usize {
        self.sig.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node_slice(&self, node: usize) -> &[f64] {
        let l = self.sig.len();
        &self.values[node * l..(node + 1) * l]
    }

    pub fn at(&self, node: usize) -> KForm {
        KForm::from_coeffs(self.sig, self.node_slice(node).to_vec()).expect("node slice has the signature length")
    }

    pub fn set(&mut self, node: usize, value: &KForm) {
        let l = self.sig.len();
        self.values[node * l..(node + 1) * l].copy_from_slice(value.coeffs());
    }

    fn check(&self, other: &Self) -> Result<(), GridError> {
        if self.sig != other.sig {
            return Err(GridError::Signature { left: self.sig, right: other.sig });
        }
        if !Arc::ptr_eq(&self.domain, &other.domain) && !self.domain.same_lattice(&other.domain) {
            return Err(GridError::DomainMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.axpy(-1.0, other)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, GridError> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Ok(Self { domain: self.domain.clone(), sig: self.sig, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { domain: self.domain.clone(), sig: self.sig, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Nodewise map of `KForm`s, possibly changing the signature.
    pub fn map_nodes(&self, out: Signature, mut f: impl FnMut(usize, &KForm) -> KForm) -> Self {
        let mut values = Vec::with_capacity(self.domain.len() * out.len());
        for p in 0..self.domain.len() {
            let y = f(p, &self.at(p));
            assert_eq!(y.signature(), out, "mapped signature");
            values.extend_from_slice(y.coeffs());
        }
        Self { domain: self.domain.clone(), sig: out, values }
    }

    /// Pointwise inner product field `⟨self, other⟩` per node.
    pub fn pointwise_inner(&self, other: &Self) -> Result<Vec<f64>, GridError> {
        self.check(other)?;
        let l = self.sig.len();
        Ok((0..self.domain.len())
            .map(|p| (0..l).map(|c| self.values[p * l + c] * other.values[p * l + c]).sum())
            .collect())
    }

    /// `∫⟨self, other⟩` with the trapezoid quadrature.
    pub fn l2_inner(&self, other: &Self) -> Result<f64, GridError> {
        let q = self.domain.quadrature();
        Ok(self.pointwise_inner(other)?.iter().zip(q).map(|(v, w)| v * w).sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same form").sqrt()
    }

    /// `L²` norm restricted to a node subset.
    pub fn l2_norm_on(&self, nodes: &[usize]) -> f64 {
        let q = self.domain.quadrature();
        nodes.iter().map(|&p| q[p] * self.node_slice(p).iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient magnitude over a node subset.
    pub fn max_abs_on(&self, nodes: &[usize]) -> f64 {
        nodes.iter().flat_map(|&p| self.node_slice(p).iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}
