use super::basis::{binomial, full_mask, star_sign, wedge_sign, FormBasis};
use super::AlgebraError;

/// Shape of `Λᵏℝⁿ ⊗ ℝᴺ`: ambient dimension `n`, degree `k`, multiplicity `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Signature {
    pub dim: usize,
    pub degree: usize,
    pub multiplicity: usize,
}

impl Signature {
    pub fn new(dim: usize, degree: usize, multiplicity: usize) -> Self {
        Self { dim, degree, multiplicity }
    }

    /// `C(n, k)`, the number of coefficients per vector component.
    pub fn basis_len(&self) -> usize {
        binomial(self.dim, self.degree)
    }

    /// Total number of coefficients, `N · C(n, k)`.
    pub fn len(&self) -> usize {
        self.multiplicity * self.basis_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        Self { degree, ..*self }
    }

    pub fn basis(&self) -> FormBasis {
        FormBasis::new(self.dim, self.degree)
    }

    /// Flat index of coefficient `(component j, basis element r)`.
    pub fn index(&self, component: usize, basis_rank: usize) -> usize {
        component * self.basis_len() + basis_rank
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Λ^{}(R^{})⊗R^{}", self.degree, self.dim, self.multiplicity)
    }
}

/// A single element of `Λᵏℝⁿ ⊗ ℝᴺ`.
///
/// Coefficients are laid out component-major: `coeffs[j * C(n,k) + r]` is the
/// coefficient of the `r`-th basis element in vector component `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm {
    sig: Signature,
    coeffs: Vec<f64>,
}

impl KForm {
    pub fn zeros(sig: Signature) -> Self {
        Self { sig, coeffs: vec![0.0; sig.len()] }
    }

    pub fn from_coeffs(sig: Signature, coeffs: Vec<f64>) -> Result<Self, AlgebraError> {
        if coeffs.len() != sig.len() {
            return Err(AlgebraError::CoefficientLength { expected: sig.len(), found: coeffs.len() });
        }
        Ok(Self { sig, coeffs })
    }

    /// Scalar-valued basis form `e^{i₁}∧…∧e^{i_k}` from its index tuple.
    pub fn basis_element(dim: usize, indices: &[usize]) -> Result<Self, AlgebraError> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= dim || mask & (1 << i) != 0 {
                return Err(AlgebraError::InvalidMultiIndex(indices.to_vec()));
            }
            mask |= 1 << i;
        }
        let sig = Signature::new(dim, indices.len(), 1);
        let mut out = Self::zeros(sig);
        let basis = sig.basis();
        let r = basis.rank_of(mask).expect("mask has the right degree");
        let mut sorted = indices.to_vec();
        let sign = permutation_sign(&mut sorted);
        out.coeffs[r] = sign as f64;
        Ok(out)
    }

    /// The 1-form `Σ aᵢ eⁱ` associated with a vector.
    pub fn from_vector(a: &[f64]) -> Self {
        Self { sig: Signature::new(a.len(), 1, 1), coeffs: a.to_vec() }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.dim
    }

    pub fn degree(&self) -> usize {
        self.sig.degree
    }

    pub fn multiplicity(&self) -> usize {
        self.sig.multiplicity
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of basis element `indices` (given increasing) in component `j`.
    pub fn get(&self, component: usize, indices: &[usize]) -> f64 {
        let mask = indices.iter().fold(0u32, |m, &i| m | (1 << i));
        match self.sig.basis().rank_of(mask) {
            Some(r) => self.coeffs[self.sig.index(component, r)],
            None => 0.0,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { sig: self.sig, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { sig: self.sig, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.scale(-1.0))
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn check_same(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.sig != other.sig {
            return Err(AlgebraError::SignatureMismatch { left: self.sig, right: other.sig });
        }
        Ok(())
    }

    /// Euclidean inner product over the orthonormal basis, summed over components.
    pub fn inner(&self, other: &Self) -> Result<f64, AlgebraError> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// Componentwise exterior product.
    ///
    /// Both factors must share `n`. Multiplicities must agree, except that a
    /// scalar-valued factor (`N = 1`) is broadcast across the other's components.
    pub fn wedge(&self, other: &Self) -> Result<Self, AlgebraError> {
        let k = self.degree() + other.degree();
        if k > self.dim() {
            return Err(AlgebraError::DegreeOverflow { degree: k, dim: self.dim() });
        }
        self.wedge_or_zero(other)
    }

    /// As [`KForm::wedge`], returning the (empty) zero form when `k₁ + k₂ > n`.
    pub fn wedge_or_zero(&self, other: &Self) -> Result<Self, AlgebraError> {
        let mult = pair_multiplicity(self.sig, other.sig)?;
        let n = self.dim();
        let out_sig = Signature::new(n, self.degree() + other.degree(), mult);
        let mut out = Self::zeros(out_sig);
        if out_sig.is_empty() {
            return Ok(out);
        }
        let (lb, rb, ob) = (self.sig.basis(), other.sig.basis(), out_sig.basis());
        for j in 0..mult {
            let jl = if self.multiplicity() == 1 { 0 } else { j };
            let jr = if other.multiplicity() == 1 { 0 } else { j };
            for (p, &lm) in lb.masks().iter().enumerate() {
                let a = self.coeffs[self.sig.index(jl, p)];
                if a == 0.0 {
                    continue;
                }
                for (q, &rm) in rb.masks().iter().enumerate() {
                    let s = wedge_sign(lm, rm);
                    if s == 0 {
                        continue;
                    }
                    let b = other.coeffs[other.sig.index(jr, q)];
                    let r = ob.rank_of(lm | rm).expect("disjoint union has the summed degree");
                    out.coeffs[out_sig.index(j, r)] += s as f64 * a * b;
                }
            }
        }
        Ok(out)
    }

    /// Hodge star `Λᵏ → Λⁿ⁻ᵏ`, defined by `⟨∗ξ, ζ⟩ vol = ξ ∧ ζ`.
    pub fn hodge_star(&self) -> Self {
        let n = self.dim();
        if self.degree() > n {
            return Self::zeros(self.sig.with_degree(0));
        }
        let out_sig = self.sig.with_degree(n - self.degree());
        let mut out = Self::zeros(out_sig);
        let (ib, ob) = (self.sig.basis(), out_sig.basis());
        let full = full_mask(n);
        for (p, &m) in ib.masks().iter().enumerate() {
            let s = star_sign(n, m) as f64;
            let r = ob.rank_of(full & !m).expect("complement has the dual degree");
            for j in 0..self.multiplicity() {
                out.coeffs[out_sig.index(j, r)] = s * self.coeffs[self.sig.index(j, p)];
            }
        }
        out
    }

    /// Interior product `ξ ⌟ ζ := (−1)^{n(k−l)} ∗(ξ ∧ ∗ζ)` with `self = ξ` of degree `l`.
    ///
    /// When `l > k` the result is the zero 0-form.
    pub fn interior(&self, zeta: &Self) -> Result<Self, AlgebraError> {
        if self.dim() != zeta.dim() {
            return Err(AlgebraError::SignatureMismatch { left: self.sig, right: zeta.sig });
        }
        let (l, k, n) = (self.degree(), zeta.degree(), self.dim());
        let mult = pair_multiplicity(self.sig, zeta.sig)?;
        if l > k {
            return Ok(Self::zeros(Signature::new(n, 0, mult)));
        }
        let inner = self.wedge(&zeta.hodge_star())?;
        let sign = if (n * (k - l)) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(inner.hodge_star().scale(sign))
    }

    /// Interior product with a vector, promoted to the 1-form `Σ aᵢ eⁱ`.
    pub fn interior_vector(a: &[f64], zeta: &Self) -> Result<Self, AlgebraError> {
        Self::from_vector(a).interior(zeta)
    }
}

fn pair_multiplicity(left: Signature, right: Signature) -> Result<usize, AlgebraError> {
    if left.dim != right.dim {
        return Err(AlgebraError::SignatureMismatch { left, right });
    }
    match (left.multiplicity, right.multiplicity) {
        (a, b) if a == b => Ok(a),
        (1, b) => Ok(b),
        (a, 1) => Ok(a),
        _ => Err(AlgebraError::SignatureMismatch { left, right }),
    }
}

/// Sorts in place and returns the sign of the sorting permutation (0 on repeats).
fn permutation_sign(v: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return 0;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, idx: &[usize]) -> KForm {
        KForm::basis_element(n, idx).unwrap()
    }

    #[test]
    fn wedge_of_basis_covectors() {
        assert_eq!(e(3, &[0]).wedge(&e(3, &[1])).unwrap(), e(3, &[0, 1]));
        assert_eq!(e(3, &[1]).wedge(&e(3, &[0])).unwrap(), e(3, &[0, 1]).scale(-1.0));
        assert_eq!(e(3, &[1, 0]), e(3, &[0, 1]).scale(-1.0));
    }

    #[test]
    fn wedge_degree_overflow() {
        let a = e(2, &[0, 1]);
        assert!(matches!(a.wedge(&e(2, &[0])), Err(AlgebraError::DegreeOverflow { .. })));
        let z = a.wedge_or_zero(&e(2, &[0])).unwrap();
        assert_eq!(z.degree(), 3);
        assert!(z.coeffs().is_empty());
    }

    #[test]
    fn star_examples() {
        assert_eq!(e(2, &[0]).hodge_star(), e(2, &[1]));
        assert_eq!(e(2, &[1]).hodge_star(), e(2, &[0]).scale(-1.0));
        let vol = e(3, &[0, 1, 2]).hodge_star();
        assert_eq!(vol.degree(), 0);
        assert_eq!(vol.coeffs(), &[1.0]);
    }

    #[test]
    fn interior_examples() {
        let r = KForm::interior_vector(&[1.0, 0.0, 0.0], &e(3, &[0, 1])).unwrap();
        assert_eq!(r, e(3, &[1]));
        let c = KForm::from_coeffs(Signature::new(3, 0, 2), vec![2.0, 3.0]).unwrap();
        let z = e(3, &[0]).interior(&c).unwrap();
        assert_eq!(z.degree(), 0);
        assert_eq!(z.coeffs(), &[0.0, 0.0]);
    }

    #[test]
    fn inner_products() {
        let a = e(3, &[0, 1]);
        assert_eq!(a.inner(&a).unwrap(), 1.0);
        assert_eq!(a.inner(&e(3, &[0, 2])).unwrap(), 0.0);
        assert!(a.inner(&e(3, &[0])).is_err());
    }

    #[test]
    fn length_checked() {
        assert!(KForm::from_coeffs(Signature::new(3, 1, 2), vec![0.0; 5]).is_err());
    }
}
