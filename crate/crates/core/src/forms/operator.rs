use super::kform::{KForm, Signature};
use super::AlgebraError;

/// A vector space `Λᵏℝⁿ ⊗ ℝᴺ`, optionally tensored with `ℝⁿ` (for rank-one
/// symbols `a ⊗ b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FormSpace {
    pub forms: Signature,
    /// Extra tensor factor `ℝᵐ` placed outermost: index `i * dim(Λ) + b`.
    pub tensor: Option<usize>,
}

impl FormSpace {
    pub fn forms(sig: Signature) -> Self {
        Self { forms: sig, tensor: None }
    }

    pub fn tensored(sig: Signature) -> Self {
        Self { forms: sig, tensor: Some(sig.dim) }
    }

    pub fn dim(&self) -> usize {
        self.forms.len() * self.tensor.unwrap_or(1)
    }
}

/// A linear map between form spaces as a dense row-major matrix over the
/// canonical bases.
#[derive(Debug, Clone, PartialEq)]
pub struct HomOperator {
    domain: FormSpace,
    codomain: FormSpace,
    matrix: Vec<f64>,
}

impl HomOperator {
    pub fn from_matrix(domain: FormSpace, codomain: FormSpace, matrix: Vec<f64>) -> Result<Self, AlgebraError> {
        if matrix.len() != domain.dim() * codomain.dim() {
            return Err(AlgebraError::MatrixShape {
                rows: codomain.dim(),
                cols: domain.dim(),
                found: matrix.len(),
            });
        }
        Ok(Self { domain, codomain, matrix })
    }

    pub fn from_fn(domain: FormSpace, codomain: FormSpace, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let (r, c) = (codomain.dim(), domain.dim());
        let mut matrix = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                matrix.push(f(i, j));
            }
        }
        Self { domain, codomain, matrix }
    }

    pub fn identity(space: FormSpace) -> Self {
        Self::from_fn(space, space, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn scaled_identity(space: FormSpace, s: f64) -> Self {
        Self::from_fn(space, space, |i, j| if i == j { s } else { 0.0 })
    }

    /// Operator acting on forms of signature `sig`.
    pub fn on_forms(sig: Signature, matrix: Vec<f64>) -> Result<Self, AlgebraError> {
        Self::from_matrix(FormSpace::forms(sig), FormSpace::forms(sig), matrix)
    }

    pub fn domain(&self) -> FormSpace {
        self.domain
    }

    pub fn codomain(&self) -> FormSpace {
        self.codomain
    }

    pub fn rows(&self) -> usize {
        self.codomain.dim()
    }

    pub fn cols(&self) -> usize {
        self.domain.dim()
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols() + j]
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        let c = self.cols();
        (0..self.rows()).map(|i| dot(&self.matrix[i * c..(i + 1) * c], x)).collect()
    }

    /// Applies the operator to a form of the domain signature.
    pub fn apply(&self, x: &KForm) -> Result<KForm, AlgebraError> {
        if self.domain.tensor.is_some() || x.signature() != self.domain.forms {
            return Err(AlgebraError::SignatureMismatch { left: self.domain.forms, right: x.signature() });
        }
        KForm::from_coeffs(self.codomain.forms, self.apply_slice(x.coeffs()))
    }

    /// Quadratic form `⟨M x, x⟩`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        dot(&self.apply_slice(x), x)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.codomain, self.domain, |i, j| self.get(j, i))
    }

    /// `‖M − Mᵀ‖∞` (max-abs entry), `∞` for non-square maps.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() == 0.0
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(self.domain, self.codomain, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn compose(&self, inner: &Self) -> Result<Self, AlgebraError> {
        if inner.codomain.dim() != self.domain.dim() {
            return Err(AlgebraError::MatrixShape { rows: self.rows(), cols: inner.rows(), found: self.cols() });
        }
        let k = self.cols();
        Ok(Self::from_fn(inner.domain, self.codomain, |i, j| {
            (0..k).map(|l| self.get(i, l) * inner.get(l, j)).sum()
        }))
    }

    /// Inverse by LU with partial pivoting.
    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        if !self.is_square() {
            return Err(AlgebraError::NotSquare);
        }
        let n = self.rows();
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| self.get(i, j));
        let lu = a.partial_piv_lu();
        let inv = faer::linalg::solvers::DenseSolveCore::inverse(&lu);
        let out = Self::from_fn(self.codomain, self.domain, |i, j| inv[(i, j)]);
        if out.matrix.iter().any(|v| !v.is_finite()) {
            return Err(AlgebraError::Singular);
        }
        Ok(out)
    }

    /// Eigenvalues of the symmetric part, nondecreasing.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>, AlgebraError> {
        if !self.is_square() {
            return Err(AlgebraError::NotSquare);
        }
        let s = self.symmetric_part();
        let n = s.rows();
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| s.get(i, j));
        a.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|_| AlgebraError::EigenFailure)
    }

    /// 2-norm condition number from the singular values.
    pub fn condition_number(&self) -> Result<f64, AlgebraError> {
        let n = self.rows();
        let a = faer::Mat::<f64>::from_fn(n, self.cols(), |i, j| self.get(i, j));
        let s = a.singular_values().map_err(|_| AlgebraError::EigenFailure)?;
        let max = s.iter().cloned().fold(0.0, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(if min == 0.0 { f64::INFINITY } else { max / min })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Matrix of `ζ ↦ eⁱ ∧ ζ` from `sig` to degree `k + 1`, row-major.
pub fn wedge_covector_matrix(sig: Signature, axis: usize) -> Vec<f64> {
    let out = sig.with_degree(sig.degree + 1);
    let ei = scalar_covector(sig.dim, axis);
    columns_of(sig, out, |x| ei.wedge_or_zero(x).expect("signatures agree"))
}

/// Matrix of `ζ ↦ eᵢ ⌟ ζ` from `sig` to degree `k − 1`, row-major.
/// Empty when `k = 0`.
pub fn interior_vector_matrix(sig: Signature, axis: usize) -> Vec<f64> {
    if sig.degree == 0 {
        return Vec::new();
    }
    let out = sig.with_degree(sig.degree - 1);
    let ei = scalar_covector(sig.dim, axis);
    columns_of(sig, out, |x| ei.interior(x).expect("signatures agree"))
}

fn scalar_covector(dim: usize, axis: usize) -> KForm {
    let mut v = vec![0.0; dim];
    v[axis] = 1.0;
    KForm::from_vector(&v)
}

/// Dense matrix of a linear map given by its action on basis forms.
pub(crate) fn columns_of(input: Signature, output: Signature, f: impl Fn(&KForm) -> KForm) -> Vec<f64> {
    let (r, c) = (output.len(), input.len());
    let mut m = vec![0.0; r * c];
    for j in 0..c {
        let mut e = KForm::zeros(input);
        e.coeffs_mut()[j] = 1.0;
        let y = f(&e);
        for (i, v) in y.coeffs().iter().enumerate() {
            m[i * c + j] = *v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_checked() {
        let sig = Signature::new(2, 1, 1);
        assert!(HomOperator::on_forms(sig, vec![1.0; 3]).is_err());
        assert!(HomOperator::on_forms(sig, vec![1.0; 4]).is_ok());
    }

    #[test]
    fn inverse_and_condition() {
        let sig = Signature::new(2, 1, 1);
        let a = HomOperator::on_forms(sig, vec![2.0, 0.0, 0.0, 0.5]).unwrap();
        let inv = a.inverse().unwrap();
        assert!((inv.get(0, 0) - 0.5).abs() < 1e-15 && (inv.get(1, 1) - 2.0).abs() < 1e-15);
        assert!((a.condition_number().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn covector_matrices() {
        let sig = Signature::new(3, 1, 1);
        // e^1 ∧ e^2 = e^{12}: column of e^2 (index 1) has +1 at e^{12} (index 0)
        let w = wedge_covector_matrix(sig, 0);
        assert_eq!(w.len(), 9);
        assert_eq!(w[1], 1.0);
        let i = interior_vector_matrix(Signature::new(3, 2, 1), 0);
        // e_1 ⌟ e^{12} = e^2: row 1, column 0
        assert_eq!(i[3], 1.0);
    }
}
