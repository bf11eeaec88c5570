use std::sync::Arc;

use super::domain::GridDomain;
use super::field::DiscreteForm;
use super::GridError;

/// A smooth invertible map `Φ` between subsets of `ℝⁿ`.
pub trait Diffeomorphism: Send + Sync {
    fn dim(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    fn inverse(&self, y: &[f64]) -> Vec<f64>;
    /// `DΦ(x)` row-major: entry `(i, j)` is `∂Φᵢ/∂xⱼ`.
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;
}

/// `x ↦ M x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    dim: usize,
    matrix: Vec<f64>,
    shift: Vec<f64>,
    inverse: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<f64>, shift: Vec<f64>) -> Result<Self, GridError> {
        let dim = shift.len();
        if matrix.len() != dim * dim {
            return Err(GridError::Shape("affine matrix must be n×n".into()));
        }
        let m = faer::Mat::<f64>::from_fn(dim, dim, |i, j| matrix[i * dim + j]);
        let lu = m.partial_piv_lu();
        let inv = faer::linalg::solvers::DenseSolveCore::inverse(&lu);
        let inverse: Vec<f64> = (0..dim * dim).map(|e| inv[(e / dim, e % dim)]).collect();
        if inverse.iter().any(|v| !v.is_finite()) {
            return Err(GridError::Shape("affine matrix is singular".into()));
        }
        Ok(Self { dim, matrix, shift, inverse })
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        (0..dim).for_each(|i| m[i * dim + i] = 1.0);
        Self::new(m, vec![0.0; dim]).expect("identity is invertible")
    }

    pub fn scaling(dim: usize, s: f64) -> Self {
        let mut m = vec![0.0; dim * dim];
        (0..dim).for_each(|i| m[i * dim + i] = s);
        Self::new(m, vec![0.0; dim]).expect("nonzero scaling")
    }

    /// Rotation by `angle` in the `(0, 1)` coordinate plane.
    pub fn plane_rotation(dim: usize, angle: f64) -> Self {
        let mut m = vec![0.0; dim * dim];
        (0..dim).for_each(|i| m[i * dim + i] = 1.0);
        let (s, c) = angle.sin_cos();
        m[0] = c;
        m[1] = -s;
        m[dim] = s;
        m[dim + 1] = c;
        Self::new(m, vec![0.0; dim]).expect("rotations are invertible")
    }
}

impl Diffeomorphism for AffineMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.shift[i] + (0..self.dim).map(|j| self.matrix[i * self.dim + j] * x[j]).sum::<f64>()).collect()
    }

    fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim).map(|i| y[i] - self.shift[i]).collect();
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.inverse[i * self.dim + j] * z[j]).sum()).collect()
    }

    fn jacobian(&self, _x: &[f64]) -> Vec<f64> {
        self.matrix.clone()
    }
}

/// Boundary-flattening graph map `Φ(x) = (x′, x_n + a·|x′|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphFlattening {
    pub dim: usize,
    pub amplitude: f64,
}

impl Diffeomorphism for GraphFlattening {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let r2: f64 = x[..n - 1].iter().map(|v| v * v).sum();
        let mut y = x.to_vec();
        y[n - 1] += self.amplitude * r2;
        y
    }

    fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let r2: f64 = y[..n - 1].iter().map(|v| v * v).sum();
        let mut x = y.to_vec();
        x[n - 1] -= self.amplitude * r2;
        x
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut j = vec![0.0; n * n];
        (0..n).for_each(|i| j[i * n + i] = 1.0);
        for b in 0..n - 1 {
            j[(n - 1) * n + b] = 2.0 * self.amplitude * x[b];
        }
        j
    }
}

/// `x ↦ outer(inner(x))`.
pub struct Composition<'a> {
    pub inner: &'a dyn Diffeomorphism,
    pub outer: &'a dyn Diffeomorphism,
}

impl Diffeomorphism for Composition<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.outer.forward(&self.inner.forward(x))
    }

    fn inverse(&self, y: &[f64]) -> Vec<f64> {
        self.inner.inverse(&self.outer.inverse(y))
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let ji = self.inner.jacobian(x);
        let jo = self.outer.jacobian(&self.inner.forward(x));
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|l| jo[i * n + l] * ji[l * n + j]).sum();
            }
        }
        out
    }
}

/// Largest `|Φ⁻¹(Φ(x)) − x|` over sample points.
pub fn roundtrip_error(phi: &dyn Diffeomorphism, samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|x| {
            let back = phi.inverse(&phi.forward(x));
            back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Multilinear interpolation of `u` at `y`; `None` if any cell corner is inactive.
pub fn interpolate(u: &DiscreteForm, y: &[f64]) -> Option<Vec<f64>> {
    let domain = u.domain();
    let n = domain.dim();
    let l = u.signature().len();
    let mut base = vec![0isize; n];
    let mut frac = vec![0.0; n];
    for a in 0..n {
        let t = (y[a] - domain.origin()[a]) / domain.spacing()[a];
        let m = domain.shape()[a];
        let tol = 1e-9;
        if t < -tol || t > (m - 1) as f64 + tol {
            return None;
        }
        let t = t.clamp(0.0, (m - 1) as f64);
        let i = (t.floor() as isize).min(m as isize - 2);
        base[a] = i;
        frac[a] = t - i as f64;
    }
    let mut out = vec![0.0; l];
    let mut idx = vec![0isize; n];
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        for a in 0..n {
            let up = corner >> a & 1 == 1;
            idx[a] = base[a] + up as isize;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        let node = domain.node_at(&idx)?;
        for (o, v) in out.iter_mut().zip(u.node_slice(node)) {
            *o += w * v;
        }
    }
    Some(out)
}

/// `(Φ*u)(x)`: interpolate `u` at `Φ(x)` and apply the `k`-fold action of `DΦ(x)ᵀ`,
/// `(Φ*u)_I = Σ_J u_J(Φ(x)) det(DΦ[J, I])`.
pub fn pullback(phi: &dyn Diffeomorphism, u: &DiscreteForm, source: Arc<GridDomain>) -> Result<DiscreteForm, GridError> {
    let sig = u.signature();
    if phi.dim() != sig.dim || source.dim() != sig.dim {
        return Err(GridError::DimensionMismatch { domain: source.dim(), form: sig.dim });
    }
    let n = sig.dim;
    let basis = sig.basis();
    let cb = sig.basis_len();
    let tuples: Vec<Vec<usize>> = (0..cb).map(|r| basis.indices(r)).collect();
    let mut values = Vec::with_capacity(source.len() * sig.len());
    for p in 0..source.len() {
        let x = source.coords(p);
        let y = phi.forward(&x);
        let uy = interpolate(u, &y).ok_or_else(|| GridError::Extrapolation { point: y.clone() })?;
        let jac = phi.jacobian(&x);
        // minors[J][I] = det(DΦ[J rows, I cols])
        let minors: Vec<Vec<f64>> = tuples
            .iter()
            .map(|rows| tuples.iter().map(|cols| minor(&jac, n, rows, cols)).collect())
            .collect();
        for j in 0..sig.multiplicity {
            for i_col in 0..cb {
                let v: f64 = (0..cb).map(|jr| uy[j * cb + jr] * minors[jr][i_col]).sum();
                values.push(v);
            }
        }
    }
    DiscreteForm::from_values(source, sig, values)
}

fn minor(m: &[f64], n: usize, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    let mut a: Vec<f64> = rows.iter().flat_map(|&r| cols.iter().map(move |&c| m[r * n + c])).collect();
    // Gaussian elimination with partial pivoting on the k×k block
    let mut det = 1.0;
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &y| a[x * k + c].abs().total_cmp(&a[y * k + c].abs())).unwrap_or(c);
        if a[piv * k + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for j in 0..k {
                a.swap(c * k + j, piv * k + j);
            }
            det = -det;
        }
        det *= a[c * k + c];
        for r in c + 1..k {
            let f = a[r * k + c] / a[c * k + c];
            for j in c..k {
                a[r * k + j] -= f * a[c * k + j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Signature;

    #[test]
    fn identity_copies() {
        let d = Arc::new(GridDomain::unit_box(2, 6).unwrap());
        let u = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 2), |x| vec![x[0], x[1] * x[1], 1.0, -x[0]]);
        let v = pullback(&AffineMap::identity(2), &u, d).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_multiplies_covectors() {
        // target [0,2]², source [0,1]²; Φ(x) = 2x, u = dx¹ ⇒ Φ*u = 2 dx¹
        let target = Arc::new(GridDomain::boxed(&[0.0, 0.0], &[2.0, 2.0], &[9, 9]).unwrap());
        let source = Arc::new(GridDomain::unit_box(2, 5).unwrap());
        let u = DiscreteForm::from_fn(target, Signature::new(2, 1, 1), |_| vec![1.0, 0.0]);
        let v = pullback(&AffineMap::scaling(2, 2.0), &u, source).unwrap();
        for p in 0..v.domain().len() {
            assert!((v.node_slice(p)[0] - 2.0).abs() < 1e-12 && v.node_slice(p)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn outside_target_is_an_error() {
        let d = Arc::new(GridDomain::unit_box(2, 5).unwrap());
        let u = DiscreteForm::zeros(d.clone(), Signature::new(2, 0, 1));
        assert!(matches!(pullback(&AffineMap::scaling(2, 3.0), &u, d), Err(GridError::Extrapolation { .. })));
    }

    #[test]
    fn flattening_roundtrip() {
        let phi = GraphFlattening { dim: 3, amplitude: 0.3 };
        let pts = vec![vec![0.1, -0.4, 0.2], vec![0.7, 0.2, 0.0]];
        assert!(roundtrip_error(&phi, &pts) < 1e-14);
    }
}
