//! Closed-form fields with exact derivatives up to second order, used to build
//! manufactured data.

use crate::forms::basis::{full_mask, star_sign, wedge_sign};
use crate::forms::Signature;

/// Value, gradient and Hessian of a form-valued function at one point.
///
/// `grad[a * len + c] = ∂_a u_c`, `hess[(a * n + b) * len + c] = ∂_a∂_b u_c`.
/// `order` records how many derivatives are valid.
#[derive(Debug, Clone, PartialEq)]
pub struct FormJet {
    pub sig: Signature,
    pub order: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl FormJet {
    pub fn zeros(sig: Signature, order: usize) -> Self {
        let (n, l) = (sig.dim, sig.len());
        Self { sig, order, value: vec![0.0; l], grad: vec![0.0; n * l], hess: vec![0.0; n * n * l] }
    }


    /// Applies a constant coefficient coupling `(c_in, c_out, s)`, keeping derivative order.
    fn couple(&self, out: Signature, coupling: &[(usize, usize, f64)]) -> Self {
        let n = self.sig.dim;
        let (li, lo) = (self.sig.len(), out.len());
        let mut r = Self::zeros(out, self.order);
        for &(ci, co, s) in coupling {
            r.value[co] += s * self.value[ci];
            for a in 0..n {
                r.grad[a * lo + co] += s * self.grad[a * li + ci];
                for b in 0..n {
                    r.hess[(a * n + b) * lo + co] += s * self.hess[(a * n + b) * li + ci];
                }
            }
        }
        r
    }

    pub fn star(&self) -> Self {
        let (n, sig) = (self.sig.dim, self.sig);
        let out = sig.with_degree(n - sig.degree);
        let (ib, ob) = (sig.basis(), out.basis());
        let mut coupling = Vec::new();
        for (r, &m) in ib.masks().iter().enumerate() {
            let ro = ob.rank_of(full_mask(n) & !m).expect("complement degree");
            for j in 0..sig.multiplicity {
                coupling.push((sig.index(j, r), out.index(j, ro), star_sign(n, m) as f64));
            }
        }
        self.couple(out, &coupling)
    }

    /// Exterior derivative; the result has one derivative fewer.
    pub fn d(&self) -> Self {
        let sig = self.sig;
        let n = sig.dim;
        assert!(self.order >= 1 && sig.degree < n, "d needs a first-order jet below top degree");
        let out = sig.with_degree(sig.degree + 1);
        let (ib, ob) = (sig.basis(), out.basis());
        let (li, lo) = (sig.len(), out.len());
        let mut r = Self::zeros(out, self.order - 1);
        for a in 0..n {
            for (rk, &m) in ib.masks().iter().enumerate() {
                if m & (1 << a) != 0 {
                    continue;
                }
                let s = wedge_sign(1 << a, m) as f64;
                let ro = ob.rank_of(m | (1 << a)).expect("degree k+1");
                for j in 0..sig.multiplicity {
                    let (ci, co) = (sig.index(j, rk), out.index(j, ro));
                    r.value[co] += s * self.grad[a * li + ci];
                    if self.order >= 2 {
                        for b in 0..n {
                            r.grad[b * lo + co] += s * self.hess[(a * n + b) * li + ci];
                        }
                    }
                }
            }
        }
        r
    }

    /// `d* = (−1)^{n(k+1)} ∗ d ∗`.
    pub fn codiff(&self) -> Self {
        let (n, k) = (self.sig.dim, self.sig.degree);
        assert!(k > 0, "codifferential of a 0-form");
        let sign = if (n * (k + 1)) % 2 == 0 { 1.0 } else { -1.0 };
        let r = self.star().d().star();
        let coupling: Vec<_> = (0..r.sig.len()).map(|c| (c, c, sign)).collect();
        r.couple(r.sig, &coupling)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.sig, other.sig, "jet signatures");
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Self {
            sig: self.sig,
            order: self.order.min(other.order),
            value: zip(&self.value, &other.value),
            grad: zip(&self.grad, &other.grad),
            hess: zip(&self.hess, &other.hess),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let sc = |a: &[f64]| a.iter().map(|x| x * s).collect::<Vec<_>>();
        Self { sig: self.sig, order: self.order, value: sc(&self.value), grad: sc(&self.grad), hess: sc(&self.hess) }
    }
}

/// Value and derivatives of a matrix-valued coefficient, row-major entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatJet {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl MatJet {
    pub fn constant(rows: usize, cols: usize, dim: usize, value: Vec<f64>) -> Self {
        let e = rows * cols;
        Self { rows, cols, dim, value, grad: vec![0.0; dim * e], hess: vec![0.0; dim * dim * e] }
    }

    pub fn transpose(&self) -> Self {
        let (r, c, n) = (self.rows, self.cols, self.dim);
        let e = r * c;
        let t = |src: &[f64], blocks: usize| {
            let mut out = vec![0.0; blocks * e];
            for blk in 0..blocks {
                for i in 0..r {
                    for j in 0..c {
                        out[blk * e + j * r + i] = src[blk * e + i * c + j];
                    }
                }
            }
            out
        };
        Self { rows: c, cols: r, dim: n, value: t(&self.value, 1), grad: t(&self.grad, n), hess: t(&self.hess, n * n) }
    }

    /// Product rule for `M(x) u(x)`.
    pub fn apply(&self, u: &FormJet, out: Signature) -> FormJet {
        let n = self.dim;
        let (r, c) = (self.rows, self.cols);
        assert_eq!(c, u.sig.len(), "matrix columns vs form length");
        assert_eq!(r, out.len(), "matrix rows vs output length");
        let e = r * c;
        let m = |blk: &[f64], off: usize, i: usize, j: usize| blk[off * e + i * c + j];
        let mut res = FormJet::zeros(out, u.order);
        for i in 0..r {
            for j in 0..c {
                let m0 = m(&self.value, 0, i, j);
                res.value[i] += m0 * u.value[j];
                for a in 0..n {
                    let ma = m(&self.grad, a, i, j);
                    res.grad[a * r + i] += ma * u.value[j] + m0 * u.grad[a * c + j];
                    for b in 0..n {
                        let mb = m(&self.grad, b, i, j);
                        let mab = m(&self.hess, a * n + b, i, j);
                        res.hess[(a * n + b) * r + i] += mab * u.value[j]
                            + ma * u.grad[b * c + j]
                            + mb * u.grad[a * c + j]
                            + m0 * u.hess[(a * n + b) * c + j];
                    }
                }
            }
        }
        res
    }
}

/// A smooth form field with closed-form derivatives.
pub trait FormField: Send + Sync {
    fn signature(&self) -> Signature;
    /// Second-order jet at `x`.
    fn jet(&self, x: &[f64]) -> FormJet;
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.jet(x).value
    }
}

/// A smooth field of linear maps on `Λᵏ⊗ℝᴺ`.
pub trait MatrixField: Send + Sync {
    /// Signature of the forms the matrices act on.
    fn space(&self) -> Signature;
    fn jet(&self, x: &[f64]) -> MatJet;
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.jet(x).value
    }
}

/// One-variable factor of a separable term.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    One,
    /// `sin(freq · t + phase)`
    Trig { freq: f64, phase: f64 },
    /// `Σ cᵢ tⁱ`
    Poly { coeffs: Vec<f64> },
    /// `exp(rate · t)`
    Exp { rate: f64 },
}

impl Factor {
    pub fn sin(freq: f64) -> Self {
        Self::Trig { freq, phase: 0.0 }
    }

    pub fn cos(freq: f64) -> Self {
        Self::Trig { freq, phase: std::f64::consts::FRAC_PI_2 }
    }

    /// Value and first two derivatives.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        match self {
            Self::One => [1.0, 0.0, 0.0],
            Self::Trig { freq, phase } => {
                let (s, c) = (freq * t + phase).sin_cos();
                [s, freq * c, -freq * freq * s]
            }
            Self::Poly { coeffs } => {
                let mut v = [0.0; 3];
                for (i, &ci) in coeffs.iter().enumerate() {
                    let i = i as i32;
                    v[0] += ci * t.powi(i);
                    if i >= 1 {
                        v[1] += ci * i as f64 * t.powi(i - 1);
                    }
                    if i >= 2 {
                        v[2] += ci * (i * (i - 1)) as f64 * t.powi(i - 2);
                    }
                }
                v
            }
            Self::Exp { rate } => {
                let e = (rate * t).exp();
                [e, rate * e, rate * rate * e]
            }
        }
    }
}

/// `amplitude · Π_a factors[a](x_a)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeparableTerm {
    pub amplitude: f64,
    pub factors: Vec<Factor>,
}

impl SeparableTerm {
    pub fn new(amplitude: f64, factors: Vec<Factor>) -> Self {
        Self { amplitude, factors }
    }

    /// Value, gradient and Hessian (row-major) at `x`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = x.len();
        let f: Vec<[f64; 3]> = (0..n).map(|a| self.factors.get(a).unwrap_or(&Factor::One).eval(x[a])).collect();
        let prod_except = |skip: &[usize], order: &[usize]| -> f64 {
            let mut p = self.amplitude;
            for a in 0..n {
                let o = skip.iter().zip(order).filter(|(s, _)| **s == a).map(|(_, o)| *o).sum::<usize>();
                p *= f[a][o.min(2)];
            }
            p
        };
        let value = prod_except(&[], &[]);
        let grad: Vec<f64> = (0..n).map(|a| prod_except(&[a], &[1])).collect();
        let mut hess = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                hess[a * n + b] = if a == b { prod_except(&[a], &[2]) } else { prod_except(&[a, b], &[1, 1]) };
            }
        }
        (value, grad, hess)
    }
}

/// Form field whose coefficients are sums of separable terms.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeparableForm {
    pub sig: Signature,
    /// `terms[c]` sums to coefficient `c`.
    pub terms: Vec<Vec<SeparableTerm>>,
}

impl SeparableForm {
    pub fn zero(sig: Signature) -> Self {
        Self { sig, terms: vec![Vec::new(); sig.len()] }
    }

    pub fn with_term(mut self, coeff: usize, term: SeparableTerm) -> Self {
        self.terms[coeff].push(term);
        self
    }
}

impl FormField for SeparableForm {
    fn signature(&self) -> Signature {
        self.sig
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        let n = self.sig.dim;
        let l = self.sig.len();
        let mut j = FormJet::zeros(self.sig, 2);
        for (c, terms) in self.terms.iter().enumerate() {
            for t in terms {
                let (v, g, h) = t.eval(x);
                j.value[c] += v;
                for a in 0..n {
                    j.grad[a * l + c] += g[a];
                    for b in 0..n {
                        j.hess[(a * n + b) * l + c] += h[a * n + b];
                    }
                }
            }
        }
        j
    }
}

/// The zero field.
#[derive(Debug, Clone, Copy)]
pub struct ZeroForm(pub Signature);

impl FormField for ZeroForm {
    fn signature(&self) -> Signature {
        self.0
    }

    fn jet(&self, _x: &[f64]) -> FormJet {
        FormJet::zeros(self.0, 2)
    }
}

/// Constant matrix coefficient.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstantMatrix {
    pub space: Signature,
    pub value: Vec<f64>,
}

impl ConstantMatrix {
    pub fn identity(space: Signature) -> Self {
        Self::scaled_identity(space, 1.0)
    }

    pub fn scaled_identity(space: Signature, s: f64) -> Self {
        let l = space.len();
        let mut value = vec![0.0; l * l];
        (0..l).for_each(|i| value[i * l + i] = s);
        Self { space, value }
    }
}

impl MatrixField for ConstantMatrix {
    fn space(&self) -> Signature {
        self.space
    }

    fn jet(&self, _x: &[f64]) -> MatJet {
        let l = self.space.len();
        MatJet::constant(l, l, self.space.dim, self.value.clone())
    }
}

/// `base + Σ_m matrix_m · sin(⟨wave_m, x⟩ + phase_m)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrigCoefficient {
    pub space: Signature,
    pub base: Vec<f64>,
    pub modes: Vec<TrigMode>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrigMode {
    pub matrix: Vec<f64>,
    pub wave: Vec<f64>,
    pub phase: f64,
}

impl MatrixField for TrigCoefficient {
    fn space(&self) -> Signature {
        self.space
    }

    fn jet(&self, x: &[f64]) -> MatJet {
        let l = self.space.len();
        let n = self.space.dim;
        let e = l * l;
        let mut j = MatJet::constant(l, l, n, self.base.clone());
        for m in &self.modes {
            let arg: f64 = m.wave.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + m.phase;
            let (s, c) = arg.sin_cos();
            for idx in 0..e {
                let mv = m.matrix[idx];
                j.value[idx] += mv * s;
                for a in 0..n {
                    j.grad[a * e + idx] += mv * c * m.wave[a];
                    for b in 0..n {
                        j.hess[(a * n + b) * e + idx] -= mv * s * m.wave[a] * m.wave[b];
                    }
                }
            }
        }
        j
    }
}

/// Jet of the pointwise inverse `M⁻¹` up to second order.
pub fn inverse_jet(m: &MatJet) -> MatJet {
    let (l, n) = (m.rows, m.dim);
    let e = l * l;
    let inv = dense_inverse(&m.value, l);
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; e];
        for i in 0..l {
            for k in 0..l {
                let aik = a[i * l + k];
                if aik != 0.0 {
                    for j in 0..l {
                        c[i * l + j] += aik * b[k * l + j];
                    }
                }
            }
        }
        c
    };
    let mut out = MatJet::constant(l, l, n, inv.clone());
    // ∂(M⁻¹) = −M⁻¹ ∂M M⁻¹
    let dinv: Vec<Vec<f64>> = (0..n)
        .map(|a| mul(&mul(&inv, &m.grad[a * e..(a + 1) * e]), &inv).iter().map(|v| -v).collect())
        .collect();
    for a in 0..n {
        out.grad[a * e..(a + 1) * e].copy_from_slice(&dinv[a]);
    }
    // ∂_a∂_b(M⁻¹) = −(∂_b M⁻¹) ∂_a M M⁻¹ − M⁻¹ ∂_a∂_b M M⁻¹ − M⁻¹ ∂_a M ∂_b M⁻¹
    for a in 0..n {
        for b in 0..n {
            let ga = &m.grad[a * e..(a + 1) * e];
            let hab = &m.hess[(a * n + b) * e..(a * n + b + 1) * e];
            let t1 = mul(&mul(&dinv[b], ga), &inv);
            let t2 = mul(&mul(&inv, hab), &inv);
            let t3 = mul(&mul(&inv, ga), &dinv[b]);
            for idx in 0..e {
                out.hess[(a * n + b) * e + idx] = -(t1[idx] + t2[idx] + t3[idx]);
            }
        }
    }
    out
}

/// Jet of `M₁ M₂` up to second order.
pub fn product_jet(m1: &MatJet, m2: &MatJet) -> MatJet {
    let (l, n) = (m1.rows, m1.dim);
    assert_eq!(m1.cols, m2.rows, "product shapes");
    let e = l * l;
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; e];
        for i in 0..l {
            for k in 0..l {
                for j in 0..l {
                    c[i * l + j] += a[i * l + k] * b[k * l + j];
                }
            }
        }
        c
    };
    let blk = |v: &[f64], i: usize| v[i * e..(i + 1) * e].to_vec();
    let mut out = MatJet::constant(l, l, n, mul(&m1.value, &m2.value));
    for a in 0..n {
        let g = mul(&blk(&m1.grad, a), &m2.value);
        let g2 = mul(&m1.value, &blk(&m2.grad, a));
        for idx in 0..e {
            out.grad[a * e + idx] = g[idx] + g2[idx];
        }
        for b in 0..n {
            let t = [
                mul(&blk(&m1.hess, a * n + b), &m2.value),
                mul(&blk(&m1.grad, a), &blk(&m2.grad, b)),
                mul(&blk(&m1.grad, b), &blk(&m2.grad, a)),
                mul(&m1.value, &blk(&m2.hess, a * n + b)),
            ];
            for idx in 0..e {
                out.hess[(a * n + b) * e + idx] = t.iter().map(|m| m[idx]).sum();
            }
        }
    }
    out
}

pub(crate) fn dense_inverse(m: &[f64], l: usize) -> Vec<f64> {
    let a = faer::Mat::<f64>::from_fn(l, l, |i, j| m[i * l + j]);
    let lu = a.partial_piv_lu();
    let inv = faer::linalg::solvers::DenseSolveCore::inverse(&lu);
    (0..l * l).map(|e| inv[(e / l, e % l)]).collect()
}

/// Strong Hodge operator `𝔏ω = d*(A dω) + Bᵀ d d*(Bω)` evaluated at `x`.
pub fn hodge_operator_at(a: &dyn MatrixField, b: &dyn MatrixField, omega: &dyn FormField, x: &[f64]) -> Vec<f64> {
    let sig = omega.signature();
    let w = omega.jet(x);
    let mut out = vec![0.0; sig.len()];
    if sig.degree < sig.dim {
        let up = sig.with_degree(sig.degree + 1);
        let adw = a.jet(x).apply(&w.d(), up);
        out.iter_mut().zip(adw.codiff().value).for_each(|(o, v)| *o += v);
    }
    if sig.degree > 0 {
        let bj = b.jet(x);
        let dd = bj.apply(&w, sig).codiff().d();
        let bt = bj.transpose();
        let r = bt.apply(&dd, sig);
        out.iter_mut().zip(r.value).for_each(|(o, v)| *o += v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_derivatives() {
        let f = Factor::Poly { coeffs: vec![1.0, 2.0, 3.0] };
        assert_eq!(f.eval(2.0), [17.0, 14.0, 6.0]);
        let s = Factor::cos(2.0).eval(0.0);
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1].abs() < 1e-15 && (s[2] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_sine_product() {
        // A = B = I: 𝔏ω = Δω componentwise
        let sig = Signature::new(2, 1, 1);
        let pi = std::f64::consts::PI;
        let term = SeparableTerm::new(1.0, vec![Factor::sin(pi), Factor::sin(pi)]);
        let w = SeparableForm::zero(sig).with_term(0, term.clone()).with_term(1, term);
        let a = ConstantMatrix::identity(sig.with_degree(2));
        let b = ConstantMatrix::identity(sig);
        let x = [0.3, 0.7];
        let l = hodge_operator_at(&a, &b, &w, &x);
        let expect = -2.0 * pi * pi * (pi * 0.3).sin() * (pi * 0.7).sin();
        assert!((l[0] - expect).abs() < 1e-12 && (l[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn inverse_jet_matches_finite_differences() {
        let sig = Signature::new(2, 1, 1);
        let c = TrigCoefficient {
            space: sig,
            base: vec![2.0, 0.3, 0.3, 1.5],
            modes: vec![TrigMode { matrix: vec![0.4, 0.1, 0.1, -0.2], wave: vec![1.0, 2.0], phase: 0.3 }],
        };
        let x = [0.2, 0.4];
        let j = inverse_jet(&c.jet(&x));
        let eps = 1e-5;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += eps;
            xm[a] -= eps;
            let ip = dense_inverse(&c.value(&xp), 2);
            let im = dense_inverse(&c.value(&xm), 2);
            let i0 = dense_inverse(&c.value(&x), 2);
            for idx in 0..4 {
                let fd = (ip[idx] - im[idx]) / (2.0 * eps);
                assert!((fd - j.grad[a * 4 + idx]).abs() < 1e-8);
                let fd2 = (ip[idx] - 2.0 * i0[idx] + im[idx]) / (eps * eps);
                assert!((fd2 - j.hess[(a * 2 + a) * 4 + idx]).abs() < 1e-4);
            }
        }
    }
}
