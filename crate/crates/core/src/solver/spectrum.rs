use std::sync::Arc;

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::HodgeSystem;
use super::SolverError;
use crate::forms::Signature;
use crate::grid::{CoefficientField, DiscreteForm, FaceCondition, GridDomain};
use crate::sparse::{norm2, CsrMatrix, Factorization};

pub const EIGEN_TOLERANCE: f64 = 1e-8;
pub const EIGEN_MAX_ITERATIONS: usize = 300;
/// Eigenvalues below this count as zero.
pub const HARMONIC_THRESHOLD: f64 = 1e-8;
/// Eigenvalues, eigenvectors and residuals of one subspace iterate.
type RitzPairs = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>);

const SHIFT: f64 = -1.0;

/// Smallest eigenpairs of `a(u, ·) = μ b(u, ·)` on the free dofs.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending Rayleigh quotients `a/b`.
    pub eigenvalues: Vec<f64>,
    pub eigenforms: Vec<DiscreteForm>,
    /// Eigenvectors on the free dofs, `M`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    /// `‖Ku − μMu‖ / ((|μ| + |σ|)‖Mu‖)` with the shift `σ`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Largest stiffness diagonal over the matching mass diagonal.
    pub scale: f64,
}

impl HodgeSystem {
    /// The `count` smallest generalized eigenpairs by shift-invert block
    /// subspace iteration with Rayleigh–Ritz.
    pub fn spectrum(&self, count: usize) -> Result<Spectrum, SolverError> {
        let nfree = self.free_dofs().len();
        if count == 0 || count > nfree {
            return Err(SolverError::Precondition(format!("requested {count} eigenpairs of {nfree} free dofs")));
        }
        if !self.is_symmetric() {
            return Err(SolverError::Precondition("spectrum needs symmetric coefficients".into()));
        }
        let free = self.free_dofs();
        let k_ff = self.stiffness().select(free, free);
        let m_ff = self.mass().select(free, free);
        let shifted = k_ff.axpby(1.0, &m_ff, -SHIFT);
        let factor = Factorization::new(&shifted, true)?;
        let block = (count + (count / 2).max(4)).min(nfree);

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let mut x: Vec<Vec<f64>> =
            (0..block).map(|_| (0..nfree).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut best: Option<RitzPairs> = None;
        for it in 1..=EIGEN_MAX_ITERATIONS {
            let mx: Vec<Vec<f64>> = x.iter().map(|v| m_ff.mul_vec(v)).collect();
            let y = factor.solve_many(&mx);
            let basis = m_orthonormalize(&m_ff, y);
            if basis.len() < count {
                return Err(SolverError::Precondition("trial subspace collapsed".into()));
            }
            let (vals, vecs) = rayleigh_ritz(&k_ff, &basis)?;
            let residuals: Vec<f64> = vals
                .iter()
                .zip(&vecs)
                .take(count)
                .map(|(&mu, v)| {
                    let kv = k_ff.mul_vec(v);
                    let mv = m_ff.mul_vec(v);
                    let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - mu * b).collect();
                    norm2(&r) / ((mu.abs() + SHIFT.abs()) * norm2(&mv) + f64::MIN_POSITIVE)
                })
                .collect();
            let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
            x = vecs.clone();
            best = Some((vals, vecs, residuals));
            if worst <= EIGEN_TOLERANCE {
                let (vals, vecs, residuals) = best.take().expect("just set");
                return Ok(self.package(vals, vecs, residuals, count, it, &k_ff, &m_ff));
            }
        }
        let worst = best.map(|b| b.2.iter().fold(0.0f64, |m, &r| m.max(r))).unwrap_or(f64::INFINITY);
        Err(SolverError::EigenConvergence { iterations: EIGEN_MAX_ITERATIONS, residual: worst })
    }

    #[allow(clippy::too_many_arguments)]
    fn package(
        &self,
        vals: Vec<f64>,
        vecs: Vec<Vec<f64>>,
        residuals: Vec<f64>,
        count: usize,
        iterations: usize,
        k_ff: &CsrMatrix,
        m_ff: &CsrMatrix,
    ) -> Spectrum {
        let scale = k_ff
            .diagonal_entries()
            .iter()
            .zip(m_ff.diagonal_entries())
            .map(|(k, m)| if m > 0.0 { k / m } else { 0.0 })
            .fold(0.0f64, f64::max);
        let vectors: Vec<Vec<f64>> = vecs.into_iter().take(count).collect();
        let eigenforms = vectors.iter().map(|v| self.form_from_unknown(&self.expand(v))).collect();
        Spectrum { eigenvalues: vals.into_iter().take(count).collect(), eigenforms, vectors, residuals, iterations, scale }
    }
}

/// Modified Gram–Schmidt in the `M` inner product, dropping dependent columns.
fn m_orthonormalize(m: &CsrMatrix, cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols {
        let initial = dot(&v, &m.mul_vec(&v)).sqrt();
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &m.mul_vec(&v));
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nv = dot(&v, &m.mul_vec(&v)).sqrt();
        if nv > 1e-10 * initial && nv > 0.0 {
            v.iter_mut().for_each(|a| *a /= nv);
            out.push(v);
        }
    }
    out
}

/// Ritz pairs of `K` on an `M`-orthonormal basis, ascending.
fn rayleigh_ritz(k: &CsrMatrix, basis: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolverError> {
    let p = basis.len();
    let kb: Vec<Vec<f64>> = basis.iter().map(|v| k.mul_vec(v)).collect();
    let mut h = Mat::<f64>::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = 0.5 * (dot(&basis[i], &kb[j]) + dot(&basis[j], &kb[i]));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| SolverError::Precondition(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let n = basis[0].len();
    let vals = order.iter().map(|&i| s[i]).collect();
    let vecs = order
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; n];
            for (j, b) in basis.iter().enumerate() {
                let w = u[(j, c)];
                v.iter_mut().zip(b).for_each(|(a, x)| *a += w * x);
            }
            v
        })
        .collect();
    Ok((vals, vecs))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete harmonic fields of the identity system: eigenforms with
/// eigenvalue below [`HARMONIC_THRESHOLD`], orthonormal in `L²`.
pub fn harmonic_fields(domain: Arc<GridDomain>, sig: Signature, bc: FaceCondition) -> Result<Vec<DiscreteForm>, SolverError> {
    let a = CoefficientField::identity(domain.clone(), sig.with_degree(sig.degree + 1));
    let b = CoefficientField::identity(domain, sig);
    let system = HodgeSystem::assemble(&a, &b, 0.0, bc)?;
    let nfree = system.free_dofs().len();
    if nfree == 0 {
        return Ok(Vec::new());
    }
    let mut m = (4 * sig.multiplicity + 2).min(nfree);
    loop {
        let spec = system.spectrum(m)?;
        let zero: Vec<usize> = (0..m).filter(|&i| spec.eigenvalues[i] < HARMONIC_THRESHOLD).collect();
        if zero.len() < m || m == nfree {
            // identity mass is the quadrature, so M-orthonormal is L²-orthonormal
            return Ok(zero.into_iter().map(|i| spec.eigenforms[i].clone()).collect());
        }
        m = (2 * m).min(nfree);
    }
}
