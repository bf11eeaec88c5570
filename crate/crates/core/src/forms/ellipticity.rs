//! Rank-one ellipticity symbols `M_T`, `M_N` and their Legendre–Hadamard constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kform::Signature;
use super::operator::{dot, interior_vector_matrix, wedge_covector_matrix, FormSpace, HomOperator};
use super::AlgebraError;

/// `M_N` together with the condition number of the `B̄` that was inverted.
#[derive(Debug, Clone)]
pub struct NormalSymbol {
    pub operator: HomOperator,
    pub b_condition: f64,
}

fn check_pair(a_bar: &HomOperator, b_bar: &HomOperator) -> Result<Signature, AlgebraError> {
    let sig = b_bar.domain().forms;
    let upper = sig.with_degree(sig.degree + 1);
    let plain = |op: &HomOperator, s: Signature| {
        op.domain() == FormSpace::forms(s) && op.codomain() == FormSpace::forms(s)
    };
    if !plain(b_bar, sig) {
        return Err(AlgebraError::SignatureMismatch { left: b_bar.domain().forms, right: b_bar.codomain().forms });
    }
    if !plain(a_bar, upper) {
        return Err(AlgebraError::SignatureMismatch { left: upper, right: a_bar.domain().forms });
    }
    Ok(sig)
}

/// Block `(i₂, i₁)` is `Wᵢ₂ᵀ Ā Wᵢ₁ + Iᵢ₂ᵀ Iᵢ₁` with `Wᵢ = (eⁱ∧·)∘P`, `Iᵢ = (eᵢ⌟·)∘R`
/// for optional pre-compositions `P`, `R`.
fn assemble_symbol(
    sig: Signature,
    a_bar: &HomOperator,
    wedge_pre: Option<&HomOperator>,
    interior_pre: Option<&HomOperator>,
) -> HomOperator {
    let n = sig.dim;
    let d = sig.len();
    let du = sig.with_degree(sig.degree + 1).len();
    let dl = if sig.degree == 0 { 0 } else { sig.with_degree(sig.degree - 1).len() };
    let apply_pre = |m: &[f64], rows: usize, pre: Option<&HomOperator>| -> Vec<f64> {
        match pre {
            None => m.to_vec(),
            Some(p) => {
                let mut out = vec![0.0; rows * d];
                for r in 0..rows {
                    for c in 0..d {
                        out[r * d + c] = (0..d).map(|l| m[r * d + l] * p.get(l, c)).sum();
                    }
                }
                out
            }
        }
    };
    let wedges: Vec<Vec<f64>> =
        (0..n).map(|i| apply_pre(&wedge_covector_matrix(sig, i), du, wedge_pre)).collect();
    let interiors: Vec<Vec<f64>> =
        (0..n).map(|i| apply_pre(&interior_vector_matrix(sig, i), dl, interior_pre)).collect();
    // A W_i for each i
    let aw: Vec<Vec<f64>> = wedges
        .iter()
        .map(|w| {
            let mut out = vec![0.0; du * d];
            for r in 0..du {
                for c in 0..d {
                    out[r * d + c] = (0..du).map(|l| a_bar.get(r, l) * w[l * d + c]).sum();
                }
            }
            out
        })
        .collect();
    let space = FormSpace::tensored(sig);
    let dim = space.dim();
    let mut m = vec![0.0; dim * dim];
    for i2 in 0..n {
        for i1 in 0..n {
            for b2 in 0..d {
                for b1 in 0..d {
                    let mut v = 0.0;
                    for l in 0..du {
                        v += wedges[i2][l * d + b2] * aw[i1][l * d + b1];
                    }
                    for l in 0..dl {
                        v += interiors[i2][l * d + b2] * interiors[i1][l * d + b1];
                    }
                    m[(i2 * d + b2) * dim + i1 * d + b1] = v;
                }
            }
        }
    }
    HomOperator::from_matrix(space, space, m).expect("shape is consistent")
}

/// `⟨M_T(a₁⊗b₁), a₂⊗b₂⟩ = ⟨Ā(a₁∧b₁), a₂∧b₂⟩ + ⟨a₁⌟B̄b₁, a₂⌟B̄b₂⟩`.
pub fn build_mt(a_bar: &HomOperator, b_bar: &HomOperator) -> Result<HomOperator, AlgebraError> {
    let sig = check_pair(a_bar, b_bar)?;
    Ok(assemble_symbol(sig, a_bar, None, Some(b_bar)))
}

/// `⟨M_N(a₁⊗b₁), a₂⊗b₂⟩ = ⟨Ā(a₁∧B̄⁻¹b₁), a₂∧B̄⁻¹b₂⟩ + ⟨a₁⌟b₁, a₂⌟b₂⟩`.
pub fn build_mn(a_bar: &HomOperator, b_bar: &HomOperator) -> Result<NormalSymbol, AlgebraError> {
    let sig = check_pair(a_bar, b_bar)?;
    let b_inv = b_bar.inverse()?;
    let b_condition = b_bar.condition_number()?;
    Ok(NormalSymbol { operator: assemble_symbol(sig, a_bar, Some(&b_inv), None), b_condition })
}

/// Rank-one minimum of a symbol together with the minimizing unit pair.
#[derive(Debug, Clone)]
pub struct LegendreHadamard {
    pub constant: f64,
    pub direction: Vec<f64>,
    pub form: Vec<f64>,
    pub samples: usize,
}

/// Sampling and refinement budget for [`legendre_hadamard_constant`].
#[derive(Debug, Clone, Copy)]
pub struct LhSearch {
    /// Number of random unit directions `a`.
    pub directions: usize,
    /// Random unit forms `b` tried per direction.
    pub forms_per_direction: usize,
    /// Best samples refined by alternating minimization.
    pub refine: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for LhSearch {
    fn default() -> Self {
        Self { directions: 1000, forms_per_direction: 100, refine: 10, max_sweeps: 200, seed: 0x4c48 }
    }
}

/// `min ⟨M(a⊗b), a⊗b⟩` over unit `a ∈ ℝⁿ`, unit `b ∈ Λᵏ⊗ℝᴺ`.
///
/// Random sampling followed by alternating minimization: for fixed `a` the
/// optimal `b` is the lowest eigenvector of `Σ aᵢ aⱼ Mᵢⱼ`, and symmetrically for `a`.
pub fn legendre_hadamard_constant(m: &HomOperator, search: LhSearch) -> Result<LegendreHadamard, AlgebraError> {
    let space = m.domain();
    let tensor = space.tensor.ok_or(AlgebraError::NotSquare)?;
    if !m.is_square() {
        return Err(AlgebraError::NotSquare);
    }
    let d = space.forms.len();
    let n = tensor;
    let sym = m.symmetric_part();
    // blocks[(i, j)] = d×d block of the symmetric part
    let block = |i: usize, j: usize, r: usize, c: usize| sym.get(i * d + r, j * d + c);
    let form_operator = |a: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; d * d];
        for i in 0..n {
            for j in 0..n {
                let w = a[i] * a[j];
                if w == 0.0 {
                    continue;
                }
                for r in 0..d {
                    for c in 0..d {
                        q[r * d + c] += w * block(i, j, r, c);
                    }
                }
            }
        }
        q
    };
    let direction_operator = |b: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for r in 0..d {
                    for c in 0..d {
                        v += b[r] * block(i, j, r, c) * b[c];
                    }
                }
                p[i * n + j] = v;
            }
        }
        p
    };
    let value = |q: &[f64], b: &[f64]| -> f64 {
        (0..d).map(|r| b[r] * dot(&q[r * d..(r + 1) * d], b)).sum()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let keep = search.refine.max(1);
    for _ in 0..search.directions {
        let a = random_unit(&mut rng, n);
        let q = form_operator(&a);
        for _ in 0..search.forms_per_direction {
            let b = random_unit(&mut rng, d);
            let v = value(&q, &b);
            if best.len() < keep || v < best[best.len() - 1].0 {
                best.push((v, a.clone(), b));
                best.sort_by(|x, y| x.0.total_cmp(&y.0));
                best.truncate(keep);
            }
        }
    }
    let mut result = best[0].clone();
    for (mut v, mut a, mut b) in best {
        for _ in 0..search.max_sweeps {
            let (_, nb) = lowest_eigenpair(&form_operator(&a), d)?;
            b = nb;
            let (va, na) = lowest_eigenpair(&direction_operator(&b), n)?;
            a = na;
            let improved = v - va;
            v = va;
            if improved.abs() <= 1e-15 * v.abs().max(1.0) {
                break;
            }
        }
        if v < result.0 {
            result = (v, a, b);
        }
    }
    Ok(LegendreHadamard {
        constant: result.0,
        direction: result.1,
        form: result.2,
        samples: search.directions * search.forms_per_direction,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        // Gaussian via Box–Muller gives a uniform direction
        let v: Vec<f64> = (0..len)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random::<f64>();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn lowest_eigenpair(sym: &[f64], n: usize) -> Result<(f64, Vec<f64>), AlgebraError> {
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (sym[i * n + j] + sym[j * n + i]));
    let evd = a.self_adjoint_eigen(faer::Side::Lower).map_err(|_| AlgebraError::EigenFailure)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok((s[0], (0..n).map(|i| u[(i, 0)]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> LhSearch {
        LhSearch { directions: 200, forms_per_direction: 20, ..LhSearch::default() }
    }

    #[test]
    fn identity_symbol_has_unit_constant() {
        let sig = Signature::new(3, 1, 2);
        let id = HomOperator::identity(FormSpace::tensored(sig));
        let lh = legendre_hadamard_constant(&id, quick()).unwrap();
        assert!((lh.constant - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mt_unit_example() {
        let sig = Signature::new(2, 1, 1);
        let a = HomOperator::identity(FormSpace::forms(sig.with_degree(2)));
        let b = HomOperator::identity(FormSpace::forms(sig));
        let mt = build_mt(&a, &b).unwrap();
        // a = e_1, b = e^1
        let x = [1.0, 0.0, 0.0, 0.0];
        assert!((mt.quadratic(&x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_entry_is_detected() {
        let sig = Signature::new(2, 1, 1);
        let space = FormSpace::tensored(sig);
        let m = HomOperator::from_fn(space, space, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (i, j) if i == j => 1.0,
            _ => 0.0,
        });
        let lh = legendre_hadamard_constant(&m, quick()).unwrap();
        assert!(lh.constant < 1.0);
        assert!((lh.constant + 1.0).abs() < 1e-9);
    }

    #[test]
    fn mn_scales_with_inverse() {
        let sig = Signature::new(2, 1, 1);
        let a = HomOperator::identity(FormSpace::forms(sig.with_degree(2)));
        let b = HomOperator::scaled_identity(FormSpace::forms(sig), 2.0);
        let mn = build_mn(&a, &b).unwrap();
        assert!((mn.b_condition - 1.0).abs() < 1e-12);
        // a = e_1, b = e^2: |a ∧ b/2|² = 1/4, |a⌟b|² = 0
        let x = [0.0, 1.0, 0.0, 0.0];
        assert!((mn.operator.quadratic(&x) - 0.25).abs() < 1e-15);
    }
}
