use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::BoundaryData;
use crate::analytic::{hodge_operator_at, inverse_jet, Factor, FormField, FormJet, MatrixField, SeparableForm, SeparableTerm};
use crate::forms::Signature;
use crate::grid::{DiscreteForm, FaceCondition, GridDomain};

/// Tensor-product trigonometric form on the unit box whose components vanish
/// on the faces where `bc` pins them: a sine factor along every axis `a ∉ I`
/// (tangential) or `a ∈ I` (normal), seeded phases elsewhere.
pub fn adapted_trig_form(sig: Signature, bc: FaceCondition, seed: u64) -> SeparableForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let basis = sig.basis();
    let mut form = SeparableForm::zero(sig);
    for j in 0..sig.multiplicity {
        for (r, &mask) in basis.masks().iter().enumerate() {
            let factors = (0..sig.dim)
                .map(|a| {
                    let inside = mask & (1 << a) != 0;
                    let pinned = match bc {
                        FaceCondition::Tangential => !inside,
                        FaceCondition::Normal => inside,
                    };
                    let freq = pi * rng.random_range(1..=2) as f64;
                    if pinned {
                        Factor::sin(freq)
                    } else {
                        Factor::Trig { freq, phase: rng.random_range(0.0..pi) }
                    }
                })
                .collect();
            let amplitude = rng.random_range(0.5..1.5);
            form = form.with_term(sig.index(j, r), SeparableTerm::new(amplitude, factors));
        }
    }
    form
}

/// `M(x)⁻¹ v(x)` with exact jets.
pub struct InverseApplied {
    pub matrix: Arc<dyn MatrixField>,
    pub form: Arc<dyn FormField>,
}

impl FormField for InverseApplied {
    fn signature(&self) -> Signature {
        self.form.signature()
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        inverse_jet(&self.matrix.jet(x)).apply(&self.form.jet(x), self.signature())
    }
}

/// Closed-form data for a known solution `ω*` of `𝔏ω = λBω + f`.
#[derive(Debug, Clone)]
pub struct ManufacturedData {
    pub exact: DiscreteForm,
    pub load: DiscreteForm,
    /// `d*(Bω*)` (tangential) or `A dω*` (normal); `None` when that degree is missing.
    pub natural: Option<DiscreteForm>,
}

impl ManufacturedData {
    pub fn sample(
        domain: Arc<GridDomain>,
        a: &dyn MatrixField,
        b: &dyn MatrixField,
        lambda: f64,
        bc: FaceCondition,
        omega: &dyn FormField,
    ) -> Self {
        let sig = omega.signature();
        let exact = DiscreteForm::from_fn(domain.clone(), sig, |x| omega.value(x));
        let load = DiscreteForm::from_fn(domain.clone(), sig, |x| {
            let l = hodge_operator_at(a, b, omega, x);
            let bw = b.jet(x).apply(&omega.jet(x), sig).value;
            l.iter().zip(bw).map(|(v, w)| v - lambda * w).collect()
        });
        let natural = match bc {
            FaceCondition::Tangential if sig.degree > 0 => {
                Some(DiscreteForm::from_fn(domain, sig.with_degree(sig.degree - 1), |x| {
                    b.jet(x).apply(&omega.jet(x), sig).codiff().value
                }))
            }
            FaceCondition::Normal if sig.degree < sig.dim => {
                let up = sig.with_degree(sig.degree + 1);
                Some(DiscreteForm::from_fn(domain, up, |x| a.jet(x).apply(&omega.jet(x).d(), up).value))
            }
            _ => None,
        };
        Self { exact, load, natural }
    }

    /// Essential values and natural data of the exact solution.
    pub fn boundary_data(&self) -> BoundaryData {
        BoundaryData { essential: Some(self.exact.clone()), natural: self.natural.clone() }
    }
}
