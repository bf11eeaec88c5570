//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use hodge_core::weights::RectGrid;
use hodge_core::{CoefficientField, DiscreteForm, GridDomain, KForm, Signature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_form(sig: Signature, seed: u64) -> KForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..sig.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    KForm::from_coeffs(sig, coeffs).expect("length matches the signature")
}

/// Unit box with `nodes` per axis.
pub fn unit_box(dim: usize, nodes: usize) -> Arc<GridDomain> {
    Arc::new(GridDomain::unit_box(dim, nodes).expect("valid box"))
}

/// `A = I` on `k+1`-forms and a diagonally dominant constant `B` on `k`-forms.
pub fn coefficients(domain: &Arc<GridDomain>, sig: Signature) -> (CoefficientField, CoefficientField) {
    let a = CoefficientField::identity(domain.clone(), sig.with_degree(sig.degree + 1));
    let l = sig.len();
    let mut m = vec![0.1; l * l];
    (0..l).for_each(|i| m[i * l + i] = 1.5);
    let b = CoefficientField::constant(domain.clone(), sig, &m).expect("square matrix");
    (a, b)
}

pub fn smooth_load(domain: &Arc<GridDomain>, sig: Signature) -> DiscreteForm {
    DiscreteForm::from_fn(domain.clone(), sig, |x| {
        (0..sig.len()).map(|c| (2.0 * x[0] + c as f64).sin() * (x[1] + 0.5).cos()).collect()
    })
}

/// Square `[0, 1]²` lattice with trigonometric samples.
pub fn trig_samples(nodes: usize) -> (RectGrid, Vec<f64>) {
    let grid = RectGrid::new(&[0.0, 0.0], &[1.0, 1.0], &[nodes, nodes]).expect("valid grid");
    let f = (0..grid.len()).map(|q| {
        let x = grid.coords(q);
        (3.0 * x[0]).sin() + (5.0 * x[1] + 0.2).cos()
    });
    let f = f.collect();
    (grid, f)
}
