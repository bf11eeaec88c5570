use std::sync::Arc;

use hodge_core::forms::binomial;
use hodge_core::grid::{hessian_normalize, integration_by_parts_residual, pullback, roundtrip_error, AffineMap, Calculus};
use hodge_core::weights::{ap_constant, maximal, BallFamily, FamilySpec, MaximalKind, RectGrid};
use hodge_core::{DiscreteForm, FaceCondition, GridDomain, KForm, Signature, Stencil};
use proptest::prelude::*;

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `(n, k, l)` with `k + l ≤ n`.
fn degrees() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=5).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, k)| (Just(n), Just(k), 0..=n - k))
}

fn close(a: &KForm, b: &KForm, tol: f64) -> bool {
    a.sub(b).unwrap().max_abs() <= tol * (1.0 + a.max_abs().max(b.max_abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wedge_is_graded_commutative((n, k, l) in degrees(), seed in any::<u64>()) {
        let (a, b) = sample_pair(n, k, l, 1, seed);
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(sign(k * l));
        prop_assert!(close(&ab, &ba, 1e-12));
    }

    #[test]
    fn wedge_is_associative(n in 1usize..=5, seed in any::<u64>()) {
        let k = (seed % (n as u64 + 1)) as usize;
        let l = ((seed / 7) % (n - k + 1) as u64) as usize;
        let m = ((seed / 49) % (n - k - l + 1) as u64) as usize;
        let (a, b) = sample_pair(n, k, l, 1, seed);
        let (c, _) = sample_pair(n, m, 0, 3, seed ^ 0x9e37);
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn star_squares_to_sign_and_pairs_with_wedge((n, k, _) in degrees(), mult in 1usize..=3, seed in any::<u64>()) {
        let (a, _) = sample_pair(n, k, 0, mult, seed);
        let twice = a.hodge_star().hodge_star();
        prop_assert!(close(&twice, &a.scale(sign(k * (n - k))), 1e-14));
        prop_assert!((a.hodge_star().norm() - a.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
        let (z, _) = sample_pair(n, n - k, 0, 1, seed ^ 0x55);
        let top = a.wedge(&z).unwrap();
        let star = a.hodge_star();
        let len = z.coeffs().len();
        for j in 0..mult {
            let comp: f64 = (0..len).map(|r| star.coeffs()[j * len + r] * z.coeffs()[r]).sum();
            prop_assert!((top.coeffs()[j] - comp).abs() <= 1e-12 * (1.0 + comp.abs()));
        }
    }

    #[test]
    fn wedge_and_interior_anticommute_to_norm((n, k, _) in degrees(), mult in 1usize..=3, v in prop::collection::vec(-2.0..2.0f64, 5), seed in any::<u64>()) {
        let a = &v[..n];
        let (xi, _) = sample_pair(n, k, 0, mult, seed);
        let one = KForm::from_vector(a);
        let wedge_first = KForm::interior_vector(a, &one.wedge_or_zero(&xi).unwrap()).unwrap();
        let interior_first = one.wedge_or_zero(&KForm::interior_vector(a, &xi).unwrap()).unwrap();
        let norm2: f64 = a.iter().map(|x| x * x).sum();
        let mut lhs = xi.scale(0.0);
        if k < n {
            lhs = lhs.add(&wedge_first).unwrap();
        }
        if k > 0 {
            lhs = lhs.add(&interior_first).unwrap();
        }
        prop_assert!(close(&lhs, &xi.scale(norm2), 1e-12));
    }

    #[test]
    fn discrete_d_squares_to_zero(n in 2usize..=3, k in 0usize..=1, mult in 1usize..=2, values in prop::collection::vec(-1.0..1.0f64, 2000), summation in any::<bool>()) {
        prop_assume!(k + 2 <= n);
        let d = Arc::new(GridDomain::unit_box(n, 6).unwrap());
        let sig = Signature::new(n, k, mult);
        let vals: Vec<f64> = values.iter().cycle().take(d.len() * sig.len()).copied().collect();
        let u = DiscreteForm::from_values(d.clone(), sig, vals).unwrap();
        let stencil = if summation { Stencil::Summation } else { Stencil::SecondOrder };
        let calc = Calculus::new(d.clone(), stencil);
        let dd = calc.d(&calc.d(&u).unwrap()).unwrap();
        prop_assert!(dd.max_abs() <= 1e-10 * u.max_abs() / (d.h() * d.h()));
        let sig2 = sig.with_degree(n);
        let vals: Vec<f64> = values.iter().rev().cycle().take(d.len() * sig2.len()).copied().collect();
        let w = DiscreteForm::from_values(d.clone(), sig2, vals).unwrap();
        let cc = calc.codiff(&calc.codiff(&w).unwrap()).unwrap();
        prop_assert!(cc.max_abs() <= 1e-10 * w.max_abs() / (d.h() * d.h()));
    }

    #[test]
    fn hodge_laplacian_is_componentwise_in_the_interior(n in 2usize..=3, k in 0usize..=2, values in prop::collection::vec(-1.0..1.0f64, 3000)) {
        prop_assume!(k <= n);
        let d = Arc::new(GridDomain::unit_box(n, 7).unwrap());
        let sig = Signature::new(n, k, 1);
        let vals: Vec<f64> = values.iter().cycle().take(d.len() * sig.len()).copied().collect();
        let u = DiscreteForm::from_values(d.clone(), sig, vals).unwrap();
        for stencil in [Stencil::SecondOrder, Stencil::Summation] {
            let calc = Calculus::new(d.clone(), stencil);
            let diff = calc.hodge_laplacian(&u).unwrap().sub(&calc.componentwise_laplacian(&u).unwrap()).unwrap();
            let nodes = d.interior_nodes(2);
            prop_assert!(diff.max_abs_on(&nodes) <= 1e-10 * u.max_abs() / (d.h() * d.h()));
        }
    }

    #[test]
    fn affine_pullback_scales_constant_forms(n in 2usize..=3, k in 0usize..=2, s in 0.4..1.0f64, c in prop::collection::vec(-1.0..1.0f64, 3)) {
        prop_assume!(k <= n);
        let d = Arc::new(GridDomain::unit_box(n, 5).unwrap());
        let sig = Signature::new(n, k, 1);
        let coeffs: Vec<f64> = c.iter().cycle().take(binomial(n, k)).copied().collect();
        let u = DiscreteForm::from_fn(d.clone(), sig, |_| coeffs.clone());
        let phi = AffineMap::scaling(n, s);
        let pulled = pullback(&phi, &u, d.clone()).unwrap();
        let expected = u.scale(s.powi(k as i32));
        prop_assert!(pulled.sub(&expected).unwrap().max_abs() <= 1e-12);
        let samples: Vec<Vec<f64>> = (0..d.len()).step_by(7).map(|p| d.coords(p)).collect();
        prop_assert!(roundtrip_error(&AffineMap::plane_rotation(n, s), &samples) <= 1e-12);
    }

    #[test]
    fn ap_constant_is_scale_invariant_and_at_least_one(values in prop::collection::vec(0.05..5.0f64, 33), scale in 0.1..10.0f64, p in 1.2..4.0f64) {
        let grid = RectGrid::interval(33).unwrap();
        let family = BallFamily::dyadic(&grid, FamilySpec::default());
        let a = ap_constant(&values, p, &family).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let b = ap_constant(&scaled, p, &family).unwrap();
        prop_assert!(a >= 1.0 - 1e-12);
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn hardy_littlewood_dominates_and_is_monotone(f in prop::collection::vec(-3.0..3.0f64, 33), bump in prop::collection::vec(0.0..1.0f64, 33)) {
        let grid = RectGrid::interval(33).unwrap();
        let family = BallFamily::dyadic(&grid, FamilySpec::default());
        let mf = maximal(&f, MaximalKind::HardyLittlewood, &family);
        let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a.abs() + b).collect();
        let mg = maximal(&g, MaximalKind::HardyLittlewood, &family);
        for i in 0..33 {
            prop_assert!(mf[i] >= f[i].abs() - 1e-12);
            prop_assert!(mg[i] >= mf[i] - 1e-12);
        }
    }
}

fn sample_pair(n: usize, k: usize, l: usize, mult: usize, seed: u64) -> (KForm, KForm) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |sig: Signature| KForm::from_coeffs(sig, (0..sig.len()).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let a = draw(Signature::new(n, k, mult));
    let b = draw(Signature::new(n, l, 1));
    (a, b)
}

#[test]
fn integration_by_parts_converges_at_second_order() {
    let mut residuals = Vec::new();
    for m in [17, 33, 65] {
        let d = Arc::new(GridDomain::unit_box(2, m).unwrap());
        let alpha = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 1), |x| vec![(x[0] + 2.0 * x[1]).sin(), x[0] * x[1].exp()]);
        let beta = DiscreteForm::from_fn(d.clone(), Signature::new(2, 2, 1), |x| vec![(1.5 * x[0]).cos() + x[1] * x[1]]);
        residuals.push(integration_by_parts_residual(&alpha, &beta).unwrap());
    }
    for w in residuals.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "{residuals:?}");
    }
}

#[test]
fn hessian_normalization_is_idempotent_and_keeps_the_hessian() {
    let d = Arc::new(GridDomain::half_ball(2, 1.0, 24).unwrap());
    let u = DiscreteForm::from_fn(d, Signature::new(2, 1, 1), |x| vec![x[0] * x[1] + 2.0 + x[1], (x[0] - 0.2).powi(2) + x[0]]);
    for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
        let once = hessian_normalize(&u, 0.7, bc, 2.0).unwrap();
        assert!(once.hessian_deviation <= 1e-9, "{}", once.hessian_deviation);
        let twice = hessian_normalize(&once.normalized, 0.7, bc, 2.0).unwrap();
        let drift = twice.normalized.sub(&once.normalized).unwrap().max_abs();
        assert!(drift <= 1e-10, "{bc:?} {drift}");
        assert!(once.poincare_ratio.is_some());
    }
}

#[test]
fn wedge_rejects_degree_overflow() {
    let a = KForm::basis_element(2, &[0]).unwrap();
    let b = KForm::basis_element(2, &[0, 1]).unwrap();
    assert!(a.wedge(&b).is_err());
    assert!(a.wedge_or_zero(&b).unwrap().coeffs().is_empty());
}
