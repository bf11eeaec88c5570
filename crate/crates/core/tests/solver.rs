use std::sync::Arc;

use hodge_core::analytic::{TrigCoefficient, TrigMode};
use hodge_core::solver::{
    adapted_trig_form, harmonic_fields, HodgeSystem, InverseApplied, ManufacturedData, SolveOptions,
};
use hodge_core::{CoefficientField, FaceCondition, GridDomain, Signature};

fn varying(space: Signature, amp: f64) -> TrigCoefficient {
    let l = space.len();
    let mut base = vec![0.0; l * l];
    (0..l).for_each(|i| base[i * l + i] = 1.5);
    let mut m = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            m[i * l + j] = if i == j { amp } else { 0.5 * amp };
        }
    }
    let wave = (0..space.dim).map(|a| 1.0 + a as f64).collect();
    TrigCoefficient { space, base, modes: vec![TrigMode { matrix: m, wave, phase: 0.3 }] }
}

fn l2_error(bc: FaceCondition, b_field: &TrigCoefficient, a_field: &TrigCoefficient, nodes: usize) -> f64 {
    let d = Arc::new(GridDomain::unit_box(2, nodes).unwrap());
    let sig = Signature::new(2, 1, 1);
    let v = Arc::new(adapted_trig_form(sig, bc, 7));
    let omega: Arc<dyn hodge_core::analytic::FormField> = match bc {
        FaceCondition::Tangential => v,
        FaceCondition::Normal => Arc::new(InverseApplied { matrix: Arc::new(b_field.clone()), form: v }),
    };
    let data = ManufacturedData::sample(d.clone(), a_field, b_field, 0.0, bc, omega.as_ref());
    let a = CoefficientField::from_field(d.clone(), a_field).unwrap();
    let b = CoefficientField::from_field(d.clone(), b_field).unwrap();
    let sys = HodgeSystem::assemble(&a, &b, 0.0, bc).unwrap();
    let rep = sys.solve_with(&data.load, &data.boundary_data(), &SolveOptions::default()).unwrap();
    assert!(rep.algebraic_residual <= 1e-10, "{}", rep.algebraic_residual);
    rep.solution.sub(&data.exact).unwrap().l2_norm()
}

#[test]
fn manufactured_convergence_is_second_order() {
    let sig = Signature::new(2, 1, 1);
    let a_field = varying(sig.with_degree(2), 0.3);
    let b_field = varying(sig, 0.2);
    for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
        let errs: Vec<f64> = [17, 33, 65].iter().map(|&m| l2_error(bc, &b_field, &a_field, m)).collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        eprintln!("{bc:?} {errs:?} {orders:?}");
        for o in orders {
            assert!((1.7..=2.3).contains(&o), "{bc:?} order {o}");
        }
    }
}

#[test]
fn identity_box_spectrum_matches_laplacian_family() {
    let d = Arc::new(GridDomain::unit_box(2, 33).unwrap());
    let sig = Signature::new(2, 1, 1);
    for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
        let a = CoefficientField::identity(d.clone(), sig.with_degree(2));
        let b = CoefficientField::identity(d.clone(), sig);
        let sys = HodgeSystem::assemble(&a, &b, 0.0, bc).unwrap();
        let spec = sys.spectrum(6).unwrap();
        eprintln!("{bc:?} {:?} iters {}", spec.eigenvalues, spec.iterations);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(spec.eigenvalues.iter().all(|&v| v >= -1e-8 * spec.scale));
        assert!(spec.eigenvalues[0] > 0.5 * pi2);
        assert!((spec.eigenvalues[0] - pi2).abs() < 0.02 * pi2);
    }
}

#[test]
fn normal_zero_forms_have_constant_harmonic_fields() {
    let d = Arc::new(GridDomain::unit_box(2, 17).unwrap());
    let h = harmonic_fields(d.clone(), Signature::new(2, 0, 2), FaceCondition::Normal).unwrap();
    assert_eq!(h.len(), 2);
    for field in &h {
        assert!((field.l2_norm() - 1.0).abs() < 1e-10);
        let v = field.values();
        let spread = (0..d.len()).map(|p| (v[2 * p] - v[0]).abs() + (v[2 * p + 1] - v[1]).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-6, "{spread}");
    }
    for k in 1..2 {
        for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
            assert!(harmonic_fields(d.clone(), Signature::new(2, k, 1), bc).unwrap().is_empty());
        }
    }
    let top = harmonic_fields(d, Signature::new(2, 2, 1), FaceCondition::Tangential).unwrap();
    assert_eq!(top.len(), 1);
}

mod chains {
    use std::sync::Arc;

    use hodge_core::analytic::{FormField, SeparableForm, SeparableTerm, Factor};
    use hodge_core::grid::{partial_matrix, Calculus};
    use hodge_core::solver::{
        adapted_trig_form, hodge_decompose, solve_div_curl, solve_maxwell, HodgeSystem, InverseApplied, MaxwellData,
    };
    use hodge_core::sparse::{CsrMatrix, Factorization};
    use hodge_core::{CoefficientField, DiscreteForm, FaceCondition, GridDomain, Signature, Stencil};

    fn coefficient(d: &Arc<GridDomain>, space: Signature, amp: f64) -> CoefficientField {
        CoefficientField::from_field(d.clone(), &super::varying(space, amp)).unwrap()
    }

    fn smooth(d: &Arc<GridDomain>, sig: Signature, seed: u64) -> DiscreteForm {
        let mut form = SeparableForm::zero(sig);
        for c in 0..sig.len() {
            let f = (0..sig.dim).map(|a| Factor::Trig { freq: 1.0 + ((seed as usize + a + c) % 3) as f64, phase: 0.2 * (a + c) as f64 + 0.1 }).collect();
            form = form.with_term(c, SeparableTerm::new(1.0, f));
        }
        DiscreteForm::from_fn(d.clone(), sig, |x| form.value(x))
    }

    #[test]
    fn tangential_one_forms_decouple_into_scalar_poisson() {
        let m = 33;
        let d = Arc::new(GridDomain::unit_box(2, m).unwrap());
        let sig = Signature::new(2, 1, 1);
        let f = DiscreteForm::from_fn(d.clone(), sig, |x| vec![(3.0 * x[0]).cos() * (2.0 * x[1] + 0.4).sin() + x[0], 0.0]);
        let sys = HodgeSystem::assemble(
            &CoefficientField::identity(d.clone(), sig.with_degree(2)),
            &CoefficientField::identity(d.clone(), sig),
            0.0,
            FaceCondition::Tangential,
        )
        .unwrap();
        let u = sys.solve(&f, None).unwrap().solution;

        // scalar oracle: Dirichlet in x₂, Neumann in x₁ with the x₁-face rows of ∂₁ left out
        let dx = partial_matrix(&d, 0, Stencil::Summation);
        let dy = partial_matrix(&d, 1, Stencil::Summation);
        let q = d.quadrature().to_vec();
        let qx: Vec<f64> = (0..d.len()).map(|p| if d.multi_index(p)[0].is_multiple_of(m - 1) { 0.0 } else { q[p] }).collect();
        let k = dy.transpose().scale_cols(&q).matmul(&dy).add(&dx.transpose().scale_cols(&qx).matmul(&dx));
        let free: Vec<usize> = (0..d.len()).filter(|&p| !d.multi_index(p)[1].is_multiple_of(m - 1)).collect();
        let rhs: Vec<f64> = free.iter().map(|&p| -q[p] * f.values()[2 * p]).collect();
        let kf: CsrMatrix = k.select(&free, &free);
        let x = Factorization::new(&kf, true).unwrap().solve(&rhs);
        let mut dev = 0.0f64;
        let mut scale = 0.0f64;
        for (i, &p) in free.iter().enumerate() {
            dev = dev.max((u.values()[2 * p] - x[i]).abs());
            scale = scale.max(x[i].abs());
        }
        let cross = (0..d.len()).map(|p| u.values()[2 * p + 1].abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-10 * scale, "{dev} vs {scale}");
        assert!(cross <= 1e-10 * scale, "{cross}");
    }

    #[test]
    fn decomposition_reassembles_with_orthogonal_pieces() {
        let d = Arc::new(GridDomain::unit_box(2, 25).unwrap());
        let sig = Signature::new(2, 1, 1);
        let f = smooth(&d, sig, 1);
        for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
            let a = CoefficientField::identity(d.clone(), sig.with_degree(2));
            let b = CoefficientField::identity(d.clone(), sig);
            let dec = hodge_decompose(&f, &a, &b, bc).unwrap();
            eprintln!("{bc:?} res {:.3e} bnd {:.3e} orth {:.3e}", dec.interior_residual, dec.boundary_residual, dec.orthogonality);
            assert!(dec.interior_residual <= 1e-8, "{bc:?}");
            assert!(dec.orthogonality <= 1e-10, "{bc:?}");
            let a = coefficient(&d, sig.with_degree(2), 0.3);
            let b = coefficient(&d, sig, 0.2);
            let dec = hodge_decompose(&f, &a, &b, bc).unwrap();
            eprintln!("{bc:?} varying res {:.3e} orth {:.3e}", dec.interior_residual, dec.orthogonality);
            assert!(dec.interior_residual <= 1e-8, "{bc:?}");
        }
    }

    #[test]
    fn exact_load_has_primitive_alpha_and_no_beta() {
        let d = Arc::new(GridDomain::unit_box(2, 25).unwrap());
        let sig0 = Signature::new(2, 0, 1);
        let phi = DiscreteForm::from_fn(d.clone(), sig0, |x| vec![(std::f64::consts::PI * x[0]).sin() * (2.0 * std::f64::consts::PI * x[1]).sin()]);
        let f = Calculus::new(d.clone(), Stencil::Summation).d(&phi).unwrap();
        let sig = sig0.with_degree(1);
        let dec = hodge_decompose(
            &f,
            &CoefficientField::identity(d.clone(), sig.with_degree(2)),
            &CoefficientField::identity(d.clone(), sig),
            FaceCondition::Tangential,
        )
        .unwrap();
        let beta = dec.beta.unwrap();
        assert!(beta.l2_norm() <= 1e-9 * f.l2_norm(), "{}", beta.l2_norm());
        let err = dec.alpha.unwrap().sub(&phi).unwrap().l2_norm();
        assert!(err <= 1e-9 * phi.l2_norm(), "{err}");
        assert!(dec.harmonic.l2_norm() == 0.0);
    }

    #[test]
    fn maxwell_chain_recovers_discrete_solution() {
        let d = Arc::new(GridDomain::unit_box(3, 9).unwrap());
        let sig = Signature::new(3, 2, 1);
        let a = coefficient(&d, sig.with_degree(3), 0.3);
        let b = coefficient(&d, sig, 0.2);
        let calc = Calculus::new(d.clone(), Stencil::Summation);
        let lambda = 1.0;
        let star = adapted_trig_form(sig, FaceCondition::Tangential, 3);
        let exact = DiscreteForm::from_fn(d.clone(), sig, |x| star.value(x));
        let bw = b.apply(&exact).unwrap();
        let f = calc.codiff(&a.apply(&calc.d(&exact).unwrap()).unwrap()).unwrap().axpy(-lambda, &bw).unwrap();
        let g = calc.codiff(&bw).unwrap();
        let sol = solve_maxwell(&a, &b, lambda, FaceCondition::Tangential, MaxwellData { f: &f, g: &g, omega0: None }, 1e-6).unwrap();
        let err = sol.omega.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
        eprintln!(
            "maxwell d*α {:.3e} d*Bβ {:.3e} eq {:.3e} con {:.3e} err {:.3e} compat {:?}",
            sol.codiff_alpha, sol.codiff_beta, sol.equation_residual, sol.constraint_residual, err, sol.compatibility
        );
        assert!(sol.codiff_alpha <= 1e-5);
        assert!(sol.equation_residual <= 1e-6 && sol.constraint_residual <= 1e-6);

        // inhomogeneous trace carried by ω₀
        let general = DiscreteForm::from_fn(d.clone(), sig, |x| vec![1.0 + x[0] * x[1], (x[2] - 0.3).sin(), x[0].cos() * x[1]]);
        let bw = b.apply(&general).unwrap();
        let f = calc.codiff(&a.apply(&calc.d(&general).unwrap()).unwrap()).unwrap().axpy(-lambda, &bw).unwrap();
        let g = calc.codiff(&bw).unwrap();
        let sol = solve_maxwell(&a, &b, lambda, FaceCondition::Tangential, MaxwellData { f: &f, g: &g, omega0: Some(&general) }, 1e-6).unwrap();
        let err = sol.omega.sub(&general).unwrap().l2_norm() / general.l2_norm();
        eprintln!("maxwell lifted d*α {:.3e} eq {:.3e} con {:.3e} err {:.3e}", sol.codiff_alpha, sol.equation_residual, sol.constraint_residual, err);
        assert!(sol.codiff_alpha <= 1e-5);
    }

    #[test]
    fn div_curl_chain_recovers_manufactured_field() {
        let d = Arc::new(GridDomain::unit_box(3, 9).unwrap());
        let sig = Signature::new(3, 1, 1);
        let calc = Calculus::new(d.clone(), Stencil::Summation);
        for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
            let a_field = super::varying(sig, 0.3);
            let b_field = super::varying(sig, 0.2);
            let a = CoefficientField::from_field(d.clone(), &a_field).unwrap();
            let b = CoefficientField::from_field(d.clone(), &b_field).unwrap();
            let v: Arc<dyn FormField> = Arc::new(adapted_trig_form(sig, bc, 5));
            let wrap = match bc {
                FaceCondition::Tangential => InverseApplied { matrix: Arc::new(a_field), form: v },
                FaceCondition::Normal => InverseApplied { matrix: Arc::new(b_field), form: v },
            };
            let exact = DiscreteForm::from_fn(d.clone(), sig, |x| wrap.value(x));
            let f = calc.d(&a.apply(&exact).unwrap()).unwrap();
            let g = calc.codiff(&b.apply(&exact).unwrap()).unwrap();
            let sol = solve_div_curl(&a, &b, bc, &f, &g, 1e-6).unwrap();
            let err = sol.omega.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
            eprintln!("{bc:?} curl {:.3e} div {:.3e} trace {:.3e} err {:.3e}", sol.curl_residual, sol.div_residual, sol.trace, err);
            assert!(sol.curl_residual <= 1e-6 && sol.div_residual <= 1e-6, "{bc:?}");
            assert!(err <= 1e-8, "{bc:?} {err}");
            assert!(sol.trace <= 1e-10, "{bc:?}");
        }
    }
}

mod structure {
    use std::sync::Arc;

    use hodge_core::grid::read_container;
    use hodge_core::solver::{adapted_trig_form, gaffney_ratio, write_report, HodgeSystem, ReportSidecar, SolverError};
    use hodge_core::analytic::FormField;
    use hodge_core::{CoefficientField, DiscreteForm, FaceCondition, GridDomain, Signature};

    fn system(m: usize, bc: FaceCondition, lambda: f64) -> HodgeSystem {
        let d = Arc::new(GridDomain::unit_box(2, m).unwrap());
        let sig = Signature::new(2, 1, 1);
        let a = CoefficientField::from_field(d.clone(), &super::varying(sig.with_degree(2), 0.3)).unwrap();
        let b = CoefficientField::from_field(d, &super::varying(sig, 0.2)).unwrap();
        HodgeSystem::assemble(&a, &b, lambda, bc).unwrap()
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
            let sys = system(13, bc, 0.0);
            let f = DiscreteForm::zeros(sys.domain().clone(), sys.signature());
            let rep = sys.solve(&f, None).unwrap();
            assert_eq!(rep.solution.max_abs(), 0.0);
            assert_eq!(rep.free_dofs + rep.pinned_dofs, 2 * sys.domain().len());
        }
    }

    #[test]
    fn pinned_dofs_match_face_pattern() {
        let m = 13;
        // one component pinned on two opposite sides: 2m nodes each
        let tangential = system(m, FaceCondition::Tangential, 0.0);
        let normal = system(m, FaceCondition::Normal, 0.0);
        assert_eq!(tangential.pinned_dofs().len(), 2 * 2 * m);
        assert_eq!(normal.pinned_dofs().len(), 2 * 2 * m);
        assert!(tangential.is_symmetric() && normal.is_symmetric());
        // the neighbouring scalar rows are dropped on the whole boundary ring
        for sys in [&tangential, &normal] {
            let dropped = sys.restricted_rows().unwrap().iter().filter(|&&p| p).count();
            assert_eq!(dropped, 4 * m - 4);
        }
    }

    #[test]
    fn positive_lambda_stays_solvable_below_first_eigenvalue() {
        let sys = system(17, FaceCondition::Tangential, 0.0);
        let mu = sys.spectrum(1).unwrap().eigenvalues[0];
        assert!(mu > 1.0);
        let shifted = system(17, FaceCondition::Tangential, 0.5 * mu);
        let f = DiscreteForm::from_fn(shifted.domain().clone(), shifted.signature(), |x| vec![x[0] + 1.0, x[1] * x[0]]);
        let rep = shifted.solve(&f, None).unwrap();
        assert!(rep.algebraic_residual <= 1e-10);
        assert!(rep.weak_residual <= 1e-8);
    }

    #[test]
    fn report_round_trips_through_container_and_sidecar() {
        let sys = system(9, FaceCondition::Normal, 0.0);
        let f = DiscreteForm::from_fn(sys.domain().clone(), sys.signature(), |x| vec![x[1].sin(), 1.0]);
        let rep = sys.solve(&f, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.hform");
        let side = write_report(&path, &sys, &rep).unwrap();
        let back = read_container(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(back.values(), rep.solution.values());
        let meta: ReportSidecar = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(meta.system.free_dofs, rep.free_dofs);
        assert_eq!(meta.system.bc, FaceCondition::Normal);
    }

    #[test]
    fn gaffney_ratio_is_bounded_for_admissible_fields() {
        let mut worst = 0.0f64;
        for m in [17, 33] {
            let d = Arc::new(GridDomain::unit_box(2, m).unwrap());
            for bc in [FaceCondition::Tangential, FaceCondition::Normal] {
                let sig = Signature::new(2, 1, 1);
                let u = adapted_trig_form(sig, bc, 11);
                let omega = DiscreteForm::from_fn(d.clone(), sig, |x| u.value(x));
                let id = CoefficientField::identity(d.clone(), sig);
                let m2 = gaffney_ratio(&omega, &id, &id, bc, 2.0, None, 1e-10).unwrap();
                assert!(m2.ratio.is_finite() && m2.ratio > 0.0);
                worst = worst.max(m2.ratio);
            }
        }
        assert!(worst < 10.0, "{worst}");
        let d = Arc::new(GridDomain::unit_box(2, 9).unwrap());
        let sig = Signature::new(2, 1, 1);
        let id = CoefficientField::identity(d.clone(), sig);
        let zero = DiscreteForm::zeros(d.clone(), sig);
        assert!(matches!(gaffney_ratio(&zero, &id, &id, FaceCondition::Tangential, 2.0, None, 1e-10), Err(SolverError::ZeroInput)));
        let bad = DiscreteForm::from_fn(d, sig, |_| vec![1.0, 1.0]);
        assert!(matches!(gaffney_ratio(&bad, &id, &id, FaceCondition::Tangential, 2.0, None, 1e-10), Err(SolverError::Trace { .. })));
    }
}
