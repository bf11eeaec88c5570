//! Exterior-algebra identities, ellipticity constants and discrete calculus checks.

use std::sync::Arc;

use hodge_core::analytic::{Factor, FormField, SeparableForm, SeparableTerm};
use hodge_core::forms::{build_mn, build_mt, legendre_hadamard_constant, LhSearch};
use hodge_core::grid::{integration_by_parts_residual, Calculus};
use hodge_core::{DiscreteForm, FormSpace, GridDomain, HomOperator, KForm, Signature, Stencil};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::record::{observed_orders, Row};
use crate::VerifyError;

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn random_form(rng: &mut ChaCha8Rng, sig: Signature) -> KForm {
    KForm::from_coeffs(sig, (0..sig.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("length matches")
}

/// Worst scaled residual of each identity over one random case.
#[derive(Debug, Clone, Copy, Default)]
struct AlgebraResiduals {
    interior_identity: f64,
    double_star: f64,
    anticommutativity: f64,
    adjointness: f64,
}

impl AlgebraResiduals {
    fn max(self, o: Self) -> Self {
        Self {
            interior_identity: self.interior_identity.max(o.interior_identity),
            double_star: self.double_star.max(o.double_star),
            anticommutativity: self.anticommutativity.max(o.anticommutativity),
            adjointness: self.adjointness.max(o.adjointness),
        }
    }
}

/// One case with `n ∈ 2..=5`, `k ∈ 1..n`, `N ∈ 1..=3`, seeded by its index.
fn algebra_case(seed: u64, index: u64) -> Result<AlgebraResiduals, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.random_range(2..=5usize);
    let k = rng.random_range(1..n);
    let mult = rng.random_range(1..=3usize);
    let sig = Signature::new(n, k, mult);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = random_form(&mut rng, sig);
    let a2: f64 = a.iter().map(|x| x * x).sum();
    let one = KForm::from_vector(&a);
    let scale = |v: f64| v.max(f64::MIN_POSITIVE);

    // |a|²b = a⌟(a∧b) + a∧(a⌟b)
    let lhs = KForm::interior_vector(&a, &one.wedge(&b)?)?.add(&one.wedge(&KForm::interior_vector(&a, &b)?)?)?;
    let interior_identity = lhs.sub(&b.scale(a2))?.max_abs() / scale(a2 * b.max_abs());

    let double_star = b.hodge_star().hodge_star().sub(&b.scale(sign(k * (n - k))))?.max_abs() / scale(b.max_abs());

    let l = rng.random_range(1..=n - k);
    let c = random_form(&mut rng, Signature::new(n, l, 1));
    let bc = b.wedge(&c)?;
    let cb = c.wedge(&b)?.scale(sign(k * l));
    let anticommutativity = bc.sub(&cb)?.max_abs() / scale(b.max_abs() * c.max_abs());

    // ⟨ξ∧α, β⟩ = ⟨α, ξ⌟β⟩ with β of degree k+1
    let beta = random_form(&mut rng, sig.with_degree(k + 1));
    let left = one.wedge(&b)?.inner(&beta)?;
    let right = b.inner(&KForm::interior_vector(&a, &beta)?)?;
    let adjointness = (left - right).abs() / scale(a2.sqrt() * b.norm() * beta.norm());

    Ok(AlgebraResiduals { interior_identity, double_star, anticommutativity, adjointness })
}

fn check_algebra(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let worst = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| algebra_case(cfg.seed, i))
        .try_reduce(AlgebraResiduals::default, |a, b| Ok(a.max(b)))?;
    let tol = cfg.tolerances.algebra;
    let case = format!("{} random cases", cfg.samples);
    Ok(vec![
        Row::at_most("C1.interior_identity", case.as_str(), "max_scaled_residual", None, worst.interior_identity, tol),
        Row::at_most("C1.double_star_sign", case.as_str(), "max_scaled_residual", None, worst.double_star, tol),
        Row::at_most("C1.wedge_anticommutativity", case.as_str(), "max_scaled_residual", None, worst.anticommutativity, tol),
        Row::at_most("C1.wedge_interior_adjointness", case.as_str(), "max_scaled_residual", None, worst.adjointness, tol),
    ])
}

fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let r: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = (0..m).map(|t| r[i * m + t] * r[j * m + t]).sum::<f64>() + if i == j { 0.25 } else { 0.0 };
        }
    }
    g
}

fn check_ellipticity(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let search = LhSearch { directions: 200, forms_per_direction: 20, refine: 4, max_sweeps: 100, seed: cfg.seed };
    let shapes: Vec<(usize, usize, usize)> =
        (2..=4).flat_map(|n| (0..n).flat_map(move |k| (1..=2).map(move |m| (n, k, m)))).collect();
    let results: Vec<(f64, f64, f64)> = shapes
        .par_iter()
        .map(|&(n, k, m)| -> Result<(f64, f64, f64), VerifyError> {
            let sig = Signature::new(n, k, m);
            let up = sig.with_degree(k + 1);
            let id_a = HomOperator::identity(FormSpace::forms(up));
            let id_b = HomOperator::identity(FormSpace::forms(sig));
            let t = legendre_hadamard_constant(&build_mt(&id_a, &id_b)?, search)?.constant;
            let nn = legendre_hadamard_constant(&build_mn(&id_a, &id_b)?.operator, search)?.constant;
            let identity_dev = (t - 1.0).abs().max((nn - 1.0).abs());
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((n * 100 + k * 10 + m) as u64));
            let mut worst = f64::INFINITY;
            for _ in 0..4 {
                let a = HomOperator::on_forms(up, random_spd(&mut rng, up.len()))?;
                let b = HomOperator::on_forms(sig, random_spd(&mut rng, sig.len()))?;
                let ct = legendre_hadamard_constant(&build_mt(&a, &b)?, search)?.constant;
                let cn = legendre_hadamard_constant(&build_mn(&a, &b)?.operator, search)?.constant;
                worst = worst.min(ct).min(cn);
            }
            Ok((identity_dev, worst, 0.0))
        })
        .collect::<Result<_, _>>()?;
    let dev = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_random = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let case = "n=2..4, k=0..n-1, N=1..2";
    Ok(vec![
        Row::at_most("C2.identity_constant", case, "max_abs_deviation_from_one", None, dev, cfg.tolerances.legendre_hadamard),
        Row::at_least("C2.random_spd_positive", case, "min_constant", None, min_random, f64::MIN_POSITIVE),
    ])
}

fn smooth_field(d: &Arc<GridDomain>, sig: Signature, seed: u64) -> DiscreteForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut form = SeparableForm::zero(sig);
    for c in 0..sig.len() {
        let factors = (0..sig.dim)
            .map(|_| Factor::Trig { freq: rng.random_range(0.5..3.0), phase: rng.random_range(0.0..3.0) })
            .collect();
        form = form.with_term(c, SeparableTerm::new(rng.random_range(0.5..1.5), factors));
    }
    DiscreteForm::from_fn(d.clone(), sig, |x| form.value(x))
}

fn check_calculus(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let mut dd = 0.0f64;
    let mut cc = 0.0f64;
    let mut lap = 0.0f64;
    for n in 2..=3 {
        let nodes = if n == 2 { 17 } else { 9 };
        let d = Arc::new(GridDomain::unit_box(n, nodes)?);
        let h2 = d.h() * d.h();
        for stencil in [Stencil::SecondOrder, Stencil::Summation] {
            let calc = Calculus::new(d.clone(), stencil);
            let deep = d.interior_nodes(2);
            for k in 0..=n {
                let u = smooth_field(&d, Signature::new(n, k, 2), cfg.seed + k as u64);
                let scale = u.max_abs() / h2;
                if k + 2 <= n {
                    dd = dd.max(calc.d(&calc.d(&u)?)?.max_abs_on(&d.interior_nodes(1)) / scale);
                }
                if k >= 2 {
                    cc = cc.max(calc.codiff(&calc.codiff(&u)?)?.max_abs_on(&d.interior_nodes(1)) / scale);
                }
                let diff = calc.hodge_laplacian(&u)?.sub(&calc.componentwise_laplacian(&u)?)?;
                lap = lap.max(diff.max_abs_on(&deep) / scale);
            }
        }
    }
    let tol = cfg.tolerances.calculus;
    let mut rows = vec![
        Row::at_most("C3.d_squared", "n=2,3 interior", "max_scaled_residual", None, dd, tol),
        Row::at_most("C3.codiff_squared", "n=2,3 interior", "max_scaled_residual", None, cc, tol),
        Row::at_most("C3.hodge_equals_componentwise", "n=2,3 interior", "max_scaled_residual", None, lap, tol),
    ];

    let hs: Vec<f64> = cfg.ladder.clone();
    let residuals = hs
        .iter()
        .map(|&h| -> Result<f64, VerifyError> {
            let d = Arc::new(GridDomain::unit_box(2, ExperimentConfig::box_nodes(h))?);
            let alpha = DiscreteForm::from_fn(d.clone(), Signature::new(2, 1, 1), |x| vec![(x[0] + 2.0 * x[1]).sin(), x[0] * x[1].exp()]);
            let beta = DiscreteForm::from_fn(d.clone(), Signature::new(2, 2, 1), |x| vec![(1.5 * x[0]).cos() + x[1] * x[1]]);
            Ok(integration_by_parts_residual(&alpha, &beta)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (&h, &r) in hs.iter().zip(&residuals) {
        rows.push(Row::info("C3.ibp_order", "n=2 k=1", "ibp_residual", Some(h), r));
    }
    let min_order = observed_orders(&hs, &residuals).into_iter().fold(f64::INFINITY, f64::min);
    rows.push(Row::at_least("C3.ibp_order", "n=2 k=1", "min_observed_order", None, min_order, cfg.tolerances.ibp_order));
    Ok(rows)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let mut rows = check_algebra(cfg)?;
    rows.extend(check_ellipticity(cfg)?);
    rows.extend(check_calculus(cfg)?);
    Ok(rows)
}

/// Criterion 1 alone, for callers that time it separately.
pub fn algebra(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    check_algebra(cfg)
}

pub fn ellipticity(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    check_ellipticity(cfg)
}

pub fn calculus(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    check_calculus(cfg)
}
