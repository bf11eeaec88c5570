//! Muckenhoupt constants, reflections and maximal operators over a weight family.

use hodge_core::weights::{
    ap_constant, default_k0, fefferman_stein_ratio, maximal_ratio, power_weight, reflection_bound,
    reflection_oscillation_ratio, BallFamily, FamilySpec, MaximalProfile, RectGrid, WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{DomainSpec, ExperimentConfig};
use crate::record::{relative_spread, Row};
use crate::VerifyError;

/// Random functions for the maximal-ratio supremum.
const MAXIMAL_SAMPLES: usize = 20;
/// Power exponents just inside and beyond the `A_p` range `α < n(p−1)` for `p = 2, n = 2`.
const BRACKET: [f64; 2] = [1.5, 3.0];
/// Smallest growth of the `A_p` constant over the ladder for an exponent outside the class.
const OUTSIDE_GROWTH: f64 = 2.0;

/// Upper half box of the config, discretized at `h`.
fn half_grid(cfg: &ExperimentConfig, h: f64) -> Result<RectGrid, VerifyError> {
    let n = cfg.degrees.dim;
    let (lower, upper) = match &cfg.domain {
        DomainSpec::Boxed { lower, upper } => (lower.clone(), upper.clone()),
        DomainSpec::UnitBox => (vec![0.0; n], vec![1.0; n]),
        other => return Err(VerifyError::Config(format!("weights suite needs a box domain, got {other:?}"))),
    };
    if lower[n - 1] != 0.0 {
        return Err(VerifyError::Config("weights suite needs the box to start at x_n = 0".into()));
    }
    let shape: Vec<usize> = lower.iter().zip(&upper).map(|(l, u)| ((u - l) / h).round() as usize + 1).collect();
    Ok(RectGrid::new(&lower, &upper, &shape)?)
}

/// Smooth function with seeded trigonometric coefficients, independent of the grid.
fn trig_sum(seed: u64, terms: usize, dim: usize) -> impl Fn(&[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, Vec<f64>, f64)> = (0..terms)
        .map(|_| (rng.random_range(-1.0..1.0), (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect(), rng.random_range(0.0..6.3)))
        .collect();
    move |x: &[f64]| modes.iter().map(|(c, k, ph)| c * (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph).sin()).sum()
}

fn sample(grid: &RectGrid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..grid.len()).map(|q| f(&grid.coords(q))).collect()
}

/// Measurements of one mesh width.
struct LadderPoint {
    rows: Vec<Row>,
    maximal_sup: f64,
    fefferman_stein: Vec<f64>,
    bracket: [f64; 2],
}

fn measure(cfg: &ExperimentConfig, h: f64) -> Result<LadderPoint, VerifyError> {
    let tol = &cfg.tolerances;
    let spec = FamilySpec::default();
    let grid = half_grid(cfg, h)?;
    let n = grid.dim();
    let family = BallFamily::dyadic(&grid, spec);
    let mut rows = Vec::new();
    let mut maximal = Vec::new();
    let mut fefferman_stein = Vec::new();

    for w_spec in &cfg.weights {
        let label = w_spec.label();
        let w = w_spec.on_grid(&grid)?;
        let ap = ap_constant(&w, cfg.p, &family)?;
        let refl = reflection_bound(&grid, &w, cfg.p, spec)?;
        let fs_center: Vec<f64> = (0..n).map(|a| if a + 1 == n { 0.5 } else { 0.0 }).collect();
        let rho = 0.25;
        let bump = sample(&grid, |x| {
            let r2 = x.iter().zip(&fs_center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (rho * rho);
            if r2 < 1.0 {
                (1.0 - r2).powi(3) * (1.0 + x[0])
            } else {
                0.0
            }
        });
        let fs = fefferman_stein_ratio(&grid, &bump, &w, cfg.p, &fs_center, rho, default_k0(n), &family)?;
        fefferman_stein.push(fs);
        if matches!(w_spec, WeightSpec::Constant { .. }) {
            rows.push(Row::at_most("C4.constant_weight_ap", label.as_str(), "abs_ap_minus_one", Some(h), (ap - 1.0).abs(), 1e-12));
            rows.push(Row::at_most(
                "C4.constant_weight_reflection",
                label.as_str(),
                "abs_reflected_ap_minus_one",
                Some(h),
                (refl.reflected_constant - 1.0).abs(),
                1e-12,
            ));
        } else {
            rows.push(Row::info("C4.ap_constant", label.as_str(), "ap_constant", Some(h), ap));
        }
        rows.push(Row::info("C4.reflection_bound", label.as_str(), "reflected_ap", Some(h), refl.reflected_constant));
        rows.push(Row::at_most(
            "C4.reflection_bound",
            label.as_str(),
            "reflected_over_2p_half",
            Some(h),
            refl.ratio,
            1.0 + tol.reflection_slack,
        ));
        rows.push(Row::info("C4.fefferman_stein", label.as_str(), "ratio", Some(h), fs));
    }

    // reflection oscillation over three test functions
    let upper = grid.upper();
    let indicator_cut = 0.5 * upper[n - 1];
    let tests: [(&str, Vec<f64>); 3] = [
        ("psi=x_n", sample(&grid, |x| x[n - 1])),
        ("psi=smooth", sample(&grid, trig_sum(cfg.seed ^ 0x05c1, 6, n))),
        ("psi=indicator", sample(&grid, |x| if x[n - 1] <= indicator_cut { 1.0 } else { 0.0 })),
    ];
    for (case, psi) in &tests {
        let r = reflection_oscillation_ratio(&grid, psi, spec)?;
        rows.push(Row::at_most("C4.reflection_oscillation", *case, "full_over_half_oscillation", Some(h), r, tol.oscillation));
    }

    // nodewise ordering |f| ≤ Mf, M♯_ρ ≤ M♯ ≤ 2M
    let mut ordering = 0.0f64;
    for (_, psi) in &tests {
        ordering = ordering.max(MaximalProfile::compute(&grid, psi, 0.25, &family)?.ordering_violation());
    }

    // L²_w boundedness of M for w = |x − x₀|^{1/2}
    let center: Vec<f64> = vec![0.0; n];
    let w_half = power_weight(&grid, 0.5, &center);
    for s in 0..MAXIMAL_SAMPLES {
        let f = sample(&grid, trig_sum(cfg.seed.wrapping_add(s as u64 + 1), 4, n));
        let prof = MaximalProfile::compute(&grid, &f, 0.25, &family)?;
        ordering = ordering.max(prof.ordering_violation());
        maximal.push(maximal_ratio(&grid, &f, &w_half, cfg.p, &family)?);
    }
    rows.push(Row::at_most("C4.maximal_ordering", "test functions", "max_violation", Some(h), ordering, tol.ordering));
    let sup = maximal.iter().copied().fold(0.0, f64::max);
    rows.push(Row::info("C4.maximal_boundedness", "power(0.5)", "sup_ratio", Some(h), sup));

    let bracket = [
        ap_constant(&power_weight(&grid, BRACKET[0], &center), cfg.p, &family)?,
        ap_constant(&power_weight(&grid, BRACKET[1], &center), cfg.p, &family)?,
    ];
    Ok(LadderPoint { rows, maximal_sup: sup, fefferman_stein, bracket })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Row>, VerifyError> {
    let points: Vec<LadderPoint> = cfg.ladder.par_iter().map(|&h| measure(cfg, h)).collect::<Result<_, _>>()?;
    let tol = cfg.tolerances.refinement_spread;
    let mut rows: Vec<Row> = points.iter().flat_map(|p| p.rows.iter().cloned()).collect();

    let sup: Vec<f64> = points.iter().map(|p| p.maximal_sup).collect();
    rows.push(Row::at_most("C4.maximal_boundedness", "power(0.5)", "refinement_spread", None, relative_spread(&sup), tol));
    for (i, alpha) in BRACKET.iter().enumerate() {
        let case = format!("power({alpha})");
        for (p, &h) in points.iter().zip(&cfg.ladder) {
            rows.push(Row::info("C4.membership_bracket", case.as_str(), "ap_constant", Some(h), p.bracket[i]));
        }
        let growth = points.last().expect("nonempty ladder").bracket[i] / points[0].bracket[i];
        rows.push(if i == 0 {
            Row::at_most("C4.membership_bracket", case, "ladder_growth", None, growth, 1.0 + tol)
        } else {
            Row::at_least("C4.membership_bracket", case, "ladder_growth", None, growth, OUTSIDE_GROWTH)
        });
    }
    for (i, w) in cfg.weights.iter().enumerate() {
        let fs: Vec<f64> = points.iter().map(|p| p.fefferman_stein[i]).collect();
        rows.push(Row::at_most("C4.fefferman_stein", w.label(), "refinement_spread", None, relative_spread(&fs), tol));
    }
    Ok(rows)
}
