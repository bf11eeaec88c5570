use super::lattice::{prefix_sums, BallFamily, RectGrid};
use super::WeightError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaximalKind {
    HardyLittlewood,
    Sharp,
    TruncatedSharp { rho: f64 },
}

/// Nodewise supremum over the balls of `family` that contain the node.
///
/// `HardyLittlewood` also includes `|f(x)|`, the limit of shrinking balls.
pub fn maximal(f: &[f64], kind: MaximalKind, family: &BallFamily) -> Vec<f64> {
    match kind {
        MaximalKind::HardyLittlewood => {
            let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
            let prefix = prefix_sums(&abs);
            let mut out = abs.clone();
            for i in 0..family.len() {
                let m = family.mean_from_prefix(i, &prefix);
                for q in family.members(i) {
                    if m > out[q] {
                        out[q] = m;
                    }
                }
            }
            out
        }
        MaximalKind::Sharp => sharp(f, family, f64::INFINITY),
        MaximalKind::TruncatedSharp { rho } => sharp(f, family, rho),
    }
}

fn sharp(f: &[f64], family: &BallFamily, rho: f64) -> Vec<f64> {
    let prefix = prefix_sums(f);
    let mut out = vec![0.0; f.len()];
    for i in 0..family.len() {
        if family.balls()[i].radius > rho * (1.0 + 1e-12) {
            continue;
        }
        let mean = family.mean_from_prefix(i, &prefix);
        let osc = family.members(i).map(|q| (f[q] - mean).abs()).sum::<f64>() / family.count(i) as f64;
        for q in family.members(i) {
            if osc > out[q] {
                out[q] = osc;
            }
        }
    }
    out
}

/// `Mf`, `M♯f` and `M♯_ρ f` over one shared family.
#[derive(Debug, Clone)]
pub struct MaximalProfile {
    pub input: Vec<f64>,
    pub hardy_littlewood: Vec<f64>,
    pub sharp: Vec<f64>,
    pub truncated: Vec<f64>,
    pub rho: f64,
    pub family_size: usize,
}

impl MaximalProfile {
    pub fn compute(grid: &RectGrid, f: &[f64], rho: f64, family: &BallFamily) -> Result<Self, WeightError> {
        if f.len() != grid.len() {
            return Err(WeightError::Length { expected: grid.len(), found: f.len() });
        }
        if !(rho > grid.h()) {
            return Err(WeightError::Radius(rho));
        }
        Ok(Self {
            input: f.to_vec(),
            hardy_littlewood: maximal(f, MaximalKind::HardyLittlewood, family),
            sharp: maximal(f, MaximalKind::Sharp, family),
            truncated: maximal(f, MaximalKind::TruncatedSharp { rho }, family),
            rho,
            family_size: family.len(),
        })
    }

    /// Largest violation of `|f| ≤ Mf`, `M♯_ρ f ≤ M♯f ≤ 2Mf`; zero when all hold.
    pub fn ordering_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for q in 0..self.input.len() {
            worst = worst
                .max(self.input[q].abs() - self.hardy_littlewood[q])
                .max(self.truncated[q] - self.sharp[q])
                .max(self.sharp[q] - 2.0 * self.hardy_littlewood[q]);
        }
        worst
    }
}

/// `(Σ Q |f|ᵖ w)^{1/p}` with uniform cell quadrature.
pub fn weighted_lp(grid: &RectGrid, f: &[f64], w: &[f64], p: f64, nodes: Option<&[usize]>) -> f64 {
    let vol = grid.cell_volume();
    let term = |q: usize| vol * w[q] * f[q].abs().powf(p);
    let s: f64 = match nodes {
        Some(ns) => ns.iter().map(|&q| term(q)).sum(),
        None => (0..f.len()).map(term).sum(),
    };
    s.powf(1.0 / p)
}

/// `‖Mf‖_{Lᵖ_w} / ‖f‖_{Lᵖ_w}`.
pub fn maximal_ratio(grid: &RectGrid, f: &[f64], w: &[f64], p: f64, family: &BallFamily) -> Result<f64, WeightError> {
    let denom = weighted_lp(grid, f, w, p, None);
    if denom == 0.0 {
        return Err(WeightError::ZeroFunction);
    }
    let m = maximal(f, MaximalKind::HardyLittlewood, family);
    Ok(weighted_lp(grid, &m, w, p, None) / denom)
}

/// `∫_{B_ρ}|f|ᵖ w / ∫_{B_{k₀ρ}} (M♯_{k₀ρ} f)ᵖ w` for `f` supported in `B_ρ(x₀)`.
pub fn fefferman_stein_ratio(
    grid: &RectGrid,
    f: &[f64],
    w: &[f64],
    p: f64,
    center: &[f64],
    rho: f64,
    k0: f64,
    family: &BallFamily,
) -> Result<f64, WeightError> {
    if !(p > 1.0) {
        return Err(WeightError::Exponent(p));
    }
    let dist = |q: usize| grid.coords(q).iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(WeightError::ZeroFunction);
    }
    if let Some(node) = (0..grid.len()).find(|&q| f[q] != 0.0 && dist(q) > rho * (1.0 + 1e-12)) {
        return Err(WeightError::Support { node });
    }
    let inner: Vec<usize> = (0..grid.len()).filter(|&q| dist(q) <= rho * (1.0 + 1e-12)).collect();
    let outer: Vec<usize> = (0..grid.len()).filter(|&q| dist(q) <= k0 * rho * (1.0 + 1e-12)).collect();
    let sharp = maximal(f, MaximalKind::TruncatedSharp { rho: k0 * rho }, family);
    let num = weighted_lp(grid, f, w, p, Some(&inner)).powf(p);
    let den = weighted_lp(grid, &sharp, w, p, Some(&outer)).powf(p);
    if den == 0.0 {
        return Err(WeightError::ZeroFunction);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::super::lattice::FamilySpec;
    use super::*;

    #[test]
    fn constants() {
        let g = RectGrid::interval(33).unwrap();
        let fam = BallFamily::dyadic(&g, FamilySpec::default());
        let prof = MaximalProfile::compute(&g, &vec![-2.5; 33], 0.3, &fam).unwrap();
        assert!(prof.hardy_littlewood.iter().all(|v| (v - 2.5).abs() < 1e-14));
        assert!(prof.sharp.iter().all(|v| v.abs() < 1e-14));
        assert!(prof.truncated.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn half_indicator_on_unit_interval() {
        let g = RectGrid::new(&[0.0], &[1.0], &[65]).unwrap();
        let f: Vec<f64> = (0..65).map(|q| if g.coords(q)[0] <= 0.5 { 1.0 } else { 0.0 }).collect();
        let fam = BallFamily::dyadic(&g, FamilySpec::default());
        let m = maximal(&f, MaximalKind::HardyLittlewood, &fam);
        assert!(m.iter().all(|&v| v >= 0.5 - 1e-12));
        let prof = MaximalProfile::compute(&g, &f, 0.1, &fam).unwrap();
        assert!(prof.ordering_violation() <= 0.0);
    }

    #[test]
    fn fefferman_stein_homogeneous() {
        let g = RectGrid::new(&[-1.0, -1.0], &[1.0, 1.0], &[33, 33]).unwrap();
        let fam = BallFamily::dyadic(&g, FamilySpec::default());
        let bump: Vec<f64> = (0..g.len())
            .map(|q| {
                let x = g.coords(q);
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 < 0.25 { (1.0 - 4.0 * r2).powi(2) } else { 0.0 }
            })
            .collect();
        let w = vec![1.0; g.len()];
        let r1 = fefferman_stein_ratio(&g, &bump, &w, 2.0, &[0.0, 0.0], 0.5, 2.0, &fam).unwrap();
        let twice: Vec<f64> = bump.iter().map(|v| 2.0 * v).collect();
        let r2 = fefferman_stein_ratio(&g, &twice, &w, 2.0, &[0.0, 0.0], 0.5, 2.0, &fam).unwrap();
        assert!(r1.is_finite() && r1 > 0.0);
        assert!((r1 - r2).abs() < 1e-12 * r1);
        assert!(matches!(
            fefferman_stein_ratio(&g, &w, &w, 2.0, &[0.0, 0.0], 0.5, 2.0, &fam),
            Err(WeightError::Support { .. })
        ));
    }
}
