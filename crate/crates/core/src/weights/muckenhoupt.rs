use std::path::PathBuf;

use super::lattice::{prefix_sums, BallFamily, FamilySpec, RectGrid};
use super::WeightError;

/// A positive grid function with its measured `A_p` constant.
#[derive(Debug, Clone)]
pub struct Weight {
    pub grid: RectGrid,
    pub values: Vec<f64>,
    pub p: f64,
    pub ap_constant: f64,
    /// `(centre, radius)` of every ball in the measuring family.
    pub ball_family: Vec<(Vec<f64>, f64)>,
}

impl Weight {
    pub fn measure(grid: RectGrid, values: Vec<f64>, p: f64, family: &BallFamily) -> Result<Self, WeightError> {
        check_positive(&values)?;
        let ap = ap_constant(&values, p, family)?;
        let ball_family = family.balls().iter().map(|b| (b.center.clone(), b.radius)).collect();
        Ok(Self { grid, values, p, ap_constant: ap, ball_family })
    }
}

fn check_positive(w: &[f64]) -> Result<(), WeightError> {
    match w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        Some(node) => Err(WeightError::NonPositive { node, value: w[node] }),
        None => Ok(()),
    }
}

/// `max_B (⨍_B w)(⨍_B w^{−1/(p−1)})^{p−1}` over the family, with node averages.
pub fn ap_constant(w: &[f64], p: f64, family: &BallFamily) -> Result<f64, WeightError> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(WeightError::Exponent(p));
    }
    check_positive(w)?;
    let dual: Vec<f64> = w.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let (pw, pd) = (prefix_sums(w), prefix_sums(&dual));
    let mut best = 1.0f64;
    for i in 0..family.len() {
        let v = family.mean_from_prefix(i, &pw) * family.mean_from_prefix(i, &pd).powf(p - 1.0);
        // discrete Jensen gives v ≥ 1 up to rounding
        debug_assert!(v >= 1.0 - 1e-10, "A_p product below one: {v}");
        best = best.max(v);
    }
    Ok(best)
}

/// `max_B (⨍_B w^{1+ε})^{1/(1+ε)} / ⨍_B w`.
pub fn reverse_holder_ratio(w: &[f64], eps: f64, family: &BallFamily) -> Result<f64, WeightError> {
    if !(eps > 0.0) {
        return Err(WeightError::Exponent(1.0 + eps));
    }
    check_positive(w)?;
    let high: Vec<f64> = w.iter().map(|v| v.powf(1.0 + eps)).collect();
    let (pw, ph) = (prefix_sums(w), prefix_sums(&high));
    Ok((0..family.len())
        .map(|i| family.mean_from_prefix(i, &ph).powf(1.0 / (1.0 + eps)) / family.mean_from_prefix(i, &pw))
        .fold(1.0, f64::max))
}

/// Even reflection of a function on the upper half grid `x_n ≥ 0`.
pub fn extend_function_reflection(half: &RectGrid, psi: &[f64]) -> Result<(RectGrid, Vec<f64>), WeightError> {
    if psi.len() != half.len() {
        return Err(WeightError::Length { expected: half.len(), found: psi.len() });
    }
    let full = half.mirrored()?;
    let n = full.dim();
    let m = half.shape()[n - 1];
    let values = (0..full.len())
        .map(|q| {
            let mut idx = full.multi_index(q);
            let t = idx[n - 1] as isize - (m as isize - 1);
            idx[n - 1] = t.unsigned_abs();
            psi[half.flat(&idx)]
        })
        .collect();
    Ok((full, values))
}

/// Even reflection of a weight, measured on the mirror-closed dyadic family of the full grid.
pub fn extend_weight_reflection(half: &RectGrid, w: &[f64], p: f64, spec: FamilySpec) -> Result<Weight, WeightError> {
    let (full, values) = extend_function_reflection(half, w)?;
    let family = BallFamily::dyadic(&full, spec);
    Weight::measure(full, values, p, &family)
}

/// Balls of the full-grid family with centres in `x_n ≥ 0`, intersected with the upper half.
pub fn half_family(full: &RectGrid, spec: FamilySpec) -> Result<BallFamily, WeightError> {
    let (_, zero) = full.upper_half()?;
    let n = full.dim();
    let mut clip: Vec<(usize, usize)> = full.shape().iter().map(|&m| (0, m - 1)).collect();
    clip[n - 1].0 = zero;
    Ok(BallFamily::dyadic_filtered(full, spec, |x| x[n - 1] >= -1e-12, Some(&clip)))
}

/// Restricts full-grid node values to the upper half, in the half grid's node order.
pub fn restrict_to_upper(full: &RectGrid, values: &[f64]) -> Result<(RectGrid, Vec<f64>), WeightError> {
    let (half, zero) = full.upper_half()?;
    let n = full.dim();
    let out = (0..half.len())
        .map(|q| {
            let mut idx = half.multi_index(q);
            idx[n - 1] += zero;
            values[full.flat(&idx)]
        })
        .collect();
    Ok((half, out))
}

/// Reflection comparison on one grid: `[w]` on the clipped upper-half family and `[w̃]` on the full family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionBound {
    pub half_constant: f64,
    pub reflected_constant: f64,
    /// `[w̃] / (2ᵖ[w])`
    pub ratio: f64,
}

pub fn reflection_bound(half: &RectGrid, w: &[f64], p: f64, spec: FamilySpec) -> Result<ReflectionBound, WeightError> {
    let reflected = extend_weight_reflection(half, w, p, spec)?;
    let fam = half_family(&reflected.grid, spec)?;
    let half_constant = ap_constant(&reflected.values, p, &fam)?;
    Ok(ReflectionBound {
        half_constant,
        reflected_constant: reflected.ap_constant,
        ratio: reflected.ap_constant / (2f64.powf(p) * half_constant),
    })
}

/// Worst mean-oscillation ratio `⨍_B|Ψ − Ψ_B| / ⨍_{B⁺}|ψ − ψ_{B⁺}|` over balls
/// of the full grid centred in the upper half.
pub fn reflection_oscillation_ratio(half: &RectGrid, psi: &[f64], spec: FamilySpec) -> Result<f64, WeightError> {
    let (full, big) = extend_function_reflection(half, psi)?;
    let n = full.dim();
    let centred = BallFamily::dyadic_filtered(&full, spec, |x| x[n - 1] >= -1e-12, None);
    let clipped = half_family(&full, spec)?;
    debug_assert_eq!(centred.len(), clipped.len());
    let mut worst = 1.0f64;
    for i in 0..centred.len() {
        let full_osc = oscillation(&big, centred.members(i));
        let half_osc = oscillation(&big, clipped.members(i));
        let scale = big.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        if half_osc <= 1e-14 * scale {
            if full_osc > 1e-12 * scale {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        worst = worst.max(full_osc / half_osc);
    }
    Ok(worst)
}

/// `⨍_S |f − f_S|` over the node set `S`.
pub(crate) fn oscillation(f: &[f64], nodes: impl Iterator<Item = usize> + Clone) -> f64 {
    let (sum, count) = nodes.clone().fold((0.0, 0usize), |(s, c), q| (s + f[q], c + 1));
    let mean = sum / count as f64;
    nodes.map(|q| (f[q] - mean).abs()).sum::<f64>() / count as f64
}

/// Power weight `|x − c|^α` averaged over each node's cell by tensor Gauss quadrature.
pub fn power_weight(grid: &RectGrid, alpha: f64, center: &[f64]) -> Vec<f64> {
    (0..grid.len()).map(|p| cell_power_average(&grid.coords(p), grid.spacing(), alpha, center)).collect()
}

fn cell_power_average(x: &[f64], h: &[f64], alpha: f64, center: &[f64]) -> f64 {
    // 4-point Gauss–Legendre on [−1/2, 1/2]
    const NODES: [f64; 4] = [-0.430_568_155_797_026_3, -0.169_990_521_792_428_1, 0.169_990_521_792_428_1, 0.430_568_155_797_026_3];
    const WTS: [f64; 4] = [0.173_927_422_568_726_9, 0.326_072_577_431_273_1, 0.326_072_577_431_273_1, 0.173_927_422_568_726_9];
    let n = x.len();
    let mut acc = 0.0;
    for q in 0..4usize.pow(n as u32) {
        let mut w = 1.0;
        let mut r2 = 0.0;
        let mut t = q;
        for a in 0..n {
            let g = t % 4;
            t /= 4;
            w *= WTS[g];
            r2 += (x[a] + NODES[g] * h[a] - center[a]).powi(2);
        }
        acc += w * r2.sqrt().powf(alpha);
    }
    acc
}

/// Weight specification loadable from configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { value: f64 },
    Power { alpha: f64, center: Vec<f64> },
    Product { factors: Vec<WeightSpec> },
    /// Whitespace-separated node values in grid order.
    GridFile { path: PathBuf },
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Constant { value } => format!("constant({value})"),
            Self::Power { alpha, .. } => format!("power({alpha})"),
            Self::Product { factors } => factors.iter().map(Self::label).collect::<Vec<_>>().join("*"),
            Self::GridFile { path } => format!("file({})", path.display()),
        }
    }

    /// Values at arbitrary points; power weights use cell averages over `spacing`.
    pub fn sample(&self, points: &[Vec<f64>], spacing: &[f64]) -> Result<Vec<f64>, WeightError> {
        let v = match self {
            Self::Constant { value } => vec![*value; points.len()],
            Self::Power { alpha, center } => points.iter().map(|x| cell_power_average(x, spacing, *alpha, center)).collect(),
            Self::Product { factors } => {
                let mut acc = vec![1.0; points.len()];
                for f in factors {
                    acc.iter_mut().zip(f.sample(points, spacing)?).for_each(|(a, b)| *a *= b);
                }
                acc
            }
            Self::GridFile { path } => {
                let text = std::fs::read_to_string(path)?;
                let vals = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| WeightError::Shape(format!("{}: {e}", path.display()))))
                    .collect::<Result<Vec<_>, _>>()?;
                if vals.len() != points.len() {
                    return Err(WeightError::Length { expected: points.len(), found: vals.len() });
                }
                vals
            }
        };
        check_positive(&v)?;
        Ok(v)
    }

    pub fn on_grid(&self, grid: &RectGrid) -> Result<Vec<f64>, WeightError> {
        let pts: Vec<Vec<f64>> = (0..grid.len()).map(|p| grid.coords(p)).collect();
        self.sample(&pts, grid.spacing())
    }
}

/// Result of the higher-exponent bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HigherPower {
    /// Smallest tested `q` with `[w]_{A_q} ≤ cap`.
    pub p0: f64,
    pub constant_at_p0: f64,
    pub cap: f64,
}

/// Bisects `q ∈ (1, p]` for the smallest exponent whose measured `A_q`
/// constant stays below `cap_factor · [w]_{A_p}`.
pub fn higher_power_exponent(w: &[f64], p: f64, family: &BallFamily, cap_factor: f64, steps: usize) -> Result<HigherPower, WeightError> {
    let base = ap_constant(w, p, family)?;
    let cap = cap_factor * base;
    let (mut lo, mut hi) = (1.0 + 1e-6, p);
    let mut at_hi = base;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let c = ap_constant(w, mid, family)?;
        if c.is_finite() && c <= cap {
            hi = mid;
            at_hi = c;
        } else {
            lo = mid;
        }
    }
    Ok(HigherPower { p0: hi, constant_at_p0: at_hi, cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(g: &RectGrid) -> BallFamily {
        BallFamily::dyadic(g, FamilySpec::default())
    }

    #[test]
    fn constant_weights_are_one() {
        let g = RectGrid::interval(65).unwrap();
        let f = fam(&g);
        assert_eq!(ap_constant(&vec![1.0; g.len()], 2.0, &f).unwrap(), 1.0);
        let c = ap_constant(&vec![3.7; g.len()], 2.0, &f).unwrap();
        assert!((c - 1.0).abs() < 1e-14);
        assert_eq!(reverse_holder_ratio(&vec![1.0; g.len()], 0.1, &f).unwrap(), 1.0);
        assert!((reverse_holder_ratio(&vec![2.0; g.len()], 0.1, &f).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p_at_most_one_rejected() {
        let g = RectGrid::interval(9).unwrap();
        assert!(matches!(ap_constant(&[1.0; 9], 1.0, &fam(&g)), Err(WeightError::Exponent(_))));
    }

    #[test]
    fn power_weight_constants() {
        let g = RectGrid::interval(257).unwrap();
        let f = fam(&g);
        let good = ap_constant(&power_weight(&g, 0.5, &[0.0]), 2.0, &f).unwrap();
        assert!(good > 1.0 && good < 3.0);
        // −3/2 is outside A_2 on the line: the constant grows with resolution
        let coarse = ap_constant(&power_weight(&g, -1.5, &[0.0]), 2.0, &f).unwrap();
        let g2 = RectGrid::interval(1025).unwrap();
        let fine = ap_constant(&power_weight(&g2, -1.5, &[0.0]), 2.0, &fam(&g2)).unwrap();
        assert!(fine > 1.5 * coarse);
    }

    #[test]
    fn reflection_of_function_is_even() {
        let half = RectGrid::new(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let psi: Vec<f64> = (0..half.len()).map(|p| half.coords(p)[1]).collect();
        let (full, big) = extend_function_reflection(&half, &psi).unwrap();
        for q in 0..full.len() {
            assert!((big[q] - full.coords(q)[1].abs()).abs() < 1e-14);
        }
    }
}
