use super::WeightError;

/// Full rectangular lattice `Π_a [lower_a, upper_a]` with `shape[a]` nodes per axis.
///
/// Nodes are stored row-major with the last axis fastest, so ball slices
/// along the last axis are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct RectGrid {
    lower: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
}

impl RectGrid {
    pub fn new(lower: &[f64], upper: &[f64], shape: &[usize]) -> Result<Self, WeightError> {
        if lower.len() != upper.len() || lower.len() != shape.len() || lower.is_empty() {
            return Err(WeightError::Shape("lower, upper and shape must share one nonzero length".into()));
        }
        if shape.iter().any(|&m| m < 2) || lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
            return Err(WeightError::Shape("each axis needs two nodes and positive extent".into()));
        }
        let spacing = (0..shape.len()).map(|a| (upper[a] - lower[a]) / (shape[a] - 1) as f64).collect();
        Ok(Self { lower: lower.to_vec(), spacing, shape: shape.to_vec() })
    }

    /// `[−1, 1]` with `nodes` nodes.
    pub fn interval(nodes: usize) -> Result<Self, WeightError> {
        Self::new(&[-1.0], &[1.0], &[nodes])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.lower[a] + self.spacing[a] * (self.shape[a] - 1) as f64).collect()
    }

    pub fn h(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut r = node;
        for a in (0..self.dim()).rev() {
            idx[a] = r % self.shape[a];
            r /= self.shape[a];
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node).iter().enumerate().map(|(a, &i)| self.lower[a] + self.spacing[a] * i as f64).collect()
    }

    /// Volume of one cell `Π h_a`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Largest node distance.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| (self.spacing[a] * (self.shape[a] - 1) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Upper half `x_n ≥ 0` as its own grid, if the last axis straddles zero on a node.
    pub fn upper_half(&self) -> Result<(Self, usize), WeightError> {
        let n = self.dim();
        let t = -self.lower[n - 1] / self.spacing[n - 1];
        let zero = t.round() as usize;
        if (t - t.round()).abs() > 1e-9 || zero + 1 >= self.shape[n - 1] {
            return Err(WeightError::Shape("last axis has no node on x_n = 0".into()));
        }
        let mut lower = self.lower.clone();
        lower[n - 1] = 0.0;
        let mut shape = self.shape.clone();
        shape[n - 1] -= zero;
        let upper: Vec<f64> = (0..n).map(|a| lower[a] + self.spacing[a] * (shape[a] - 1) as f64).collect();
        Ok((Self::new(&lower, &upper, &shape)?, zero))
    }

    /// Grid mirrored across `x_n = 0`; requires `lower_n = 0`.
    pub fn mirrored(&self) -> Result<Self, WeightError> {
        let n = self.dim();
        if self.lower[n - 1].abs() > 1e-12 {
            return Err(WeightError::Shape("mirroring needs the last axis to start at 0".into()));
        }
        let upper = self.upper();
        let mut lower = self.lower.clone();
        lower[n - 1] = -upper[n - 1];
        let mut shape = self.shape.clone();
        shape[n - 1] = 2 * self.shape[n - 1] - 1;
        Self::new(&lower, &upper, &shape)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Contiguous run of flat node indices `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

/// Discrete balls stored as node segments along the last axis.
#[derive(Debug, Clone)]
pub struct BallFamily {
    balls: Vec<Ball>,
    segments: Vec<Vec<Segment>>,
    counts: Vec<usize>,
}

/// Construction parameters for dyadic ball families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    /// Smallest radius in cells.
    pub min_radius_cells: f64,
    /// Centres on every `center_stride`-th node per axis.
    pub center_stride: usize,
    /// Largest radius; `None` means the grid diameter.
    pub max_radius: Option<f64>,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { min_radius_cells: 1.5, center_stride: 2, max_radius: None }
    }
}

impl BallFamily {
    /// Dyadic radii `r₀·2ʲ` and centres on a sublattice of `grid`.
    pub fn dyadic(grid: &RectGrid, spec: FamilySpec) -> Self {
        Self::dyadic_filtered(grid, spec, |_| true, None)
    }

    /// [`dyadic`](Self::dyadic) keeping centres accepted by `keep`, each ball
    /// clipped to the index box `clip` (per-axis inclusive index ranges).
    pub fn dyadic_filtered(
        grid: &RectGrid,
        spec: FamilySpec,
        keep: impl Fn(&[f64]) -> bool,
        clip: Option<&[(usize, usize)]>,
    ) -> Self {
        let r0 = spec.min_radius_cells * grid.h();
        let rmax = spec.max_radius.unwrap_or_else(|| grid.diameter());
        let mut radii = Vec::new();
        let mut r = r0;
        while r <= rmax * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        let stride = spec.center_stride.max(1);
        let centers: Vec<usize> = (0..grid.len())
            .filter(|&p| grid.multi_index(p).iter().all(|i| i % stride == 0))
            .filter(|&p| keep(&grid.coords(p)))
            .collect();
        let mut balls = Vec::with_capacity(centers.len() * radii.len());
        for &rad in &radii {
            for &c in &centers {
                balls.push(Ball { center: grid.coords(c), radius: rad });
            }
        }
        Self::from_balls(grid, balls, clip)
    }

    pub fn from_balls(grid: &RectGrid, balls: Vec<Ball>, clip: Option<&[(usize, usize)]>) -> Self {
        let segments: Vec<Vec<Segment>> = balls.iter().map(|b| ball_segments(grid, b, clip)).collect();
        let counts = segments.iter().map(|s| s.iter().map(|g| g.len).sum()).collect();
        let mut fam = Self { balls, segments, counts };
        fam.drop_empty();
        fam
    }

    fn drop_empty(&mut self) {
        let keep: Vec<bool> = self.counts.iter().map(|&c| c > 0).collect();
        let mut i = 0;
        self.balls.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.segments.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        self.counts.retain(|&c| c > 0);
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn segments(&self, i: usize) -> &[Segment] {
        &self.segments[i]
    }

    pub fn count(&self, i: usize) -> usize {
        self.counts[i]
    }

    pub fn members(&self, i: usize) -> impl Iterator<Item = usize> + Clone + '_ {
        self.segments[i].iter().flat_map(|s| s.start..s.start + s.len)
    }

    /// Subfamily of balls with radius at most `rho`.
    pub fn truncated(&self, rho: f64) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.balls[i].radius <= rho * (1.0 + 1e-12)).collect();
        Self {
            balls: idx.iter().map(|&i| self.balls[i].clone()).collect(),
            segments: idx.iter().map(|&i| self.segments[i].clone()).collect(),
            counts: idx.iter().map(|&i| self.counts[i]).collect(),
        }
    }

    /// Node-average of `f` over ball `i` given the flat prefix sums of `f`.
    pub fn mean_from_prefix(&self, i: usize, prefix: &[f64]) -> f64 {
        let s: f64 = self.segments[i].iter().map(|g| prefix[g.start + g.len] - prefix[g.start]).sum();
        s / self.counts[i] as f64
    }
}

pub fn prefix_sums(f: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(f.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for &v in f {
        acc += v;
        p.push(acc);
    }
    p
}

fn ball_segments(grid: &RectGrid, ball: &Ball, clip: Option<&[(usize, usize)]>) -> Vec<Segment> {
    let n = grid.dim();
    let h = grid.spacing();
    let lo = grid.lower();
    let r = ball.radius * (1.0 + 1e-12);
    let range = |a: usize, c: f64, half: f64| -> Option<(usize, usize)> {
        let a_lo = ((c - half - lo[a]) / h[a]).ceil().max(0.0);
        let a_hi = ((c + half - lo[a]) / h[a] + 1e-12).floor().min((grid.shape()[a] - 1) as f64);
        let (mut i0, mut i1) = (a_lo as isize, a_hi as isize);
        if let Some(cl) = clip {
            i0 = i0.max(cl[a].0 as isize);
            i1 = i1.min(cl[a].1 as isize);
        }
        (i0 <= i1).then_some((i0 as usize, i1 as usize))
    };
    let mut out = Vec::new();
    let outer: Vec<Option<(usize, usize)>> = (0..n - 1).map(|a| range(a, ball.center[a], r)).collect();
    if outer.iter().any(Option::is_none) {
        return out;
    }
    let outer: Vec<(usize, usize)> = outer.into_iter().map(Option::unwrap).collect();
    let mut idx: Vec<usize> = outer.iter().map(|r| r.0).collect();
    loop {
        let d2: f64 = (0..n - 1).map(|a| (lo[a] + h[a] * idx[a] as f64 - ball.center[a]).powi(2)).sum();
        if d2 <= r * r {
            let half = (r * r - d2).sqrt();
            if let Some((i0, i1)) = range(n - 1, ball.center[n - 1], half) {
                let mut full = idx.clone();
                full.push(i0);
                out.push(Segment { start: grid.flat(&full), len: i1 - i0 + 1 });
            }
        }
        // odometer over the outer axes
        let mut a = n - 1;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if idx[a] < outer[a].1 {
                idx[a] += 1;
                for b in a + 1..n - 1 {
                    idx[b] = outer[b].0;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_match_brute_force() {
        let g = RectGrid::new(&[-1.0, 0.0], &[1.0, 1.0], &[21, 11]).unwrap();
        let fam = BallFamily::dyadic(&g, FamilySpec::default());
        for i in (0..fam.len()).step_by(7) {
            let b = &fam.balls()[i];
            let mut brute: Vec<usize> = (0..g.len())
                .filter(|&p| {
                    let x = g.coords(p);
                    x.iter().zip(&b.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() <= b.radius * (1.0 + 1e-12)
                })
                .collect();
            let mut got: Vec<usize> = fam.members(i).collect();
            brute.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, brute);
        }
    }

    #[test]
    fn smallest_balls_have_two_nodes_per_axis() {
        let g = RectGrid::new(&[0.0, 0.0], &[1.0, 1.0], &[17, 17]).unwrap();
        let fam = BallFamily::dyadic(&g, FamilySpec::default());
        assert!((0..fam.len()).all(|i| fam.count(i) >= 3));
    }

    #[test]
    fn mirror_and_half() {
        let g = RectGrid::new(&[0.0, 0.0], &[1.0, 0.5], &[5, 3]).unwrap();
        let m = g.mirrored().unwrap();
        assert_eq!(m.shape(), &[5, 5]);
        let (half, zero) = m.upper_half().unwrap();
        assert_eq!(zero, 2);
        assert_eq!(half, g);
    }
}
