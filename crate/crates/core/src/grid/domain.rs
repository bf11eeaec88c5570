use serde::{Deserialize, Serialize};

use super::GridError;

/// Geometry carried by a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// Axis-aligned box covering the whole node lattice.
    Box,
    /// `{|x − c| ≤ r, x_n ≥ c_n}`, flat face on the lattice plane `x_n = c_n`.
    HalfBall { radius: f64, center: Vec<f64> },
    /// `{|x − c| ≤ r}`.
    Ball { radius: f64, center: Vec<f64> },
}

/// Which part of the boundary a facet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FacetKind {
    BoxFace { axis: usize, upper: bool },
    /// The flat face `Γ` of a half-ball.
    Flat,
    /// Curved part of a ball or half-ball.
    Curved,
}

/// One boundary contribution at a node: outward unit normal and quadrature weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFacet {
    pub node: usize,
    pub kind: FacetKind,
    pub normal: Vec<f64>,
    /// `(n−1)`-dimensional measure attributed to this node.
    pub weight: f64,
}

impl BoundaryFacet {
    /// Axis of an axis-aligned normal, if any.
    pub fn normal_axis(&self) -> Option<usize> {
        match self.kind {
            FacetKind::BoxFace { axis, .. } => Some(axis),
            FacetKind::Flat => Some(self.normal.len() - 1),
            FacetKind::Curved => None,
        }
    }
}

/// Selects a subset of boundary facets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySelector {
    All,
    BoxFace { axis: usize, upper: bool },
    Flat,
    Curved,
}

impl BoundarySelector {
    pub fn matches(&self, kind: FacetKind) -> bool {
        match (self, kind) {
            (Self::All, _) => true,
            (Self::Flat, FacetKind::Flat) | (Self::Curved, FacetKind::Curved) => true,
            (Self::BoxFace { axis, upper }, FacetKind::BoxFace { axis: a, upper: u }) => *axis == a && *upper == u,
            _ => false,
        }
    }
}

/// Uniform node lattice with a mask of active nodes.
///
/// Lattice points are numbered row-major (last axis fastest). Active nodes are
/// numbered in lattice order; all grid functions are indexed by active node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    kind: DomainKind,
    mask: Vec<bool>,
    active: Vec<usize>,
    node_of: Vec<usize>,
    facets: Vec<BoundaryFacet>,
    quadrature: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl GridDomain {
    /// Box `[lower, upper]` with `shape[a]` nodes along axis `a`.
    pub fn boxed(lower: &[f64], upper: &[f64], shape: &[usize]) -> Result<Self, GridError> {
        let dim = shape.len();
        if lower.len() != dim || upper.len() != dim || dim == 0 {
            return Err(GridError::Shape("bounds and shape lengths differ".into()));
        }
        if shape.iter().any(|&m| m < 3) {
            return Err(GridError::Shape("need at least 3 nodes per axis".into()));
        }
        let spacing: Vec<f64> = (0..dim).map(|a| (upper[a] - lower[a]) / (shape[a] - 1) as f64).collect();
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(GridError::Shape("upper bounds must exceed lower bounds".into()));
        }
        let total = shape.iter().product();
        Ok(Self::build(dim, shape.to_vec(), spacing, lower.to_vec(), DomainKind::Box, vec![true; total]))
    }

    /// Unit cube `[0,1]ⁿ` with `nodes` per axis (spacing `1/(nodes−1)`).
    pub fn unit_box(dim: usize, nodes: usize) -> Result<Self, GridError> {
        Self::boxed(&vec![0.0; dim], &vec![1.0; dim], &vec![nodes; dim])
    }

    /// Half-ball of `radius` centred at the origin, `cells` cells across the diameter.
    pub fn half_ball(dim: usize, radius: f64, cells: usize) -> Result<Self, GridError> {
        if cells < 4 || !cells.is_multiple_of(2) {
            return Err(GridError::Shape("half-ball needs an even cell count ≥ 4".into()));
        }
        let h = 2.0 * radius / cells as f64;
        let mut shape = vec![cells + 1; dim];
        shape[dim - 1] = cells / 2 + 1;
        let mut origin = vec![-radius; dim];
        origin[dim - 1] = 0.0;
        let center = vec![0.0; dim];
        Self::masked(dim, shape, vec![h; dim], origin, DomainKind::HalfBall { radius, center })
    }

    /// Ball of `radius` centred at the origin, `cells` cells across the diameter.
    pub fn ball(dim: usize, radius: f64, cells: usize) -> Result<Self, GridError> {
        if cells < 4 || !cells.is_multiple_of(2) {
            return Err(GridError::Shape("ball needs an even cell count ≥ 4".into()));
        }
        let h = 2.0 * radius / cells as f64;
        let shape = vec![cells + 1; dim];
        let origin = vec![-radius; dim];
        Self::masked(dim, shape, vec![h; dim], origin, DomainKind::Ball { radius, center: vec![0.0; dim] })
    }

    fn masked(
        dim: usize,
        shape: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        kind: DomainKind,
    ) -> Result<Self, GridError> {
        let total: usize = shape.iter().product();
        let (radius, center) = match &kind {
            DomainKind::HalfBall { radius, center } | DomainKind::Ball { radius, center } => (*radius, center.clone()),
            DomainKind::Box => unreachable!("masked domains are balls"),
        };
        let mut mask = vec![false; total];
        let mut idx = vec![0usize; dim];
        for (g, m) in mask.iter_mut().enumerate() {
            unravel(g, &shape, &mut idx);
            let r2: f64 = (0..dim)
                .map(|a| {
                    let x = origin[a] + idx[a] as f64 * spacing[a] - center[a];
                    x * x
                })
                .sum();
            let inside = r2.sqrt() <= radius * (1.0 + 1e-12);
            let upper = match kind {
                DomainKind::HalfBall { .. } => origin[dim - 1] + idx[dim - 1] as f64 * spacing[dim - 1] >= center[dim - 1] - 1e-12,
                _ => true,
            };
            *m = inside && upper;
        }
        Ok(Self::build(dim, shape, spacing, origin, kind, mask))
    }

    fn build(
        dim: usize,
        shape: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        kind: DomainKind,
        mask: Vec<bool>,
    ) -> Self {
        let total = mask.len();
        let mut node_of = vec![NONE; total];
        let mut active = Vec::new();
        for g in 0..total {
            if mask[g] {
                node_of[g] = active.len();
                active.push(g);
            }
        }
        let mut d = Self {
            dim,
            shape,
            spacing,
            origin,
            kind,
            mask,
            active,
            node_of,
            facets: Vec::new(),
            quadrature: Vec::new(),
        };
        d.quadrature = d.compute_quadrature();
        d.facets = d.compute_facets();
        d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Largest spacing.
    pub fn h(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of active nodes.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn lattice_len(&self) -> usize {
        self.mask.len()
    }

    /// Lattice index of an active node.
    pub fn lattice_index(&self, node: usize) -> usize {
        self.active[node]
    }

    /// Active node at a lattice index, if masked in.
    pub fn node_at_lattice(&self, g: usize) -> Option<usize> {
        match self.node_of.get(g) {
            Some(&n) if n != NONE => Some(n),
            _ => None,
        }
    }

    /// Multi-index of an active node.
    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        unravel(self.active[node], &self.shape, &mut idx);
        idx
    }

    /// Active node at a multi-index, if in range and masked in.
    pub fn node_at(&self, idx: &[isize]) -> Option<usize> {
        let mut g = 0usize;
        for a in 0..self.dim {
            if idx[a] < 0 || idx[a] as usize >= self.shape[a] {
                return None;
            }
            g = g * self.shape[a] + idx[a] as usize;
        }
        self.node_at_lattice(g)
    }

    /// Neighbour of `node` offset by `step` along `axis`.
    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> Option<usize> {
        let idx = self.multi_index(node);
        let j = idx[axis] as isize + step;
        if j < 0 || j as usize >= self.shape[axis] {
            return None;
        }
        let stride: usize = self.shape[axis + 1..].iter().product();
        let g = (self.active[node] as isize + step * stride as isize) as usize;
        self.node_at_lattice(g)
    }

    /// Coordinates of an active node.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    /// Volume quadrature weight of each active node.
    pub fn quadrature(&self) -> &[f64] {
        &self.quadrature
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn select_facets(&self, selector: BoundarySelector) -> Vec<&BoundaryFacet> {
        self.facets.iter().filter(|f| selector.matches(f.kind)).collect()
    }

    /// Whether `node` has all `2n` axis neighbours.
    pub fn is_interior(&self, node: usize) -> bool {
        (0..self.dim).all(|a| self.neighbor(node, a, -1).is_some() && self.neighbor(node, a, 1).is_some())
    }

    /// Nodes whose `depth`-step axis neighbourhoods are complete.
    pub fn interior_nodes(&self, depth: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&p| {
                (0..self.dim).all(|a| {
                    (1..=depth as isize).all(|s| self.neighbor(p, a, -s).is_some() && self.neighbor(p, a, s).is_some())
                })
            })
            .collect()
    }

    /// Trapezoid weights: `h` per axis, halved where one neighbour is missing.
    fn compute_quadrature(&self) -> Vec<f64> {
        (0..self.len())
            .map(|p| {
                (0..self.dim)
                    .map(|a| {
                        let lo = self.neighbor(p, a, -1).is_some();
                        let hi = self.neighbor(p, a, 1).is_some();
                        match (lo, hi) {
                            (true, true) => self.spacing[a],
                            (false, false) => self.spacing[a],
                            _ => 0.5 * self.spacing[a],
                        }
                    })
                    .product()
            })
            .collect()
    }

    /// Face weight on an axis-normal face: trapezoid weights of the other axes.
    fn face_weight(&self, node: usize, normal_axis: usize) -> f64 {
        (0..self.dim)
            .filter(|&a| a != normal_axis)
            .map(|a| {
                let lo = self.neighbor(node, a, -1).is_some();
                let hi = self.neighbor(node, a, 1).is_some();
                if lo && hi || !lo && !hi {
                    self.spacing[a]
                } else {
                    0.5 * self.spacing[a]
                }
            })
            .product()
    }

    fn compute_facets(&self) -> Vec<BoundaryFacet> {
        let mut out = Vec::new();
        let n = self.dim;
        for p in 0..self.len() {
            let idx = self.multi_index(p);
            match &self.kind {
                DomainKind::Box => {
                    for a in 0..n {
                        for (upper, at) in [(false, 0), (true, self.shape[a] - 1)] {
                            if idx[a] == at {
                                let mut normal = vec![0.0; n];
                                normal[a] = if upper { 1.0 } else { -1.0 };
                                out.push(BoundaryFacet {
                                    node: p,
                                    kind: FacetKind::BoxFace { axis: a, upper },
                                    normal,
                                    weight: self.face_weight(p, a),
                                });
                            }
                        }
                    }
                }
                DomainKind::HalfBall { center, .. } | DomainKind::Ball { center, .. } => {
                    let half = matches!(self.kind, DomainKind::HalfBall { .. });
                    if half && idx[n - 1] == 0 {
                        let mut normal = vec![0.0; n];
                        normal[n - 1] = -1.0;
                        out.push(BoundaryFacet { node: p, kind: FacetKind::Flat, normal, weight: self.face_weight(p, n - 1) });
                    }
                    // exits through the curved part: masked-out lattice neighbours
                    let mut exits = vec![false; n];
                    let mut any = false;
                    for a in 0..n {
                        for s in [-1isize, 1] {
                            if half && a == n - 1 && s == -1 && idx[a] == 0 {
                                continue;
                            }
                            if self.neighbor(p, a, s).is_none() {
                                exits[a] = true;
                                any = true;
                            }
                        }
                    }
                    if any {
                        let x = self.coords(p);
                        let mut normal: Vec<f64> = (0..n).map(|a| x[a] - center[a]).collect();
                        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if len > 0.0 {
                            normal.iter_mut().for_each(|v| *v /= len);
                        } else {
                            normal[n - 1] = 1.0;
                        }
                        let weight = (0..n)
                            .filter(|&a| exits[a])
                            .map(|a| {
                                normal[a].abs()
                                    * (0..n).filter(|&b| b != a).map(|b| self.spacing[b]).product::<f64>()
                            })
                            .sum();
                        out.push(BoundaryFacet { node: p, kind: FacetKind::Curved, normal, weight });
                    }
                }
            }
        }
        out
    }

    /// Whether two domains describe the same lattice and mask.
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.shape == other.shape && self.spacing == other.spacing && self.origin == other.origin && self.mask == other.mask
    }
}

pub(crate) fn unravel(mut g: usize, shape: &[usize], idx: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] = g % shape[a];
        g /= shape[a];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_quadrature_integrates_area() {
        let d = GridDomain::unit_box(2, 9).unwrap();
        let area: f64 = d.quadrature().iter().sum();
        assert!((area - 1.0).abs() < 1e-14);
        // perimeter from facet weights
        let perim: f64 = d.facets().iter().map(|f| f.weight).sum();
        assert!((perim - 4.0).abs() < 1e-14);
    }

    #[test]
    fn box_normals_are_axis_vectors() {
        let d = GridDomain::unit_box(3, 5).unwrap();
        for f in d.facets() {
            let nz: Vec<_> = f.normal.iter().filter(|v| **v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(nz[0].abs(), 1.0);
        }
    }

    #[test]
    fn half_ball_classification() {
        let d = GridDomain::half_ball(2, 1.0, 32).unwrap();
        let flat: Vec<_> = d.select_facets(BoundarySelector::Flat);
        assert!(flat.iter().all(|f| f.normal == vec![0.0, -1.0]));
        let flat_len: f64 = flat.iter().map(|f| f.weight).sum();
        assert!((flat_len - 2.0).abs() < 0.1);
        for f in d.facets() {
            let len: f64 = f.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }
        // every active node with a masked-out neighbour is classified
        for p in 0..d.len() {
            let idx = d.multi_index(p);
            let open = (0..2).any(|a| {
                [-1isize, 1].iter().any(|&s| !(a == 1 && s == -1 && idx[1] == 0) && d.neighbor(p, a, s).is_none())
            });
            if open {
                assert!(d.facets().iter().any(|f| f.node == p && f.kind == FacetKind::Curved));
            }
        }
        let area: f64 = d.quadrature().iter().sum();
        // staircase trapezoid rule: first-order in h near the curved boundary
        assert!((area - std::f64::consts::FRAC_PI_2).abs() < 3.0 * d.h(), "area {area}");
    }
}
