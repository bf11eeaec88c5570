use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::forms::{KForm, Signature};
use crate::grid::{Calculus, CoefficientField, DiscreteForm, FaceCondition, GridDomain, Stencil};
use crate::sparse::{norm2, CsrMatrix, FactorError, Factorization};

/// Shift added to a singular operator before factorization; the kernel is
/// projected out afterwards.
const KERNEL_SHIFT: f64 = 1e-3;
const PROBES: usize = 8;

/// Components fixed by the essential condition, as a node-major mask.
///
/// Tangential: `u_I` is fixed on a face with normal axis `a ∉ I`. Normal:
/// fixed when `a ∈ I`. Every component is fixed on curved facets.
pub fn pinned_components(domain: &GridDomain, sig: Signature, bc: FaceCondition) -> Vec<bool> {
    let l = sig.len();
    let basis = sig.basis();
    let mut pinned = vec![false; domain.len() * l];
    for facet in domain.facets() {
        for (r, &m) in basis.masks().iter().enumerate() {
            let fixed = match facet.normal_axis() {
                None => true,
                Some(a) => {
                    let inside = m & (1 << a) != 0;
                    match bc {
                        FaceCondition::Tangential => !inside,
                        FaceCondition::Normal => inside,
                    }
                }
            };
            if fixed {
                for j in 0..sig.multiplicity {
                    pinned[facet.node * l + sig.index(j, r)] = true;
                }
            }
        }
    }
    pinned
}

/// Neighbouring-degree rows left out of the first-order term: the components
/// pinned on axis-aligned facets. Curved facets pin every component of the
/// unknown, carry no natural condition, and keep their rows.
fn dropped_pattern(domain: &GridDomain, sig: Signature, bc: FaceCondition) -> Vec<bool> {
    let mut drop = pinned_components(domain, sig, bc);
    let l = sig.len();
    for facet in domain.facets() {
        if facet.normal_axis().is_none() {
            drop[facet.node * l..(facet.node + 1) * l].iter_mut().for_each(|p| *p = false);
        }
    }
    // a node on both a curved and an axis-aligned facet keeps the axis pattern
    for facet in domain.facets().iter().filter(|f| f.normal_axis().is_some()) {
        let own = pinned_for_facet(facet, sig, bc);
        for (i, p) in own.into_iter().enumerate() {
            drop[facet.node * l + i] |= p;
        }
    }
    drop
}

fn pinned_for_facet(facet: &crate::grid::BoundaryFacet, sig: Signature, bc: FaceCondition) -> Vec<bool> {
    let basis = sig.basis();
    let axis = facet.normal_axis().expect("axis-aligned facet");
    let mut out = vec![false; sig.len()];
    for (r, &m) in basis.masks().iter().enumerate() {
        let inside = m & (1 << axis) != 0;
        let fixed = match bc {
            FaceCondition::Tangential => !inside,
            FaceCondition::Normal => inside,
        };
        if fixed {
            for j in 0..sig.multiplicity {
                out[sig.index(j, r)] = true;
            }
        }
    }
    out
}

/// Whether the first-order term integrated by parts keeps only the rows that
/// are free in the neighbouring degree.
///
/// Restricting rows makes the discrete `d*` (tangential) or `d` (normal) the
/// exact adjoint of its partner on the constrained spaces, so discrete Hodge
/// identities hold to rounding. At top degree (tangential) and degree zero
/// (normal) every component is Neumann-like and restriction would leave
/// checkerboard modes in the kernel, so all rows are kept there.
fn restricts_rows(sig: Signature) -> bool {
    sig.degree >= 1 && sig.degree < sig.dim
}

/// Options for [`HodgeSystem::solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative algebraic residual target.
    pub tolerance: f64,
    pub max_refinements: usize,
    /// Remove the kernel component of the load instead of rejecting it.
    pub project_kernel: bool,
    /// Relative kernel component above which a load counts as incompatible.
    pub compatibility_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_refinements: 20, project_kernel: false, compatibility_tolerance: 1e-8 }
    }
}

/// Essential and natural boundary data.
///
/// `essential` supplies the pinned components (`ω₀`). `natural` is `d*(Bω₀)`
/// for tangential systems and `A dω₀` for normal ones; when absent it is
/// computed from `essential` with second-order differences.
#[derive(Debug, Clone, Default)]
pub struct BoundaryData {
    pub essential: Option<DiscreteForm>,
    pub natural: Option<DiscreteForm>,
}

impl BoundaryData {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn lifted(omega0: DiscreteForm) -> Self {
        Self { essential: Some(omega0), natural: None }
    }

    pub fn with_natural(mut self, natural: DiscreteForm) -> Self {
        self.natural = Some(natural);
        self
    }
}

/// Outcome of one linear solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DiscreteForm,
    /// Full coefficient vector of the unknown (`ω` tangential, `Bω` normal).
    pub unknown: Vec<f64>,
    pub algebraic_residual: f64,
    /// Largest `|φᵀ(Sx − b)| / (‖φ‖‖b‖)` over seeded random probes.
    pub weak_residual: f64,
    pub factorization: &'static str,
    pub refinements: usize,
    pub free_dofs: usize,
    pub pinned_dofs: usize,
    /// Size of the load's kernel component relative to the load.
    pub kernel_component: f64,
    pub ratios: BTreeMap<String, f64>,
}

/// Assembled tangential or normal Hodge system
/// `d*(A dω) + Bᵀ d d*(Bω) = λBω + f` on a grid.
///
/// Immutable after assembly; the factorization is built on first use and
/// shared by later solves.
pub struct HodgeSystem {
    domain: Arc<GridDomain>,
    sig: Signature,
    bc: FaceCondition,
    lambda: f64,
    a: CoefficientField,
    b: CoefficientField,
    b_inv: Option<CoefficientField>,
    calculus: Calculus,
    d_up: Option<CsrMatrix>,
    codiff_down: Option<CsrMatrix>,
    b_block: CsrMatrix,
    b_inv_block: Option<CsrMatrix>,
    /// Neighbouring-degree rows dropped from the first-order term.
    dropped_rows: Option<Vec<bool>>,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    operator: CsrMatrix,
    reduced: CsrMatrix,
    pinned: Vec<bool>,
    free: Vec<usize>,
    fixed: Vec<usize>,
    symmetric: bool,
    /// `M`-orthonormal kernel basis on the free dofs (only for `λ = 0`).
    kernel: Vec<Vec<f64>>,
    factor: OnceLock<Result<Factorization, FactorError>>,
}

impl std::fmt::Debug for HodgeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HodgeSystem")
            .field("signature", &self.sig)
            .field("bc", &self.bc)
            .field("lambda", &self.lambda)
            .field("free", &self.free.len())
            .field("pinned", &self.fixed.len())
            .field("kernel", &self.kernel.len())
            .finish()
    }
}

impl HodgeSystem {
    /// Assembles the system for `ω ∈ Λᵏ` with `A` on `Λᵏ⁺¹` and `B` on `Λᵏ`.
    pub fn assemble(
        a: &CoefficientField,
        b: &CoefficientField,
        lambda: f64,
        bc: FaceCondition,
    ) -> Result<Self, SolverError> {
        let domain = b.domain().clone();
        let sig = b.space();
        let (n, k) = (sig.dim, sig.degree);
        if k > n {
            return Err(SolverError::Degree(k));
        }
        if a.space() != sig.with_degree(k + 1) {
            return Err(SolverError::Coefficient(format!(
                "A acts on {} but degree {} needs {}",
                a.space(),
                k,
                sig.with_degree(k + 1)
            )));
        }
        if !a.domain().same_lattice(&domain) {
            return Err(SolverError::Grid(crate::grid::GridError::DomainMismatch));
        }
        if !b.is_elliptic() {
            return Err(SolverError::Coefficient("B is not Legendre elliptic".into()));
        }
        if k < n && !a.is_elliptic() {
            return Err(SolverError::Coefficient("A is not Legendre elliptic".into()));
        }
        let calculus = Calculus::new(domain.clone(), Stencil::Summation);
        let q = domain.quadrature();
        let qdiag = |s: Signature| -> Vec<f64> { (0..domain.len() * s.len()).map(|i| q[i / s.len()]).collect() };
        let d_up = if k < n { Some(calculus.d_matrix(sig)?) } else { None };
        let codiff_down = if k > 0 { Some(calculus.codiff_matrix(sig)?) } else { None };
        let b_block = b.block_matrix();
        let needs_inverse = bc == FaceCondition::Normal || (k == n && lambda == 0.0);
        let b_inv = if needs_inverse { Some(b.inverse().map_err(|e| SolverError::Coefficient(e.to_string()))?) } else { None };
        let b_inv_block = b_inv.as_ref().map(|c| c.block_matrix());
        let restricted = restricts_rows(sig);
        let mut dropped_rows = None;

        let (stiffness, mass) = match bc {
            FaceCondition::Tangential => {
                let mut k_mat = CsrMatrix::zeros(domain.len() * sig.len(), domain.len() * sig.len());
                if let Some(d) = &d_up {
                    let qa = a.block_matrix().scale_rows(&qdiag(sig.with_degree(k + 1)));
                    k_mat = k_mat.add(&d.transpose().matmul(&qa).matmul(d));
                }
                if let Some(c) = &codiff_down {
                    let low = sig.with_degree(k - 1);
                    let mut w = qdiag(low);
                    if restricted {
                        let drop = dropped_pattern(&domain, low, FaceCondition::Tangential);
                        w.iter_mut().zip(&drop).for_each(|(v, &p)| if p { *v = 0.0 });
                        dropped_rows = Some(drop);
                    }
                    let cb = c.matmul(&b_block);
                    k_mat = k_mat.add(&cb.transpose().scale_cols(&w).matmul(&cb));
                }
                (k_mat, b_block.scale_rows(&qdiag(sig)))
            }
            FaceCondition::Normal => {
                let bi = b_inv_block.as_ref().expect("normal systems store B⁻¹");
                let mut k_mat = CsrMatrix::zeros(domain.len() * sig.len(), domain.len() * sig.len());
                if let Some(d) = &d_up {
                    let up = sig.with_degree(k + 1);
                    let mut keep = vec![1.0; domain.len() * up.len()];
                    if restricted {
                        let drop = dropped_pattern(&domain, up, FaceCondition::Normal);
                        keep.iter_mut().zip(&drop).for_each(|(v, &p)| if p { *v = 0.0 });
                        dropped_rows = Some(drop);
                    }
                    let qa = a.block_matrix().scale_rows(&qdiag(up)).scale_rows(&keep).scale_cols(&keep);
                    let g = d.matmul(bi);
                    k_mat = k_mat.add(&g.transpose().matmul(&qa).matmul(&g));
                }
                if let Some(c) = &codiff_down {
                    let w = qdiag(sig.with_degree(k - 1));
                    k_mat = k_mat.add(&c.transpose().scale_cols(&w).matmul(c));
                }
                (k_mat, bi.transpose().scale_cols(&qdiag(sig)))
            }
        };
        let operator = stiffness.axpby(1.0, &mass, lambda);
        let pinned = pinned_components(&domain, sig, bc);
        let free: Vec<usize> = (0..pinned.len()).filter(|&i| !pinned[i]).collect();
        let fixed: Vec<usize> = (0..pinned.len()).filter(|&i| pinned[i]).collect();
        let reduced = operator.select(&free, &free);
        let symmetric = b.is_symmetric() && (k == n || a.is_symmetric());

        let mut system = Self {
            domain,
            sig,
            bc,
            lambda,
            a: a.clone(),
            b: b.clone(),
            b_inv,
            calculus,
            d_up,
            codiff_down,
            b_block,
            b_inv_block,
            dropped_rows,
            stiffness,
            mass,
            operator,
            reduced,
            pinned,
            free,
            fixed,
            symmetric,
            kernel: Vec::new(),
            factor: OnceLock::new(),
        };
        system.kernel = system.constant_kernel();
        Ok(system)
    }

    /// Closed-form kernel of the degenerate settings: `B⁻¹(c·vol)` for
    /// tangential `n`-forms and `B·c` (unknown `Bω` of constants) for normal
    /// `0`-forms, when nothing is pinned and `λ = 0`.
    fn constant_kernel(&self) -> Vec<Vec<f64>> {
        let (n, k) = (self.sig.dim, self.sig.degree);
        let degenerate = match self.bc {
            FaceCondition::Tangential => k == n,
            FaceCondition::Normal => k == 0,
        };
        if self.lambda != 0.0 || !self.fixed.is_empty() || !degenerate {
            return Vec::new();
        }
        let l = self.sig.len();
        let field = match self.bc {
            FaceCondition::Tangential => self.b_inv.as_ref().expect("top-degree kernel stores B⁻¹"),
            FaceCondition::Normal => &self.b,
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for j in 0..self.sig.multiplicity {
            let col = self.sig.index(j, 0);
            let mut z = vec![0.0; self.domain.len() * l];
            for p in 0..self.domain.len() {
                let m = field.at(p);
                for c in 0..l {
                    z[p * l + c] = m[c * l + col];
                }
            }
            for prev in &basis {
                let c = self.mass_inner(prev, &z);
                z.iter_mut().zip(prev).for_each(|(v, w)| *v -= c * w);
            }
            let nz = self.mass_inner(&z, &z).sqrt();
            z.iter_mut().for_each(|v| *v /= nz);
            basis.push(z);
        }
        basis
    }

    /// Symmetrized `uᵀ M v` on the free dofs.
    pub(crate) fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mv = self.mass_free(v);
        let mu = self.mass_free(u);
        0.5 * (u.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>() + v.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>())
    }

    pub(crate) fn mass_free(&self, v: &[f64]) -> Vec<f64> {
        let full = self.expand(v);
        let mv = self.mass.mul_vec(&full);
        self.restrict(&mv)
    }

    pub(crate) fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.pinned.len()];
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
        full
    }

    pub(crate) fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn boundary_condition(&self) -> FaceCondition {
        self.bc
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> &CoefficientField {
        &self.a
    }

    pub fn b(&self) -> &CoefficientField {
        &self.b
    }

    pub fn calculus(&self) -> &Calculus {
        &self.calculus
    }

    /// Bilinear form `a(u, φ)` on all dofs.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Bilinear form `b(u, φ)` on all dofs.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `a + λb` restricted to the free dofs.
    pub fn reduced_operator(&self) -> &CsrMatrix {
        &self.reduced
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn pinned_dofs(&self) -> &[usize] {
        &self.fixed
    }

    pub fn pinned_mask(&self) -> &[bool] {
        &self.pinned
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Whether the neighbouring-degree rows fixed by the boundary condition
    /// are left out of the first-order term.
    pub fn restricted_rows(&self) -> Option<&[bool]> {
        self.dropped_rows.as_deref()
    }

    /// Closed-form kernel basis on the free dofs, `M`-orthonormal.
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// Converts a full unknown vector (`ω` or `Bω`) into `ω`.
    pub fn form_from_unknown(&self, unknown: &[f64]) -> DiscreteForm {
        let values = match (&self.bc, &self.b_inv_block) {
            (FaceCondition::Normal, Some(bi)) => bi.mul_vec(unknown),
            _ => unknown.to_vec(),
        };
        DiscreteForm::from_values(self.domain.clone(), self.sig, values).expect("unknown has system length")
    }

    /// Converts `ω` into the unknown vector (`ω` or `Bω`).
    pub fn unknown_from_form(&self, omega: &DiscreteForm) -> Vec<f64> {
        match self.bc {
            FaceCondition::Tangential => omega.values().to_vec(),
            FaceCondition::Normal => self.b_block.mul_vec(omega.values()),
        }
    }

    /// `d*(Bω)` with the rows dropped from the energy set to zero: the
    /// quantity the weak form controls. `None` at degree zero.
    pub fn lower_field(&self, omega: &DiscreteForm) -> Option<DiscreteForm> {
        let c = self.codiff_down.as_ref()?;
        let mut v = c.mul_vec(&self.b_block.mul_vec(omega.values()));
        if let (FaceCondition::Tangential, Some(drop)) = (self.bc, &self.dropped_rows) {
            v.iter_mut().zip(drop).for_each(|(x, &p)| if p { *x = 0.0 });
        }
        Some(DiscreteForm::from_values(self.domain.clone(), self.sig.with_degree(self.sig.degree - 1), v).expect("lengths"))
    }

    /// `dω` with dropped rows zeroed. `None` at top degree.
    pub fn upper_field(&self, omega: &DiscreteForm) -> Option<DiscreteForm> {
        let d = self.d_up.as_ref()?;
        let mut v = d.mul_vec(omega.values());
        if let (FaceCondition::Normal, Some(drop)) = (self.bc, &self.dropped_rows) {
            v.iter_mut().zip(drop).for_each(|(x, &p)| if p { *x = 0.0 });
        }
        Some(DiscreteForm::from_values(self.domain.clone(), self.sig.with_degree(self.sig.degree + 1), v).expect("lengths"))
    }

    /// `A dω` as paired in the energy (restricted rows zeroed on both sides
    /// of `A` for normal systems). `None` at top degree.
    pub fn upper_flux(&self, omega: &DiscreteForm) -> Option<DiscreteForm> {
        let du = self.upper_field(omega)?;
        let mut flux = self.a.apply(&du).expect("A acts on degree k+1");
        if let (FaceCondition::Normal, Some(drop)) = (self.bc, &self.dropped_rows) {
            flux.values_mut().iter_mut().zip(drop).for_each(|(x, &p)| if p { *x = 0.0 });
        }
        Some(flux)
    }

    fn natural_signature(&self) -> Option<Signature> {
        let (n, k) = (self.sig.dim, self.sig.degree);
        match self.bc {
            FaceCondition::Tangential if k > 0 => Some(self.sig.with_degree(k - 1)),
            FaceCondition::Normal if k < n => Some(self.sig.with_degree(k + 1)),
            _ => None,
        }
    }

    /// Natural data from `ω₀` with second-order differences.
    pub fn natural_from_essential(&self, omega0: &DiscreteForm) -> Result<Option<DiscreteForm>, SolverError> {
        if self.natural_signature().is_none() {
            return Ok(None);
        }
        let calc = Calculus::new(self.domain.clone(), Stencil::SecondOrder);
        Ok(Some(match self.bc {
            FaceCondition::Tangential => calc.codiff(&self.b.apply(omega0)?)?,
            FaceCondition::Normal => self.a.apply(&calc.d(omega0)?)?,
        }))
    }

    fn check_form(&self, u: &DiscreteForm, expected: Signature) -> Result<(), SolverError> {
        if u.signature() != expected {
            return Err(SolverError::Grid(crate::grid::GridError::Signature { left: expected, right: u.signature() }));
        }
        if !u.domain().same_lattice(&self.domain) {
            return Err(SolverError::Grid(crate::grid::GridError::DomainMismatch));
        }
        Ok(())
    }

    /// Full-length load vector `b` with `Sx = b` before row elimination.
    fn load_vector(&self, f: &DiscreteForm, natural: Option<&DiscreteForm>) -> Result<Vec<f64>, SolverError> {
        let q = self.domain.quadrature();
        let l = self.sig.len();
        let mut g: Vec<f64> = f.values().iter().enumerate().map(|(i, v)| -q[i / l] * v).collect();
        let Some(s) = natural else {
            return Ok(match self.bc {
                FaceCondition::Tangential => g,
                FaceCondition::Normal => self.b_inv_block.as_ref().expect("normal").transpose().mul_vec(&g),
            });
        };
        let ls = s.signature().len();
        let mut flux = vec![0.0; g.len()];
        for facet in self.domain.facets() {
            let nu = KForm::from_vector(&facet.normal);
            let sp = s.at(facet.node);
            let t = match self.bc {
                FaceCondition::Tangential => nu.wedge_or_zero(&sp)?,
                FaceCondition::Normal => nu.interior(&sp)?,
            };
            for (i, v) in t.coeffs().iter().enumerate() {
                flux[facet.node * l + i] += facet.weight * v;
            }
        }
        if let Some(drop) = &self.dropped_rows {
            let y: Vec<f64> =
                s.values().iter().enumerate().map(|(i, v)| if drop[i] { q[i / ls] * v } else { 0.0 }).collect();
            let op = match self.bc {
                FaceCondition::Tangential => self.codiff_down.as_ref(),
                FaceCondition::Normal => self.d_up.as_ref(),
            }
            .expect("restricted rows imply the term exists");
            let corr = op.transpose().mul_vec(&y);
            flux.iter_mut().zip(corr).for_each(|(a, c)| *a -= c);
        }
        Ok(match self.bc {
            FaceCondition::Tangential => {
                let bt = self.b_block.transpose().mul_vec(&flux);
                g.iter_mut().zip(&bt).for_each(|(a, b)| *a += b);
                g
            }
            FaceCondition::Normal => {
                g.iter_mut().zip(&flux).for_each(|(a, b)| *a += b);
                self.b_inv_block.as_ref().expect("normal").transpose().mul_vec(&g)
            }
        })
    }

    fn factorization(&self) -> Result<&Factorization, SolverError> {
        let entry = self.factor.get_or_init(|| {
            if self.kernel.is_empty() {
                Factorization::new(&self.reduced, self.symmetric)
            } else {
                let shifted = self.reduced.axpby(1.0, &self.mass.select(&self.free, &self.free), KERNEL_SHIFT);
                Factorization::new(&shifted, self.symmetric)
            }
        });
        entry.as_ref().map_err(|e| SolverError::Factor(e.clone()))
    }

    /// Removes the `M`-orthogonal kernel component from free-dof vector `x`.
    fn project_out_kernel(&self, x: &mut [f64]) {
        for z in &self.kernel {
            let c = self.mass_inner(z, x);
            x.iter_mut().zip(z).for_each(|(v, w)| *v -= c * w);
        }
    }

    /// Solves with essential values copied from `ω₀` and natural data
    /// derived from it.
    pub fn solve(&self, f: &DiscreteForm, omega0: Option<&DiscreteForm>) -> Result<SolveReport, SolverError> {
        let data = BoundaryData { essential: omega0.cloned(), natural: None };
        self.solve_with(f, &data, &SolveOptions::default())
    }

    pub fn solve_with(&self, f: &DiscreteForm, data: &BoundaryData, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
        self.check_form(f, self.sig)?;
        let mut x_full = vec![0.0; self.pinned.len()];
        if let Some(w0) = &data.essential {
            self.check_form(w0, self.sig)?;
            let u0 = self.unknown_from_form(w0);
            for &i in &self.fixed {
                x_full[i] = u0[i];
            }
        }
        let derived;
        let natural = match (&data.natural, &data.essential) {
            (Some(s), _) => {
                if let Some(sig) = self.natural_signature() {
                    self.check_form(s, sig)?;
                    Some(s)
                } else {
                    None
                }
            }
            (None, Some(w0)) => {
                derived = self.natural_from_essential(w0)?;
                derived.as_ref()
            }
            (None, None) => None,
        };
        let load = self.load_vector(f, natural)?;
        self.solve_assembled(&load, x_full, opts)
    }

    /// Potential `α` of a top-degree `f` with `dα = f` on the free rows:
    /// the system is paired against `⟨f, dβ⟩` directly, which is exact
    /// whenever `f` lies in the discrete range of `d`.
    pub(crate) fn exact_potential(&self, f: &DiscreteForm) -> Result<DiscreteForm, SolverError> {
        let d = self.d_up.as_ref().ok_or(SolverError::Degree(self.sig.degree))?;
        self.check_form(f, self.sig.with_degree(self.sig.degree + 1))?;
        let q = self.domain.quadrature();
        let l = f.signature().len();
        let qf: Vec<f64> = f.values().iter().enumerate().map(|(i, v)| v * q[i / l]).collect();
        let load = d.transpose().mul_vec(&qf);
        Ok(self.solve_assembled(&load, vec![0.0; self.pinned.len()], &SolveOptions::default())?.solution)
    }

    fn solve_assembled(&self, load: &[f64], mut x_full: Vec<f64>, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
        let lifted = self.operator.mul_vec(&x_full);
        let mut rhs: Vec<f64> = self.free.iter().map(|&i| load[i] - lifted[i]).collect();
        let rhs_norm = norm2(&rhs);

        let mut kernel_component = 0.0;
        if !self.kernel.is_empty() {
            let coeffs: Vec<f64> = self.kernel.iter().map(|z| z.iter().zip(&rhs).map(|(a, b)| a * b).sum()).collect();
            let zn: f64 = self.kernel.iter().map(|z| norm2(z)).fold(0.0, f64::max);
            kernel_component = if rhs_norm > 0.0 { norm2(&coeffs) * zn / rhs_norm } else { 0.0 };
            if kernel_component > opts.compatibility_tolerance && !opts.project_kernel {
                return Err(SolverError::Incompatible { kernel_component });
            }
            for (z, c) in self.kernel.iter().zip(&coeffs) {
                let mz = self.mass_free(z);
                rhs.iter_mut().zip(&mz).for_each(|(r, m)| *r -= c * m);
            }
        }
        let rhs_norm = norm2(&rhs);

        let factor = self.factorization()?;
        let mut x = factor.solve(&rhs);
        self.project_out_kernel(&mut x);
        let mut refinements = 0;
        let mut residual = self.residual(&x, &rhs);
        while rel(norm2(&residual), rhs_norm) > opts.tolerance && refinements < opts.max_refinements {
            let dx = factor.solve(&residual);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            self.project_out_kernel(&mut x);
            residual = self.residual(&x, &rhs);
            refinements += 1;
        }
        let algebraic_residual = rel(norm2(&residual), rhs_norm);
        if !(algebraic_residual <= opts.tolerance.max(1e3 * f64::EPSILON)) {
            return Err(SolverError::Convergence { residual: algebraic_residual, steps: refinements });
        }
        let weak_residual = probe_residual(&residual, rhs_norm);
        for (&i, &v) in self.free.iter().zip(&x) {
            x_full[i] = v;
        }
        Ok(SolveReport {
            solution: self.form_from_unknown(&x_full),
            unknown: x_full,
            algebraic_residual,
            weak_residual,
            factorization: factor.kind(),
            refinements,
            free_dofs: self.free.len(),
            pinned_dofs: self.fixed.len(),
            kernel_component,
            ratios: BTreeMap::new(),
        })
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let sx = self.reduced.mul_vec(x);
        rhs.iter().zip(&sx).map(|(b, a)| b - a).collect()
    }

    /// Metadata for the JSON sidecar.
    pub fn metadata(&self) -> SystemMetadata {
        SystemMetadata {
            dim: self.sig.dim,
            degree: self.sig.degree,
            multiplicity: self.sig.multiplicity,
            bc: self.bc,
            lambda: self.lambda,
            nodes: self.domain.len(),
            h: self.domain.h(),
            free_dofs: self.free.len(),
            pinned_dofs: self.fixed.len(),
            symmetric: self.symmetric,
            restricted_rows: self.dropped_rows.is_some(),
            a_gamma: self.a.gamma(),
            a_lipschitz: self.a.lipschitz(),
            b_gamma: self.b.gamma(),
            b_lipschitz: self.b.lipschitz(),
            solver_tolerance: SolveOptions::default().tolerance,
            reassembly: "B^T d alpha + d*(A beta)".into(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

fn probe_residual(residual: &[f64], rhs_norm: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut worst = 0.0f64;
    for _ in 0..PROBES {
        let phi: Vec<f64> = (0..residual.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot: f64 = phi.iter().zip(residual).map(|(a, b)| a * b).sum();
        worst = worst.max(rel(dot.abs(), norm2(&phi) * rhs_norm));
    }
    worst
}

/// Serializable summary of an assembled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetadata {
    pub dim: usize,
    pub degree: usize,
    pub multiplicity: usize,
    pub bc: FaceCondition,
    pub lambda: f64,
    pub nodes: usize,
    pub h: f64,
    pub free_dofs: usize,
    pub pinned_dofs: usize,
    pub symmetric: bool,
    pub restricted_rows: bool,
    pub a_gamma: f64,
    pub a_lipschitz: f64,
    pub b_gamma: f64,
    pub b_lipschitz: f64,
    pub solver_tolerance: f64,
    pub reassembly: String,
}

/// Report fields that serialize alongside a stored solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSidecar {
    pub system: SystemMetadata,
    pub algebraic_residual: f64,
    pub weak_residual: f64,
    pub factorization: String,
    pub refinements: usize,
    pub kernel_component: f64,
    pub ratios: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn sidecar(&self, system: &HodgeSystem) -> ReportSidecar {
        ReportSidecar {
            system: system.metadata(),
            algebraic_residual: self.algebraic_residual,
            weak_residual: self.weak_residual,
            factorization: self.factorization.to_string(),
            refinements: self.refinements,
            kernel_component: self.kernel_component,
            ratios: self.ratios.clone(),
        }
    }
}

/// Writes the solution container and a `.json` metadata sidecar next to it.
pub fn write_report(
    path: &std::path::Path,
    system: &HodgeSystem,
    report: &SolveReport,
) -> Result<std::path::PathBuf, SolverError> {
    let file = std::fs::File::create(path).map_err(crate::grid::GridError::from)?;
    crate::grid::write_container(&report.solution, std::io::BufWriter::new(file))?;
    let side = path.with_extension("json");
    let json = serde_json::to_string_pretty(&report.sidecar(system)).map_err(|e| SolverError::Format(e.to_string()))?;
    std::fs::write(&side, json + "\n").map_err(crate::grid::GridError::from)?;
    Ok(side)
}
