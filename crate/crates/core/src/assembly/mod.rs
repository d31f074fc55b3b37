//! Global degrees of freedom, sparse assembly of the weak Galerkin system and
//! its solution.
//!
//! Unknowns come first (element blocks in element order, then interior-edge
//! blocks in edge order); boundary-edge blocks follow as pinned entries. The
//! assembled matrix covers both: pinned rows are identity rows and pinned
//! columns are moved into the right-hand side, so the matrix stays symmetric.

pub mod solver;
pub mod sparse;

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, WgError};
use crate::mesh::{Mesh, Point};
use crate::polyspace::{element_rule, eval_scalar_basis, GradientSpaceDesc, ScaledFrame};
use crate::weakop::{
    local_stabilizer, local_stiffness, project_qb, weak_gradient_with, LocalDofLayout, LocalWeakGradient,
    QuadPolicy, StabilizerExponent,
};

pub use solver::{pcg, Breakdown, SolveReport, SolverOptions, DEFAULT_TOL};
pub use sparse::CsrMatrix;

pub const MAX_INTERIOR_DEGREE: usize = 3;
pub const MAX_EDGE_DEGREE: usize = 4;
pub const MAX_GRADIENT_DEGREE: usize = 4;

/// One weak Galerkin element `(P_l(T), P_s(e), G_m(T))` with stabilizer exponent `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementConfig {
    pub l: usize,
    pub s: usize,
    pub grad: GradientSpaceDesc,
    pub j: StabilizerExponent,
}

impl ElementConfig {
    pub fn new(l: usize, s: usize, grad: GradientSpaceDesc, j: StabilizerExponent) -> Result<Self> {
        let c = ElementConfig { l, s, grad, j };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l > MAX_INTERIOR_DEGREE || self.s > MAX_EDGE_DEGREE || self.grad.degree > MAX_GRADIENT_DEGREE {
            return Err(WgError::OutOfEnvelope(format!(
                "l={} s={} grad={} (supported: l <= {MAX_INTERIOR_DEGREE}, s <= {MAX_EDGE_DEGREE}, \
                 gradient degree <= {MAX_GRADIENT_DEGREE})",
                self.l, self.s, self.grad
            )));
        }
        if let StabilizerExponent::Finite(j) = self.j {
            StabilizerExponent::finite(j)?;
        }
        Ok(())
    }

    pub fn policy(&self) -> QuadPolicy {
        QuadPolicy::new(self.l, self.s, &self.grad)
    }
}

impl fmt::Display for ElementConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P{}(T), P{}(e), {}) j={}", self.l, self.s, self.grad, self.j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub interior_block: usize,
    pub edge_block: usize,
    pub n_elements: usize,
    /// Global offset of each mesh edge's block.
    pub edge_offset: Vec<usize>,
    pub edge_pinned: Vec<bool>,
    /// Number of unknowns `N`.
    pub n_unknowns: usize,
    /// Unknowns plus pinned boundary entries.
    pub n_total: usize,
}

pub fn build_dof_map(mesh: &Mesh, config: &ElementConfig) -> DofMap {
    let interior_block = crate::polyspace::scalar_dim(config.l);
    let edge_block = config.s + 1;
    let n_el = mesh.elements.len();
    let mut next_free = n_el * interior_block;
    let mut next_pinned = next_free + mesh.num_interior_edges() * edge_block;
    let n_unknowns = next_pinned;
    let mut edge_offset = Vec::with_capacity(mesh.edges.len());
    let mut edge_pinned = Vec::with_capacity(mesh.edges.len());
    for e in &mesh.edges {
        if e.boundary {
            edge_offset.push(next_pinned);
            next_pinned += edge_block;
        } else {
            edge_offset.push(next_free);
            next_free += edge_block;
        }
        edge_pinned.push(e.boundary);
    }
    DofMap {
        interior_block,
        edge_block,
        n_elements: n_el,
        edge_offset,
        edge_pinned,
        n_unknowns,
        n_total: next_pinned,
    }
}

impl DofMap {
    pub fn element_range(&self, element: usize) -> Range<usize> {
        let s = element * self.interior_block;
        s..s + self.interior_block
    }

    pub fn edge_range(&self, edge: usize) -> Range<usize> {
        let s = self.edge_offset[edge];
        s..s + self.edge_block
    }

    pub fn is_pinned(&self, dof: usize) -> bool {
        dof >= self.n_unknowns
    }

    /// Global indices of an element's local coefficient vector.
    pub fn local_to_global(&self, mesh: &Mesh, element: usize) -> Vec<usize> {
        let el = &mesh.elements[element];
        let mut out: Vec<usize> = self.element_range(element).collect();
        for le in &el.edges {
            out.extend(self.edge_range(le.edge));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// `(dof, value)` for every pinned boundary entry.
    pub pinned: Vec<(usize, f64)>,
    pub dof_map: DofMap,
}

/// Coefficients of a discrete weak function over the whole DOF map.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakCoeffVector {
    pub values: Vec<f64>,
    pub dof_map: DofMap,
}

impl WeakCoeffVector {
    pub fn local(&self, mesh: &Mesh, element: usize) -> DVector<f64> {
        let idx = self.dof_map.local_to_global(mesh, element);
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.values[i]))
    }

    pub fn interior(&self, element: usize) -> &[f64] {
        &self.values[self.dof_map.element_range(element)]
    }
}

/// Per-element operators for one configuration.
pub struct ElementOperators {
    pub layout: LocalDofLayout,
    pub gradient: LocalWeakGradient,
    /// Stiffness plus stabilizer.
    pub matrix: DMatrix<f64>,
}

pub fn element_operators(mesh: &Mesh, config: &ElementConfig, element: usize) -> Result<ElementOperators> {
    let geom = mesh.element_geometry(element)?;
    let layout = LocalDofLayout::new(config.l, config.s, geom.edges.len());
    let policy = config.policy();
    let gradient = weak_gradient_with(&geom, &layout, &config.grad, &policy)?;
    let mut matrix = local_stiffness(&gradient);
    if !config.j.is_free() {
        matrix += local_stabilizer(&geom, &layout, config.j, policy.edge)?;
    }
    Ok(ElementOperators {
        layout,
        gradient,
        matrix,
    })
}

fn load_vector(mesh: &Mesh, config: &ElementConfig, element: usize, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<f64>> {
    let geom = mesh.element_geometry(element)?;
    let frame = ScaledFrame::of(&geom);
    let rule = element_rule(&geom, config.policy().error)?;
    let mut out = vec![0.0; crate::polyspace::scalar_dim(config.l)];
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let fv = f(p);
        for (o, phi) in out.iter_mut().zip(eval_scalar_basis(&frame, config.l, p)) {
            *o += w * fv * phi;
        }
    }
    Ok(out)
}

/// Boundary values `Q_b g` for every pinned entry, in DOF order.
pub fn pinned_values(
    mesh: &Mesh,
    config: &ElementConfig,
    dof_map: &DofMap,
    g: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<Vec<(usize, f64)>> {
    let mut pinned = Vec::with_capacity(dof_map.n_total - dof_map.n_unknowns);
    for (id, e) in mesh.edges.iter().enumerate() {
        if !e.boundary {
            continue;
        }
        let geom = mesh.edge_geometry(id)?;
        let qb = project_qb(&geom, g, config.s, config.policy().error)?;
        for (dof, v) in dof_map.edge_range(id).zip(qb.iter()) {
            pinned.push((dof, *v));
        }
    }
    pinned.sort_by_key(|&(d, _)| d);
    Ok(pinned)
}

/// Assembles `(grad_w u, grad_w v) + s(u, v) = (f, v_0)` with `u_b = Q_b g` on the boundary.
pub fn assemble(
    mesh: &Mesh,
    config: &ElementConfig,
    f: &(dyn Fn(Point) -> f64 + Sync),
    g: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<LinearSystem> {
    config.validate()?;
    let dof_map = build_dof_map(mesh, config);
    let locals: Vec<(DMatrix<f64>, Vec<f64>)> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| Ok((element_operators(mesh, config, e)?.matrix, load_vector(mesh, config, e, f)?)))
        .collect::<Result<_>>()?;

    let pinned = pinned_values(mesh, config, &dof_map, g)?;
    let mut pinned_value = vec![0.0; dof_map.n_total - dof_map.n_unknowns];
    for &(d, v) in &pinned {
        pinned_value[d - dof_map.n_unknowns] = v;
    }

    let mut rhs = vec![0.0; dof_map.n_total];
    let estimate: usize = locals.iter().map(|(m, _)| m.len()).sum();
    let mut triplets = Vec::with_capacity(estimate + pinned.len());
    for (e, (mat, load)) in locals.iter().enumerate() {
        let idx = dof_map.local_to_global(mesh, e);
        for (i, &a) in dof_map.element_range(e).zip(load.iter()) {
            rhs[i] += a;
        }
        for (r, &gi) in idx.iter().enumerate() {
            if dof_map.is_pinned(gi) {
                continue;
            }
            for (c, &gj) in idx.iter().enumerate() {
                let v = mat[(r, c)];
                if dof_map.is_pinned(gj) {
                    rhs[gi] -= v * pinned_value[gj - dof_map.n_unknowns];
                } else {
                    triplets.push((gi, gj, v));
                }
            }
        }
    }
    for &(d, v) in &pinned {
        triplets.push((d, d, 1.0));
        rhs[d] = v;
    }
    Ok(LinearSystem {
        matrix: CsrMatrix::from_triplets(dof_map.n_total, triplets),
        rhs,
        pinned,
        dof_map,
    })
}

pub fn solve(system: &LinearSystem, opts: &SolverOptions) -> (WeakCoeffVector, SolveReport) {
    let (mut x, mut report) = pcg(&system.matrix, &system.rhs, opts);
    if report.breakdown.is_none() && opts.singularity_probe && !probe_nonsingular(system, opts) {
        report.breakdown = Some(Breakdown::Singular);
    }
    for &(d, v) in &system.pinned {
        x[d] = v;
    }
    (
        WeakCoeffVector {
            values: x,
            dof_map: system.dof_map.clone(),
        },
        report,
    )
}

const PROBE_SEED: u64 = 0x5eed_1e55;
const PROBE_TOL: f64 = 1e-8;

/// Solves against a seeded random right-hand side on the unknown rows. A
/// consistent singular system still converges for its own load, but almost
/// surely not for this one.
pub fn probe_nonsingular(system: &LinearSystem, opts: &SolverOptions) -> bool {
    let n_unknowns = system.dof_map.n_unknowns;
    if n_unknowns == 0 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut b = vec![0.0; system.matrix.n];
    for v in b.iter_mut().take(n_unknowns) {
        *v = rng.random_range(-1.0..1.0);
    }
    let probe = SolverOptions {
        tol: opts.tol.max(PROBE_TOL),
        ..*opts
    };
    let (_, report) = pcg(&system.matrix, &b, &probe);
    report.converged && report.breakdown.is_none()
}

/// `||A x - b||_inf / ||b||_inf`.
pub fn residual_check(system: &LinearSystem, solution: &WeakCoeffVector) -> f64 {
    let ax = system.matrix.matvec(&solution.values);
    let num = ax
        .iter()
        .zip(&system.rhs)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let den = system.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
