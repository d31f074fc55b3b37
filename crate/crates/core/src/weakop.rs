//! Element-local weak Galerkin operators: the discrete weak gradient, the
//! local stiffness, the edge stabilizer and the L2 projections.
//!
//! Local coefficient vectors are laid out as the interior block (scalar basis
//! of degree `l`) followed by one block of `s + 1` edge coefficients per local
//! edge, in local edge order.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WgError};
use crate::mesh::{EdgeGeometry, ElementGeometry, Point};
use crate::polyspace::{
    divergence_gradient_basis, edge_basis_at, element_rule, eval_gradient_basis, eval_scalar_basis,
    quad_edge, scalar_dim, GradientSpaceDesc, ScaledFrame,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDofLayout {
    pub interior_degree: usize,
    pub edge_degree: usize,
    pub n_interior: usize,
    pub n_edges: usize,
}

impl LocalDofLayout {
    pub fn new(interior_degree: usize, edge_degree: usize, n_edges: usize) -> Self {
        LocalDofLayout {
            interior_degree,
            edge_degree,
            n_interior: scalar_dim(interior_degree),
            n_edges,
        }
    }

    pub fn edge_block_len(&self) -> usize {
        self.edge_degree + 1
    }

    pub fn interior_block(&self) -> Range<usize> {
        0..self.n_interior
    }

    pub fn edge_block(&self, k: usize) -> Range<usize> {
        let start = self.n_interior + k * self.edge_block_len();
        start..start + self.edge_block_len()
    }

    pub fn n_local(&self) -> usize {
        self.n_interior + self.n_edges * self.edge_block_len()
    }
}

/// Stabilizer exponent `j` in `h_T^j <Q_b u_0 - u_b, Q_b v_0 - v_b>`.
/// `Free` is the stabilizer-free formulation (`j = inf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilizerExponent {
    Finite(i32),
    Free,
}

impl StabilizerExponent {
    pub fn finite(j: i32) -> Result<Self> {
        if (-1..=1).contains(&j) {
            Ok(StabilizerExponent::Finite(j))
        } else {
            Err(WgError::UnsupportedStabilizer(j.to_string()))
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, StabilizerExponent::Free)
    }

    /// Sort key used when listing table rows (`-1, 0, 1, inf`).
    pub fn order_key(&self) -> i32 {
        match self {
            StabilizerExponent::Finite(j) => *j,
            StabilizerExponent::Free => i32::MAX,
        }
    }
}

impl fmt::Display for StabilizerExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilizerExponent::Finite(j) => write!(f, "{j}"),
            StabilizerExponent::Free => f.write_str("inf"),
        }
    }
}

impl FromStr for StabilizerExponent {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(StabilizerExponent::Free),
            t => {
                let j: i32 = t
                    .parse()
                    .map_err(|_| WgError::UnsupportedStabilizer(t.to_string()))?;
                StabilizerExponent::finite(j)
            }
        }
    }
}

/// Quadrature exactness degrees used by the local operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadPolicy {
    pub element: usize,
    pub edge: usize,
    /// For non-polynomial data: load vectors, projections of exact solutions, errors.
    pub error: usize,
}

impl QuadPolicy {
    pub fn new(interior_degree: usize, edge_degree: usize, desc: &GradientSpaceDesc) -> Self {
        let g = desc.poly_degree();
        QuadPolicy {
            element: 2 * (interior_degree.max(g) + 1),
            edge: (2 * edge_degree.max(g) + 1).max(interior_degree + edge_degree),
            error: 2 * (interior_degree + 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeakGradient {
    /// `dim G x n_local`; column `c` holds the gradient-space coefficients of
    /// the weak gradient of local basis function `c`.
    pub matrix: DMatrix<f64>,
    /// Gradient-space mass matrix.
    pub mass: DMatrix<f64>,
    /// Right-hand side of the defining relation, one column per local basis function.
    pub rhs: DMatrix<f64>,
}

impl LocalWeakGradient {
    /// Weak-gradient coefficients for a local coefficient vector.
    pub fn apply(&self, local: &DVector<f64>) -> DVector<f64> {
        &self.matrix * local
    }
}

fn solve_dense(mass: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    mass.clone()
        .lu()
        .solve(rhs)
        .ok_or(WgError::SingularLocalMatrix(what))
}

pub fn weak_gradient(
    element: &ElementGeometry,
    layout: &LocalDofLayout,
    desc: &GradientSpaceDesc,
) -> Result<LocalWeakGradient> {
    let policy = QuadPolicy::new(layout.interior_degree, layout.edge_degree, desc);
    weak_gradient_with(element, layout, desc, &policy)
}

/// Solves `(grad_w v, q)_T = -(v_0, div q)_T + <v_b, q.n>_{dT}` for every
/// local basis function at once.
pub fn weak_gradient_with(
    element: &ElementGeometry,
    layout: &LocalDofLayout,
    desc: &GradientSpaceDesc,
    policy: &QuadPolicy,
) -> Result<LocalWeakGradient> {
    let frame = ScaledFrame::of(element);
    let ng = desc.dim();
    let mut mass = DMatrix::zeros(ng, ng);
    let mut rhs = DMatrix::zeros(ng, layout.n_local());

    let rule = element_rule(element, policy.element)?;
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let q = eval_gradient_basis(&frame, desc, p);
        let div = divergence_gradient_basis(&frame, desc, p);
        let phi = eval_scalar_basis(&frame, layout.interior_degree, p);
        for i in 0..ng {
            for k in i..ng {
                mass[(i, k)] += w * (q[i][0] * q[k][0] + q[i][1] * q[k][1]);
            }
            for (a, &pa) in phi.iter().enumerate() {
                rhs[(i, a)] -= w * pa * div[i];
            }
        }
    }
    for i in 0..ng {
        for k in 0..i {
            mass[(i, k)] = mass[(k, i)];
        }
    }

    let line = quad_edge(policy.edge)?;
    for (k, (edge, sign)) in element.edges.iter().enumerate() {
        let n = [sign * edge.normal[0], sign * edge.normal[1]];
        let block = layout.edge_block(k);
        for (&t, &wt) in line.nodes.iter().zip(&line.weights) {
            let w = wt * edge.length;
            let p = edge.point_at(t * edge.length);
            let psi = edge_basis_at(layout.edge_degree, t - 0.5);
            let q = eval_gradient_basis(&frame, desc, p);
            for i in 0..ng {
                let qn = q[i][0] * n[0] + q[i][1] * n[1];
                for (r, &pr) in psi.iter().enumerate() {
                    rhs[(i, block.start + r)] += w * pr * qn;
                }
            }
        }
    }

    let matrix = solve_dense(&mass, &rhs, "gradient-space mass matrix")?;
    Ok(LocalWeakGradient { matrix, mass, rhs })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for k in 0..i {
            let v = 0.5 * (m[(i, k)] + m[(k, i)]);
            m[(i, k)] = v;
            m[(k, i)] = v;
        }
    }
}

/// `W^T M_G W`, the element contribution of `(grad_w u, grad_w v)_T`.
pub fn local_stiffness(grad: &LocalWeakGradient) -> DMatrix<f64> {
    let mut a = grad.matrix.transpose() * (&grad.mass * &grad.matrix);
    symmetrize(&mut a);
    a
}

/// Edge mass matrix of the `P_s(e)` basis.
pub fn edge_mass(edge: &EdgeGeometry, s: usize, exactness: usize) -> Result<DMatrix<f64>> {
    let line = quad_edge(exactness.max(2 * s))?;
    let mut m = DMatrix::zeros(s + 1, s + 1);
    for (&t, &wt) in line.nodes.iter().zip(&line.weights) {
        let psi = edge_basis_at(s, t - 0.5);
        for i in 0..=s {
            for k in 0..=s {
                m[(i, k)] += wt * edge.length * psi[i] * psi[k];
            }
        }
    }
    Ok(m)
}

/// Maps local coefficients to coefficients of `Q_b(v_0|_e) - v_b` on local edge `k`.
pub fn trace_jump_operator(
    element: &ElementGeometry,
    layout: &LocalDofLayout,
    k: usize,
    exactness: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let frame = ScaledFrame::of(element);
    let (edge, _) = &element.edges[k];
    let s = layout.edge_degree;
    let me = edge_mass(edge, s, exactness)?;
    let mut cross = DMatrix::zeros(s + 1, layout.n_interior);
    let line = quad_edge(exactness)?;
    for (&t, &wt) in line.nodes.iter().zip(&line.weights) {
        let w = wt * edge.length;
        let psi = edge_basis_at(s, t - 0.5);
        let phi = eval_scalar_basis(&frame, layout.interior_degree, edge.point_at(t * edge.length));
        for (r, &pr) in psi.iter().enumerate() {
            for (a, &pa) in phi.iter().enumerate() {
                cross[(r, a)] += w * pr * pa;
            }
        }
    }
    let trace = solve_dense(&me, &cross, "edge mass matrix")?;
    let mut jump = DMatrix::zeros(s + 1, layout.n_local());
    jump.view_mut((0, 0), (s + 1, layout.n_interior)).copy_from(&trace);
    let block = layout.edge_block(k);
    for r in 0..=s {
        jump[(r, block.start + r)] = -1.0;
    }
    Ok((jump, me))
}

/// `h_T^j sum_e R_e^T M_e R_e`; the zero matrix for the stabilizer-free case.
pub fn local_stabilizer(
    element: &ElementGeometry,
    layout: &LocalDofLayout,
    j: StabilizerExponent,
    exactness: usize,
) -> Result<DMatrix<f64>> {
    let n = layout.n_local();
    let mut s = DMatrix::zeros(n, n);
    let StabilizerExponent::Finite(j) = j else {
        return Ok(s);
    };
    for k in 0..layout.n_edges {
        let (jump, me) = trace_jump_operator(element, layout, k, exactness)?;
        s += jump.transpose() * (&me * &jump);
    }
    s *= element.diameter.powi(j);
    symmetrize(&mut s);
    Ok(s)
}

/// L2 projection onto `P_l(T)` with an element rule of the given exactness.
pub fn project_q0(
    element: &ElementGeometry,
    f: impl Fn(Point) -> f64,
    degree: usize,
    exactness: usize,
) -> Result<DVector<f64>> {
    let frame = ScaledFrame::of(element);
    let n = scalar_dim(degree);
    let rule = element_rule(element, exactness.max(2 * degree))?;
    let mut mass = DMatrix::zeros(n, n);
    let mut moments = DMatrix::zeros(n, 1);
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = eval_scalar_basis(&frame, degree, p);
        let fv = f(p);
        for i in 0..n {
            moments[(i, 0)] += w * fv * phi[i];
            for k in 0..n {
                mass[(i, k)] += w * phi[i] * phi[k];
            }
        }
    }
    Ok(solve_dense(&mass, &moments, "element mass matrix")?.column(0).into_owned())
}

/// L2 projection onto `P_s(e)` in the global edge parameterization.
pub fn project_qb(
    edge: &EdgeGeometry,
    f: impl Fn(Point) -> f64,
    degree: usize,
    exactness: usize,
) -> Result<DVector<f64>> {
    let me = edge_mass(edge, degree, exactness)?;
    let line = quad_edge(exactness.max(2 * degree))?;
    let mut moments = DMatrix::zeros(degree + 1, 1);
    for (&t, &wt) in line.nodes.iter().zip(&line.weights) {
        let w = wt * edge.length;
        let psi = edge_basis_at(degree, t - 0.5);
        let fv = f(edge.point_at(t * edge.length));
        for (r, &pr) in psi.iter().enumerate() {
            moments[(r, 0)] += w * fv * pr;
        }
    }
    Ok(solve_dense(&me, &moments, "edge mass matrix")?.column(0).into_owned())
}

/// L2 projection of a vector field onto the gradient space.
pub fn project_gm(
    element: &ElementGeometry,
    field: impl Fn(Point) -> Point,
    desc: &GradientSpaceDesc,
    exactness: usize,
) -> Result<DVector<f64>> {
    let frame = ScaledFrame::of(element);
    let n = desc.dim();
    let rule = element_rule(element, exactness.max(2 * desc.poly_degree()))?;
    let mut mass = DMatrix::zeros(n, n);
    let mut moments = DMatrix::zeros(n, 1);
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let q = eval_gradient_basis(&frame, desc, p);
        let fv = field(p);
        for i in 0..n {
            moments[(i, 0)] += w * (fv[0] * q[i][0] + fv[1] * q[i][1]);
            for k in 0..n {
                mass[(i, k)] += w * (q[i][0] * q[k][0] + q[i][1] * q[k][1]);
            }
        }
    }
    Ok(solve_dense(&mass, &moments, "gradient-space mass matrix")?.column(0).into_owned())
}

/// Local coefficient vector of `Q_h u` on one element.
pub fn project_local(
    element: &ElementGeometry,
    layout: &LocalDofLayout,
    f: impl Fn(Point) -> f64,
    exactness: usize,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(layout.n_local());
    let q0 = project_q0(element, &f, layout.interior_degree, exactness)?;
    out.rows_mut(0, layout.n_interior).copy_from(&q0);
    for (k, (edge, _)) in element.edges.iter().enumerate() {
        let qb = project_qb(edge, &f, layout.edge_degree, exactness)?;
        out.rows_mut(layout.edge_block(k).start, layout.edge_block_len())
            .copy_from(&qb);
    }
    Ok(out)
}

/// Evaluates a gradient-space coefficient vector at a point.
pub fn eval_gradient_field(
    element: &ElementGeometry,
    desc: &GradientSpaceDesc,
    coeffs: &DVector<f64>,
    p: Point,
) -> Point {
    let frame = ScaledFrame::of(element);
    let q = eval_gradient_basis(&frame, desc, p);
    let mut out = [0.0, 0.0];
    for (c, qi) in coeffs.iter().zip(q) {
        out[0] += c * qi[0];
        out[1] += c * qi[1];
    }
    out
}
