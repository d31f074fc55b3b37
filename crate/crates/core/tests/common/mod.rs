//! Brute-force dense reference for the weak Galerkin system.
//!
//! Everything here is rebuilt from the defining relations with its own
//! quadrature (Golub-Welsch), its own bases and a dense global matrix, so it
//! shares no numerical code with the crate beyond the mesh connectivity.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use wglab_core::mesh::Mesh;

pub type P2 = [f64; 2];

/// Gauss-Legendre nodes and weights on [0, 1] from the Jacobi matrix.
pub fn golub_welsch(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Points and weights on a convex polygon with 3 or 4 vertices, exact for
/// polynomials of fairly high degree (`n` points per direction).
pub fn polygon_rule(v: &[P2], n: usize) -> Vec<(P2, f64)> {
    let g = golub_welsch(n);
    let mut out = Vec::new();
    match v.len() {
        3 => {
            // collapse the square onto the triangle: x = v0 + u (v1-v0) + (1-u) w (v2-v0)
            let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
            let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
            let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
            for &(a, wa) in &g {
                for &(b, wb) in &g {
                    let (s, t) = (a, (1.0 - a) * b);
                    let p = [v[0][0] + s * e1[0] + t * e2[0], v[0][1] + s * e1[1] + t * e2[1]];
                    out.push((p, wa * wb * (1.0 - a) * det));
                }
            }
        }
        4 => {
            // bilinear map of the unit square; exact for the affine cells used here
            for &(a, wa) in &g {
                for &(b, wb) in &g {
                    let p = bilinear(v, a, b);
                    let ja = [
                        (1.0 - b) * (v[1][0] - v[0][0]) + b * (v[2][0] - v[3][0]),
                        (1.0 - b) * (v[1][1] - v[0][1]) + b * (v[2][1] - v[3][1]),
                    ];
                    let jb = [
                        (1.0 - a) * (v[3][0] - v[0][0]) + a * (v[2][0] - v[1][0]),
                        (1.0 - a) * (v[3][1] - v[0][1]) + a * (v[2][1] - v[1][1]),
                    ];
                    out.push((p, wa * wb * (ja[0] * jb[1] - ja[1] * jb[0]).abs()));
                }
            }
        }
        k => panic!("unsupported polygon with {k} vertices"),
    }
    out
}

fn bilinear(v: &[P2], a: f64, b: f64) -> P2 {
    let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), a * b, (1.0 - a) * b];
    let mut p = [0.0, 0.0];
    for k in 0..4 {
        p[0] += w[k] * v[k][0];
        p[1] += w[k] * v[k][1];
    }
    p
}

pub fn centroid(v: &[P2]) -> P2 {
    let rule = polygon_rule(v, 4);
    let area: f64 = rule.iter().map(|r| r.1).sum();
    let mut c = [0.0, 0.0];
    for (p, w) in &rule {
        c[0] += w * p[0] / area;
        c[1] += w * p[1] / area;
    }
    c
}

pub fn diameter(v: &[P2]) -> f64 {
    let mut d: f64 = 0.0;
    for a in v {
        for b in v {
            d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    d
}

/// Exponents `(a, b)` of degree `<= k`, grouped by total degree with `a` descending.
pub fn exponents(k: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for d in 0..=k as i32 {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

fn mono(x: f64, y: f64, (a, b): (i32, i32)) -> f64 {
    x.powi(a) * y.powi(b)
}

/// `((x - c) / h)^a ((y - c) / h)^b`.
pub fn interior_basis(c: P2, h: f64, k: usize, p: P2) -> Vec<f64> {
    let (x, y) = ((p[0] - c[0]) / h, (p[1] - c[1]) / h);
    exponents(k).into_iter().map(|e| mono(x, y, e)).collect()
}

/// Vector basis of `[P_m]^2` (or `RT_m`) in plain centred monomials, with divergences.
pub fn vector_basis(c: P2, m: usize, rt: bool, p: P2) -> Vec<(P2, f64)> {
    let (x, y) = (p[0] - c[0], p[1] - c[1]);
    let d = |v: f64, e: i32| if e == 0 { 0.0 } else { e as f64 * v.powi(e - 1) };
    let mut out = Vec::new();
    for (a, b) in exponents(m) {
        out.push(([mono(x, y, (a, b)), 0.0], d(x, a) * y.powi(b)));
    }
    for (a, b) in exponents(m) {
        out.push(([0.0, mono(x, y, (a, b))], x.powi(a) * d(y, b)));
    }
    if rt {
        for a in (0..=m as i32).rev() {
            let b = m as i32 - a;
            // (x, y) x^a y^b has divergence (m + 2) x^a y^b
            let q = mono(x, y, (a, b));
            out.push(([x * q, y * q], (m as f64 + 2.0) * q));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub enum Grad {
    Full(usize),
    Rt(usize),
}

impl Grad {
    fn parts(self) -> (usize, bool) {
        match self {
            Grad::Full(m) => (m, false),
            Grad::Rt(m) => (m, true),
        }
    }
}

/// Dense reference matrix with boundary rows and columns replaced by identity.
/// `j = None` drops the stabilizer.
pub fn reference_matrix(mesh: &Mesh, l: usize, s: usize, grad: Grad, j: Option<i32>) -> DMatrix<f64> {
    let nb0 = exponents(l).len();
    let nbe = s + 1;
    let n_el = mesh.elements.len();
    // element blocks, interior edges, then boundary edges
    let mut offset = vec![0usize; mesh.edges.len()];
    let mut next = n_el * nb0;
    for (id, e) in mesh.edges.iter().enumerate() {
        if e.elements.len() == 2 {
            offset[id] = next;
            next += nbe;
        }
    }
    let n_free = next;
    for (id, e) in mesh.edges.iter().enumerate() {
        if e.elements.len() == 1 {
            offset[id] = next;
            next += nbe;
        }
    }
    let n = next;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let (m, rt) = grad.parts();

    for (eid, el) in mesh.elements.iter().enumerate() {
        let v: Vec<P2> = el.vertices.iter().map(|&i| mesh.vertices[i]).collect();
        let c = centroid(&v);
        let h = diameter(&v);
        let nv = v.len();
        // local edges: CCW sides, identified with the mesh edge of the same vertex pair
        let mut sides = Vec::new();
        for k in 0..nv {
            let (ia, ib) = (el.vertices[k], el.vertices[(k + 1) % nv]);
            let (lo, hi) = (ia.min(ib), ia.max(ib));
            let id = mesh
                .edges
                .iter()
                .position(|e| e.vertices == [lo, hi])
                .expect("edge");
            let (pa, pb) = (mesh.vertices[ia], mesh.vertices[ib]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            sides.push((id, mesh.vertices[lo], mesh.vertices[hi], len, normal));
        }
        let mut dofs: Vec<usize> = (eid * nb0..(eid + 1) * nb0).collect();
        for side in &sides {
            dofs.extend(offset[side.0]..offset[side.0] + nbe);
        }
        let nloc = dofs.len();

        let area_rule = polygon_rule(&v, 12);
        let line = golub_welsch(12);
        let ng = vector_basis(c, m, rt, c).len();
        let mut mg = DMatrix::<f64>::zeros(ng, ng);
        let mut rhs = DMatrix::<f64>::zeros(ng, nloc);
        for (p, w) in &area_rule {
            let q = vector_basis(c, m, rt, *p);
            let phi = interior_basis(c, h, l, *p);
            for i in 0..ng {
                for k in 0..ng {
                    mg[(i, k)] += w * (q[i].0[0] * q[k].0[0] + q[i].0[1] * q[k].0[1]);
                }
                for (b, pb) in phi.iter().enumerate() {
                    rhs[(i, b)] -= w * pb * q[i].1;
                }
            }
        }
        let mut stab = DMatrix::<f64>::zeros(nloc, nloc);
        for (k, &(_, lo, hi, len, normal)) in sides.iter().enumerate() {
            for &(t, wt) in &line {
                let p = [lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])];
                let w = wt * len;
                let psi: Vec<f64> = (0..nbe).map(|r| (t - 0.5).powi(r as i32)).collect();
                let q = vector_basis(c, m, rt, p);
                for i in 0..ng {
                    let qn = q[i].0[0] * normal[0] + q[i].0[1] * normal[1];
                    for r in 0..nbe {
                        rhs[(i, nb0 + k * nbe + r)] += w * psi[r] * qn;
                    }
                }
                if j.is_some() {
                    // jump v0 - vb as a row over local dofs (l = s, so no edge projection is needed)
                    let mut jump = vec![0.0; nloc];
                    for (b, pb) in interior_basis(c, h, l, p).iter().enumerate() {
                        jump[b] = *pb;
                    }
                    for r in 0..nbe {
                        jump[nb0 + k * nbe + r] = -psi[r];
                    }
                    for x in 0..nloc {
                        for y in 0..nloc {
                            stab[(x, y)] += w * jump[x] * jump[y];
                        }
                    }
                }
            }
        }
        let wmat = mg.clone().lu().solve(&rhs).expect("gradient mass matrix");
        let mut local = wmat.transpose() * &mg * &wmat;
        if let Some(j) = j {
            local += stab * h.powi(j);
        }
        for (x, &gx) in dofs.iter().enumerate() {
            for (y, &gy) in dofs.iter().enumerate() {
                a[(gx, gy)] += local[(x, y)];
            }
        }
    }
    for d in n_free..n {
        for k in 0..n {
            a[(d, k)] = 0.0;
            a[(k, d)] = 0.0;
        }
        a[(d, d)] = 1.0;
    }
    a
}
