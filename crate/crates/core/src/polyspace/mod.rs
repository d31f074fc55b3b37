//! Polynomial bases for weak functions and weak gradients.
//!
//! Every basis is a scaled monomial basis centered at the element centroid:
//! `x_hat = (x - x_T) / h_T`, `y_hat = (y - y_T) / h_T`. Scalar monomials
//! `x_hat^a y_hat^b` are ordered by total degree, then by `a` descending.
//! Edge monomials use the centered arclength `((t - t_mid) / |e|)^q` along the
//! global edge direction, so both neighbours of an edge see the same basis.

pub mod quadrature;

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, WgError};
use crate::mesh::{EdgeGeometry, ElementGeometry, Point};

pub use quadrature::{element_rule, quad_edge, quad_element, LineRule, QuadRule};

/// Centering and scaling shared by every basis on one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFrame {
    pub center: Point,
    pub h: f64,
}

impl ScaledFrame {
    pub fn of(element: &ElementGeometry) -> Self {
        ScaledFrame {
            center: element.centroid,
            h: element.diameter,
        }
    }

    #[inline]
    pub fn local(&self, p: Point) -> Point {
        [(p[0] - self.center[0]) / self.h, (p[1] - self.center[1]) / self.h]
    }
}

pub fn scalar_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs `(a, b)` of the degree-`k` scalar basis, in basis order.
pub fn monomial_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(scalar_dim(k));
    for d in 0..=k {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// Powers `t^0 ..= t^n`.
#[inline]
fn powers(t: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    for _ in 0..=n {
        p.push(acc);
        acc *= t;
    }
    p
}

fn scaled_monomials(local: Point, k: usize) -> Vec<f64> {
    let px = powers(local[0], k);
    let py = powers(local[1], k);
    monomial_exponents(k)
        .into_iter()
        .map(|(a, b)| px[a] * py[b])
        .collect()
}

pub fn eval_scalar_basis(frame: &ScaledFrame, k: usize, p: Point) -> Vec<f64> {
    scaled_monomials(frame.local(p), k)
}

/// Physical-coordinate gradients of the scalar basis.
pub fn eval_scalar_basis_gradients(frame: &ScaledFrame, k: usize, p: Point) -> Vec<Point> {
    let l = frame.local(p);
    let px = powers(l[0], k);
    let py = powers(l[1], k);
    monomial_exponents(k)
        .into_iter()
        .map(|(a, b)| {
            let dx = if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 };
            let dy = if b > 0 { b as f64 * px[a] * py[b - 1] } else { 0.0 };
            [dx / frame.h, dy / frame.h]
        })
        .collect()
}

/// Edge basis `xi^q`, `q = 0..=s`, at the centered normalized parameter `xi`.
pub fn edge_basis_at(s: usize, xi: f64) -> Vec<f64> {
    powers(xi, s)
}

/// Edge basis at a physical point; rejects points off the segment.
pub fn eval_edge_basis(edge: &EdgeGeometry, s: usize, p: Point) -> Result<Vec<f64>> {
    Ok(edge_basis_at(s, edge.param_of(p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GradFamily {
    FullPoly,
    RaviartThomas,
}

/// The local vector space used to represent weak gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradientSpaceDesc {
    pub family: GradFamily,
    pub degree: usize,
}

impl GradientSpaceDesc {
    pub fn full(degree: usize) -> Self {
        GradientSpaceDesc {
            family: GradFamily::FullPoly,
            degree,
        }
    }

    pub fn rt(degree: usize) -> Self {
        GradientSpaceDesc {
            family: GradFamily::RaviartThomas,
            degree,
        }
    }

    pub fn dim(&self) -> usize {
        let m = self.degree;
        match self.family {
            GradFamily::FullPoly => (m + 1) * (m + 2),
            GradFamily::RaviartThomas => (m + 1) * (m + 2) + m + 1,
        }
    }

    /// Highest polynomial degree appearing in a component.
    pub fn poly_degree(&self) -> usize {
        match self.family {
            GradFamily::FullPoly => self.degree,
            GradFamily::RaviartThomas => self.degree + 1,
        }
    }

    pub fn family_tag(&self) -> &'static str {
        match self.family {
            GradFamily::FullPoly => "P",
            GradFamily::RaviartThomas => "RT",
        }
    }
}

impl fmt::Display for GradientSpaceDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family_tag(), self.degree)
    }
}

impl FromStr for GradientSpaceDesc {
    type Err = WgError;

    /// Parses `P:<m>` or `RT:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, deg) = s
            .split_once(':')
            .ok_or_else(|| WgError::Parse(format!("gradient space `{s}` must look like P:<m> or RT:<m>")))?;
        let degree: usize = deg
            .trim()
            .parse()
            .map_err(|_| WgError::Parse(format!("bad gradient degree `{deg}`")))?;
        match fam.trim() {
            "P" | "p" => Ok(Self::full(degree)),
            "RT" | "rt" => Ok(Self::rt(degree)),
            other => Err(WgError::Parse(format!("unknown gradient family `{other}`"))),
        }
    }
}

/// Vector basis values at `p`: `(phi_i, 0)` for all scalar monomials of
/// degree `<= m`, then `(0, phi_i)`, then (RT only) `(x_hat, y_hat) * p_q`
/// over homogeneous monomials of degree `m`.
pub fn eval_gradient_basis(frame: &ScaledFrame, desc: &GradientSpaceDesc, p: Point) -> Vec<Point> {
    let l = frame.local(p);
    let m = desc.degree;
    let phi = scaled_monomials(l, m);
    let mut out = Vec::with_capacity(desc.dim());
    out.extend(phi.iter().map(|&v| [v, 0.0]));
    out.extend(phi.iter().map(|&v| [0.0, v]));
    if desc.family == GradFamily::RaviartThomas {
        let start = scalar_dim(m) - (m + 1);
        out.extend(phi[start..].iter().map(|&v| [l[0] * v, l[1] * v]));
    }
    out
}

/// Analytic divergences of [`eval_gradient_basis`], in the same order.
pub fn divergence_gradient_basis(frame: &ScaledFrame, desc: &GradientSpaceDesc, p: Point) -> Vec<f64> {
    let l = frame.local(p);
    let m = desc.degree;
    let px = powers(l[0], m);
    let py = powers(l[1], m);
    let exps = monomial_exponents(m);
    let mut out = Vec::with_capacity(desc.dim());
    out.extend(exps.iter().map(|&(a, b)| {
        if a > 0 {
            a as f64 * px[a - 1] * py[b] / frame.h
        } else {
            0.0
        }
    }));
    out.extend(exps.iter().map(|&(a, b)| {
        if b > 0 {
            b as f64 * px[a] * py[b - 1] / frame.h
        } else {
            0.0
        }
    }));
    if desc.family == GradFamily::RaviartThomas {
        // div(x_hat * x_hat^a y_hat^b, y_hat * x_hat^a y_hat^b) = (a + b + 2) x_hat^a y_hat^b / h
        let start = scalar_dim(m) - (m + 1);
        out.extend(exps[start..].iter().map(|&(a, b)| (m + 2) as f64 * px[a] * py[b] / frame.h));
    }
    out
}
