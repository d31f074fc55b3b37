//! Gauss-Legendre rules on the unit interval, tensor rules on the unit
//! square and collapsed (Duffy) tensor rules on the unit right triangle.

use crate::error::{Result, WgError};
use crate::mesh::{EdgeGeometry, ElementGeometry, MeshKind, Point};

pub const MAX_EXACTNESS: usize = 40;

/// One-dimensional rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Two-dimensional rule; reference or physical depending on where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration
/// on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        Err(WgError::UnsupportedExactness(exactness))
    } else {
        Ok(())
    }
}

fn unit_interval(points: usize, exactness: usize) -> LineRule {
    let (x, w) = gauss_legendre(points.max(1));
    LineRule {
        nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
        exactness,
    }
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `exactness`.
pub fn quad_edge(exactness: usize) -> Result<LineRule> {
    check_exactness(exactness)?;
    Ok(unit_interval(exactness / 2 + 1, exactness))
}

/// Reference rule on the unit square `[0,1]^2` (rectangular kind) or the
/// unit right triangle `(0,0),(1,0),(0,1)` (triangular kind).
pub fn quad_element(kind: MeshKind, exactness: usize) -> Result<QuadRule> {
    check_exactness(exactness)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match kind {
        MeshKind::Rectangular => {
            let g = unit_interval(exactness / 2 + 1, exactness);
            for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
                for (&x, &wx) in g.nodes.iter().zip(&g.weights) {
                    points.push([x, y]);
                    weights.push(wx * wy);
                }
            }
        }
        MeshKind::Triangular => {
            // (u, v) in [0,1]^2 -> (u, v(1-u)); Jacobian 1-u raises the
            // degree in u by one.
            let gu = unit_interval((exactness + 1) / 2 + 1, exactness + 1);
            let gv = unit_interval(exactness / 2 + 1, exactness);
            for (&u, &wu) in gu.nodes.iter().zip(&gu.weights) {
                for (&v, &wv) in gv.nodes.iter().zip(&gv.weights) {
                    points.push([u, v * (1.0 - u)]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
    }
    Ok(QuadRule {
        points,
        weights,
        exactness,
    })
}

impl LineRule {
    /// Maps the rule onto a physical edge; weights sum to the edge length.
    pub fn on_edge(&self, edge: &EdgeGeometry) -> QuadRule {
        QuadRule {
            points: self.nodes.iter().map(|&t| edge.point_at(t * edge.length)).collect(),
            weights: self.weights.iter().map(|w| w * edge.length).collect(),
            exactness: self.exactness,
        }
    }
}

/// Physical rule on an element by the affine map from the reference domain.
/// Rectangles are treated as parallelograms spanned at vertex 0.
pub fn element_rule(element: &ElementGeometry, exactness: usize) -> Result<QuadRule> {
    let v = &element.vertices;
    let (kind, e1, e2) = if element.is_triangle() {
        (MeshKind::Triangular, sub(v[1], v[0]), sub(v[2], v[0]))
    } else {
        (MeshKind::Rectangular, sub(v[1], v[0]), sub(v[3], v[0]))
    };
    let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let reference = quad_element(kind, exactness)?;
    Ok(QuadRule {
        points: reference
            .points
            .iter()
            .map(|p| {
                [
                    v[0][0] + p[0] * e1[0] + p[1] * e2[0],
                    v[0][1] + p[0] * e1[1] + p[1] * e2[1],
                ]
            })
            .collect(),
        weights: reference.weights.iter().map(|w| w * det).collect(),
        exactness,
    })
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}
