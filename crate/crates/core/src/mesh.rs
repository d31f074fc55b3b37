//! Uniform rectangular and triangular refinement hierarchies on the unit square.
//!
//! Level `n` is a `2^(n-1) x 2^(n-1)` grid of squares. The triangular kind
//! splits every square along its top-left to bottom-right diagonal. Edges are
//! deduplicated and directed from the lower to the higher global vertex index;
//! the global edge normal is the +90 degree rotation of that direction.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Result, WgError};

pub type Point = [f64; 2];

/// Largest level accepted by [`build_mesh`].
pub const MAX_LEVEL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeshKind {
    Rectangular,
    Triangular,
}

impl MeshKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshKind::Rectangular => "rect",
            MeshKind::Triangular => "tri",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeshKind {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" | "rectangular" => Ok(MeshKind::Rectangular),
            "tri" | "triangular" => Ok(MeshKind::Triangular),
            other => Err(WgError::Parse(format!(
                "unknown mesh kind `{other}` (expected rect or tri)"
            ))),
        }
    }
}

/// Element-side view of an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEdge {
    pub edge: usize,
    /// Outward unit normal of the element equals `outward_sign * edge.normal`.
    pub outward_sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Counterclockwise vertex indices. Local edge `k` joins vertex `k` and `k+1`.
    pub vertices: Vec<usize>,
    pub edges: Vec<LocalEdge>,
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// `[lower, higher]` global vertex indices; the edge direction.
    pub vertices: [usize; 2],
    /// One entry for boundary edges, two for interior edges, in element order.
    pub elements: Vec<usize>,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub kind: MeshKind,
    pub level: usize,
    pub vertices: Vec<Point>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    /// Maximum element diameter.
    pub h: f64,
}

/// Oriented segment geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    pub midpoint: Point,
    /// Unit direction from `start` to `end`.
    pub tangent: Point,
    /// `tangent` rotated by +90 degrees.
    pub normal: Point,
}

impl EdgeGeometry {
    pub fn new(start: Point, end: Point) -> Self {
        let d = [end[0] - start[0], end[1] - start[1]];
        let length = d[0].hypot(d[1]);
        let tangent = [d[0] / length, d[1] / length];
        EdgeGeometry {
            start,
            end,
            length,
            midpoint: [0.5 * (start[0] + end[0]), 0.5 * (start[1] + end[1])],
            tangent,
            normal: [-tangent[1], tangent[0]],
        }
    }

    /// Point at arclength `t` from `start`.
    pub fn point_at(&self, t: f64) -> Point {
        [
            self.start[0] + t * self.tangent[0],
            self.start[1] + t * self.tangent[1],
        ]
    }

    /// Point at centered, length-normalized parameter `xi = (t - |e|/2) / |e|`.
    pub fn point_at_param(&self, xi: f64) -> Point {
        self.point_at((xi + 0.5) * self.length)
    }

    /// Centered, length-normalized parameter of a point lying on the segment.
    pub fn param_of(&self, p: Point) -> Result<f64> {
        let rel = [p[0] - self.start[0], p[1] - self.start[1]];
        let t = rel[0] * self.tangent[0] + rel[1] * self.tangent[1];
        let off = (rel[0] * self.normal[0] + rel[1] * self.normal[1]).abs();
        let tol = 1e-12 * self.length.max(1.0);
        let overshoot = if t < 0.0 {
            -t
        } else if t > self.length {
            t - self.length
        } else {
            0.0
        };
        let distance = off.hypot(overshoot);
        if distance > tol {
            return Err(WgError::PointOffEdge {
                x: p[0],
                y: p[1],
                distance,
            });
        }
        Ok(t / self.length - 0.5)
    }
}

/// An element detached from its mesh: vertices, per-edge geometry in the
/// global orientation, and outward signs. All local operators take this.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub vertices: Vec<Point>,
    pub edges: Vec<(EdgeGeometry, f64)>,
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
}

impl ElementGeometry {
    /// Builds a standalone element from counterclockwise vertices. Each edge
    /// is oriented from the lower to the higher local vertex index.
    pub fn from_polygon(vertices: &[Point]) -> Self {
        let n = vertices.len();
        let edges = (0..n)
            .map(|k| {
                let (a, b) = (k, (k + 1) % n);
                if a < b {
                    (EdgeGeometry::new(vertices[a], vertices[b]), -1.0)
                } else {
                    (EdgeGeometry::new(vertices[b], vertices[a]), 1.0)
                }
            })
            .collect();
        let (area, centroid) = polygon_area_centroid(vertices);
        ElementGeometry {
            vertices: vertices.to_vec(),
            edges,
            centroid,
            diameter: polygon_diameter(vertices),
            area,
        }
    }

    /// Outward unit normal on local edge `k`.
    pub fn outward_normal(&self, k: usize) -> Point {
        let (g, sign) = &self.edges[k];
        [sign * g.normal[0], sign * g.normal[1]]
    }

    pub fn is_triangle(&self) -> bool {
        self.vertices.len() == 3
    }
}

fn polygon_area_centroid(v: &[Point]) -> (f64, Point) {
    let n = v.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let p = v[k];
        let q = v[(k + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    let a = 0.5 * a;
    (a, [cx / (6.0 * a), cy / (6.0 * a)])
}

fn polygon_diameter(v: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in v.iter().enumerate() {
        for q in &v[i + 1..] {
            d = d.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    d
}

/// Builds the level-`level` mesh of the unit square.
pub fn build_mesh(kind: MeshKind, level: usize) -> Result<Mesh> {
    if level < 1 {
        return Err(WgError::InvalidLevel(level));
    }
    if level > MAX_LEVEL {
        return Err(WgError::LevelTooLarge(level));
    }
    let n = 1usize << (level - 1);
    let inv = 1.0 / n as f64;
    let vid = |i: usize, j: usize| i + j * (n + 1);

    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * inv, j as f64 * inv]);
        }
    }

    let mut cells: Vec<Vec<usize>> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (bl, br, tr, tl) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            match kind {
                MeshKind::Rectangular => cells.push(vec![bl, br, tr, tl]),
                MeshKind::Triangular => {
                    cells.push(vec![bl, br, tl]);
                    cells.push(vec![br, tr, tl]);
                }
            }
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(cells.len());
    for (eid, cell) in cells.into_iter().enumerate() {
        let nv = cell.len();
        let mut local = Vec::with_capacity(nv);
        for k in 0..nv {
            let (a, b) = (cell[k], cell[(k + 1) % nv]);
            let key = (a.min(b), a.max(b));
            let id = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: [key.0, key.1],
                    elements: Vec::with_capacity(2),
                    boundary: false,
                });
                edges.len() - 1
            });
            edges[id].elements.push(eid);
            // Counterclockwise traversal has the outward normal on the right,
            // i.e. opposite to the +90 degree rotation of the traversal direction.
            let outward_sign = if a < b { -1.0 } else { 1.0 };
            local.push(LocalEdge {
                edge: id,
                outward_sign,
            });
        }
        let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
        let (area, centroid) = polygon_area_centroid(&pts);
        elements.push(Element {
            vertices: cell,
            edges: local,
            diameter: polygon_diameter(&pts),
            area,
            centroid,
        });
    }
    for e in &mut edges {
        e.boundary = e.elements.len() == 1;
    }
    let h = elements.iter().map(|e| e.diameter).fold(0.0, f64::max);

    Ok(Mesh {
        kind,
        level,
        vertices,
        elements,
        edges,
        h,
    })
}

impl Mesh {
    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.boundary).count()
    }

    pub fn edge_geometry(&self, edge_id: usize) -> Result<EdgeGeometry> {
        let e = self.edges.get(edge_id).ok_or(WgError::InvalidEdge {
            id: edge_id,
            count: self.edges.len(),
        })?;
        Ok(EdgeGeometry::new(
            self.vertices[e.vertices[0]],
            self.vertices[e.vertices[1]],
        ))
    }

    pub fn element_geometry(&self, element_id: usize) -> Result<ElementGeometry> {
        let el = self
            .elements
            .get(element_id)
            .ok_or(WgError::InvalidElement {
                id: element_id,
                count: self.elements.len(),
            })?;
        let edges = el
            .edges
            .iter()
            .map(|le| {
                let e = &self.edges[le.edge];
                let g = EdgeGeometry::new(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
                (g, le.outward_sign)
            })
            .collect();
        Ok(ElementGeometry {
            vertices: el.vertices.iter().map(|&v| self.vertices[v]).collect(),
            edges,
            centroid: el.centroid,
            diameter: el.diameter,
            area: el.area,
        })
    }

    /// Plain-text dump: `v x y`, `e i j k [l]`, `g v1 v2 boundary_flag`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.16e} {:.16e}", v[0], v[1]);
        }
        for el in &self.elements {
            out.push('e');
            for v in &el.vertices {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "g {} {} {}",
                e.vertices[0],
                e.vertices[1],
                u8::from(e.boundary)
            );
        }
        out
    }
}
