//! Conforming triangulations of polygonal domains.
//!
//! Triangles are stored counter-clockwise. Each triangle carries the local
//! index of its *peak* vertex: the refinement edge is the edge opposite the
//! peak (newest-vertex convention). Local edge `k` of a triangle is the edge
//! opposite local vertex `k`, traversed from vertex `k+1` to vertex `k+2`,
//! so its element-local tangent circulates counter-clockwise.

mod io;
mod refine;
mod topology;

pub use io::{read_mesh, write_mesh};
pub use refine::bisect;
pub use topology::{build_edges, Edge, EdgeTopology};

use crate::{Error, Point, Result, Vec2};

/// Relative area below which a triangle is treated as degenerate.
const DEGENERATE_AREA: f64 = 1e-14;

/// Axis-aligned domains supported by [`build_structured_mesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// The square `[lower, upper]²`.
    Square { lower: f64, upper: f64 },
    /// The square `[lower, upper]²` with its upper-right quadrant
    /// `[mid, upper)²` removed, `mid = (lower + upper) / 2`.
    LShape { lower: f64, upper: f64 },
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Square {
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// `(-1, 1)² \ [0, 1)²`.
    pub fn reference_l_shape() -> Self {
        Domain::LShape {
            lower: -1.0,
            upper: 1.0,
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Square { lower, upper } | Domain::LShape { lower, upper } => (lower, upper),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (lo, hi) = self.bounds();
        let inside = p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
        match *self {
            Domain::Square { .. } => inside,
            Domain::LShape { .. } => {
                let mid = 0.5 * (lo + hi);
                inside && !(p.x > mid && p.y > mid)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    peaks: Vec<u8>,
    generations: Vec<u32>,
}

/// Geometric data of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Local mesh size `h_τ = |τ|^{1/2}`.
    pub h: f64,
    pub centroid: Point,
    /// Outward unit normal of local edge `k`.
    pub normals: [Vec2; 3],
    /// Counter-clockwise unit tangent of local edge `k` (normal rotated by +90°).
    pub tangents: [Vec2; 3],
    pub edge_lengths: [f64; 3],
}

impl ElementGeometry {
    /// Maps reference coordinates on `(0,0),(1,0),(0,1)` to the element.
    pub fn map(&self, xi: f64, eta: f64) -> Point {
        let [a, b, c] = self.vertices;
        a + (b - a) * xi + (c - a) * eta
    }

    /// Endpoints of local edge `k`, in counter-clockwise order.
    pub fn edge_endpoints(&self, k: usize) -> (Point, Point) {
        (self.vertices[(k + 1) % 3], self.vertices[(k + 2) % 3])
    }

    pub fn diameter(&self) -> f64 {
        self.edge_lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// Circumradius over inradius; 2 for an equilateral triangle.
    pub fn aspect_ratio(&self) -> f64 {
        let [a, b, c] = self.edge_lengths;
        let circumradius = a * b * c / (4.0 * self.area);
        let inradius = 2.0 * self.area / (a + b + c);
        circumradius / inradius
    }

    pub fn min_angle(&self) -> f64 {
        (0..3)
            .map(|k| {
                let p = self.vertices[k];
                let u = self.vertices[(k + 1) % 3] - p;
                let v = self.vertices[(k + 2) % 3] - p;
                (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

impl Mesh {
    /// Builds a mesh from raw data. Triangles must be counter-clockwise with
    /// positive area. The refinement edge of every triangle is its longest
    /// edge (lowest local index on ties).
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = triangles.len();
        let mut mesh = Mesh {
            vertices,
            triangles,
            peaks: vec![0; n],
            generations: vec![0; n],
        };
        mesh.validate()?;
        for t in 0..n {
            let g = mesh.geometry(t)?;
            let mut peak = 0;
            for k in 1..3 {
                if g.edge_lengths[k] > g.edge_lengths[peak] * (1.0 + 1e-12) {
                    peak = k;
                }
            }
            mesh.peaks[t] = peak as u8;
        }
        Ok(mesh)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        peaks: Vec<u8>,
        generations: Vec<u32>,
    ) -> Self {
        Mesh {
            vertices,
            triangles,
            peaks,
            generations,
        }
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::IndexOutOfRange { index: v, len: nv });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|v| self.vertices[v]);
            let area = signed_area(&a, &b, &c);
            let scale = (b - a).norm_squared().max((c - a).norm_squared());
            if area <= DEGENERATE_AREA * scale {
                return Err(Error::DegenerateElement { element: t, area });
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Local index of the newest vertex; the refinement edge is opposite it.
    pub fn peak(&self, t: usize) -> usize {
        self.peaks[t] as usize
    }

    /// Number of bisections separating `t` from its initial ancestor.
    pub fn generation(&self, t: usize) -> u32 {
        self.generations[t]
    }

    pub fn generations(&self) -> &[u32] {
        &self.generations
    }

    pub(crate) fn peaks(&self) -> &[u8] {
        &self.peaks
    }

    /// Geometry of triangle `t`; see [`element_geometry`].
    pub fn geometry(&self, t: usize) -> Result<ElementGeometry> {
        element_geometry(self, t)
    }

    pub fn geometries(&self) -> Result<Vec<ElementGeometry>> {
        (0..self.num_triangles())
            .map(|t| self.geometry(t))
            .collect()
    }

    /// `h = max_τ h_τ`.
    pub fn h_max(&self) -> f64 {
        self.geometries()
            .map(|g| g.iter().map(|g| g.h).fold(0.0, f64::max))
            .unwrap_or(f64::NAN)
    }

    pub fn h_min(&self) -> f64 {
        self.geometries()
            .map(|g| g.iter().map(|g| g.h).fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN)
    }

    pub fn total_area(&self) -> f64 {
        self.geometries()
            .map(|g| g.iter().map(|g| g.area).sum())
            .unwrap_or(f64::NAN)
    }
}

/// Area, `h_τ`, centroid, outward normals and counter-clockwise tangents of
/// triangle `t`.
pub fn element_geometry(mesh: &Mesh, t: usize) -> Result<ElementGeometry> {
    let tri = mesh.triangles.get(t).ok_or(Error::IndexOutOfRange {
        index: t,
        len: mesh.triangles.len(),
    })?;
    let vertices = tri.map(|v| mesh.vertices[v]);
    let [a, b, c] = vertices;
    let area = signed_area(&a, &b, &c);
    let scale = (b - a).norm_squared().max((c - a).norm_squared());
    if area <= DEGENERATE_AREA * scale {
        return Err(Error::DegenerateElement { element: t, area });
    }
    let mut normals = [Vec2::zeros(); 3];
    let mut tangents = [Vec2::zeros(); 3];
    let mut edge_lengths = [0.0; 3];
    for k in 0..3 {
        let d = vertices[(k + 2) % 3] - vertices[(k + 1) % 3];
        let len = d.norm();
        let tangent = d / len;
        edge_lengths[k] = len;
        tangents[k] = tangent;
        normals[k] = Vec2::new(tangent.y, -tangent.x);
    }
    Ok(ElementGeometry {
        vertices,
        area,
        h: area.sqrt(),
        centroid: Point::from((a.coords + b.coords + c.coords) / 3.0),
        normals,
        tangents,
        edge_lengths,
    })
}

/// Uniform criss-cross mesh with `m` subdivisions per axis. Every square is
/// split along its lower-left to upper-right diagonal. For an L-shape the
/// removed quadrant must be resolved by the grid, so `m` must be even.
pub fn build_structured_mesh(domain: Domain, m: usize) -> Result<Mesh> {
    if m < 2 {
        return Err(Error::InvalidDomain(format!(
            "need at least 2 subdivisions, got {m}"
        )));
    }
    let (lo, hi) = domain.bounds();
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidDomain(format!(
            "empty or non-finite interval [{lo}, {hi}]"
        )));
    }
    let skip = |i: usize, j: usize| match domain {
        Domain::Square { .. } => false,
        Domain::LShape { .. } => i >= m / 2 && j >= m / 2,
    };
    if matches!(domain, Domain::LShape { .. }) && !m.is_multiple_of(2) {
        return Err(Error::InvalidDomain(format!(
            "L-shape needs an even subdivision count, got {m}"
        )));
    }

    let step = (hi - lo) / m as f64;
    let coord = |i: usize| if i == m { hi } else { lo + i as f64 * step };
    // Grid vertices are numbered row by row, skipping those not touching a kept cell.
    let used = |i: usize, j: usize| {
        let cells = [
            (i.wrapping_sub(1), j.wrapping_sub(1)),
            (i, j.wrapping_sub(1)),
            (i.wrapping_sub(1), j),
            (i, j),
        ];
        cells
            .iter()
            .any(|&(ci, cj)| ci < m && cj < m && !skip(ci, cj))
    };
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            if used(i, j) {
                index[j * (m + 1) + i] = vertices.len();
                vertices.push(Point::new(coord(i), coord(j)));
            }
        }
    }
    let id = |i: usize, j: usize| index[j * (m + 1) + i];
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            if skip(i, j) {
                continue;
            }
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles)
}
