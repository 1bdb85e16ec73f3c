use std::collections::HashMap;

use super::Mesh;
use crate::{Error, Result, Vec2};

/// A mesh edge with its one or two adjacent triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoint vertex indices, lower index first.
    pub vertices: [usize; 2],
    /// `(triangle, local edge index)` of the first adjacent triangle.
    pub first: (usize, usize),
    /// The second adjacent triangle, `None` on the boundary.
    pub second: Option<(usize, usize)>,
    /// Global unit tangent, from the lower- to the higher-indexed vertex.
    pub tangent: Vec2,
    /// Global unit normal, the tangent rotated by -90°.
    pub normal: Vec2,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    /// Adjacent `(triangle, local edge)` pairs, first side first.
    pub fn sides(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        std::iter::once(self.first).chain(self.second)
    }

    pub fn num_sides(&self) -> usize {
        1 + self.second.is_some() as usize
    }
}

#[derive(Debug, Clone)]
pub struct EdgeTopology {
    edges: Vec<Edge>,
    element_edges: Vec<[usize; 3]>,
    lookup: HashMap<(usize, usize), usize>,
}

impl EdgeTopology {
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Global edge index of local edge `k` of triangle `t`.
    pub fn element_edges(&self, t: usize) -> [usize; 3] {
        self.element_edges[t]
    }

    /// Edge joining two vertices, in either order.
    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn interior(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_boundary())
    }

    pub fn boundary(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary().count()
    }
}

/// Enumerates the edges of a conforming mesh in order of first appearance.
pub fn build_edges(mesh: &Mesh) -> Result<EdgeTopology> {
    let mut edges: Vec<Edge> = Vec::with_capacity(3 * mesh.num_triangles() / 2 + 1);
    let mut lookup = HashMap::with_capacity(edges.capacity());
    let mut element_edges = Vec::with_capacity(mesh.num_triangles());
    let verts = mesh.vertices();

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut local = [0; 3];
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                Some(&e) => {
                    let edge: &mut Edge = &mut edges[e];
                    if edge.second.is_some() {
                        return Err(Error::NonConforming(key.0, key.1));
                    }
                    let (t0, k0) = edge.first;
                    let other = mesh.triangles()[t0];
                    if other[(k0 + 1) % 3] == a {
                        return Err(Error::InvalidMesh(format!(
                            "triangles {t0} and {t} traverse edge ({}, {}) in the same direction",
                            key.0, key.1
                        )));
                    }
                    edge.second = Some((t, k));
                    local[k] = e;
                }
                None => {
                    let d = verts[key.1] - verts[key.0];
                    let length = d.norm();
                    let tangent = d / length;
                    lookup.insert(key, edges.len());
                    local[k] = edges.len();
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        first: (t, k),
                        second: None,
                        tangent,
                        normal: Vec2::new(tangent.y, -tangent.x),
                        length,
                    });
                }
            }
        }
        element_edges.push(local);
    }
    Ok(EdgeTopology {
        edges,
        element_edges,
        lookup,
    })
}
