use super::{build_edges, EdgeTopology, Mesh};
use crate::{Error, Point, Result};

/// Upper bound on circumradius / inradius checked in debug builds.
#[cfg_attr(not(debug_assertions), allow(dead_code))]
const MAX_ASPECT_RATIO: f64 = 10.0;

/// Newest-vertex bisection of the marked triangles with conforming closure.
///
/// Every marked triangle is bisected at least once. Any triangle with a
/// bisected edge gets its refinement edge bisected as well, recursively, so
/// the result has no hanging nodes. New vertices are numbered by the global
/// index of the edge they split, which makes the output a deterministic
/// function of the input.
pub fn bisect(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    let topo = build_edges(mesh)?;
    bisect_with_topology(mesh, &topo, marked)
}

pub(crate) fn bisect_with_topology(
    mesh: &Mesh,
    topo: &EdgeTopology,
    marked: &[usize],
) -> Result<Mesh> {
    let nt = mesh.num_triangles();
    for &t in marked {
        if t >= nt {
            return Err(Error::IndexOutOfRange { index: t, len: nt });
        }
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let refinement_edge = |t: usize| topo.element_edges(t)[mesh.peak(t)];

    // Closure: an element with any marked edge must bisect its refinement edge.
    let mut edge_marked = vec![false; topo.len()];
    let mut stack: Vec<usize> = Vec::new();
    for &t in marked {
        let e = refinement_edge(t);
        if !edge_marked[e] {
            edge_marked[e] = true;
            stack.push(e);
        }
    }
    while let Some(e) = stack.pop() {
        for (t, _) in topo.edge(e).sides() {
            let r = refinement_edge(t);
            if !edge_marked[r] {
                edge_marked[r] = true;
                stack.push(r);
            }
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; topo.len()];
    for (e, edge) in topo.edges().iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            midpoint[e] = vertices.len();
            vertices.push(Point::from((vertices[a].coords + vertices[b].coords) * 0.5));
        }
    }

    let mut out = Refined {
        triangles: Vec::with_capacity(nt * 2),
        peaks: Vec::new(),
        generations: Vec::new(),
    };
    for t in 0..nt {
        let tri = mesh.triangles()[t];
        let peak = mesh.peak(t);
        let generation = mesh.generation(t);
        if !edge_marked[refinement_edge(t)] {
            out.push(tri, peak, generation);
            continue;
        }
        let split = |a: usize, b: usize| -> Option<usize> {
            topo.find(a, b)
                .filter(|&e| edge_marked[e])
                .map(|e| midpoint[e])
        };
        refine_element(tri, peak, generation, &split, &mut out);
    }

    let refined = Mesh::from_parts(vertices, out.triangles, out.peaks, out.generations);
    #[cfg(debug_assertions)]
    for t in 0..refined.num_triangles() {
        let ratio = refined.geometry(t)?.aspect_ratio();
        debug_assert!(
            ratio <= MAX_ASPECT_RATIO,
            "triangle {t} lost shape regularity: {ratio}"
        );
    }
    Ok(refined)
}

struct Refined {
    triangles: Vec<[usize; 3]>,
    peaks: Vec<u8>,
    generations: Vec<u32>,
}

impl Refined {
    fn push(&mut self, tri: [usize; 3], peak: usize, generation: u32) {
        self.triangles.push(tri);
        self.peaks.push(peak as u8);
        self.generations.push(generation);
    }
}

/// Bisects `tri` at its refinement edge and recurses into children whose
/// refinement edge (an edge of the parent) is also marked. Original edges
/// of the parent are the only candidates, so the depth is at most two.
fn refine_element(
    tri: [usize; 3],
    peak: usize,
    generation: u32,
    split: &dyn Fn(usize, usize) -> Option<usize>,
    out: &mut Refined,
) {
    let a = tri[peak];
    let b = tri[(peak + 1) % 3];
    let c = tri[(peak + 2) % 3];
    let Some(m) = split(b, c) else {
        out.push(tri, peak, generation);
        return;
    };
    // Children (a, b, m) and (a, m, c) keep the orientation; m is their peak.
    let left = [a, b, m];
    let right = [a, m, c];
    if split(a, b).is_some() {
        refine_element(left, 2, generation + 1, split, out);
    } else {
        out.push(left, 2, generation + 1);
    }
    if split(c, a).is_some() {
        refine_element(right, 1, generation + 1, split, out);
    } else {
        out.push(right, 1, generation + 1);
    }
}
