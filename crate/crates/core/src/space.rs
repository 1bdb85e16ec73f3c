//! Broken spaces `U_h` (elementwise `R1(τ)`) and `Q_h` (elementwise `P0`),
//! basis evaluation and edge trace operators.
//!
//! The local basis of `R1(τ)` is centered at the element centroid `c`:
//! `φ₀ = (1, 0)`, `φ₁ = (0, 1)`, `φ₂ = (−(y − c_y), x − c_x)`, so
//! `curl φ = (0, 0, 2)` on every element.

use rayon::prelude::*;

use crate::mesh::{build_edges, Edge, EdgeTopology, ElementGeometry, Mesh};
use crate::quadrature::TriangleRule;
use crate::{Error, Mat2, Point, Result, Vec2};

/// Velocity degrees of freedom per element.
pub const U_DOFS: usize = 3;

pub fn basis_eval(geom: &ElementGeometry, x: &Point) -> [Vec2; 3] {
    let d = x - geom.centroid;
    [
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(-d.y, d.x),
    ]
}

pub fn basis_curl(_geom: &ElementGeometry) -> [f64; 3] {
    [0.0, 0.0, 2.0]
}

/// Divergence-free basis, so `∇·(β φ_i)` only involves derivatives of `β`:
/// `∇·(β φ) = (∂β/∂x φ)_x + (∂β/∂y φ)_y + tr(β ∇φ)` and `tr(β ∇φ₂) = β₂₁ − β₁₂ = 0`
/// for symmetric `β`.
pub fn basis_div_beta(beta_derivatives: &[Mat2; 2], values: &[Vec2; 3]) -> [f64; 3] {
    let [dx, dy] = beta_derivatives;
    values.map(|phi| (dx * phi).x + (dy * phi).y)
}

/// Degree-of-freedom layout: element `t` owns velocity DoFs `3t..3t+3` and
/// pressure DoF `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    num_elements: usize,
}

impl DofMap {
    pub fn new(num_elements: usize) -> Self {
        DofMap { num_elements }
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn n_u(&self) -> usize {
        U_DOFS * self.num_elements
    }

    pub fn n_p(&self) -> usize {
        self.num_elements
    }

    pub fn u_offset(&self, t: usize) -> usize {
        U_DOFS * t
    }

    pub fn u_range(&self, t: usize) -> std::ops::Range<usize> {
        U_DOFS * t..U_DOFS * (t + 1)
    }

    pub fn p_offset(&self, t: usize) -> usize {
        t
    }

    /// DoFs reported for a mesh: velocity plus pressure.
    pub fn total(&self) -> usize {
        self.n_u() + self.n_p()
    }
}

/// A mesh with everything the discrete spaces need: edge topology, element
/// geometry, the DoF map and coefficient regions.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Mesh,
    topology: EdgeTopology,
    geometries: Vec<ElementGeometry>,
    dofs: DofMap,
}

impl DgSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let topology = build_edges(&mesh)?;
        let geometries = mesh.geometries()?;
        let dofs = DofMap::new(mesh.num_triangles());
        Ok(DgSpace {
            mesh,
            topology,
            geometries,
            dofs,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn topology(&self) -> &EdgeTopology {
        &self.topology
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometries[t]
    }

    pub fn geometries(&self) -> &[ElementGeometry] {
        &self.geometries
    }

    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    pub fn num_elements(&self) -> usize {
        self.dofs.num_elements
    }

    pub fn into_mesh(self) -> Mesh {
        self.mesh
    }

    /// Point on edge `e` at parameter `s ∈ [0,1]`, running along the global tangent.
    pub fn edge_point(&self, e: usize, s: f64) -> Point {
        let [a, b] = self.topology.edge(e).vertices;
        let (a, b) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
        a + (b - a) * s
    }
}

/// A member of `U_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgFunction {
    coeffs: Vec<f64>,
}

impl DgFunction {
    pub fn zeros(dofs: DofMap) -> Self {
        DgFunction {
            coeffs: vec![0.0; dofs.n_u()],
        }
    }

    pub fn from_coeffs(dofs: DofMap, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dofs.n_u() {
            return Err(Error::DimensionMismatch {
                expected: dofs.n_u(),
                got: coeffs.len(),
            });
        }
        Ok(DgFunction { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn local(&self, t: usize) -> [f64; 3] {
        let o = U_DOFS * t;
        [self.coeffs[o], self.coeffs[o + 1], self.coeffs[o + 2]]
    }

    /// Value of the restriction to element `t` at `x` (extrapolated if `x ∉ τ`).
    pub fn eval(&self, geom: &ElementGeometry, t: usize, x: &Point) -> Vec2 {
        let [a, b, c] = self.local(t);
        let d = x - geom.centroid;
        Vec2::new(a - c * d.y, b + c * d.x)
    }

    /// Elementwise `curl_h`, constant on each element.
    pub fn curl(&self, t: usize) -> f64 {
        2.0 * self.coeffs[U_DOFS * t + 2]
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// Elementwise L2 projection of `f`, computed with `rule`.
    pub fn l2_projection(
        space: &DgSpace,
        rule: &TriangleRule,
        f: impl Fn(&Point) -> Vec2 + Sync,
    ) -> Self {
        let coeffs: Vec<f64> = (0..space.num_elements())
            .into_par_iter()
            .flat_map_iter(|t| {
                let geom = space.geometry(t);
                let mut mass = nalgebra::Matrix3::<f64>::zeros();
                let mut rhs = nalgebra::Vector3::<f64>::zeros();
                for (p, w) in rule.iter() {
                    let x = geom.map(p[0], p[1]);
                    let phi = basis_eval(geom, &x);
                    let fx = f(&x);
                    let jw = 2.0 * geom.area * w;
                    for i in 0..3 {
                        rhs[i] += jw * fx.dot(&phi[i]);
                        for j in 0..3 {
                            mass[(i, j)] += jw * phi[i].dot(&phi[j]);
                        }
                    }
                }
                let sol = mass
                    .cholesky()
                    .expect("local mass matrix is SPD")
                    .solve(&rhs);
                [sol[0], sol[1], sol[2]]
            })
            .collect();
        DgFunction { coeffs }
    }
}

/// A member of `Q_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn zeros(dofs: DofMap) -> Self {
        PiecewiseConstant {
            values: vec![0.0; dofs.n_p()],
        }
    }

    pub fn from_values(dofs: DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofs.n_p() {
            return Err(Error::DimensionMismatch {
                expected: dofs.n_p(),
                got: values.len(),
            });
        }
        Ok(PiecewiseConstant { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|c| *c *= s);
    }

    /// `curl_h u_h` as a member of `Q_h`.
    pub fn curl_of(u: &DgFunction, dofs: DofMap) -> Self {
        PiecewiseConstant {
            values: (0..dofs.n_p()).map(|t| u.curl(t)).collect(),
        }
    }
}

/// One-sided trace data of a vector field on an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Side {
    pub value: Vec2,
    /// Element-local counter-clockwise tangent.
    pub tangent: Vec2,
    /// Element-local outward normal.
    pub normal: Vec2,
}

/// Average `{{w}}`, tangential jump `[[w]]` and normal jump `[w]` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub average: Vec2,
    pub tangential_jump: f64,
    pub normal_jump: f64,
}

/// Traces of a vector field. Interior edges take two sides, boundary edges one;
/// on the boundary the one-sided trace is used for all three quantities.
pub fn trace_sample(edge: &Edge, sides: &[Side]) -> Result<TraceSample> {
    if sides.len() != edge.num_sides() {
        return Err(Error::SideCountMismatch {
            expected: edge.num_sides(),
            got: sides.len(),
        });
    }
    let weight = 1.0 / sides.len() as f64;
    let mut sample = TraceSample {
        average: Vec2::zeros(),
        tangential_jump: 0.0,
        normal_jump: 0.0,
    };
    for s in sides {
        sample.average += weight * s.value;
        sample.tangential_jump += s.value.dot(&s.tangent);
        sample.normal_jump += s.value.dot(&s.normal);
    }
    Ok(sample)
}

/// Average `{{φ}}` and tangential jump `[[φ]] = Σ φ_i t_i` of a scalar field,
/// from `(value, element-local tangent)` pairs.
pub fn scalar_trace(edge: &Edge, sides: &[(f64, Vec2)]) -> Result<(f64, Vec2)> {
    if sides.len() != edge.num_sides() {
        return Err(Error::SideCountMismatch {
            expected: edge.num_sides(),
            got: sides.len(),
        });
    }
    let weight = 1.0 / sides.len() as f64;
    let average = sides.iter().map(|(v, _)| weight * v).sum();
    let jump = sides.iter().fold(Vec2::zeros(), |acc, (v, t)| acc + *v * t);
    Ok((average, jump))
}

/// Tangential jump `[[u_h]]` at a point of edge `e`.
pub fn tangential_jump(space: &DgSpace, u: &DgFunction, e: usize, x: &Point) -> f64 {
    space
        .topology()
        .edge(e)
        .sides()
        .map(|(t, k)| {
            let geom = space.geometry(t);
            u.eval(geom, t, x).dot(&geom.tangents[k])
        })
        .sum()
}
