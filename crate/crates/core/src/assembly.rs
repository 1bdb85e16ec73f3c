//! Assembly of the symmetric interior penalty operator
//!
//! ```text
//! a_IP(u, v) = (βu, v) + (α curl u, curl v)
//!            − <{{α curl v}}, [[u]]> − <{{α curl u}}, [[v]]> + κ <h_e⁻¹ [[u]], [[v]]>
//! ```
//!
//! with edge terms over all edges, the load vector `(f, v)`, and the residuals
//! of the mixed formulation used to verify solutions.

use rayon::prelude::*;

use crate::linalg::CsrMatrix;
use crate::problem::Problem;
use crate::quadrature::{edge_rule, tri_rule, EdgeRule, TriangleRule};
use crate::space::{basis_curl, basis_eval, DgFunction, DgSpace, PiecewiseConstant, U_DOFS};
use crate::{Error, Mat2, Point, Result};

/// Coefficient region of every element, from its centroid.
pub fn element_regions(space: &DgSpace, problem: &dyn Problem) -> Vec<usize> {
    space
        .geometries()
        .iter()
        .map(|g| problem.region(&g.centroid))
        .collect()
}

/// Weight of each side in the edge average: 1/2 on interior edges, 1 on the boundary.
pub fn average_weight(num_sides: usize) -> f64 {
    1.0 / num_sides as f64
}

fn check_alpha(alpha: f64, x: &Point) -> Result<f64> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(Error::NonPositiveAlpha { x: x.x, y: x.y })
    }
}

fn check_beta(beta: Mat2, x: &Point) -> Result<Mat2> {
    let symmetric = (beta[(0, 1)] - beta[(1, 0)]).abs() <= 1e-12 * beta.norm();
    if symmetric && beta[(0, 0)] > 0.0 && beta.determinant() > 0.0 {
        Ok(beta)
    } else {
        Err(Error::NonSpdCoefficient { x: x.x, y: x.y })
    }
}

struct Rules {
    tri: TriangleRule,
    edge: EdgeRule,
}

impl Rules {
    fn for_problem(problem: &dyn Problem) -> Result<Self> {
        let q = problem.quadrature();
        Ok(Rules {
            tri: tri_rule(q.triangle)?,
            edge: edge_rule(q.edge)?,
        })
    }
}

/// Dense block for a set of DoFs; only the upper triangle is filled.
struct Block {
    dofs: Vec<usize>,
    values: Vec<f64>,
}

impl Block {
    fn new(dofs: Vec<usize>) -> Self {
        let n = dofs.len();
        Block {
            dofs,
            values: vec![0.0; n * n],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let n = self.dofs.len();
        self.values[i * n + j] += v;
    }

    /// Emits the upper triangle and its mirror image, so the assembled
    /// matrix is symmetric bit for bit.
    fn push_triplets(&self, out: &mut Vec<(usize, usize, f64)>) {
        let n = self.dofs.len();
        for i in 0..n {
            for j in i..n {
                let v = self.values[i * n + j];
                out.push((self.dofs[i], self.dofs[j], v));
                if i != j {
                    out.push((self.dofs[j], self.dofs[i], v));
                }
            }
        }
    }
}

fn element_block(
    space: &DgSpace,
    problem: &dyn Problem,
    rule: &TriangleRule,
    t: usize,
    region: usize,
) -> Result<Block> {
    let geom = space.geometry(t);
    let curl = basis_curl(geom);
    let mut block = Block::new(space.dofs().u_range(t).collect());
    for (p, w) in rule.iter() {
        let x = geom.map(p[0], p[1]);
        let jw = 2.0 * geom.area * w;
        let alpha = check_alpha(problem.alpha(&x, region), &x)?;
        let beta = check_beta(problem.beta(&x, region), &x)?;
        let phi = basis_eval(geom, &x);
        for i in 0..U_DOFS {
            for j in i..U_DOFS {
                block.add(
                    i,
                    j,
                    jw * (phi[i].dot(&(beta * phi[j])) + alpha * curl[i] * curl[j]),
                );
            }
        }
    }
    Ok(block)
}

fn edge_block(
    space: &DgSpace,
    problem: &dyn Problem,
    rule: &EdgeRule,
    regions: &[usize],
    kappa: f64,
    e: usize,
) -> Result<Block> {
    let edge = space.topology().edge(e);
    let sides: Vec<(usize, usize)> = edge.sides().collect();
    let weight = average_weight(sides.len());
    let dofs = sides
        .iter()
        .flat_map(|&(t, _)| space.dofs().u_range(t))
        .collect();
    let mut block = Block::new(dofs);
    let n = sides.len() * U_DOFS;
    let mut jump = [0.0; 2 * U_DOFS];
    let mut avg = [0.0; 2 * U_DOFS];
    for (s, w) in rule.iter() {
        let x = space.edge_point(e, s[0]);
        let jw = edge.length * w;
        for (side, &(t, k)) in sides.iter().enumerate() {
            let geom = space.geometry(t);
            let alpha = check_alpha(problem.alpha(&x, regions[t]), &x)?;
            let phi = basis_eval(geom, &x);
            let curl = basis_curl(geom);
            for i in 0..U_DOFS {
                jump[side * U_DOFS + i] = phi[i].dot(&geom.tangents[k]);
                avg[side * U_DOFS + i] = weight * alpha * curl[i];
            }
        }
        let penalty = kappa / edge.length;
        for i in 0..n {
            for j in i..n {
                let v = -avg[i] * jump[j] - avg[j] * jump[i] + penalty * jump[i] * jump[j];
                block.add(i, j, jw * v);
            }
        }
    }
    Ok(block)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPenalty(kappa))
    }
}

/// Stiffness matrix of `a_IP` on `U_h`. Elements and edges are processed in
/// parallel; blocks are merged in element-then-edge order, so the result does
/// not depend on the number of threads.
pub fn assemble_aip(space: &DgSpace, problem: &dyn Problem, kappa: f64) -> Result<CsrMatrix> {
    check_kappa(kappa)?;
    let rules = Rules::for_problem(problem)?;
    let regions = element_regions(space, problem);
    let elements: Vec<Block> = (0..space.num_elements())
        .into_par_iter()
        .map(|t| element_block(space, problem, &rules.tri, t, regions[t]))
        .collect::<Result<_>>()?;
    let edges: Vec<Block> = (0..space.topology().len())
        .into_par_iter()
        .map(|e| edge_block(space, problem, &rules.edge, &regions, kappa, e))
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(9 * elements.len() + 36 * edges.len());
    for block in elements.iter().chain(&edges) {
        block.push_triplets(&mut triplets);
    }
    let n = space.dofs().n_u();
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Load vector `b_i = (f, φ_i)`.
pub fn assemble_load(space: &DgSpace, problem: &dyn Problem) -> Result<Vec<f64>> {
    let rules = Rules::for_problem(problem)?;
    let regions = element_regions(space, problem);
    Ok((0..space.num_elements())
        .into_par_iter()
        .flat_map_iter(|t| {
            let geom = space.geometry(t);
            let mut local = [0.0; U_DOFS];
            for (p, w) in rules.tri.iter() {
                let x = geom.map(p[0], p[1]);
                let f = problem.source(&x, regions[t]);
                let phi = basis_eval(geom, &x);
                for i in 0..U_DOFS {
                    local[i] += 2.0 * geom.area * w * f.dot(&phi[i]);
                }
            }
            local
        })
        .collect())
}

/// `∫_e [[u_h]] ds` for every edge.
pub fn integrated_jumps(space: &DgSpace, u: &DgFunction, rule: &EdgeRule) -> Vec<f64> {
    (0..space.topology().len())
        .into_par_iter()
        .map(|e| {
            let edge = space.topology().edge(e);
            rule.iter()
                .map(|(s, w)| {
                    let x = space.edge_point(e, s[0]);
                    let jump: f64 = edge
                        .sides()
                        .map(|(t, k)| {
                            let geom = space.geometry(t);
                            u.eval(geom, t, &x).dot(&geom.tangents[k])
                        })
                        .sum();
                    edge.length * w * jump
                })
                .sum()
        })
        .collect()
}

/// Residuals of the two mixed equations at `(u_h, p_h)`, tested with every
/// basis function of `Q_h` (`r1`) and of `U_h` (`r2`):
///
/// ```text
/// r1(q) = (p_h, q) − (curl_h u_h, q) + <{{q}}, [[u_h]]>
/// r2(v) = (α p_h, curl_h v) + (β u_h, v) − (f, v) − <{{α curl_h u_h}} − κ h_e⁻¹ [[u_h]], [[v]]>
/// ```
///
/// Evaluated by quadrature, independently of the assembled matrix.
pub fn apply_mixed_forms(
    space: &DgSpace,
    problem: &dyn Problem,
    kappa: f64,
    u: &DgFunction,
    p: &PiecewiseConstant,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_kappa(kappa)?;
    let dofs = space.dofs();
    if u.coeffs().len() != dofs.n_u() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_u(),
            got: u.coeffs().len(),
        });
    }
    if p.values().len() != dofs.n_p() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_p(),
            got: p.values().len(),
        });
    }
    let rules = Rules::for_problem(problem)?;
    let regions = element_regions(space, problem);
    let topo = space.topology();
    let jumps = integrated_jumps(space, u, &rules.edge);

    let mut r1: Vec<f64> = (0..space.num_elements())
        .map(|t| space.geometry(t).area * (p.get(t) - u.curl(t)))
        .collect();
    for (e, edge) in topo.edges().iter().enumerate() {
        let weight = average_weight(edge.num_sides());
        for (t, _) in edge.sides() {
            r1[t] += weight * jumps[e];
        }
    }

    let mut r2 = vec![0.0; dofs.n_u()];
    for t in 0..space.num_elements() {
        let geom = space.geometry(t);
        let curl = basis_curl(geom);
        for (q, w) in rules.tri.iter() {
            let x = geom.map(q[0], q[1]);
            let jw = 2.0 * geom.area * w;
            let alpha = problem.alpha(&x, regions[t]);
            let beta = problem.beta(&x, regions[t]);
            let f = problem.source(&x, regions[t]);
            let bu = beta * u.eval(geom, t, &x);
            let phi = basis_eval(geom, &x);
            for i in 0..U_DOFS {
                r2[3 * t + i] += jw * (alpha * p.get(t) * curl[i] + (bu - f).dot(&phi[i]));
            }
        }
    }
    for (e, edge) in topo.edges().iter().enumerate() {
        let weight = average_weight(edge.num_sides());
        for (s, w) in rules.edge.iter() {
            let x = space.edge_point(e, s[0]);
            let jw = edge.length * w;
            let mut jump = 0.0;
            let mut avg = 0.0;
            for (t, k) in edge.sides() {
                let geom = space.geometry(t);
                jump += u.eval(geom, t, &x).dot(&geom.tangents[k]);
                avg += weight * problem.alpha(&x, regions[t]) * u.curl(t);
            }
            let flux = avg - kappa / edge.length * jump;
            for (t, k) in edge.sides() {
                let geom = space.geometry(t);
                let phi = basis_eval(geom, &x);
                for i in 0..U_DOFS {
                    r2[3 * t + i] -= jw * flux * phi[i].dot(&geom.tangents[k]);
                }
            }
        }
    }
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Domain, Mesh};
    use crate::problem::FnProblem;
    use crate::quadrature::QuadratureDegrees;
    use crate::{Point, Vec2};
    use approx::assert_relative_eq;

    fn single_triangle() -> DgSpace {
        let mesh = Mesh::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        DgSpace::new(mesh).unwrap()
    }

    #[test]
    fn single_triangle_volume_terms() {
        // Volume terms only, checked against hand integration.
        let space = single_triangle();
        let problem = FnProblem::new("unit", Domain::unit_square());
        let regions = element_regions(&space, &problem);
        let block = element_block(&space, &problem, &tri_rule(4).unwrap(), 0, regions[0]).unwrap();
        let area = 0.5;
        // ∫(x−1/3)² = ∫(y−1/3)² = 1/36 and ∫(x−1/3)(y−1/3) = −1/72 on this triangle.
        let second_moment = 1.0 / 36.0 + 1.0 / 36.0;
        assert_relative_eq!(block.values[0], area, epsilon = 1e-15);
        assert_relative_eq!(block.values[4], area, epsilon = 1e-15);
        assert_relative_eq!(block.values[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(block.values[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(block.values[5], 0.0, epsilon = 1e-15);
        assert_relative_eq!(block.values[8], 4.0 * area + second_moment, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_and_positive_definite() {
        let space = DgSpace::new(build_structured_mesh(Domain::unit_square(), 4).unwrap()).unwrap();
        let problem = FnProblem::new("unit", Domain::unit_square());
        let a = assemble_aip(&space, &problem, 50.0).unwrap();
        assert!(a.is_symmetric());
        let cfg = crate::linalg::SolverConfig {
            method: crate::linalg::SolverMethod::Cholesky,
            ..Default::default()
        };
        crate::linalg::factorize(&a, &cfg).unwrap();
    }

    #[test]
    fn invalid_inputs() {
        let space = single_triangle();
        let problem = FnProblem::new("unit", Domain::unit_square());
        assert_eq!(
            assemble_aip(&space, &problem, 0.0),
            Err(Error::InvalidPenalty(0.0))
        );
        let bad = FnProblem::new("bad", Domain::unit_square())
            .with_beta(|_| Mat2::new(1.0, 2.0, 2.0, 1.0));
        assert!(matches!(
            assemble_aip(&space, &bad, 50.0),
            Err(Error::NonSpdCoefficient { .. })
        ));
        let bad_alpha = FnProblem::new("bad", Domain::unit_square()).with_alpha(|_| -1.0);
        assert!(matches!(
            assemble_aip(&space, &bad_alpha, 50.0),
            Err(Error::NonPositiveAlpha { .. })
        ));
    }

    #[test]
    fn load_examples() {
        let space = single_triangle();
        let zero = FnProblem::new("zero", Domain::unit_square());
        assert!(assemble_load(&space, &zero)
            .unwrap()
            .iter()
            .all(|&b| b == 0.0));
        let unit = FnProblem::new("x", Domain::unit_square())
            .with_source(|_, _| Vec2::new(1.0, 0.0), |_, _| 0.0);
        let b = assemble_load(&space, &unit).unwrap();
        assert_relative_eq!(b[0], 0.5, epsilon = 1e-15);
        assert_eq!(b[1], 0.0);
        assert!(b[2].abs() < 1e-16);
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let space = DgSpace::new(build_structured_mesh(Domain::unit_square(), 2).unwrap()).unwrap();
        let problem = FnProblem::new("zero", Domain::unit_square());
        let (r1, r2) = apply_mixed_forms(
            &space,
            &problem,
            50.0,
            &DgFunction::zeros(space.dofs()),
            &PiecewiseConstant::zeros(space.dofs()),
        )
        .unwrap();
        assert!(r1.iter().chain(&r2).all(|&r| r == 0.0));
    }

    #[test]
    fn first_equation_sees_only_boundary_jumps() {
        // A global rotation field is tangentially continuous across interior edges.
        let space = DgSpace::new(build_structured_mesh(Domain::unit_square(), 3).unwrap()).unwrap();
        let rule = tri_rule(4).unwrap();
        let u = DgFunction::l2_projection(&space, &rule, |x| Vec2::new(-x.y, x.x));
        let p = PiecewiseConstant::curl_of(&u, space.dofs());
        let problem = FnProblem::new("zero", Domain::unit_square());
        let (r1, _) = apply_mixed_forms(&space, &problem, 50.0, &u, &p).unwrap();
        let jumps = integrated_jumps(&space, &u, &edge_rule(5).unwrap());
        for (e, edge) in space.topology().edges().iter().enumerate() {
            if !edge.is_boundary() {
                assert!(jumps[e].abs() < 1e-14);
            }
        }
        // With p_h = curl_h u_h only the boundary jumps remain in r1.
        for (t, r) in r1.iter().enumerate() {
            let expected: f64 = space
                .topology()
                .element_edges(t)
                .iter()
                .filter(|&&e| space.topology().edge(e).is_boundary())
                .map(|&e| jumps[e])
                .sum();
            assert!((r - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn doubling_quadrature_changes_nothing() {
        let space =
            DgSpace::new(build_structured_mesh(Domain::reference_l_shape(), 4).unwrap()).unwrap();
        let coarse = FnProblem::new("pc", Domain::reference_l_shape())
            .with_regions(|c| (c.x > 0.0) as usize)
            .with_beta(|r| Mat2::identity() * if r == 0 { 1.0 } else { 100.0 });
        let a = assemble_aip(&space, &coarse, 50.0).unwrap();
        let fine = FnProblem::new("pc", Domain::reference_l_shape())
            .with_regions(|c| (c.x > 0.0) as usize)
            .with_beta(|r| Mat2::identity() * if r == 0 { 1.0 } else { 100.0 })
            .with_quadrature(QuadratureDegrees {
                triangle: 8,
                edge: 10,
            });
        let b = assemble_aip(&space, &fine, 50.0).unwrap();
        assert_eq!(a.col_idx(), b.col_idx());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let mesh = crate::mesh::bisect(
            &build_structured_mesh(Domain::reference_l_shape(), 4).unwrap(),
            &[0, 7, 20],
        )
        .unwrap();
        let space = DgSpace::new(mesh).unwrap();
        let problem = FnProblem::new("var", Domain::reference_l_shape())
            .with_variable_alpha(
                |x| 1.0 / (1.0 + x.coords.norm_squared()),
                |x| -2.0 * x.coords / (1.0 + x.coords.norm_squared()).powi(2),
            )
            .with_source(|x, _| Vec2::new(x.y, 1.0), |_, _| 0.0);
        let assemble = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| assemble_aip(&space, &problem, 50.0).unwrap())
        };
        let (one, many) = (assemble(1), assemble(4));
        assert_eq!(one.row_ptr(), many.row_ptr());
        assert_eq!(one.col_idx(), many.col_idx());
        assert!(one
            .values()
            .iter()
            .zip(many.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
