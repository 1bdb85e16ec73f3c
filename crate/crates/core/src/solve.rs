//! Mixed solve through the primal interior penalty system: find `u_h` with
//! `a_IP(u_h, v) = (f, v)`, then recover `p_h ∈ Q_h` element by element.

use log::info;
use rayon::prelude::*;

use crate::assembly::{assemble_aip, assemble_load, average_weight, integrated_jumps};
use crate::linalg::{solve_spd, CsrMatrix, LinearSolve, SolverConfig, SolverMethod};
use crate::problem::Problem;
use crate::quadrature::edge_rule;
use crate::space::{DgFunction, DgSpace, PiecewiseConstant};
use crate::Result;

/// Default penalty parameter.
pub const DEFAULT_KAPPA: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    pub u: DgFunction,
    pub p: PiecewiseConstant,
    /// Iterations reported by the linear solver.
    pub iterations: usize,
    /// Relative residual of the primal system.
    pub residual: f64,
    pub method: SolverMethod,
}

/// Assembled primal system `A x = b`.
#[derive(Debug, Clone)]
pub struct PrimalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

pub fn assemble_primal(space: &DgSpace, problem: &dyn Problem, kappa: f64) -> Result<PrimalSystem> {
    Ok(PrimalSystem {
        matrix: assemble_aip(space, problem, kappa)?,
        rhs: assemble_load(space, problem)?,
    })
}

pub fn solve_primal(
    space: &DgSpace,
    problem: &dyn Problem,
    kappa: f64,
    cfg: &SolverConfig,
) -> Result<(DgFunction, LinearSolve)> {
    let system = assemble_primal(space, problem, kappa)?;
    solve_system(space, &system, cfg)
}

pub fn solve_system(
    space: &DgSpace,
    system: &PrimalSystem,
    cfg: &SolverConfig,
) -> Result<(DgFunction, LinearSolve)> {
    let solution = solve_spd(&system.matrix, &system.rhs, cfg)?;
    let u = DgFunction::from_coeffs(space.dofs(), solution.x.clone())?;
    Ok((u, solution))
}

/// `p_h|τ = curl_h u_h|τ − |τ|⁻¹ Σ_{e⊂∂τ} c_e ∫_e [[u_h]]`, with `c_e` the
/// average weight (1/2 inside, 1 on the boundary).
pub fn recover_p(space: &DgSpace, u: &DgFunction) -> PiecewiseConstant {
    // [[u_h]] is linear along each edge, so one Gauss point is exact.
    let rule = edge_rule(1).expect("degree 1 is supported");
    let jumps = integrated_jumps(space, u, &rule);
    let topo = space.topology();
    let values = (0..space.num_elements())
        .into_par_iter()
        .map(|t| {
            let correction: f64 = topo
                .element_edges(t)
                .iter()
                .map(|&e| average_weight(topo.edge(e).num_sides()) * jumps[e])
                .sum();
            u.curl(t) - correction / space.geometry(t).area
        })
        .collect();
    PiecewiseConstant::from_values(space.dofs(), values).expect("one value per element")
}

pub fn solve_mixed(
    space: &DgSpace,
    problem: &dyn Problem,
    kappa: f64,
    cfg: &SolverConfig,
) -> Result<MixedSolution> {
    let (u, solve) = solve_primal(space, problem, kappa, cfg)?;
    let p = recover_p(space, &u);
    info!(
        "solved {} on {} elements: residual {:.2e} ({:?})",
        problem.name(),
        space.num_elements(),
        solve.relative_residual,
        solve.method
    );
    Ok(MixedSolution {
        u,
        p,
        iterations: solve.iterations,
        residual: solve.relative_residual,
        method: solve.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::apply_mixed_forms;
    use crate::mesh::{build_structured_mesh, Domain, Mesh};
    use crate::problem::FnProblem;
    use crate::{Point, Vec2};
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_source_gives_zero_solution() {
        let space = DgSpace::new(build_structured_mesh(Domain::unit_square(), 4).unwrap()).unwrap();
        let problem = FnProblem::new("zero", Domain::unit_square());
        let sol = solve_mixed(&space, &problem, 50.0, &SolverConfig::default()).unwrap();
        assert!(sol.u.coeffs().iter().all(|&c| c == 0.0));
        assert!(sol.p.values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn recovery_of_zero_and_continuous_fields() {
        let space = DgSpace::new(build_structured_mesh(Domain::unit_square(), 3).unwrap()).unwrap();
        let zero = recover_p(&space, &DgFunction::zeros(space.dofs()));
        assert!(zero.values().iter().all(|&p| p == 0.0));

        // Whitney edge function λ_a∇λ_b − λ_b∇λ_a of an interior edge: R1 on
        // each element, tangentially continuous, zero tangential trace on ∂Ω.
        let (_, edge) = space.topology().interior().nth(3).unwrap();
        let [a, b] = edge.vertices;
        let mut coeffs = vec![0.0; space.dofs().n_u()];
        for (t, _) in edge.sides() {
            let g = space.geometry(t);
            let tri = space.mesh().triangles()[t];
            let grad = |v: usize| {
                let k = tri.iter().position(|&w| w == v).unwrap();
                -g.normals[k] * g.edge_lengths[k] / (2.0 * g.area)
            };
            let (ga, gb) = (grad(a), grad(b));
            let centre = (gb - ga) / 3.0;
            let curl = 2.0 * (ga.x * gb.y - ga.y * gb.x);
            coeffs[3 * t..3 * t + 3].copy_from_slice(&[centre.x, centre.y, curl / 2.0]);
        }
        let u = DgFunction::from_coeffs(space.dofs(), coeffs).unwrap();
        let p = recover_p(&space, &u);
        for t in 0..space.num_elements() {
            assert!((p.get(t) - u.curl(t)).abs() < 1e-12);
        }
        assert!(u.curl(edge.first.0).abs() > 1.0);
    }

    #[test]
    fn recovery_matches_direct_mass_solve() {
        // Two triangles: solve (p, q) = (curl u, q) − <{{q}}, [[u]]> for q in Q_h directly.
        let mesh = Mesh::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let space = DgSpace::new(mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = DgFunction::from_coeffs(
            space.dofs(),
            (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let p = recover_p(&space, &u);

        let rule = edge_rule(3).unwrap();
        let mut mass = nalgebra::Matrix2::<f64>::zeros();
        let mut rhs = nalgebra::Vector2::<f64>::zeros();
        for t in 0..2 {
            mass[(t, t)] = space.geometry(t).area;
            rhs[t] = space.geometry(t).area * u.curl(t);
        }
        for (e, edge) in space.topology().edges().iter().enumerate() {
            let sides: Vec<_> = edge.sides().collect();
            for (s, w) in rule.iter() {
                let x = space.edge_point(e, s[0]);
                let jump: f64 = sides
                    .iter()
                    .map(|&(t, k)| {
                        u.eval(space.geometry(t), t, &x)
                            .dot(&space.geometry(t).tangents[k])
                    })
                    .sum();
                for &(t, _) in &sides {
                    rhs[t] -= edge.length * w * jump / sides.len() as f64;
                }
            }
        }
        let oracle = mass.lu().solve(&rhs).unwrap();
        assert!((p.get(0) - oracle[0]).abs() < 1e-14);
        assert!((p.get(1) - oracle[1]).abs() < 1e-14);
    }

    #[test]
    fn mixed_residual_vanishes() {
        let space =
            DgSpace::new(build_structured_mesh(Domain::reference_l_shape(), 4).unwrap()).unwrap();
        let problem = FnProblem::new("pc", Domain::reference_l_shape())
            .with_regions(|c| (c.y > 0.0) as usize)
            .with_alpha(|r| 1.0 + r as f64)
            .with_beta(|r| crate::Mat2::identity() * (1.0 + 9.0 * r as f64))
            .with_source(|x, _| Vec2::new(x.y.sin(), x.x * x.x), |_, _| 0.0);
        let kappa = 50.0;
        let sol = solve_mixed(&space, &problem, kappa, &SolverConfig::default()).unwrap();
        let b = assemble_load(&space, &problem).unwrap();
        let scale = crate::linalg::norm2(&b);
        let (r1, r2) = apply_mixed_forms(&space, &problem, kappa, &sol.u, &sol.p).unwrap();
        let worst = r1.iter().chain(&r2).fold(0.0f64, |m, r| m.max(r.abs()));
        assert!(worst <= 1e-10 * scale, "{worst:e}");
    }
}
