//! Residual a posteriori error estimator and the DG error norm.
//!
//! Element residuals and edge jumps of a discrete pair `(u_h, p_h)`:
//!
//! ```text
//! R1 = p_h − curl_h u_h
//! R2 = f − (curl(α p_h) + β u_h),   curl(α p_h) = p_h (∂α/∂y, −∂α/∂x)
//! R3 = ∇·(f − β u_h)
//! J1 = [[α p_h]],  J2 = [f − β u_h]   (interior edges)
//! J3 = [[u_h]]                        (all edges)
//! ```
//!
//! and the local indicator
//! `η²(τ) = ‖R1‖² + h_τ²(‖R2‖² + ‖R3‖²) + Σ_e w_e (h_e(‖J1‖² + ‖J2‖²) + κ h_e⁻¹‖J3‖²)`.

use std::io::Write;

use rayon::prelude::*;

use crate::assembly::element_regions;
use crate::format::sci;
use crate::problem::Problem;
use crate::quadrature::{edge_rule, tri_rule, EdgeRule, QuadratureDegrees, TriangleRule};
use crate::space::{basis_div_beta, basis_eval, DgFunction, DgSpace, PiecewiseConstant};
use crate::{Error, Mat2, Point, Result, Vec2};

/// How an interior edge's jump terms are split between its two elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeWeighting {
    /// Each element receives the full edge term, so interior edges count
    /// twice in the global sum.
    Full,
    /// Each element receives half, so every edge counts once globally.
    #[default]
    Shared,
}

impl EdgeWeighting {
    fn weight(self, num_sides: usize) -> f64 {
        match (self, num_sides) {
            (EdgeWeighting::Shared, 2) => 0.5,
            _ => 1.0,
        }
    }
}

/// Weighted squared contributions to `η²(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Contributions {
    /// `‖R1‖²`
    pub r1: f64,
    /// `h_τ²‖R2‖²`
    pub r2: f64,
    /// `h_τ²‖R3‖²`
    pub r3: f64,
    /// `Σ w_e h_e ‖J1‖²`
    pub j1: f64,
    /// `Σ w_e h_e ‖J2‖²`
    pub j2: f64,
    /// `κ Σ w_e h_e⁻¹ ‖J3‖²`
    pub j3: f64,
}

impl Contributions {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2 + self.r3 + self.j1 + self.j2 + self.j3
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.r1, self.r2, self.r3, self.j1, self.j2, self.j3]
    }
}

/// Squared components of the DG error and its norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgError {
    /// `‖p − p_h‖²`
    pub p: f64,
    /// `‖u − u_h‖²`
    pub u: f64,
    /// `‖curl u − curl_h u_h‖²`
    pub curl: f64,
    /// `κ Σ h_e⁻¹ ‖[[u_h]]‖²`
    pub jump: f64,
}

impl DgError {
    pub fn norm(&self) -> f64 {
        (self.p + self.u + self.curl + self.jump).sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.u.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Per-element contributions; `η²(τ)` is their sum.
    pub elements: Vec<Contributions>,
    pub eta: f64,
    pub dg_error: Option<DgError>,
    pub effectivity: Option<f64>,
}

impl EstimateReport {
    pub fn local_indicators(&self) -> Vec<f64> {
        self.elements.iter().map(Contributions::total).collect()
    }

    /// Sum of each contribution over all elements.
    pub fn totals(&self) -> Contributions {
        self.elements
            .iter()
            .fold(Contributions::default(), |mut acc, c| {
                acc.r1 += c.r1;
                acc.r2 += c.r2;
                acc.r3 += c.r3;
                acc.j1 += c.j1;
                acc.j2 += c.j2;
                acc.j3 += c.j3;
                acc
            })
    }

    /// One row per element: `element,r1,r2,r3,j1,j2,j3,eta2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "element,r1,r2,r3,j1,j2,j3,eta2")?;
        for (t, c) in self.elements.iter().enumerate() {
            write!(w, "{t}")?;
            for v in c.as_array() {
                write!(w, ",{}", sci(v))?;
            }
            writeln!(w, ",{}", sci(c.total()))?;
        }
        Ok(())
    }
}

/// Coefficient data needed by the residuals at one point.
struct PointData {
    grad_alpha: Vec2,
    beta: Mat2,
    beta_derivatives: [Mat2; 2],
    source: Vec2,
    div_source: f64,
}

fn point_data(problem: &dyn Problem, x: &Point, region: usize) -> Result<PointData> {
    let constant = problem.piecewise_constant();
    let grad_alpha = match problem.grad_alpha(x, region) {
        Some(g) => g,
        None if constant => Vec2::zeros(),
        None => return Err(Error::MissingDerivative("grad_alpha")),
    };
    let beta_derivatives = match problem.beta_derivatives(x, region) {
        Some(d) => d,
        None if constant => [Mat2::zeros(); 2],
        None => return Err(Error::MissingDerivative("beta_derivatives")),
    };
    Ok(PointData {
        grad_alpha,
        beta: problem.beta(x, region),
        beta_derivatives,
        source: problem.source(x, region),
        div_source: problem
            .div_source(x, region)
            .ok_or(Error::MissingDerivative("div_source"))?,
    })
}

/// `(‖R1‖, ‖R2‖, ‖R3‖)` on element `t`.
pub fn element_residuals(
    space: &DgSpace,
    problem: &dyn Problem,
    region: usize,
    rule: &TriangleRule,
    t: usize,
    u: &DgFunction,
    p: &PiecewiseConstant,
) -> Result<[f64; 3]> {
    let geom = space.geometry(t);
    let coeffs = u.local(t);
    let ph = p.get(t);
    let r1 = (p.get(t) - u.curl(t)).abs() * geom.area.sqrt();
    let (mut r2, mut r3) = (0.0, 0.0);
    for (q, w) in rule.iter() {
        let x = geom.map(q[0], q[1]);
        let jw = 2.0 * geom.area * w;
        let d = point_data(problem, &x, region)?;
        let uh = u.eval(geom, t, &x);
        let curl_alpha_p = ph * Vec2::new(d.grad_alpha.y, -d.grad_alpha.x);
        r2 += jw * (d.source - curl_alpha_p - d.beta * uh).norm_squared();
        let div_phi = basis_div_beta(&d.beta_derivatives, &basis_eval(geom, &x));
        let div_beta_u: f64 = (0..3).map(|i| coeffs[i] * div_phi[i]).sum();
        r3 += jw * (d.div_source - div_beta_u).powi(2);
    }
    Ok([r1, r2.sqrt(), r3.sqrt()])
}

/// `(‖J1‖, ‖J2‖, ‖J3‖)` on edge `e`; `J1` and `J2` vanish on boundary edges.
pub fn edge_jumps(
    space: &DgSpace,
    problem: &dyn Problem,
    regions: &[usize],
    rule: &EdgeRule,
    e: usize,
    u: &DgFunction,
    p: &PiecewiseConstant,
) -> Result<[f64; 3]> {
    let edge = space.topology().edge(e);
    let (mut j1, mut j2, mut j3) = (0.0, 0.0, 0.0);
    for (s, w) in rule.iter() {
        let x = space.edge_point(e, s[0]);
        let jw = edge.length * w;
        let (mut tangential, mut alpha_p, mut normal_flux) = (0.0, 0.0, 0.0);
        for (side, (t, k)) in edge.sides().enumerate() {
            let geom = space.geometry(t);
            let uh = u.eval(geom, t, &x);
            tangential += uh.dot(&geom.tangents[k]);
            if !edge.is_boundary() {
                let region = regions[t];
                let sign = if side == 0 { 1.0 } else { -1.0 };
                // [[αp]] = α₁p₁t₁ + α₂p₂t₂ with t₂ = −t₁, so its length is |α₁p₁ − α₂p₂|.
                alpha_p += sign * problem.alpha(&x, region) * p.get(t);
                normal_flux += (problem.source(&x, region) - problem.beta(&x, region) * uh)
                    .dot(&geom.normals[k]);
            }
        }
        j1 += jw * alpha_p * alpha_p;
        j2 += jw * normal_flux * normal_flux;
        j3 += jw * tangential * tangential;
    }
    Ok([j1.sqrt(), j2.sqrt(), j3.sqrt()])
}

/// An edge term entering `η²(τ)`: length, norms `(‖J1‖, ‖J2‖, ‖J3‖)` and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTerm {
    pub length: f64,
    pub jumps: [f64; 3],
    pub weight: f64,
}

/// Weighted contributions of one element.
pub fn local_estimator(
    h_tau: f64,
    residuals: [f64; 3],
    edges: &[EdgeTerm],
    kappa: f64,
) -> Contributions {
    let [r1, r2, r3] = residuals;
    let h2 = h_tau * h_tau;
    let mut c = Contributions {
        r1: r1 * r1,
        r2: h2 * r2 * r2,
        r3: h2 * r3 * r3,
        ..Default::default()
    };
    for term in edges {
        let [j1, j2, j3] = term.jumps;
        c.j1 += term.weight * term.length * j1 * j1;
        c.j2 += term.weight * term.length * j2 * j2;
        c.j3 += term.weight * kappa / term.length * j3 * j3;
    }
    c
}

/// Global `η = (Σ_τ η²(τ))^{1/2}`, summed in element order.
pub fn global_estimator(report: &EstimateReport) -> f64 {
    report
        .elements
        .iter()
        .map(Contributions::total)
        .sum::<f64>()
        .sqrt()
}

/// Evaluates the estimator, and the DG error when the problem has an exact solution.
pub fn estimate(
    space: &DgSpace,
    problem: &dyn Problem,
    u: &DgFunction,
    p: &PiecewiseConstant,
    kappa: f64,
    weighting: EdgeWeighting,
) -> Result<EstimateReport> {
    let degrees = problem.quadrature();
    let tri = tri_rule(degrees.triangle)?;
    let edge = edge_rule(degrees.edge)?;
    let regions = element_regions(space, problem);
    let topo = space.topology();

    let jumps: Vec<[f64; 3]> = (0..topo.len())
        .into_par_iter()
        .map(|e| edge_jumps(space, problem, &regions, &edge, e, u, p))
        .collect::<Result<_>>()?;
    let elements: Vec<Contributions> = (0..space.num_elements())
        .into_par_iter()
        .map(|t| {
            let residuals = element_residuals(space, problem, regions[t], &tri, t, u, p)?;
            let terms = topo.element_edges(t).map(|e| {
                let edge = topo.edge(e);
                EdgeTerm {
                    length: edge.length,
                    jumps: jumps[e],
                    weight: weighting.weight(edge.num_sides()),
                }
            });
            Ok(local_estimator(
                space.geometry(t).h,
                residuals,
                &terms,
                kappa,
            ))
        })
        .collect::<Result<_>>()?;

    let mut report = EstimateReport {
        elements,
        eta: 0.0,
        dg_error: None,
        effectivity: None,
    };
    report.eta = global_estimator(&report);
    if problem.exact().is_some() {
        let dg = dg_error(space, problem, u, p, kappa)?;
        report.effectivity = Some(effectivity(dg.norm(), report.eta)?);
        report.dg_error = Some(dg);
    }
    Ok(report)
}

/// DG error `‖p − p_h‖² + ‖u − u_h‖² + ‖curl u − curl_h u_h‖² + κ Σ h_e⁻¹ ‖[[u_h]]‖²`,
/// integrated with at least the elevated quadrature degrees.
pub fn dg_error(
    space: &DgSpace,
    problem: &dyn Problem,
    u: &DgFunction,
    p: &PiecewiseConstant,
    kappa: f64,
) -> Result<DgError> {
    let exact = problem.exact().ok_or(Error::NoExactSolution)?;
    let degrees = problem.quadrature();
    let tri = tri_rule(degrees.triangle.max(QuadratureDegrees::ELEVATED.triangle))?;
    let edge = edge_rule(degrees.edge.max(QuadratureDegrees::ELEVATED.edge))?;
    let volume: Vec<[f64; 3]> = (0..space.num_elements())
        .into_par_iter()
        .map(|t| {
            let geom = space.geometry(t);
            let mut acc = [0.0; 3];
            for (q, w) in tri.iter() {
                let x = geom.map(q[0], q[1]);
                let jw = 2.0 * geom.area * w;
                let curl = exact.curl_u(&x);
                acc[0] += jw * (curl - p.get(t)).powi(2);
                acc[1] += jw * (exact.u(&x) - u.eval(geom, t, &x)).norm_squared();
                acc[2] += jw * (curl - u.curl(t)).powi(2);
            }
            acc
        })
        .collect();
    let topo = space.topology();
    let jumps: Vec<f64> = (0..topo.len())
        .into_par_iter()
        .map(|e| {
            let length = topo.edge(e).length;
            edge.iter()
                .map(|(s, w)| {
                    let x = space.edge_point(e, s[0]);
                    let jump = crate::space::tangential_jump(space, u, e, &x);
                    length * w * jump * jump
                })
                .sum::<f64>()
                * kappa
                / length
        })
        .collect();
    let mut err = DgError {
        p: 0.0,
        u: 0.0,
        curl: 0.0,
        jump: jumps.iter().sum(),
    };
    for [ep, eu, ec] in volume {
        err.p += ep;
        err.u += eu;
        err.curl += ec;
    }
    Ok(err)
}

/// `σ = ‖error‖_DG / η`. Both vanishing counts as an exact estimate, `σ = 1`.
pub fn effectivity(dg_error: f64, eta: f64) -> Result<f64> {
    if eta > 0.0 {
        Ok(dg_error / eta)
    } else if dg_error == 0.0 {
        Ok(1.0)
    } else {
        Err(Error::ZeroEstimator(dg_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Domain};
    use crate::problem::{FnExact, FnProblem};
    use approx::assert_relative_eq;

    fn space(m: usize) -> DgSpace {
        DgSpace::new(build_structured_mesh(Domain::unit_square(), m).unwrap()).unwrap()
    }

    fn rotation(space: &DgSpace) -> DgFunction {
        DgFunction::l2_projection(space, &tri_rule(4).unwrap(), |x| Vec2::new(-x.y, x.x))
    }

    #[test]
    fn r1_vanishes_when_p_is_curl() {
        let s = space(2);
        let u = rotation(&s);
        let p = PiecewiseConstant::curl_of(&u, s.dofs());
        let problem = FnProblem::new("zero", Domain::unit_square());
        let r = element_residuals(&s, &problem, 0, &tri_rule(4).unwrap(), 1, &u, &p).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn r3_is_div_f_for_constant_coefficients() {
        let s = space(2);
        let u = rotation(&s);
        let p = PiecewiseConstant::zeros(s.dofs());
        let problem = FnProblem::new("f", Domain::unit_square())
            .with_beta(|_| Mat2::new(2.0, 0.5, 0.5, 3.0))
            .with_source(|x, _| Vec2::new(x.x * x.x, x.y), |x, _| 2.0 * x.x + 1.0);
        let rule = tri_rule(4).unwrap();
        for t in 0..s.num_elements() {
            let r3 = element_residuals(&s, &problem, 0, &rule, t, &u, &p).unwrap()[2];
            let g = s.geometry(t);
            let oracle =
                rule.integrate(|q| (2.0 * g.map(q[0], q[1]).x + 1.0).powi(2)) * 2.0 * g.area;
            assert_relative_eq!(r3, oracle.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn jump_examples() {
        let s = space(3);
        let regions = vec![0; s.num_elements()];
        let rule = edge_rule(5).unwrap();
        let u = rotation(&s);
        let p = PiecewiseConstant::curl_of(&u, s.dofs());
        let problem = FnProblem::new("unit", Domain::unit_square()).with_alpha(|_| 3.0);
        for (e, edge) in s.topology().edges().iter().enumerate() {
            let [j1, j2, j3] = edge_jumps(&s, &problem, &regions, &rule, e, &u, &p).unwrap();
            if edge.is_boundary() {
                assert_eq!((j1, j2), (0.0, 0.0));
                let (t, k) = edge.first;
                let g = s.geometry(t);
                let oracle = (rule.integrate(|q| {
                    u.eval(g, t, &s.edge_point(e, q[0]))
                        .dot(&g.tangents[k])
                        .powi(2)
                }) * edge.length)
                    .sqrt();
                assert_relative_eq!(j3, oracle, max_relative = 1e-13);
            } else {
                assert!(j1 < 1e-13 && j3 < 1e-13);
            }
        }
    }

    #[test]
    fn local_estimator_examples() {
        assert_eq!(local_estimator(0.3, [0.0; 3], &[], 50.0).total(), 0.0);
        let term = EdgeTerm {
            length: 0.25,
            jumps: [0.0, 0.0, 0.1],
            weight: 1.0,
        };
        let c = local_estimator(0.3, [0.0; 3], &[term], 50.0);
        assert_relative_eq!(c.total(), 50.0 / 0.25 * 0.01, epsilon = 1e-15);
        let report = EstimateReport {
            elements: vec![c],
            eta: 0.0,
            dg_error: None,
            effectivity: None,
        };
        assert_relative_eq!(global_estimator(&report), c.total().sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn effectivity_cases() {
        assert_eq!(effectivity(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(effectivity(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(effectivity(0.1, 0.0), Err(Error::ZeroEstimator(0.1)));
    }

    #[test]
    fn dg_error_of_exact_r1_field_is_jump_free() {
        // u = (−y, x) lies in U_h, so only the boundary jump term survives.
        let s = space(4);
        let u = rotation(&s);
        let p = PiecewiseConstant::curl_of(&u, s.dofs());
        let problem = FnProblem::new("rot", Domain::unit_square()).with_exact(FnExact {
            u: |x: &Point| Vec2::new(-x.y, x.x),
            curl_u: |_: &Point| 2.0,
        });
        let err = dg_error(&s, &problem, &u, &p, 50.0).unwrap();
        assert!(err.p < 1e-26 && err.u < 1e-26 && err.curl < 1e-26);
        assert!(err.jump > 0.0);
        let none = FnProblem::new("none", Domain::unit_square());
        assert_eq!(
            dg_error(&s, &none, &u, &p, 50.0),
            Err(Error::NoExactSolution)
        );
    }

    #[test]
    fn missing_derivative_reported() {
        struct Bare;
        impl Problem for Bare {
            fn name(&self) -> &str {
                "bare"
            }
            fn domain(&self) -> Domain {
                Domain::unit_square()
            }
            fn alpha(&self, x: &Point, _: usize) -> f64 {
                1.0 + x.x
            }
            fn beta(&self, _: &Point, _: usize) -> Mat2 {
                Mat2::identity()
            }
            fn source(&self, _: &Point, _: usize) -> Vec2 {
                Vec2::zeros()
            }
        }
        let s = space(2);
        let u = DgFunction::zeros(s.dofs());
        let p = PiecewiseConstant::zeros(s.dofs());
        assert_eq!(
            estimate(&s, &Bare, &u, &p, 50.0, EdgeWeighting::Shared),
            Err(Error::MissingDerivative("grad_alpha"))
        );
    }

    #[test]
    fn csv_layout() {
        let c = Contributions {
            r1: 1.0,
            ..Default::default()
        };
        let report = EstimateReport {
            elements: vec![c],
            eta: 1.0,
            dg_error: None,
            effectivity: None,
        };
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "element,r1,r2,r3,j1,j2,j3,eta2\n0,1.00000e+00,0.00000e+00,0.00000e+00,0.00000e+00,0.00000e+00,0.00000e+00,1.00000e+00\n"
        );
    }
}
