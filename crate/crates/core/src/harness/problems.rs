//! The three benchmark problems.

use std::f64::consts::PI;

use crate::mesh::Domain;
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::QuadratureDegrees;
use crate::{Mat2, Point, Vec2};

/// Smooth solution `u = (cos πx sin πy, −cos πy sin πx)` on the unit square
/// with `α = β = 1`, so `p = −2π cos πx cos πy` and `f = (2π² + 1) u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sinusoidal;

impl Sinusoidal {
    fn u(x: &Point) -> Vec2 {
        let (cx, sx) = ((PI * x.x).cos(), (PI * x.x).sin());
        let (cy, sy) = ((PI * x.y).cos(), (PI * x.y).sin());
        Vec2::new(cx * sy, -cy * sx)
    }
}

impl ExactSolution for Sinusoidal {
    fn u(&self, x: &Point) -> Vec2 {
        Sinusoidal::u(x)
    }

    fn curl_u(&self, x: &Point) -> f64 {
        -2.0 * PI * (PI * x.x).cos() * (PI * x.y).cos()
    }
}

impl Problem for Sinusoidal {
    fn name(&self) -> &str {
        "ex1"
    }

    fn domain(&self) -> Domain {
        Domain::unit_square()
    }

    fn alpha(&self, _: &Point, _: usize) -> f64 {
        1.0
    }

    fn beta(&self, _: &Point, _: usize) -> Mat2 {
        Mat2::identity()
    }

    fn source(&self, x: &Point, _: usize) -> Vec2 {
        (2.0 * PI * PI + 1.0) * Sinusoidal::u(x)
    }

    fn div_source(&self, _: &Point, _: usize) -> Option<f64> {
        Some(0.0)
    }

    fn piecewise_constant(&self) -> bool {
        true
    }

    fn exact(&self) -> Option<&dyn ExactSolution> {
        Some(self)
    }
}

pub fn problem_ex1() -> Sinusoidal {
    Sinusoidal
}

/// `u = (y g, −x g)` with `g = (x² − 1)(y² − 1) / (x² + y² + 0.02)` on
/// `(−1, 1)²`, `α = 1`, and `β = 1` inside `Ω₁ = (−0.5, 0.5)²`, `β = 100`
/// outside. Region 0 is `Ω₁`.
#[derive(Debug, Clone, Copy)]
pub struct JumpCoefficient {
    pub beta_inner: f64,
    pub beta_outer: f64,
}

impl Default for JumpCoefficient {
    fn default() -> Self {
        JumpCoefficient {
            beta_inner: 1.0,
            beta_outer: 100.0,
        }
    }
}

/// `g` and its derivatives up to second order.
struct G {
    g: f64,
    gx: f64,
    gy: f64,
    gxx: f64,
    gxy: f64,
    gyy: f64,
}

const SHIFT: f64 = 0.02;

fn g_derivatives(x: &Point) -> G {
    let (x, y) = (x.x, x.y);
    let n = (x * x - 1.0) * (y * y - 1.0);
    let (nx, ny) = (2.0 * x * (y * y - 1.0), 2.0 * y * (x * x - 1.0));
    let (nxx, nyy, nxy) = (2.0 * (y * y - 1.0), 2.0 * (x * x - 1.0), 4.0 * x * y);
    let d = x * x + y * y + SHIFT;
    let (dx, dy) = (2.0 * x, 2.0 * y);
    // Differentiate g·D = N.
    let g = n / d;
    let gx = (nx - g * dx) / d;
    let gy = (ny - g * dy) / d;
    let gxx = (nxx - 2.0 * gx * dx - 2.0 * g) / d;
    let gyy = (nyy - 2.0 * gy * dy - 2.0 * g) / d;
    let gxy = (nxy - gx * dy - gy * dx) / d;
    G {
        g,
        gx,
        gy,
        gxx,
        gxy,
        gyy,
    }
}

impl JumpCoefficient {
    fn beta_value(&self, region: usize) -> f64 {
        if region == 0 {
            self.beta_inner
        } else {
            self.beta_outer
        }
    }

    /// `curl curl u = (∂p/∂y, −∂p/∂x)` with `p = −2g − x g_x − y g_y`.
    pub fn curl_curl_u(x: &Point) -> Vec2 {
        let G {
            gx,
            gy,
            gxx,
            gxy,
            gyy,
            ..
        } = g_derivatives(x);
        let px = -3.0 * gx - x.x * gxx - x.y * gxy;
        let py = -3.0 * gy - x.x * gxy - x.y * gyy;
        Vec2::new(py, -px)
    }
}

impl ExactSolution for JumpCoefficient {
    fn u(&self, x: &Point) -> Vec2 {
        let g = g_derivatives(x).g;
        Vec2::new(x.y * g, -x.x * g)
    }

    fn curl_u(&self, x: &Point) -> f64 {
        let G { g, gx, gy, .. } = g_derivatives(x);
        -2.0 * g - x.x * gx - x.y * gy
    }
}

impl Problem for JumpCoefficient {
    fn name(&self) -> &str {
        "ex2"
    }

    fn domain(&self) -> Domain {
        Domain::Square {
            lower: -1.0,
            upper: 1.0,
        }
    }

    fn region(&self, c: &Point) -> usize {
        usize::from(!(c.x.abs() < 0.5 && c.y.abs() < 0.5))
    }

    fn alpha(&self, _: &Point, _: usize) -> f64 {
        1.0
    }

    fn beta(&self, _: &Point, region: usize) -> Mat2 {
        Mat2::identity() * self.beta_value(region)
    }

    fn source(&self, x: &Point, region: usize) -> Vec2 {
        Self::curl_curl_u(x) + self.beta_value(region) * ExactSolution::u(self, x)
    }

    /// `∇·f = β ∇·u = β (y g_x − x g_y)`.
    fn div_source(&self, x: &Point, region: usize) -> Option<f64> {
        let G { gx, gy, .. } = g_derivatives(x);
        Some(self.beta_value(region) * (x.y * gx - x.x * gy))
    }

    fn piecewise_constant(&self) -> bool {
        true
    }

    fn exact(&self) -> Option<&dyn ExactSolution> {
        Some(self)
    }

    fn quadrature(&self) -> QuadratureDegrees {
        QuadratureDegrees::ELEVATED
    }
}

pub fn problem_ex2() -> JumpCoefficient {
    JumpCoefficient::default()
}

/// L-shaped domain with `α = 1/(1 + x² + y²)`, `β = [[1 + x², xy], [xy, 1 + y²]]`
/// and `f = (1, 1)/(x² + y² + 0.01)`; no exact solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct LShape;

const SOURCE_SHIFT: f64 = 0.01;

impl Problem for LShape {
    fn name(&self) -> &str {
        "ex3"
    }

    fn domain(&self) -> Domain {
        Domain::reference_l_shape()
    }

    fn alpha(&self, x: &Point, _: usize) -> f64 {
        1.0 / (1.0 + x.coords.norm_squared())
    }

    fn grad_alpha(&self, x: &Point, region: usize) -> Option<Vec2> {
        let a = self.alpha(x, region);
        Some(-a * a * 2.0 * x.coords)
    }

    fn beta(&self, x: &Point, _: usize) -> Mat2 {
        Mat2::new(1.0 + x.x * x.x, x.x * x.y, x.x * x.y, 1.0 + x.y * x.y)
    }

    fn beta_derivatives(&self, x: &Point, _: usize) -> Option<[Mat2; 2]> {
        Some([
            Mat2::new(2.0 * x.x, x.y, x.y, 0.0),
            Mat2::new(0.0, x.x, x.x, 2.0 * x.y),
        ])
    }

    fn source(&self, x: &Point, _: usize) -> Vec2 {
        Vec2::repeat(1.0 / (x.coords.norm_squared() + SOURCE_SHIFT))
    }

    fn div_source(&self, x: &Point, _: usize) -> Option<f64> {
        let d = x.coords.norm_squared() + SOURCE_SHIFT;
        Some(-2.0 * (x.x + x.y) / (d * d))
    }

    fn quadrature(&self) -> QuadratureDegrees {
        QuadratureDegrees::ELEVATED
    }
}

pub fn problem_ex3() -> LShape {
    LShape
}
