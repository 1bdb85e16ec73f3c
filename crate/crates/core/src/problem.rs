//! Problem data: coefficients `α`, `β`, source `f`, and optional exact solution.
//!
//! Coefficients may be piecewise smooth over subdomains. Each element belongs
//! to exactly one subdomain, chosen from its centroid by [`Problem::region`],
//! and every coefficient is evaluated with that region index so that traces on
//! an interface edge see the value of the element they come from.

use crate::mesh::Domain;
use crate::quadrature::QuadratureDegrees;
use crate::{Mat2, Point, Vec2};

/// Exact solution `u` with `p = curl u`.
pub trait ExactSolution: Sync {
    fn u(&self, x: &Point) -> Vec2;
    fn curl_u(&self, x: &Point) -> f64;
}

pub trait Problem: Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> Domain;

    /// Coefficient subdomain of an element with the given centroid.
    fn region(&self, _centroid: &Point) -> usize {
        0
    }

    fn alpha(&self, x: &Point, region: usize) -> f64;

    /// `∇α`; `None` means not supplied.
    fn grad_alpha(&self, _x: &Point, _region: usize) -> Option<Vec2> {
        None
    }

    /// Symmetric positive definite `β`.
    fn beta(&self, x: &Point, region: usize) -> Mat2;

    /// `(∂β/∂x, ∂β/∂y)`; `None` means not supplied.
    fn beta_derivatives(&self, _x: &Point, _region: usize) -> Option<[Mat2; 2]> {
        None
    }

    fn source(&self, x: &Point, region: usize) -> Vec2;

    /// `∇·f`; `None` means not supplied.
    fn div_source(&self, _x: &Point, _region: usize) -> Option<f64> {
        None
    }

    /// True when `α` and `β` are constant inside every region, in which case
    /// missing derivatives are taken as zero.
    fn piecewise_constant(&self) -> bool {
        false
    }

    fn exact(&self) -> Option<&dyn ExactSolution> {
        None
    }

    /// Quadrature degrees for assembly and estimation.
    fn quadrature(&self) -> QuadratureDegrees {
        QuadratureDegrees::DEFAULT
    }
}

type ScalarFn = Box<dyn Fn(&Point, usize) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&Point, usize) -> Vec2 + Send + Sync>;
type MatrixFn = Box<dyn Fn(&Point, usize) -> Mat2 + Send + Sync>;
type MatrixPairFn = Box<dyn Fn(&Point, usize) -> [Mat2; 2] + Send + Sync>;

/// A problem assembled from closures, with piecewise-constant defaults
/// `α = 1`, `β = I`, `f = 0` and zero derivatives.
pub struct FnProblem {
    name: String,
    domain: Domain,
    region: Box<dyn Fn(&Point) -> usize + Send + Sync>,
    alpha: ScalarFn,
    grad_alpha: VectorFn,
    beta: MatrixFn,
    beta_derivatives: MatrixPairFn,
    source: VectorFn,
    div_source: ScalarFn,
    piecewise_constant: bool,
    exact: Option<Box<dyn ExactSolution + Send>>,
    quadrature: QuadratureDegrees,
}

impl FnProblem {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        FnProblem {
            name: name.into(),
            domain,
            region: Box::new(|_| 0),
            alpha: Box::new(|_, _| 1.0),
            grad_alpha: Box::new(|_, _| Vec2::zeros()),
            beta: Box::new(|_, _| Mat2::identity()),
            beta_derivatives: Box::new(|_, _| [Mat2::zeros(); 2]),
            source: Box::new(|_, _| Vec2::zeros()),
            div_source: Box::new(|_, _| 0.0),
            piecewise_constant: true,
            exact: None,
            quadrature: QuadratureDegrees::DEFAULT,
        }
    }

    pub fn with_regions(mut self, f: impl Fn(&Point) -> usize + Send + Sync + 'static) -> Self {
        self.region = Box::new(f);
        self
    }

    /// Piecewise-constant `α`, one value per region.
    pub fn with_alpha(mut self, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        self.alpha = Box::new(move |_, r| f(r));
        self
    }

    /// Piecewise-constant `β`, one value per region.
    pub fn with_beta(mut self, f: impl Fn(usize) -> Mat2 + Send + Sync + 'static) -> Self {
        self.beta = Box::new(move |_, r| f(r));
        self
    }

    /// Smooth `α` with its gradient.
    pub fn with_variable_alpha(
        mut self,
        alpha: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Point) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        self.alpha = Box::new(move |x, _| alpha(x));
        self.grad_alpha = Box::new(move |x, _| grad(x));
        self.piecewise_constant = false;
        self
    }

    /// Smooth `β` with `(∂β/∂x, ∂β/∂y)`.
    pub fn with_variable_beta(
        mut self,
        beta: impl Fn(&Point) -> Mat2 + Send + Sync + 'static,
        derivatives: impl Fn(&Point) -> [Mat2; 2] + Send + Sync + 'static,
    ) -> Self {
        self.beta = Box::new(move |x, _| beta(x));
        self.beta_derivatives = Box::new(move |x, _| derivatives(x));
        self.piecewise_constant = false;
        self
    }

    pub fn with_source(
        mut self,
        f: impl Fn(&Point, usize) -> Vec2 + Send + Sync + 'static,
        div: impl Fn(&Point, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.source = Box::new(f);
        self.div_source = Box::new(div);
        self
    }

    pub fn with_exact(mut self, exact: impl ExactSolution + Send + 'static) -> Self {
        self.exact = Some(Box::new(exact));
        self
    }

    pub fn with_quadrature(mut self, degrees: QuadratureDegrees) -> Self {
        self.quadrature = degrees;
        self
    }
}

impl Problem for FnProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn region(&self, centroid: &Point) -> usize {
        (self.region)(centroid)
    }

    fn alpha(&self, x: &Point, region: usize) -> f64 {
        (self.alpha)(x, region)
    }

    fn grad_alpha(&self, x: &Point, region: usize) -> Option<Vec2> {
        Some((self.grad_alpha)(x, region))
    }

    fn beta(&self, x: &Point, region: usize) -> Mat2 {
        (self.beta)(x, region)
    }

    fn beta_derivatives(&self, x: &Point, region: usize) -> Option<[Mat2; 2]> {
        Some((self.beta_derivatives)(x, region))
    }

    fn source(&self, x: &Point, region: usize) -> Vec2 {
        (self.source)(x, region)
    }

    fn div_source(&self, x: &Point, region: usize) -> Option<f64> {
        Some((self.div_source)(x, region))
    }

    fn piecewise_constant(&self) -> bool {
        self.piecewise_constant
    }

    fn exact(&self) -> Option<&dyn ExactSolution> {
        self.exact.as_deref().map(|e| e as &dyn ExactSolution)
    }

    fn quadrature(&self) -> QuadratureDegrees {
        self.quadrature
    }
}

/// Exact solution given by closures.
pub struct FnExact<U, C> {
    pub u: U,
    pub curl_u: C,
}

impl<U, C> ExactSolution for FnExact<U, C>
where
    U: Fn(&Point) -> Vec2 + Sync,
    C: Fn(&Point) -> f64 + Sync,
{
    fn u(&self, x: &Point) -> Vec2 {
        (self.u)(x)
    }

    fn curl_u(&self, x: &Point) -> f64 {
        (self.curl_u)(x)
    }
}
