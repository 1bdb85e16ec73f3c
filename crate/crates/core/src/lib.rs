//! Adaptive mixed interior penalty discontinuous Galerkin (MIPDG) solver for
//! two-dimensional H(curl)-elliptic boundary value problems
//!
//! ```text
//!     curl(α curl u) + β u = f   in Ω,
//!                    u · t = 0   on ∂Ω,
//! ```
//!
//! discretised with elementwise rotational fields R1(τ) for `u` and piecewise
//! constants for `p = curl u`. The crate provides the mesh and newest-vertex
//! refinement, the DG spaces and trace operators, assembly of the symmetric
//! interior penalty operator, sparse solvers, the residual a posteriori
//! estimator, Dörfler marking and the adaptive loop, plus an experiment
//! harness (see the `amipdg` binary).

pub mod adapt;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod format;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solve;
pub mod space;

pub use error::{Error, Result};

pub type Point = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
