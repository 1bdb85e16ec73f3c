//! Sparse matrices, linear solvers and condition-number estimation.

mod cond;
mod csr;
mod solver;

pub use cond::estimate_cond2;
pub use csr::{dot, norm2, CsrMatrix};
pub use solver::{factorize, solve_spd, Factorization, LinearSolve};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Sparse Cholesky with approximate minimum degree ordering.
    Cholesky,
    /// Preconditioned conjugate gradients.
    Cg,
    /// Sparse LU with partial pivoting, for symmetric indefinite systems.
    Lu,
    /// Cholesky, falling back to LU when a nonpositive pivot shows up.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual tolerance `‖Ax − b‖ ≤ tol ‖b‖`; also the relative
    /// eigenvalue tolerance of [`estimate_cond2`].
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Auto,
            tolerance: 1e-10,
            max_iterations: 20_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn cg() -> Self {
        SolverConfig {
            method: SolverMethod::Cg,
            ..Self::default()
        }
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        SolverConfig { tolerance, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidSolverConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSolverConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}
