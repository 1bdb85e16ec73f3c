use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::linalg::LltError;
use faer::Side;
use log::{debug, warn};

use super::csr::{dot, norm2, CsrMatrix};
use super::{Preconditioner, SolverConfig, SolverMethod};
use crate::{Error, Result};

/// Iterative refinement steps allowed after a direct solve.
const REFINEMENT_STEPS: usize = 3;

/// Result of a linear solve with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolve {
    pub x: Vec<f64>,
    /// CG iterations, or refinement steps for direct methods.
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖`.
    pub relative_residual: f64,
    pub method: SolverMethod,
}

/// A sparse factorization that can be applied repeatedly.
#[allow(clippy::large_enum_variant)] // built once per solve, never stored in bulk
pub enum Factorization {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Factorization::Cholesky(_) => "Factorization::Cholesky",
            Factorization::Lu(_) => "Factorization::Lu",
        })
    }
}

impl Factorization {
    pub fn method(&self) -> SolverMethod {
        match self {
            Factorization::Cholesky(_) => SolverMethod::Cholesky,
            Factorization::Lu(_) => SolverMethod::Lu,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let rhs = faer::ColMut::from_slice_mut(&mut x);
        match self {
            Factorization::Cholesky(llt) => llt.solve_in_place(rhs),
            Factorization::Lu(lu) => lu.solve_in_place(rhs),
        }
        x
    }
}

fn sequential_factorization() {
    // Keeps factorizations single-threaded and bitwise reproducible.
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Factorizes `a` with the direct method selected by `cfg`.
/// `Cg` selects Cholesky here.
pub fn factorize(a: &CsrMatrix, cfg: &SolverConfig) -> Result<Factorization> {
    cfg.validate()?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    sequential_factorization();
    let m = a.to_faer()?;
    let cholesky = || match m.sp_cholesky(Side::Lower) {
        Ok(llt) => Ok(Factorization::Cholesky(llt)),
        Err(LltError::Numeric(_)) => Err(Error::NonPositivePivot),
        Err(e) => Err(Error::Factorization(format!("{e:?}"))),
    };
    let lu = || {
        m.sp_lu()
            .map(Factorization::Lu)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    };
    match cfg.method {
        SolverMethod::Cholesky | SolverMethod::Cg => cholesky(),
        SolverMethod::Lu => lu(),
        SolverMethod::Auto => cholesky().or_else(|e| match e {
            Error::NonPositivePivot => {
                warn!("matrix is not positive definite, falling back to LU");
                lu()
            }
            e => Err(e),
        }),
    }
}

/// Solves `A x = b` for symmetric `A` to `‖Ax − b‖ ≤ tol ‖b‖`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<LinearSolve> {
    cfg.validate()?;
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(LinearSolve {
            x: vec![0.0; b.len()],
            iterations: 0,
            relative_residual: 0.0,
            method: cfg.method,
        });
    }
    match cfg.method {
        SolverMethod::Cg => conjugate_gradient(a, b, cfg),
        _ => {
            let factor = factorize(a, cfg)?;
            solve_with(a, &factor, b, cfg.tolerance)
        }
    }
}

/// Direct solve followed by a few steps of iterative refinement if needed.
///
/// The solve is accepted once either the relative residual or the normwise
/// backward error `‖r‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` is within `tol`. On strongly
/// graded meshes the former can stall near `ε cond(A)` even for a backward
/// stable factorization.
pub(crate) fn solve_with(
    a: &CsrMatrix,
    factor: &Factorization,
    b: &[f64],
    tol: f64,
) -> Result<LinearSolve> {
    let b_norm = norm2(b);
    let a_inf = (0..a.nrows())
        .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let b_inf = max_abs(b);
    let accepted = |x: &[f64], r: &[f64], rel: f64| {
        rel <= tol || max_abs(r) <= tol * (a_inf * max_abs(x) + b_inf)
    };
    let mut x = factor.solve(b);
    let mut residual = residual(a, &x, b);
    let mut rel = norm2(&residual) / b_norm;
    let mut steps = 0;
    while !accepted(&x, &residual, rel) && steps < REFINEMENT_STEPS {
        let dx = factor.solve(&residual);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        residual = self::residual(a, &x, b);
        rel = norm2(&residual) / b_norm;
        steps += 1;
    }
    if !accepted(&x, &residual, rel) || !rel.is_finite() {
        return Err(Error::NotConverged {
            iterations: steps,
            residual: rel,
        });
    }
    debug!(
        "direct solve: n = {}, residual {rel:.3e}, {steps} refinement steps",
        b.len()
    );
    Ok(LinearSolve {
        x,
        iterations: steps,
        relative_residual: rel,
        method: factor.method(),
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
}

fn conjugate_gradient(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<LinearSolve> {
    let n = b.len();
    let inv_diag: Vec<f64> = match cfg.preconditioner {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => {
            let d = a.diagonal();
            if let Some(i) = d.iter().position(|&v| v <= 0.0) {
                debug!("nonpositive diagonal entry at {i}");
                return Err(Error::NonPositivePivot);
            }
            d.iter().map(|v| 1.0 / v).collect()
        }
    };
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for k in 0..cfg.max_iterations {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Breakdown { iterations: k });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = norm2(&r) / b_norm;
        if rel <= cfg.tolerance {
            debug!("CG converged in {} iterations, residual {rel:.3e}", k + 1);
            return Ok(LinearSolve {
                x,
                iterations: k + 1,
                relative_residual: rel,
                method: SolverMethod::Cg,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iterations,
        residual: norm2(&r) / b_norm,
    })
}
