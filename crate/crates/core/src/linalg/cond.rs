use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::csr::{norm2, CsrMatrix};
use super::solver::factorize;
use super::SolverConfig;
use crate::{Error, Result};

const START_SEED: u64 = 0x5eed;

/// Spectral condition number `|λ|_max / |λ|_min` of a symmetric matrix.
///
/// The largest eigenvalue magnitude comes from power iteration on `A`, the
/// smallest from inverse iteration with a single sparse factorization. Both
/// use `‖A x‖` for a unit vector `x` as the eigenvalue estimate, which also
/// converges when `A` is indefinite, and stop once successive estimates agree
/// to `cfg.tolerance` relative. The start vector is seeded, so the result is
/// deterministic.
pub fn estimate_cond2(a: &CsrMatrix, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let factor = factorize(a, cfg)?;
    let lambda_max = power_iteration(n, cfg, |x| a.matvec(x))?;
    let mu_max = power_iteration(n, cfg, |x| factor.solve(x))?;
    debug!(
        "cond2: |λ|max = {lambda_max:.6e}, |λ|min = {:.6e}",
        1.0 / mu_max
    );
    Ok(lambda_max * mu_max)
}

fn power_iteration(
    n: usize,
    cfg: &SolverConfig,
    apply: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = norm2(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    let mut previous = f64::NAN;
    let mut settled = 0;
    for _ in 0..cfg.max_iterations {
        let mut y = apply(&x);
        let lambda = norm2(&y);
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Breakdown { iterations: 0 });
        }
        y.iter_mut().for_each(|v| *v /= lambda);
        x = y;
        // Two consecutive small changes guard against a stalled first step.
        if (lambda - previous).abs() <= cfg.tolerance * lambda {
            settled += 1;
            if settled == 2 {
                return Ok(lambda);
            }
        } else {
            settled = 0;
        }
        previous = lambda;
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iterations,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SolverMethod;

    #[test]
    fn diagonal() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 10.0]]).unwrap();
        let cond = estimate_cond2(&a, &SolverConfig::default().with_tolerance(1e-6)).unwrap();
        assert!((cond - 10.0).abs() < 1e-5);
    }

    #[test]
    fn indefinite_uses_magnitudes() {
        let a = CsrMatrix::from_dense(&[
            vec![-4.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let cfg = SolverConfig {
            method: SolverMethod::Auto,
            tolerance: 1e-8,
            ..SolverConfig::default()
        };
        assert!((estimate_cond2(&a, &cfg).unwrap() - 4.0).abs() < 1e-6);
    }
}
