//! Dörfler marking and the adaptive SOLVE → ESTIMATE → MARK → REFINE loop.

use std::io::Write;

use log::{info, warn};

use crate::estimator::{estimate, EdgeWeighting, EstimateReport};
use crate::format::sci;
use crate::linalg::SolverConfig;
use crate::mesh::{bisect, Mesh};
use crate::problem::Problem;
use crate::solve::{solve_mixed, MixedSolution, DEFAULT_KAPPA};
use crate::space::DgSpace;
use crate::{Error, Result};

/// Consecutive non-decreasing estimates that trigger a stagnation warning.
const STAGNATION_WINDOW: usize = 5;

/// Smallest set of elements whose indicators sum to at least `θ Σ η²(τ)`.
///
/// Indicators are taken largest first, ties by lower index, and the shortest
/// such prefix is returned (sorted by element index). Taking the largest
/// indicators first minimises the cardinality, and a larger `θ` only extends
/// the prefix.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidTheta(theta));
    }
    let total: f64 = indicators.iter().sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let target = theta * total;
    let mut sum = 0.0;
    let mut count = 0;
    for &t in &order {
        sum += indicators[t];
        count += 1;
        if sum >= target {
            break;
        }
    }
    let mut marked = order[..count].to_vec();
    marked.sort_unstable();
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    /// Stop once `η ≤ tol`.
    pub tol: f64,
    /// Stop once the reported DoF count reaches this bound.
    pub max_dofs: usize,
    /// Maximum number of refinements.
    pub max_iterations: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            tol: 0.0,
            max_dofs: 100_000,
            max_iterations: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub theta: f64,
    pub kappa: f64,
    pub stop: StopCriteria,
    pub solver: SolverConfig,
    pub weighting: EdgeWeighting,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            theta: 0.5,
            kappa: DEFAULT_KAPPA,
            stop: StopCriteria::default(),
            solver: SolverConfig::default(),
            weighting: EdgeWeighting::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptRecord {
    pub k: usize,
    /// Reported DoFs: velocity plus pressure, four per triangle.
    pub dofs: usize,
    pub eta: f64,
    pub dg_error: Option<f64>,
    pub effectivity: Option<f64>,
    pub triangles: usize,
    pub h_min: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptHistory {
    pub records: Vec<AdaptRecord>,
    /// Mesh, solution and estimate of the last iteration.
    pub mesh: Mesh,
    pub solution: MixedSolution,
    pub report: EstimateReport,
}

impl AdaptHistory {
    /// Columns `k,N,eta,dg_error,sigma,triangles,h_min`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,N,eta,dg_error,sigma,triangles,h_min")?;
        let opt = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), sci);
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.k,
                r.dofs,
                sci(r.eta),
                opt(r.dg_error),
                opt(r.effectivity),
                r.triangles,
                sci(r.h_min)
            )?;
        }
        Ok(())
    }

    /// Least-squares slope of `ln y` against `ln N` over the last `window` records.
    pub fn slope(&self, window: usize, y: impl Fn(&AdaptRecord) -> Option<f64>) -> Option<f64> {
        let start = self.records.len().saturating_sub(window);
        let points: Option<Vec<(f64, f64)>> = self.records[start..]
            .iter()
            .map(|r| y(r).map(|v| ((r.dofs as f64).ln(), v.ln())))
            .collect();
        loglog_slope(&points?)
    }
}

/// Least-squares slope of already logarithmic points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the adaptive loop from `mesh` until a stop criterion holds.
pub fn amipdg_loop(problem: &dyn Problem, mesh: Mesh, cfg: &AdaptConfig) -> Result<AdaptHistory> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(Error::InvalidTheta(cfg.theta));
    }
    let mut records = Vec::new();
    let mut space = DgSpace::new(mesh)?;
    let mut rising = 0;
    for k in 0.. {
        let solution = solve_mixed(&space, problem, cfg.kappa, &cfg.solver)?;
        let report = estimate(
            &space,
            problem,
            &solution.u,
            &solution.p,
            cfg.kappa,
            cfg.weighting,
        )?;
        let record = AdaptRecord {
            k,
            dofs: space.dofs().total(),
            eta: report.eta,
            dg_error: report.dg_error.map(|e| e.norm()),
            effectivity: report.effectivity,
            triangles: space.num_elements(),
            h_min: space
                .geometries()
                .iter()
                .map(|g| g.h)
                .fold(f64::INFINITY, f64::min),
        };
        info!("k = {k}: N = {}, eta = {}", record.dofs, sci(record.eta));
        if let Some(prev) = records.last().map(|r: &AdaptRecord| r.eta) {
            rising = if record.eta >= prev { rising + 1 } else { 0 };
            if rising >= STAGNATION_WINDOW {
                warn!("estimator has not decreased for {rising} consecutive iterations");
            }
        }
        records.push(record);

        let stop = &cfg.stop;
        if report.eta <= stop.tol || k >= stop.max_iterations || record.dofs >= stop.max_dofs {
            return Ok(AdaptHistory {
                records,
                mesh: space.into_mesh(),
                solution,
                report,
            });
        }
        let marked = dorfler_mark(&report.local_indicators(), cfg.theta)?;
        let refined = bisect(space.mesh(), &marked)?;
        space = DgSpace::new(refined)?;
    }
    unreachable!("the loop only exits by returning")
}
