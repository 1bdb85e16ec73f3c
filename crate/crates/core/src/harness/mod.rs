//! Experiment harness: the benchmark problems, uniform-refinement studies with
//! κ sweeps and condition numbers, and adaptive studies. All tables are CSV
//! with numbers in six-digit scientific notation.

mod problems;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use log::info;

pub use problems::{problem_ex1, problem_ex2, problem_ex3, JumpCoefficient, LShape, Sinusoidal};

use crate::adapt::{amipdg_loop, AdaptConfig, AdaptHistory, StopCriteria};
use crate::assembly::assemble_aip;
use crate::estimator::{estimate, EdgeWeighting, EstimateReport};
use crate::format::{order, sci};
use crate::linalg::{estimate_cond2, SolverConfig};
use crate::mesh::{build_structured_mesh, write_mesh, Domain, Mesh};
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::QuadratureDegrees;
use crate::solve::{assemble_primal, recover_p, solve_system, DEFAULT_KAPPA};
use crate::space::DgSpace;
use crate::{Error, Mat2, Point, Result, Vec2};

/// Initial mesh size of adaptive runs. On `(-1, 1)²` it resolves the
/// coefficient interface of the jump problem.
pub const DEFAULT_INITIAL_H: f64 = 0.25;

/// Number of trailing iterations used for the adaptive slope fits.
pub const SLOPE_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Ex1,
    Ex2,
    Ex3,
}

impl ProblemId {
    pub fn build(self) -> Box<dyn Problem> {
        match self {
            ProblemId::Ex1 => Box::new(problem_ex1()),
            ProblemId::Ex2 => Box::new(problem_ex2()),
            ProblemId::Ex3 => Box::new(problem_ex3()),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemId::Ex1 => "ex1",
            ProblemId::Ex2 => "ex2",
            ProblemId::Ex3 => "ex3",
        })
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" | "ex1-sinusoidal" => Ok(ProblemId::Ex1),
            "ex2" | "ex2-jump" => Ok(ProblemId::Ex2),
            "ex3" | "ex3-lshape" => Ok(ProblemId::Ex3),
            _ => Err(Error::Config(format!("unknown problem `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Uniform,
    Adaptive,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Mode::Uniform),
            "adaptive" => Ok(Mode::Adaptive),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

/// Parses a mesh size written as `1/n`, `n` (meaning `1/n`) or a decimal `h < 1`.
pub fn parse_h(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("invalid mesh size `{s}`"));
    let s = s.trim();
    let h = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => {
            let v: f64 = s.parse().map_err(|_| bad())?;
            if v >= 1.0 {
                1.0 / v
            } else {
                v
            }
        }
    };
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(bad())
    }
}

/// Comma-separated list of [`parse_h`] entries.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_h)
        .collect()
}

/// Subdivisions per axis giving leg length `h` on `domain`.
pub fn subdivisions(domain: Domain, h: f64) -> Result<usize> {
    let width = match domain {
        Domain::Square { lower, upper } | Domain::LShape { lower, upper } => upper - lower,
    };
    let m = (width / h).round();
    if m < 1.0 || ((width / m) - h).abs() > 1e-9 * h {
        return Err(Error::Config(format!(
            "mesh size {h} does not divide the domain width {width}"
        )));
    }
    Ok(m as usize)
}

/// Structured initial mesh of `problem` with leg length `h`.
pub fn initial_mesh(problem: &dyn Problem, h: f64) -> Result<Mesh> {
    let domain = problem.domain();
    build_structured_mesh(domain, subdivisions(domain, h)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DumpFlags {
    pub mesh: bool,
    pub matrix: bool,
    pub estimator: bool,
}

impl DumpFlags {
    fn any(&self) -> bool {
        self.mesh || self.matrix || self.estimator
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub mode: Mode,
    pub kappas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Mesh sizes of the uniform study; the first one is the adaptive initial mesh.
    pub h_list: Vec<f64>,
    pub stop: StopCriteria,
    /// Output directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Overrides the problem's quadrature degrees.
    pub quadrature: Option<QuadratureDegrees>,
    pub weighting: EdgeWeighting,
    pub solver: SolverConfig,
    pub cond_number: bool,
    pub dump: DumpFlags,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemId, mode: Mode) -> Self {
        ExperimentConfig {
            problem,
            mode,
            kappas: vec![DEFAULT_KAPPA],
            thetas: vec![0.5],
            h_list: Vec::new(),
            stop: StopCriteria::default(),
            out_dir: None,
            quadrature: None,
            weighting: EdgeWeighting::default(),
            solver: SolverConfig::default(),
            cond_number: false,
            dump: DumpFlags::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() {
            return Err(Error::Config("at least one κ is required".into()));
        }
        if let Some(&k) = self.kappas.iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidPenalty(k));
        }
        self.solver.validate()?;
        match self.mode {
            Mode::Uniform => {
                if self.h_list.is_empty() {
                    return Err(Error::Config("uniform mode needs a mesh size list".into()));
                }
            }
            Mode::Adaptive => {
                if self.thetas.is_empty() {
                    return Err(Error::Config("adaptive mode needs at least one θ".into()));
                }
                if let Some(&t) = self.thetas.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
                    return Err(Error::InvalidTheta(t));
                }
            }
        }
        if self.dump.any() && self.out_dir.is_none() {
            return Err(Error::Config("dump flags need an output directory".into()));
        }
        Ok(())
    }

    fn problem(&self) -> Box<dyn Problem> {
        let inner = self.problem.build();
        match self.quadrature {
            Some(degrees) => Box::new(WithQuadrature { inner, degrees }),
            None => inner,
        }
    }

    fn file(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        let Some(dir) = &self.out_dir else {
            return Ok(None);
        };
        fs::create_dir_all(dir)?;
        Ok(Some(BufWriter::new(File::create(dir.join(name))?)))
    }
}

/// Delegates to another problem with different quadrature degrees.
struct WithQuadrature {
    inner: Box<dyn Problem>,
    degrees: QuadratureDegrees,
}

impl Problem for WithQuadrature {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn domain(&self) -> Domain {
        self.inner.domain()
    }
    fn region(&self, c: &Point) -> usize {
        self.inner.region(c)
    }
    fn alpha(&self, x: &Point, r: usize) -> f64 {
        self.inner.alpha(x, r)
    }
    fn grad_alpha(&self, x: &Point, r: usize) -> Option<Vec2> {
        self.inner.grad_alpha(x, r)
    }
    fn beta(&self, x: &Point, r: usize) -> Mat2 {
        self.inner.beta(x, r)
    }
    fn beta_derivatives(&self, x: &Point, r: usize) -> Option<[Mat2; 2]> {
        self.inner.beta_derivatives(x, r)
    }
    fn source(&self, x: &Point, r: usize) -> Vec2 {
        self.inner.source(x, r)
    }
    fn div_source(&self, x: &Point, r: usize) -> Option<f64> {
        self.inner.div_source(x, r)
    }
    fn piecewise_constant(&self) -> bool {
        self.inner.piecewise_constant()
    }
    fn exact(&self) -> Option<&dyn ExactSolution> {
        self.inner.exact()
    }
    fn quadrature(&self) -> QuadratureDegrees {
        self.degrees
    }
}

/// One row of a uniform-refinement table.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformRow {
    pub kappa: f64,
    pub h: f64,
    pub triangles: usize,
    pub dofs: usize,
    pub l2_error: Option<f64>,
    pub dg_error: Option<f64>,
    pub dg_order: Option<f64>,
    pub eta: f64,
    pub eta_order: Option<f64>,
    pub effectivity: Option<f64>,
    pub cond: Option<f64>,
}

/// Observed order `ln(e_prev/e) / ln(h_prev/h)`.
pub fn observed_order(prev: (f64, f64), curr: (f64, f64)) -> f64 {
    (prev.1 / curr.1).ln() / (prev.0 / curr.0).ln()
}

fn na(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map_or_else(|| "N/A".to_string(), f)
}

/// Writes `kappa,h,triangles,N,l2_error,dg_error,dg_order,eta,eta_order,sigma`,
/// plus `cond` when any row carries a condition number.
pub fn write_uniform_csv<W: Write>(rows: &[UniformRow], mut w: W) -> Result<()> {
    let with_cond = rows.iter().any(|r| r.cond.is_some());
    write!(
        w,
        "kappa,h,triangles,N,l2_error,dg_error,dg_order,eta,eta_order,sigma"
    )?;
    writeln!(w, "{}", if with_cond { ",cond" } else { "" })?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            sci(r.kappa),
            sci(r.h),
            r.triangles,
            r.dofs,
            na(r.l2_error, sci),
            na(r.dg_error, sci),
            na(r.dg_order, order),
            sci(r.eta),
            na(r.eta_order, order),
            na(r.effectivity, sci),
        )?;
        if with_cond {
            write!(w, ",{}", na(r.cond, sci))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn tag(x: f64) -> String {
    // Shortest round-trip form keeps file names readable: 0.5, 50, 1e-3.
    format!("{x}")
}

/// Solves and estimates on every mesh size of `cfg.h_list` for every κ.
/// Orders are taken between consecutive mesh sizes of the same κ.
pub fn run_uniform_study(cfg: &ExperimentConfig) -> Result<Vec<UniformRow>> {
    cfg.validate()?;
    if cfg.mode != Mode::Uniform {
        return Err(Error::Config("run_uniform_study needs uniform mode".into()));
    }
    let problem = cfg.problem();
    let mut rows = Vec::new();
    for &kappa in &cfg.kappas {
        let mut prev: Option<UniformRow> = None;
        for &h in &cfg.h_list {
            let mesh = initial_mesh(problem.as_ref(), h)?;
            let space = DgSpace::new(mesh)?;
            let system = assemble_primal(&space, problem.as_ref(), kappa)?;
            let (u, _) = solve_system(&space, &system, &cfg.solver)?;
            let p = recover_p(&space, &u);
            let report = estimate(&space, problem.as_ref(), &u, &p, kappa, cfg.weighting)?;
            let cond = if cfg.cond_number {
                Some(estimate_cond2(&system.matrix, &cfg.solver)?)
            } else {
                None
            };
            let dg = report.dg_error.map(|e| e.norm());
            let order_of = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => Some(observed_order((prev.as_ref()?.h, a), (h, b))),
                _ => None,
            };
            let row = UniformRow {
                kappa,
                h,
                triangles: space.num_elements(),
                dofs: space.dofs().total(),
                l2_error: report.dg_error.map(|e| e.l2()),
                dg_error: dg,
                dg_order: order_of(prev.as_ref().and_then(|r| r.dg_error), dg),
                eta: report.eta,
                eta_order: order_of(prev.as_ref().map(|r| r.eta), Some(report.eta)),
                effectivity: report.effectivity,
                cond,
            };
            info!(
                "{} κ = {kappa}, h = {}: η = {}",
                cfg.problem,
                sci(h),
                sci(row.eta)
            );
            let name = format!("{}_kappa{}_h{}", cfg.problem, tag(kappa), tag(h));
            dump(cfg, &name, &space, &report, || Ok(system.matrix.clone()))?;
            prev = Some(row.clone());
            rows.push(row);
        }
    }
    if let Some(w) = cfg.file(&format!("uniform_{}.csv", cfg.problem))? {
        write_uniform_csv(&rows, w)?;
    }
    Ok(rows)
}

fn dump(
    cfg: &ExperimentConfig,
    name: &str,
    space: &DgSpace,
    report: &EstimateReport,
    matrix: impl FnOnce() -> Result<crate::linalg::CsrMatrix>,
) -> Result<()> {
    if cfg.dump.mesh {
        if let Some(w) = cfg.file(&format!("mesh_{name}.txt"))? {
            write_mesh(space.mesh(), w)?;
        }
    }
    if cfg.dump.matrix {
        if let Some(w) = cfg.file(&format!("matrix_{name}.mtx"))? {
            matrix()?.write_matrix_market(w)?;
        }
    }
    if cfg.dump.estimator {
        if let Some(w) = cfg.file(&format!("estimator_{name}.csv"))? {
            report.write_csv(w)?;
        }
    }
    Ok(())
}

/// Result of one adaptive run.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub theta: f64,
    pub kappa: f64,
    pub history: AdaptHistory,
    /// Slope of `ln η` against `ln N` over the last [`SLOPE_WINDOW`] iterations.
    pub eta_slope: Option<f64>,
    /// Same for the DG error, when an exact solution exists.
    pub dg_slope: Option<f64>,
}

/// Writes `theta,kappa,iterations,N,eta,eta_slope,dg_slope`.
pub fn write_slopes_csv<W: Write>(runs: &[AdaptiveRun], mut w: W) -> Result<()> {
    writeln!(w, "theta,kappa,iterations,N,eta,eta_slope,dg_slope")?;
    for run in runs {
        let last = run.history.records.last().expect("at least one iteration");
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sci(run.theta),
            sci(run.kappa),
            last.k,
            last.dofs,
            sci(last.eta),
            na(run.eta_slope, order),
            na(run.dg_slope, order)
        )?;
    }
    Ok(())
}

/// Runs the adaptive loop for every (κ, θ) pair from the initial mesh
/// `cfg.h_list[0]` (or the problem default).
pub fn run_adaptive_study(cfg: &ExperimentConfig) -> Result<Vec<AdaptiveRun>> {
    cfg.validate()?;
    if cfg.mode != Mode::Adaptive {
        return Err(Error::Config(
            "run_adaptive_study needs adaptive mode".into(),
        ));
    }
    let problem = cfg.problem();
    let h = cfg.h_list.first().copied().unwrap_or(DEFAULT_INITIAL_H);
    let mesh = initial_mesh(problem.as_ref(), h)?;
    let mut runs = Vec::new();
    for &kappa in &cfg.kappas {
        for &theta in &cfg.thetas {
            let adapt = AdaptConfig {
                theta,
                kappa,
                stop: cfg.stop,
                solver: cfg.solver,
                weighting: cfg.weighting,
            };
            let history = amipdg_loop(problem.as_ref(), mesh.clone(), &adapt)?;
            let name = format!("{}_kappa{}_theta{}", cfg.problem, tag(kappa), tag(theta));
            if let Some(w) = cfg.file(&format!("adaptive_{name}.csv"))? {
                history.write_csv(w)?;
            }
            if cfg.dump.any() {
                let space = DgSpace::new(history.mesh.clone())?;
                dump(cfg, &name, &space, &history.report, || {
                    assemble_aip(&space, problem.as_ref(), kappa)
                })?;
            }
            let run = AdaptiveRun {
                theta,
                kappa,
                eta_slope: history.slope(SLOPE_WINDOW, |r| Some(r.eta)),
                dg_slope: history.slope(SLOPE_WINDOW, |r| r.dg_error),
                history,
            };
            info!("{name}: η slope {}", na(run.eta_slope, order));
            runs.push(run);
        }
    }
    if let Some(w) = cfg.file(&format!("slopes_{}.csv", cfg.problem))? {
        write_slopes_csv(&runs, w)?;
    }
    Ok(runs)
}

/// Runs the study selected by `cfg.mode`.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.mode {
        Mode::Uniform => run_uniform_study(cfg).map(drop),
        Mode::Adaptive => run_adaptive_study(cfg).map(drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_size_parsing() {
        assert_eq!(parse_h("1/16").unwrap(), 0.0625);
        assert_eq!(parse_h("16").unwrap(), 0.0625);
        assert_eq!(parse_h("0.25").unwrap(), 0.25);
        assert_eq!(parse_h_list("1/16, 1/32").unwrap(), vec![0.0625, 0.03125]);
        assert!(parse_h("x").is_err());
        assert!(parse_h("1/0").is_err());
        assert!(parse_h("-2").is_err());
    }

    #[test]
    fn subdivisions_follow_domain_width() {
        assert_eq!(subdivisions(Domain::unit_square(), 1.0 / 16.0).unwrap(), 16);
        assert_eq!(subdivisions(Domain::reference_l_shape(), 0.25).unwrap(), 8);
        assert!(subdivisions(Domain::unit_square(), 0.3).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(ProblemId::Ex1, Mode::Uniform);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.h_list = vec![0.25];
        cfg.validate().unwrap();
        cfg.kappas = vec![0.0];
        assert_eq!(cfg.validate(), Err(Error::InvalidPenalty(0.0)));
        let mut cfg = ExperimentConfig::new(ProblemId::Ex2, Mode::Adaptive);
        cfg.thetas = vec![1.5];
        assert_eq!(cfg.validate(), Err(Error::InvalidTheta(1.5)));
        assert_eq!("ex3-lshape".parse::<ProblemId>().unwrap(), ProblemId::Ex3);
        assert!("ex4".parse::<ProblemId>().is_err());
    }

    #[test]
    fn single_mesh_has_no_orders() {
        let mut cfg = ExperimentConfig::new(ProblemId::Ex1, Mode::Uniform);
        cfg.h_list = vec![0.25];
        let rows = run_uniform_study(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].dg_order, None);
        let mut out = Vec::new();
        write_uniform_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[6], "N/A");
        assert_eq!(fields[8], "N/A");
        assert_eq!(fields[3], "128");
    }

    #[test]
    fn zero_iterations_give_single_row() {
        let mut cfg = ExperimentConfig::new(ProblemId::Ex3, Mode::Adaptive);
        cfg.stop.max_iterations = 0;
        let runs = run_adaptive_study(&cfg).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].history.records.len(), 1);
        assert_eq!(runs[0].eta_slope, None);
    }

    #[test]
    fn orders_of_halving() {
        assert!((observed_order((0.5, 4.0), (0.25, 1.0)) - 2.0).abs() < 1e-14);
    }
}
