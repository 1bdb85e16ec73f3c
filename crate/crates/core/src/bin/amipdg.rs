use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;

use amipdg::adapt::StopCriteria;
use amipdg::estimator::EdgeWeighting;
use amipdg::harness::{parse_h_list, run, DumpFlags, ExperimentConfig, Mode, ProblemId};
use amipdg::linalg::{SolverConfig, SolverMethod};
use amipdg::quadrature::QuadratureDegrees;
use amipdg::Error;

/// Adaptive MIPDG experiments for 2D H(curl)-elliptic problems.
#[derive(Debug, Parser)]
#[command(name = "amipdg", version)]
struct Cli {
    /// ex1 (sinusoidal), ex2 (coefficient jump) or ex3 (L-shape)
    #[arg(long)]
    problem: String,
    /// uniform or adaptive
    #[arg(long, default_value = "uniform")]
    mode: String,
    /// Penalty parameters, comma separated
    #[arg(long, value_delimiter = ',', default_value = "50")]
    kappa: Vec<f64>,
    /// Dörfler parameters, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    theta: Vec<f64>,
    /// Mesh sizes such as 1/16,1/32; the first one is the adaptive initial mesh
    #[arg(long)]
    h_list: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    max_dofs: usize,
    /// Maximum number of refinements in adaptive mode
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop adapting once the estimator drops below this value
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Add the 2-norm condition number of the stiffness matrix to uniform tables
    #[arg(long)]
    cond_number: bool,
    #[arg(long)]
    dump_mesh: bool,
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long)]
    dump_estimator: bool,
    /// Quadrature degrees as TRIANGLE,EDGE
    #[arg(long, value_delimiter = ',', num_args = 2)]
    quadrature: Option<Vec<usize>>,
    /// Count interior edge terms once for each neighbour instead of splitting them
    #[arg(long)]
    full_edge_weights: bool,
    /// Use preconditioned CG instead of a sparse direct solver
    #[arg(long)]
    cg: bool,
}

impl Cli {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let problem: ProblemId = self.problem.parse()?;
        let mode: Mode = self.mode.parse()?;
        let mut cfg = ExperimentConfig::new(problem, mode);
        cfg.kappas = self.kappa.clone();
        cfg.thetas = self.theta.clone();
        cfg.h_list = match &self.h_list {
            Some(list) => parse_h_list(list)?,
            None if mode == Mode::Uniform => parse_h_list("1/16,1/32,1/64,1/128")?,
            None => Vec::new(),
        };
        cfg.stop = StopCriteria {
            tol: self.tol,
            max_dofs: self.max_dofs,
            max_iterations: self.max_iterations.unwrap_or(usize::MAX),
        };
        cfg.out_dir = Some(self.out.clone());
        cfg.cond_number = self.cond_number;
        cfg.dump = DumpFlags {
            mesh: self.dump_mesh,
            matrix: self.dump_matrix,
            estimator: self.dump_estimator,
        };
        if let Some(q) = &self.quadrature {
            cfg.quadrature = Some(QuadratureDegrees {
                triangle: q[0],
                edge: q[1],
            });
        }
        if self.full_edge_weights {
            cfg.weighting = EdgeWeighting::Full;
        }
        if self.cg {
            cfg.solver = SolverConfig {
                method: SolverMethod::Cg,
                ..SolverConfig::default()
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("AMIPDG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "AMIPDG_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_solver_failure() {
        ExitCode::from(2)
    } else if err.is_config_error() {
        ExitCode::from(3)
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(3);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = configure_threads()
        .and_then(|()| cli.config())
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::Path;

    fn cli(args: &[&str], out: &Path) -> Result<Cli, clap::Error> {
        let mut argv = vec!["amipdg"];
        argv.extend_from_slice(args);
        argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
        Cli::try_parse_from(argv)
    }

    fn run_cli(args: &[&str], out: &Path) -> Result<(), Error> {
        run(&cli(args, out).unwrap().config()?)
    }

    #[test]
    fn uniform_study_writes_reproducible_csv() {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--problem",
            "ex1",
            "--h-list",
            "1/4,1/8",
            "--kappa",
            "1,50",
            "--cond-number",
        ];
        let (first, second) = (dir.path().join("a"), dir.path().join("b"));
        run_cli(&args, &first).unwrap();
        run_cli(&args, &second).unwrap();
        let a = fs::read_to_string(first.join("uniform_ex1.csv")).unwrap();
        assert_eq!(
            a,
            fs::read_to_string(second.join("uniform_ex1.csv")).unwrap()
        );
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(
            lines[0],
            "kappa,h,triangles,N,l2_error,dg_error,dg_order,eta,eta_order,sigma,cond"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1.00000e+00,2.50000e-01,32,128,"));
        assert_eq!(lines[1].split(',').nth(6), Some("N/A"));
        assert_ne!(lines[2].split(',').nth(6), Some("N/A"));
    }

    #[test]
    fn adaptive_study_writes_history_slopes_and_dumps() {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--problem",
            "ex3",
            "--mode",
            "adaptive",
            "--theta",
            "0.3,0.6",
            "--max-iterations",
            "3",
            "--dump-mesh",
            "--dump-matrix",
            "--dump-estimator",
        ];
        run_cli(&args, dir.path()).unwrap();
        for theta in ["0.3", "0.6"] {
            let name = format!("ex3_kappa50_theta{theta}");
            let read = |file: String| fs::read_to_string(dir.path().join(file)).unwrap();
            let history = read(format!("adaptive_{name}.csv"));
            assert_eq!(history.lines().count(), 5);
            assert!(history.starts_with("k,N,eta,dg_error,sigma,triangles,h_min\n0,384,"));
            let estimator = read(format!("estimator_{name}.csv"));
            assert!(estimator.starts_with("element,r1,r2,r3,j1,j2,j3,eta2\n"));
            let mesh = read(format!("mesh_{name}.txt"));
            let triangles: usize = mesh.split_whitespace().nth(1).unwrap().parse().unwrap();
            assert_eq!(estimator.lines().count(), triangles + 1);
            assert!(read(format!("matrix_{name}.mtx"))
                .starts_with("%%MatrixMarket matrix coordinate real general"));
        }
        let slopes = fs::read_to_string(dir.path().join("slopes_ex3.csv")).unwrap();
        assert_eq!(slopes.lines().count(), 3);
        assert!(slopes.lines().nth(1).unwrap().ends_with(",N/A"));
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let code = |args: &[&str]| match run_cli(args, dir.path()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_code(&e),
        };
        assert_eq!(code(&["--problem", "ex9"]), ExitCode::from(3));
        assert_eq!(
            code(&["--problem", "ex1", "--kappa", "0"]),
            ExitCode::from(3)
        );
        assert_eq!(
            code(&["--problem", "ex2", "--mode", "adaptive", "--theta", "1.5"]),
            ExitCode::from(3)
        );
        assert_eq!(
            code(&["--problem", "ex1", "--h-list", "1/3x"]),
            ExitCode::from(3)
        );
        assert_eq!(
            code(&["--problem", "ex1", "--h-list", "0.3"]),
            ExitCode::from(3)
        );
        // Conjugate gradients cannot handle the indefinite small-penalty system.
        assert_eq!(
            code(&[
                "--problem",
                "ex1",
                "--h-list",
                "1/8",
                "--kappa",
                "1",
                "--cg"
            ]),
            ExitCode::from(2)
        );
        assert!(cli(&["--problem", "ex1", "--unknown-flag"], dir.path())
            .unwrap_err()
            .use_stderr());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let dir = tempfile::tempdir().unwrap();
        let run_with = |threads: usize, sub: &str| {
            let out = dir.path().join(sub);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let args = [
                "--problem",
                "ex2",
                "--mode",
                "adaptive",
                "--max-iterations",
                "3",
            ];
            pool.install(|| run_cli(&args, &out)).unwrap();
            fs::read(out.join("adaptive_ex2_kappa50_theta0.5.csv")).unwrap()
        };
        assert_eq!(run_with(1, "one"), run_with(4, "four"));
    }
}
