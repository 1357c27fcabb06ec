use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use poro_core::diagnostics::{dense_schur_eigs, estimate_inf_sup, rank_nullspace, write_eigen_csv};
use poro_core::driver::{
    convergence_study, discretize, layered_problem, manufactured_problem, run_experiment, time_march, ExperimentSpec,
    Problem, ScenarioKind, SolveSettings, SolverKind,
};
use poro_core::export::{write_vtk, VtkFields};
use poro_core::krylov::SolverConfig;
use poro_core::precond::InnerSolverConfig;
use poro_core::{build_structured_simplicial, BoxDomain, PoroError};

/// Biot poroelasticity with BR1/WG elements and block-preconditioned Krylov solvers.
#[derive(Parser, Debug)]
#[command(name = "poro", version, args_override_self = true)]
struct Cli {
    /// key=value file whose entries override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// March one problem on one mesh.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the residual history of the last step as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Iteration-count sweep over meshes, λ, Δt and solvers.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "21,43")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,1e4")]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-6")]
        dts: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "minres,gmres")]
        solvers: Vec<String>,
    },
    /// Dense spectra of the approximate Schur complement on a small mesh.
    Eig {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-8")]
        eps: Vec<f64>,
    },
    /// Error norms and observed rates under mesh refinement.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        final_time: f64,
        /// Δt = dt_factor·h.
        #[arg(long, default_value_t = 0.1)]
        dt_factor: f64,
    },
    /// Write the structured mesh as VTK.
    ExportMesh {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Divisions per side.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// I (pure Dirichlet), II (mixed) or layered.
    #[arg(long, default_value = "I")]
    scenario: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// minres, gmres or direct.
    #[arg(long, default_value = "minres")]
    solver: String,
    #[arg(long, default_value_t = 0.1)]
    rho_scale: f64,
    #[arg(long, default_value_t = 1e-3)]
    ic_droptol: f64,
    #[arg(long, default_value_t = 1e-12)]
    inner_tol: f64,
    #[arg(long, default_value_t = 200)]
    inner_maxit: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    maxit: usize,
    #[arg(long, default_value_t = 30)]
    restart: usize,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> anyhow::Result<SolveSettings> {
        Ok(SolveSettings {
            solver: self.solver.parse()?,
            krylov: SolverConfig {
                tol: self.tol,
                maxit: self.maxit,
                restart: self.restart,
            },
            inner: InnerSolverConfig {
                tol: self.inner_tol,
                maxit: self.inner_maxit,
                droptol: self.ic_droptol,
            },
            rho_scale: self.rho_scale,
        })
    }

    fn scenario(&self) -> anyhow::Result<ScenarioKind> {
        Ok(self.scenario.parse()?)
    }

    fn problem(&self) -> anyhow::Result<Problem> {
        Ok(match self.scenario()? {
            ScenarioKind::Layered => layered_problem(self.n, self.dt)?,
            kind => manufactured_problem(self.dim, self.n, kind, self.lambda, self.dt)?,
        })
    }
}

/// Reads `key = value` lines into `--key value` arguments.
fn config_args(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        out.push(format!("--{}", k.trim().replace('_', "-")));
        out.push(v.trim().to_string());
    }
    Ok(out)
}

fn parse_cli() -> anyhow::Result<Cli> {
    let argv: Vec<String> = std::env::args().collect();
    let first = Cli::parse_from(&argv);
    match &first.config {
        Some(path) => {
            let mut all = argv;
            all.extend(config_args(path)?);
            Ok(Cli::try_parse_from(all)?)
        }
        None => Ok(first),
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Returns true when every solve converged.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Solve { common, history } => {
            let problem = common.problem()?;
            let settings = common.settings()?;
            let res = match time_march(&problem, &settings, common.steps) {
                Ok(r) => r,
                Err(e @ PoroError::NotConverged { .. }) => {
                    eprintln!("{e}");
                    return Ok(false);
                }
                Err(e) => return Err(e.into()),
            };
            for s in &res.steps {
                println!(
                    "step {:>4}  t = {:.4e}  iterations {:>4}  residual {:.3e}  {:.3}s",
                    s.step,
                    s.time,
                    s.report.iterations,
                    s.report.final_residual(),
                    s.report.seconds
                );
            }
            if let Some(e) = res.errors {
                println!(
                    "errors: |u-u_h|_H1 = {:.4e}  |p-p_h|_L2 = {:.4e}",
                    e.displacement_h1, e.pressure_l2
                );
            }
            if let (Some(path), Some(last)) = (history, res.steps.last()) {
                last.report.write_history_csv(&path)?;
            }
            if let Some(out) = &common.out {
                let fields = VtkFields {
                    displacement: Some((&res.dofs, &res.u)),
                    pressure: Some(&res.p),
                };
                write_vtk(out, &problem.mesh, "poroelastic solution", fields)?;
            }
            Ok(true)
        }
        Command::Experiment {
            common,
            ns,
            lambdas,
            dts,
            solvers,
        } => {
            let solvers = solvers
                .iter()
                .map(|s| s.parse::<SolverKind>())
                .collect::<Result<Vec<_>, _>>()?;
            let spec = ExperimentSpec {
                dim: common.dim,
                scenario: common.scenario()?,
                ns,
                lambdas,
                dts,
                solvers,
                steps: common.steps,
                settings: common.settings()?,
            };
            let table = run_experiment(&spec)?;
            let csv = table.to_csv();
            print!("{csv}");
            if let Some(out) = &common.out {
                write_text(out, &csv)?;
            }
            Ok(table.all_converged())
        }
        Command::Eig { common, eps } => {
            let problem = common.problem()?;
            let disc = discretize(&problem, common.rho_scale)?;
            let h = 1.0 / common.n as f64;
            let reports = dense_schur_eigs(&disc.system, &disc.blocks, &eps, h, &common.scenario)?;
            let nulls = rank_nullspace(&disc.blocks.bcirc)?;
            let inf_sup = estimate_inf_sup(&disc.system.a1, &disc.system.bcirc, &disc.blocks.mp)?;
            println!(
                "beta = {:.4}  rank(B°ᵀ) = {} of {}  null dimension {}",
                inf_sup.beta,
                nulls.rank,
                disc.blocks.n_elements(),
                nulls.null_basis.len()
            );
            for r in &reports {
                println!(
                    "eps = {:.1e}  rho = {:.3e}  theta in [{:.4e}, {:.4e}]  C_Korn = {:.4}",
                    r.eps, r.rho, r.min, r.max, r.c_korn
                );
            }
            if let Some(out) = &common.out {
                write_eigen_csv(&reports, out)?;
            }
            Ok(true)
        }
        Command::Convergence {
            common,
            ns,
            final_time,
            dt_factor,
        } => {
            let study = convergence_study(
                common.dim,
                common.scenario()?,
                common.lambda,
                &ns,
                final_time,
                dt_factor,
                &common.settings()?,
            );
            let study = match study {
                Ok(s) => s,
                Err(e @ PoroError::NotConverged { .. }) => {
                    eprintln!("{e}");
                    return Ok(false);
                }
                Err(e) => return Err(e.into()),
            };
            let csv = study.to_csv();
            print!("{csv}");
            println!(
                "slopes: displacement H1 {:.3}, pressure L2 {:.3}",
                study.displacement_slope, study.pressure_slope
            );
            if let Some(out) = &common.out {
                write_text(out, &csv)?;
            }
            Ok(true)
        }
        Command::ExportMesh { common } => {
            let mesh = build_structured_simplicial(common.n, common.dim, BoxDomain::unit())?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("mesh.vtk"));
            write_vtk(&out, &mesh, "structured mesh", VtkFields::default())?;
            println!(
                "{} vertices, {} elements -> {}",
                mesh.num_vertices(),
                mesh.num_elements(),
                out.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
