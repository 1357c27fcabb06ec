//! Problem setup, the implicit-Euler time loop, parameter sweeps and the
//! mesh-convergence study.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{assemble_blocks, assemble_rhs, AssembledBlocks, Coefficient, PhysicalParams, PreviousStep};
use crate::error::{PoroError, Result};
use crate::krylov::{gmres_restarted, minres, SolveReport, SolverConfig};
use crate::manufactured::{benchmark_2d, benchmark_3d, ManufacturedSolution};
use crate::mesh::{build_structured_simplicial, BoxDomain, Mesh, Point};
use crate::precond::{BlockPreconditioner, InnerSolverConfig, PreconditionerKind};
use crate::quadrature::load_rule;
use crate::scenario::{DisplacementBc, PressureBc, ProblemData, ScenarioSpec};
use crate::spaces::{br_basis_for, dirichlet_constraints, DofMap};
use crate::system::{
    build_regularizer_scaled, build_three_field, recover_fields, solve_two_field_dense, two_field_rhs,
    RegularizationMode, SchurApprox, ThreeFieldSystem,
};

/// Outer solver paired with its preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// MINRES with the block-diagonal preconditioner.
    Minres,
    /// Restarted GMRES with the block lower-triangular preconditioner.
    Gmres,
    /// Dense direct solve of the two-field system (small problems only).
    Direct,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Minres => "minres",
            SolverKind::Gmres => "gmres",
            SolverKind::Direct => "direct",
        })
    }
}

impl FromStr for SolverKind {
    type Err = PoroError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minres" => Ok(SolverKind::Minres),
            "gmres" => Ok(SolverKind::Gmres),
            "direct" => Ok(SolverKind::Direct),
            other => Err(PoroError::Parse(format!("unknown solver '{other}'"))),
        }
    }
}

/// Which benchmark to set up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Manufactured solution, Dirichlet on the whole boundary.
    PureDirichlet,
    /// Manufactured solution, traction and flux on the `right` face.
    MixedRight,
    /// Three-layer tissue model driven by a boundary pressure pulse (2D).
    Layered,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::PureDirichlet => "I",
            ScenarioKind::MixedRight => "II",
            ScenarioKind::Layered => "layered",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = PoroError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" | "dirichlet" => Ok(ScenarioKind::PureDirichlet),
            "ii" | "2" | "mixed" => Ok(ScenarioKind::MixedRight),
            "layered" | "spinal" => Ok(ScenarioKind::Layered),
            other => Err(PoroError::Parse(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub solver: SolverKind,
    pub krylov: SolverConfig,
    pub inner: InnerSolverConfig,
    /// `ρ = rho_scale·min|K|` in the pure Dirichlet case.
    pub rho_scale: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            solver: SolverKind::Minres,
            krylov: SolverConfig::default(),
            inner: InnerSolverConfig::default(),
            rho_scale: 0.1,
        }
    }
}

impl SolveSettings {
    pub fn with_solver(solver: SolverKind) -> Self {
        SolveSettings {
            solver,
            ..Default::default()
        }
    }
}

/// Everything needed to march one discrete problem in time.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub scenario: ScenarioSpec,
    pub params: PhysicalParams,
    pub exact: Option<ManufacturedSolution>,
}

/// Manufactured benchmark with `μ = c0 = κ = α = 1` on an `n`-division unit box.
pub fn manufactured_problem(dim: usize, n: usize, kind: ScenarioKind, lambda: f64, dt: f64) -> Result<Problem> {
    let (mu, alpha, c0, kappa) = (1.0, 1.0, 1.0, 1.0);
    let exact = match dim {
        2 => benchmark_2d(mu, lambda, alpha, c0, kappa),
        3 => benchmark_3d(mu, lambda, alpha, c0, kappa),
        _ => return Err(PoroError::Config(format!("dimension must be 2 or 3, got {dim}"))),
    };
    let data = exact.problem_data();
    let scenario = match kind {
        ScenarioKind::PureDirichlet => ScenarioSpec::pure_dirichlet(dim, data),
        ScenarioKind::MixedRight => ScenarioSpec::mixed_right_neumann(dim, data),
        ScenarioKind::Layered => {
            return Err(PoroError::Config("the layered problem has no manufactured solution".into()))
        }
    };
    let mesh = build_structured_simplicial(n, dim, BoxDomain::unit())?;
    Ok(Problem {
        mesh,
        scenario,
        params: PhysicalParams::uniform(mu, lambda, alpha, c0, kappa, dt),
        exact: Some(exact),
    })
}

/// Material of one horizontal strip of the layered model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub young: f64,
    pub poisson: f64,
    pub permeability: f64,
}

/// Bottom to top: gray matter, white matter, pia.
pub const LAYERS: [Layer; 3] = [
    Layer {
        young: 5.0e4,
        poisson: 0.479,
        permeability: 2.0e-9,
    },
    Layer {
        young: 5.0e4,
        poisson: 0.479,
        permeability: 2.0e-8,
    },
    Layer {
        young: 2.3e7,
        poisson: 0.479,
        permeability: 3.0 / 7.0 * 1.0e-8,
    },
];

/// Boundary pressure pulse `g(t) = 9000 (t/0.1)^{1/2} e^{−5t + 0.5}`.
pub fn pulse(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        9000.0 * (t / 0.1).sqrt() * (-5.0 * t + 0.5).exp()
    }
}

/// Layered tissue on the unit square: loaded from the top by traction
/// `(0, −g)` with `p = g`, clamped and impermeable at the bottom, free sides
/// with `p = 0`. `n` should be a multiple of 3 so elements do not straddle layers.
pub fn layered_problem(n: usize, dt: f64) -> Result<Problem> {
    if n == 0 || n % 3 != 0 {
        return Err(PoroError::Config(format!("layered mesh needs n divisible by 3, got {n}")));
    }
    let mesh = build_structured_simplicial(n, 2, BoxDomain::unit())?;
    let ne = mesh.num_elements();
    let mut mu = Vec::with_capacity(ne);
    let mut lambda = Vec::with_capacity(ne);
    let mut kappa = Vec::with_capacity(ne);
    for k in 0..ne {
        let y = mesh.centroid(k)[1];
        let layer = LAYERS[((y * 3.0).floor() as usize).min(2)];
        let (m, l) = crate::assembly::lame_from_young(layer.young, layer.poisson);
        mu.push(m);
        lambda.push(l);
        kappa.push(layer.permeability);
    }
    let params = PhysicalParams {
        mu: Coefficient::PerElement(mu),
        lambda: Coefficient::PerElement(lambda),
        kappa: Coefficient::PerElement(kappa),
        alpha: 1.0,
        c0: 1.0e-6,
        dt,
    };
    let on_top = |x: &Point| (x[1] - 1.0).abs() < 1e-12;
    let data = ProblemData {
        body_force: Some(Arc::new(|_: &Point, _| [0.0; 3])),
        source: Some(Arc::new(|_: &Point, _| 0.0)),
        displacement: Some(Arc::new(|_: &Point, _| [0.0; 3])),
        traction: Some(Arc::new(move |x: &Point, t, _: &Point| {
            if on_top(x) {
                [0.0, -pulse(t), 0.0]
            } else {
                [0.0; 3]
            }
        })),
        pressure: Some(Arc::new(move |x: &Point, t| if on_top(x) { pulse(t) } else { 0.0 })),
        flux: Some(Arc::new(|_: &Point, _, _: &Point| 0.0)),
    };
    let mut scenario = ScenarioSpec::uniform(
        "layered",
        &["left", "right"],
        DisplacementBc::Traction,
        PressureBc::Dirichlet,
        data,
    );
    scenario.displacement.insert("top".into(), DisplacementBc::Traction);
    scenario.pressure.insert("top".into(), PressureBc::Dirichlet);
    scenario.displacement.insert("bottom".into(), DisplacementBc::Dirichlet);
    scenario.pressure.insert("bottom".into(), PressureBc::Flux);
    Ok(Problem {
        mesh,
        scenario,
        params,
        exact: None,
    })
}

/// Operators that stay fixed over a time loop.
pub struct Discretization {
    pub dofs: DofMap,
    pub blocks: AssembledBlocks,
    pub system: ThreeFieldSystem,
    pub mode: RegularizationMode,
}

impl fmt::Debug for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Discretization")
            .field("n_disp", &self.blocks.n_disp())
            .field("n_pres", &self.blocks.n_pres())
            .field("mode", &self.mode)
            .finish()
    }
}

/// Assembles the blocks and the scaled three-field operator.
pub fn discretize(problem: &Problem, rho_scale: f64) -> Result<Discretization> {
    problem.scenario.validate(&problem.mesh)?;
    problem.params.validate(problem.mesh.num_elements())?;
    let dofs = dirichlet_constraints(&problem.mesh, &problem.scenario, 0.0)?;
    let blocks = assemble_blocks(&problem.mesh, &dofs, &problem.params)?;
    let mode = if problem.scenario.is_pure_dirichlet(&problem.mesh)? {
        RegularizationMode::PureDirichlet
    } else {
        RegularizationMode::Mixed
    };
    let reg = build_regularizer_scaled(&blocks.mp, mode, rho_scale);
    let system = build_three_field(&blocks, reg)?;
    Ok(Discretization {
        dofs,
        blocks,
        system,
        mode,
    })
}

/// Outcome of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub step: usize,
    pub time: f64,
    pub report: SolveReport,
}

/// Discretization errors against a manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    /// `‖u − u_h‖_{H¹}` at the final time.
    pub displacement_h1: f64,
    /// `‖p − p°_h‖_{L²}` at the final time, `p` sampled at barycenters.
    pub pressure_l2: f64,
    /// `(Σ_n Δt ‖p(t_n) − p°_h^n‖²)^{1/2}`.
    pub pressure_l2_time: f64,
}

#[derive(Debug, Clone)]
pub struct MarchResult {
    pub steps: Vec<StepOutcome>,
    /// Final displacement over all dofs.
    pub u: Vec<f64>,
    /// Final pressure over all dofs (`[p°, p∂]`).
    pub p: Vec<f64>,
    pub dofs: DofMap,
    pub errors: Option<ErrorNorms>,
}

impl MarchResult {
    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.report.iterations).max().unwrap_or(0)
    }

    pub fn total_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.report.seconds).sum()
    }
}

fn dump_failure(step: usize, solver: SolverKind, report: &SolveReport) {
    let tail: Vec<String> = report
        .residuals
        .iter()
        .rev()
        .take(5)
        .rev()
        .map(|r| format!("{r:.3e}"))
        .collect();
    log::error!(
        "{solver} failed at step {step}: {} iterations, last residuals [{}], true residual {:.3e}, inner applications {}, worst inner residual {:.3e}",
        report.iterations,
        tail.join(", "),
        report.true_residual,
        report.inner.applications,
        report.inner.worst_residual
    );
}

/// Implicit Euler over `n_steps` steps from zero initial data. Stops with
/// [`PoroError::NotConverged`] at the first step whose outer solve fails.
pub fn time_march(problem: &Problem, settings: &SolveSettings, n_steps: usize) -> Result<MarchResult> {
    settings.krylov.validate()?;
    settings.inner.validate()?;
    let disc = discretize(problem, settings.rho_scale)?;
    let Discretization {
        mut dofs,
        blocks,
        system,
        ..
    } = disc;
    let dt = problem.params.dt;
    let prec = match settings.solver {
        SolverKind::Direct => None,
        kind => {
            let schur = SchurApprox::new(&system, &blocks);
            let pk = if kind == SolverKind::Minres {
                PreconditionerKind::Diagonal
            } else {
                PreconditionerKind::Triangular
            };
            Some(BlockPreconditioner::new(&system, &schur, pk, settings.inner)?)
        }
    };

    let mut prev = PreviousStep::zero(&dofs);
    let mut steps = Vec::with_capacity(n_steps);
    let mut p_time_sq = 0.0;
    for step in 1..=n_steps {
        let t = step as f64 * dt;
        dofs.lift(&problem.mesh, &problem.scenario, t)?;
        let loads = assemble_rhs(&problem.mesh, &dofs, &problem.params, &problem.scenario, t, &prev, &blocks)?;
        let (u_free, p_free, report) = match (&prec, settings.solver) {
            (Some(prec), kind) => {
                let b = system.rhs(&blocks, &dofs, &loads);
                let (x, mut report) = if kind == SolverKind::Minres {
                    minres(&system, &b, prec, &settings.krylov)?
                } else {
                    gmres_restarted(&system, &b, prec, &settings.krylov)?
                };
                report.inner = prec.totals();
                if !report.converged {
                    dump_failure(step, kind, &report);
                    return Err(PoroError::NotConverged {
                        step,
                        iterations: report.iterations,
                        residual: report.final_residual(),
                    });
                }
                let (u, p) = recover_fields(&system, &x);
                (u, p, report)
            }
            (None, _) => {
                let start = Instant::now();
                let rhs = two_field_rhs(&blocks, &dofs, &loads);
                let (u, p) = solve_two_field_dense(&blocks, &rhs)?;
                let report = SolveReport {
                    converged: true,
                    seconds: start.elapsed().as_secs_f64(),
                    ..Default::default()
                };
                (u, p, report)
            }
        };
        log::info!(
            "step {step} t={t:.4e}: {} iterations, residual {:.3e}, {:.2}s",
            report.iterations,
            report.final_residual(),
            report.seconds
        );
        let u = dofs.expand_disp(&u_free);
        let p = dofs.expand_pres(&p_free);
        if let Some(exact) = &problem.exact {
            let e = pressure_error(&problem.mesh, exact, &p, t)?;
            p_time_sq += dt * e * e;
        }
        prev = PreviousStep { u, p };
        steps.push(StepOutcome { step, time: t, report });
    }

    let errors = match &problem.exact {
        Some(exact) => {
            let t = n_steps as f64 * dt;
            Some(ErrorNorms {
                displacement_h1: displacement_h1_error(&problem.mesh, &dofs, exact, &prev.u, t)?,
                pressure_l2: pressure_error(&problem.mesh, exact, &prev.p, t)?,
                pressure_l2_time: p_time_sq.sqrt(),
            })
        }
        None => None,
    };
    Ok(MarchResult {
        steps,
        u: prev.u,
        p: prev.p,
        dofs,
        errors,
    })
}

/// `‖u − u_h‖_{H¹}` (full norm) by element quadrature.
pub fn displacement_h1_error(mesh: &Mesh, dofs: &DofMap, exact: &ManufacturedSolution, u_h: &[f64], t: f64) -> Result<f64> {
    let d = mesh.dim();
    let rule = load_rule(d);
    let mut sum = 0.0;
    for k in 0..mesh.num_elements() {
        let basis = br_basis_for(mesh, k)?;
        let gdofs = dofs.element_disp_dofs(mesh, k);
        for (bary, w) in rule.iter() {
            let x = basis.geom.map_point(bary);
            let mut val = exact.u(&x, t);
            let mut grad = exact.grad_u(&x, t);
            let vals = basis.values(bary);
            let grads = basis.gradients(bary);
            for (i, &g) in gdofs.iter().enumerate() {
                let c = u_h[g];
                for a in 0..d {
                    val[a] -= c * vals[i][a];
                    for b in 0..d {
                        grad[a][b] -= c * grads[i][a][b];
                    }
                }
            }
            let v2: f64 = (0..d).map(|a| val[a] * val[a]).sum();
            let g2: f64 = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| grad[a][b] * grad[a][b]).sum();
            sum += w * basis.geom.volume * (v2 + g2);
        }
    }
    Ok(sum.sqrt())
}

/// `‖p(·, t) − p°_h‖_{L²}` with `p` sampled at element barycenters.
pub fn pressure_error(mesh: &Mesh, exact: &ManufacturedSolution, p_h: &[f64], t: f64) -> Result<f64> {
    let mut sum = 0.0;
    for k in 0..mesh.num_elements() {
        let vol = mesh.geometry(k)?.volume;
        let e = exact.p(&mesh.centroid(k), t) - p_h[k];
        sum += vol * e * e;
    }
    Ok(sum.sqrt())
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub scenario: String,
    pub solver: SolverKind,
    pub dt: f64,
    pub lambda: f64,
    /// Number of elements.
    pub n_elements: usize,
    /// Largest outer iteration count over the time steps.
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dim: usize,
    pub scenario: ScenarioKind,
    /// Mesh divisions per side.
    pub ns: Vec<usize>,
    /// Ignored by the layered problem.
    pub lambdas: Vec<f64>,
    pub dts: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub steps: usize,
    pub settings: SolveSettings,
}

impl ExperimentSpec {
    /// The 2D sweep over `λ ∈ {1, 1e4}`, `Δt ∈ {1e-3, 1e-6}` and both iterative solvers.
    pub fn standard(dim: usize, scenario: ScenarioKind, ns: Vec<usize>) -> Self {
        ExperimentSpec {
            dim,
            scenario,
            ns,
            lambdas: vec![1.0, 1.0e4],
            dts: vec![1.0e-3, 1.0e-6],
            solvers: vec![SolverKind::Minres, SolverKind::Gmres],
            steps: 1,
            settings: SolveSettings::default(),
        }
    }
}

fn build_problem(spec: &ExperimentSpec, n: usize, lambda: f64, dt: f64) -> Result<Problem> {
    match spec.scenario {
        ScenarioKind::Layered => layered_problem(n, dt),
        kind => manufactured_problem(spec.dim, n, kind, lambda, dt),
    }
}

/// Runs one cell; solver failures are recorded, setup errors propagate.
pub fn run_cell(spec: &ExperimentSpec, solver: SolverKind, n: usize, lambda: f64, dt: f64) -> Result<ExperimentRow> {
    let problem = build_problem(spec, n, lambda, dt)?;
    let lambda = problem.params.lambda.max();
    let settings = SolveSettings { solver, ..spec.settings };
    let start = Instant::now();
    let mut row = ExperimentRow {
        scenario: spec.scenario.to_string(),
        solver,
        dt,
        lambda,
        n_elements: problem.mesh.num_elements(),
        iterations: 0,
        residual: f64::NAN,
        seconds: 0.0,
        converged: false,
    };
    match time_march(&problem, &settings, spec.steps) {
        Ok(res) => {
            let worst = res.steps.iter().max_by_key(|s| s.report.iterations);
            row.iterations = res.max_iterations();
            row.residual = worst.map(|s| s.report.final_residual()).unwrap_or(0.0);
            row.converged = true;
        }
        Err(PoroError::NotConverged { iterations, residual, .. }) => {
            row.iterations = iterations;
            row.residual = residual;
        }
        Err(e @ (PoroError::Preconditioner(_) | PoroError::InnerSolver { .. } | PoroError::Factorization { .. })) => {
            log::error!("cell {solver} n={n} λ={lambda:e} Δt={dt:e} failed: {e}");
        }
        Err(e) => return Err(e),
    }
    row.seconds = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Every cell of the sweep, solver-major.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    let lambdas = if spec.scenario == ScenarioKind::Layered {
        vec![f64::NAN]
    } else {
        spec.lambdas.clone()
    };
    let mut rows = Vec::new();
    for &solver in &spec.solvers {
        for &dt in &spec.dts {
            for &lambda in &lambdas {
                for &n in &spec.ns {
                    let row = run_cell(spec, solver, n, lambda, dt)?;
                    log::info!(
                        "{} {solver} Δt={dt:e} λ={:e} N={}: {} iterations{}",
                        row.scenario,
                        row.lambda,
                        row.n_elements,
                        row.iterations,
                        if row.converged { "" } else { " (FAILED)" }
                    );
                    rows.push(row);
                }
            }
        }
    }
    Ok(ExperimentTable { rows })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Largest minus smallest iteration count among rows of `solver`.
    pub fn iteration_spread(&self, solver: SolverKind) -> Option<usize> {
        let it: Vec<usize> = self.rows.iter().filter(|r| r.solver == solver).map(|r| r.iterations).collect();
        Some(it.iter().max()? - it.iter().min()?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,dt,lambda,N,iters,residual,seconds,scenario,converged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{},{},{:e},{:.4},{},{}\n",
                r.solver, r.dt, r.lambda, r.n_elements, r.iterations, r.residual, r.seconds, r.scenario, r.converged
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| PoroError::Parse("empty table".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let idx = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| PoroError::Parse(format!("missing column '{name}'")))
        };
        let ix = [
            idx("solver")?,
            idx("dt")?,
            idx("lambda")?,
            idx("N")?,
            idx("iters")?,
            idx("residual")?,
            idx("seconds")?,
        ];
        let scen = cols.iter().position(|c| *c == "scenario");
        let conv = cols.iter().position(|c| *c == "converged");
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| PoroError::Parse(format!("'{s}': {e}")));
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| PoroError::Parse(format!("'{s}': {e}")));
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < cols.len() {
                return Err(PoroError::Parse(format!("short row '{line}'")));
            }
            rows.push(ExperimentRow {
                solver: f[ix[0]].trim().parse()?,
                dt: num(f[ix[1]])?,
                lambda: num(f[ix[2]])?,
                n_elements: int(f[ix[3]])?,
                iterations: int(f[ix[4]])?,
                residual: num(f[ix[5]])?,
                seconds: num(f[ix[6]])?,
                scenario: scen.map(|i| f[i].trim().to_string()).unwrap_or_default(),
                converged: match conv {
                    Some(i) => f[i]
                        .trim()
                        .parse()
                        .map_err(|e| PoroError::Parse(format!("'{}': {e}", f[i])))?,
                    None => true,
                },
            });
        }
        Ok(ExperimentTable { rows })
    }
}

/// One mesh of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log‖u − u_h‖_{H¹}` against `log h`.
    pub displacement_slope: f64,
    /// Same for the time-accumulated pressure error.
    pub pressure_slope: f64,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,h,dt,steps,u_h1,p_l2,p_l2_time\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{},{:e},{:e},{:e}\n",
                r.n, r.h, r.dt, r.steps, r.errors.displacement_h1, r.errors.pressure_l2, r.errors.pressure_l2_time
            ));
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Marches to `final_time` on each `n` with `Δt = dt_factor·h`, `h = 1/n`.
pub fn convergence_study(
    dim: usize,
    kind: ScenarioKind,
    lambda: f64,
    ns: &[usize],
    final_time: f64,
    dt_factor: f64,
    settings: &SolveSettings,
) -> Result<ConvergenceStudy> {
    if ns.len() < 2 {
        return Err(PoroError::Config("a convergence study needs at least two meshes".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let h = 1.0 / n as f64;
        let steps = ((final_time / (dt_factor * h)).round() as usize).max(1);
        let dt = final_time / steps as f64;
        let problem = manufactured_problem(dim, n, kind, lambda, dt)?;
        let res = time_march(&problem, settings, steps)?;
        let errors = res.errors.unwrap_or_default();
        log::info!(
            "n={n}: ‖u−u_h‖_H1 = {:.4e}, ‖p−p_h‖ = {:.4e}",
            errors.displacement_h1,
            errors.pressure_l2_time
        );
        rows.push(ConvergenceRow { n, h, dt, steps, errors });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let eu: Vec<f64> = rows.iter().map(|r| r.errors.displacement_h1).collect();
    let ep: Vec<f64> = rows.iter().map(|r| r.errors.pressure_l2_time).collect();
    Ok(ConvergenceStudy {
        displacement_slope: loglog_slope(&h, &eu),
        pressure_slope: loglog_slope(&h, &ep),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_diff;

    #[test]
    fn parse_names() {
        assert_eq!("GMRES".parse::<SolverKind>().unwrap(), SolverKind::Gmres);
        assert_eq!("II".parse::<ScenarioKind>().unwrap(), ScenarioKind::MixedRight);
        assert!("cg".parse::<SolverKind>().is_err());
        for s in [SolverKind::Minres, SolverKind::Gmres, SolverKind::Direct] {
            assert_eq!(s.to_string().parse::<SolverKind>().unwrap(), s);
        }
    }

    #[test]
    fn pulse_shape() {
        assert_eq!(pulse(0.0), 0.0);
        assert!((pulse(0.1) - 9000.0 * 0.0f64.exp()).abs() < 1e-9);
        // Maximum of t^{1/2} e^{−5t} is at t = 0.1.
        assert!(pulse(0.1) > pulse(0.09) && pulse(0.1) > pulse(0.11));
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn iterative_solvers_match_direct() {
        for kind in [ScenarioKind::PureDirichlet, ScenarioKind::MixedRight] {
            let problem = manufactured_problem(2, 4, kind, 10.0, 1e-2).unwrap();
            let direct = time_march(&problem, &SolveSettings::with_solver(SolverKind::Direct), 3).unwrap();
            for solver in [SolverKind::Minres, SolverKind::Gmres] {
                let mut s = SolveSettings::with_solver(solver);
                s.krylov.tol = 1e-11;
                let it = time_march(&problem, &s, 3).unwrap();
                assert!(rel_diff(&it.u, &direct.u) < 1e-7, "{kind} {solver}");
                assert!(rel_diff(&it.p, &direct.p) < 1e-7, "{kind} {solver}");
            }
        }
    }

    #[test]
    fn layered_setup() {
        let p = layered_problem(6, 0.005).unwrap();
        assert!(!p.scenario.is_pure_dirichlet(&p.mesh).unwrap());
        let disc = discretize(&p, 0.1).unwrap();
        assert_eq!(disc.mode, RegularizationMode::Mixed);
        assert!(layered_problem(4, 0.005).is_err());
        // The pia layer is stiffest.
        let mu_top = p.params.mu.at(p.mesh.num_elements() - 1);
        assert!((mu_top - p.params.mu.max()).abs() < 1e-9 * mu_top);
    }

    #[test]
    fn table_csv_roundtrip() {
        let table = ExperimentTable {
            rows: vec![ExperimentRow {
                scenario: "I".into(),
                solver: SolverKind::Gmres,
                dt: 1e-3,
                lambda: 1e4,
                n_elements: 882,
                iterations: 17,
                residual: 3.5e-9,
                seconds: 0.25,
                converged: true,
            }],
        };
        let back = ExperimentTable::from_csv(&table.to_csv()).unwrap();
        assert_eq!(back, table);
        assert!(ExperimentTable::from_csv("solver,dt\n").is_err());
    }
}
