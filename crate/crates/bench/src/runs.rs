//! Benchmark drivers: Hartmann table, continuation, island coalescence and
//! the discretization convergence sweep.

use std::time::Instant;

use anyhow::bail;

use mhdmg_core::driver::{
    bdf2_advance, continuation_run, ContinuationPlan, LinearSolver, LinearTolMode, LinearTolerance, MhdSolver,
    NewtonConfig, SolverConfig, TimeStepper,
};
use mhdmg_core::fem::{errors_against, interpolate_fields};
use mhdmg_core::linalg::FgmresOptions;
use mhdmg_core::multigrid::MgConfig;
use mhdmg_core::problems::{cfl_numbers, HartmannProblem, IslandProblem, ReconnectionProbe};
use mhdmg_core::vanka::VankaVariant;
use mhdmg_core::Error;

use crate::config::{coarsest, SolverSettings};
use crate::report::{ErrorRecord, RunReport, SolveRecord, StepRecord};

/// The (Re, Re_m) grid of the Hartmann table.
pub const TABLE_PARAMETERS: [(f64, f64); 9] = [
    (4.0, 4.0),
    (16.0, 4.0),
    (64.0, 4.0),
    (4.0, 16.0),
    (16.0, 16.0),
    (64.0, 16.0),
    (4.0, 64.0),
    (16.0, 64.0),
    (64.0, 64.0),
];

fn solver_config(s: &SolverSettings, newton: NewtonConfig) -> SolverConfig {
    let mg = MgConfig {
        pre: s.cycle.0,
        post: s.cycle.1,
        cheb: s.cheb,
        coarse_correction: s.coarse_correction,
        ..MgConfig::new(s.variant)
    };
    SolverConfig {
        linear: LinearSolver::Multigrid(mg),
        fgmres: FgmresOptions { max_iterations: s.max_iterations, ..FgmresOptions::default() },
        newton,
    }
}

/// Newton steps completed before `e` stopped the solve.
fn steps_before(e: &Error) -> usize {
    match e {
        Error::NewtonDiverged { steps, .. } => *steps,
        Error::LinearSolverStalled { newton_step, .. } => newton_step - 1,
        _ => 0,
    }
}

/// Steady Hartmann solve from the zero state lifted by the boundary data.
/// Solver failures are recorded, not returned.
pub fn hartmann_solve(re: f64, rem: f64, mesh: usize, levels: usize, s: &SolverSettings) -> anyhow::Result<SolveRecord> {
    let coarse = coarsest(mesh, levels)?;
    let prob = HartmannProblem::new(re, rem)?;
    let t0 = Instant::now();
    let mut solver = MhdSolver::new(&prob, &HartmannProblem::family(coarse), levels, solver_config(s, NewtonConfig::hartmann()))?;
    let mut x = solver.initial_guess();
    let out = solver.solve_steady(&mut x);
    let mut rec = SolveRecord {
        mesh,
        coarse,
        levels,
        variant: s.variant.name().into(),
        re,
        rem,
        newton_steps: 0,
        linear: Vec::new(),
        wall_seconds: 0.0,
        failure: None,
    };
    match out {
        Ok(rep) => {
            rec.newton_steps = rep.steps();
            rec.linear = rep.linear_iterations;
        }
        Err(e) => {
            rec.newton_steps = steps_before(&e);
            rec.failure = Some(e.to_string());
        }
    }
    rec.wall_seconds = t0.elapsed().as_secs_f64();
    Ok(rec)
}

#[derive(Clone, Debug)]
pub struct TableSettings {
    pub mesh: usize,
    pub levels: usize,
    pub variants: Vec<VankaVariant>,
    pub parameters: Vec<(f64, f64)>,
    /// Applied to every variant with its own default Chebyshev interval
    /// unless `cheb` is set.
    pub cycle: (usize, usize),
    pub cheb: Option<(f64, f64)>,
    pub max_iterations: usize,
}

impl Default for TableSettings {
    fn default() -> Self {
        TableSettings {
            mesh: 120,
            levels: 4,
            variants: VankaVariant::ALL.to_vec(),
            parameters: TABLE_PARAMETERS.to_vec(),
            cycle: (2, 2),
            cheb: None,
            max_iterations: 400,
        }
    }
}

impl TableSettings {
    pub fn solver(&self, variant: VankaVariant) -> SolverSettings {
        let mut s = SolverSettings::new(variant);
        s.cycle = self.cycle;
        s.max_iterations = self.max_iterations;
        if let Some(c) = self.cheb {
            s.cheb = c;
        }
        s
    }
}

/// Every (parameters, variant) cell; `on_cell` sees each record as it completes.
pub fn run_hartmann_table(t: &TableSettings, mut on_cell: impl FnMut(&SolveRecord)) -> anyhow::Result<RunReport> {
    coarsest(t.mesh, t.levels)?;
    let mut out = Vec::new();
    for &(re, rem) in &t.parameters {
        for &v in &t.variants {
            let rec = hartmann_solve(re, rem, t.mesh, t.levels, &t.solver(v))?;
            on_cell(&rec);
            out.push(rec);
        }
    }
    Ok(RunReport::Solves(out))
}

#[derive(Clone, Debug)]
pub struct ContinuationSettings {
    pub mesh: usize,
    pub levels: usize,
    pub ha_start: f64,
    pub ha_step: f64,
    pub ha_max: f64,
    pub solver: SolverSettings,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            mesh: 120,
            levels: 4,
            ha_start: 16.0,
            ha_step: 16.0,
            ha_max: 1024.0,
            solver: SolverSettings::new(VankaVariant::Coupled),
        }
    }
}

pub struct ContinuationOutcome {
    pub report: RunReport,
    /// Largest Ha whose stage converged (0 if none did).
    pub max_ha: f64,
}

/// `Re = Re_m = Ha` stages, each warm-started from the previous solution
/// with a freshly built hierarchy. Stops at the first failing stage.
pub fn run_continuation(
    c: &ContinuationSettings,
    mut on_stage: impl FnMut(&SolveRecord),
) -> anyhow::Result<ContinuationOutcome> {
    let coarse = coarsest(c.mesh, c.levels)?;
    let plan = ContinuationPlan::hartmann_steps(c.ha_start, c.ha_step, c.ha_max, NewtonConfig::hartmann());
    let mut records = Vec::new();
    let mut x = Vec::new();
    let rep = continuation_run(&plan, &mut x, |re, rem, x| {
        let t0 = Instant::now();
        let prob = HartmannProblem::new(re, rem)?;
        let family = HartmannProblem::family(coarse);
        let mut solver = MhdSolver::new(&prob, &family, c.levels, solver_config(&c.solver, plan.newton))?;
        if x.is_empty() {
            *x = solver.initial_guess();
        }
        let out = solver.solve_steady(x);
        let mut rec = SolveRecord {
            mesh: c.mesh,
            coarse,
            levels: c.levels,
            variant: c.solver.variant.name().into(),
            re,
            rem,
            newton_steps: 0,
            linear: Vec::new(),
            wall_seconds: t0.elapsed().as_secs_f64(),
            failure: None,
        };
        match &out {
            Ok(r) => {
                rec.newton_steps = r.steps();
                rec.linear = r.linear_iterations.clone();
            }
            Err(e) => {
                rec.newton_steps = steps_before(e);
                rec.failure = Some(e.to_string());
            }
        }
        on_stage(&rec);
        records.push(rec);
        out
    })?;
    Ok(ContinuationOutcome { report: RunReport::Solves(records), max_ha: rep.max_ha() })
}

#[derive(Clone, Debug)]
pub struct IslandSettings {
    pub mesh: usize,
    pub levels: usize,
    pub re: f64,
    pub rem: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub tfinal: f64,
    /// Subtract the discrete defect of the interpolated equilibrium.
    pub balanced: bool,
    pub solver: SolverSettings,
}

impl Default for IslandSettings {
    fn default() -> Self {
        let mut solver = SolverSettings::new(VankaVariant::Coupled);
        solver.cycle = (3, 3);
        solver.cheb = (2.0, 10.0);
        IslandSettings {
            mesh: 80,
            levels: 3,
            re: 5000.0,
            rem: 5000.0,
            epsilon: -0.01,
            dt: 0.1,
            tfinal: 10.0,
            balanced: true,
            solver,
        }
    }
}

pub struct IslandOutcome {
    pub report: RunReport,
    /// Error that ended the run early, if any.
    pub failure: Option<String>,
}

/// Transient island coalescence from `u = 0`, recording diagnostics at
/// every macro step.
pub fn run_island(s: &IslandSettings, mut on_step: impl FnMut(&StepRecord)) -> anyhow::Result<IslandOutcome> {
    let coarse = coarsest(s.mesh, s.levels)?;
    if !(s.dt > 0.0 && s.tfinal >= 0.0) {
        bail!("need dt > 0 and tfinal >= 0");
    }
    let t0 = Instant::now();
    let prob = IslandProblem::new(s.re, s.rem, s.epsilon)?;
    let mut solver =
        MhdSolver::new(&prob, &IslandProblem::family(coarse), s.levels, solver_config(&s.solver, NewtonConfig::island()))?;
    if s.balanced {
        let eq = interpolate_fields(solver.disc(), &prob.eq);
        solver.balance_at(&eq)?;
    }
    let mut x = interpolate_fields(solver.disc(), &prob.initial());
    solver.bc().lift(&mut x);
    let x0 = x.clone();
    let probe = ReconnectionProbe::new(solver.disc(), &x)?;
    let h = solver.disc().mesh().min_edge_length();
    let record = |solver: &MhdSolver, x: &[f64], step, t, newton: (usize, usize), lin, wall| -> anyhow::Result<StepRecord> {
        let (fluid, alfven) = cfl_numbers(solver.disc(), x, s.dt, h)?;
        let drift = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Ok(StepRecord {
            step,
            t,
            newton_steps: newton.0,
            max_newton_per_solve: newton.1,
            linear_iterations: lin,
            fluid_cfl: fluid,
            alfven_cfl: alfven,
            reconnection_rate: probe.rate(solver.disc(), x, s.rem),
            drift,
            wall_seconds: wall,
        })
    };
    let mut rows = vec![record(&solver, &x, 0, 0.0, (0, 0), 0, t0.elapsed().as_secs_f64())?];
    on_step(&rows[0]);
    let mut ts = TimeStepper::new(s.dt)?;
    let n = (s.tfinal / s.dt).round() as usize;
    let mut failure = None;
    for _ in 0..n {
        let t1 = Instant::now();
        match bdf2_advance(&mut ts, &mut solver, &mut x) {
            Ok(rep) => {
                let per = rep.solves.iter().map(|r| r.steps()).max().unwrap_or(0);
                let rec = record(
                    &solver,
                    &x,
                    rep.step,
                    rep.t,
                    (rep.newton_steps(), per),
                    rep.linear_iterations(),
                    t1.elapsed().as_secs_f64(),
                )?;
                on_step(&rec);
                rows.push(rec);
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(IslandOutcome { report: RunReport::Steps(rows), failure })
}

#[derive(Clone, Debug)]
pub struct VerifySettings {
    pub meshes: Vec<usize>,
    /// Coarsest grid of every hierarchy.
    pub coarse: usize,
    pub re: f64,
    pub rem: f64,
    /// Sparse LU instead of multigrid for the Newton corrections.
    pub direct: bool,
    pub solver: SolverSettings,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            meshes: vec![8, 16, 32, 64],
            coarse: 4,
            re: 4.0,
            rem: 4.0,
            direct: false,
            solver: SolverSettings::new(VankaVariant::Coupled),
        }
    }
}

/// Hartmann errors against the closed form on each mesh.
pub fn run_verify(v: &VerifySettings, mut on_mesh: impl FnMut(&ErrorRecord)) -> anyhow::Result<RunReport> {
    let prob = HartmannProblem::new(v.re, v.rem)?;
    let newton = NewtonConfig {
        rtol: 1e-12,
        atol: 1e-12,
        max_steps: 20,
        linear: LinearTolMode::Fixed(LinearTolerance { rtol: 1e-8, atol: 1e-13 }),
    };
    let mut out = Vec::new();
    for &n in &v.meshes {
        if n < v.coarse || n % v.coarse != 0 || !(n / v.coarse).is_power_of_two() {
            bail!("mesh {n} is not a power-of-two refinement of {}", v.coarse);
        }
        let levels = (n / v.coarse).trailing_zeros() as usize + 1;
        let mut cfg = solver_config(&v.solver, newton);
        let (family, levels) = if v.direct || levels == 1 {
            cfg.linear = LinearSolver::Direct;
            (HartmannProblem::family(n), 1)
        } else {
            (HartmannProblem::family(v.coarse), levels)
        };
        let mut solver = MhdSolver::new(&prob, &family, levels, cfg)?;
        let mut x = solver.initial_guess();
        let rep = solver.solve_steady(&mut x)?;
        let e = errors_against(solver.disc(), &x, &prob.exact);
        let rec = ErrorRecord {
            mesh: n,
            h: 1.0 / n as f64,
            u_l2: e.u_l2,
            p_l2: e.p_l2,
            b_l2: e.b_l2,
            b_hcurl: e.b_hcurl,
            r_l2: e.r_l2,
            newton_steps: rep.steps(),
        };
        on_mesh(&rec);
        out.push(rec);
    }
    Ok(RunReport::Convergence(out))
}
