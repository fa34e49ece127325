//! Newton, continuation and time stepping.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{BcSet, Discretization, Physics, TermWeights};
use crate::linalg::{fgmres, norm2, sparse_lu, FgmresOptions};
use crate::mesh::MeshFamily;
use crate::multigrid::{MgConfig, MgHierarchy};
use crate::problems::{pin_vertex, Problem};

/// Linear tolerance of one Newton correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearTolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearTolMode {
    Fixed(LinearTolerance),
    /// Forcing terms from [`eisenstat_walker_tol`] with a fixed absolute floor.
    EisenstatWalker { atol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop once `‖R‖ ≤ rtol·‖R(x₀)‖`.
    pub rtol: f64,
    /// ... or once `‖R‖ ≤ atol`.
    pub atol: f64,
    pub max_steps: usize,
    pub linear: LinearTolMode,
}

impl NewtonConfig {
    /// Residual reduction by `1e5` with fixed `1e-6` linear tolerances.
    pub fn hartmann() -> Self {
        NewtonConfig {
            rtol: 1e-5,
            atol: 1e-12,
            max_steps: 20,
            linear: LinearTolMode::Fixed(LinearTolerance { rtol: 1e-6, atol: 1e-6 }),
        }
    }

    /// Relative `1e-8` or absolute `1e-6`.
    pub fn island() -> Self {
        NewtonConfig {
            rtol: 1e-8,
            atol: 1e-6,
            max_steps: 10,
            linear: LinearTolMode::Fixed(LinearTolerance { rtol: 1e-6, atol: 1e-6 }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lin_ok = match self.linear {
            LinearTolMode::Fixed(t) => t.rtol > 0.0 && t.atol >= 0.0,
            LinearTolMode::EisenstatWalker { atol } => atol >= 0.0,
        };
        if !(self.rtol > 0.0 && self.atol >= 0.0 && self.max_steps > 0 && lin_ok) {
            return Err(Error::InvalidParameter(alloc::format!("bad Newton configuration {self:?}")));
        }
        Ok(())
    }
}

/// A nonlinear system `R(x) = 0` whose Newton corrections are solved inexactly.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    /// Norm of the residual at `x` with constrained rows left out.
    fn residual_norm(&mut self, x: &[f64]) -> Result<f64>;
    /// Solves `J(x) dx = −R(x)` to `tol`; returns the linear iteration count.
    fn newton_correction(&mut self, x: &[f64], tol: LinearTolerance, dx: &mut [f64]) -> Result<usize>;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    /// `‖R(x_k)‖` for `k = 0..=steps`.
    pub residuals: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub linear_rtol: Vec<f64>,
}

impl NewtonReport {
    pub fn steps(&self) -> usize {
        self.linear_iterations.len()
    }
    pub fn total_linear_iterations(&self) -> usize {
        self.linear_iterations.iter().sum()
    }
    /// Total linear iterations divided by Newton steps (0 when no step was taken).
    pub fn mean_linear_iterations(&self) -> f64 {
        if self.steps() == 0 {
            0.0
        } else {
            self.total_linear_iterations() as f64 / self.steps() as f64
        }
    }
}

/// Eisenstat–Walker forcing term (choice 2, `γ = 0.9`, `α = 2`).
///
/// `norms` holds the residual norms so far (at least the current one);
/// `previous` is the last forcing term used.
pub fn eisenstat_walker_tol(step: usize, norms: &[f64], previous: Option<f64>) -> f64 {
    const GAMMA: f64 = 0.9;
    const ALPHA: f64 = 2.0;
    const ETA0: f64 = 0.9;
    const FLOOR: f64 = 1e-6;
    const CEIL: f64 = 0.9;
    if step == 0 || norms.len() < 2 {
        return ETA0;
    }
    let (cur, prev) = (norms[norms.len() - 1], norms[norms.len() - 2]);
    let mut eta = GAMMA * libm::pow(cur / prev, ALPHA);
    if let Some(p) = previous {
        let guard = GAMMA * libm::pow(p, ALPHA);
        if guard > 0.1 {
            eta = eta.max(guard);
        }
    }
    eta.clamp(FLOOR, CEIL)
}

/// Full-step Newton from `x` (which must already satisfy the boundary data).
///
/// On failure the error carries the residual history; `x` holds the last iterate.
pub fn newton_solve(sys: &mut dyn NonlinearSystem, x: &mut [f64], cfg: &NewtonConfig) -> Result<NewtonReport> {
    cfg.validate()?;
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: x.len() });
    }
    let mut rep = NewtonReport::default();
    let r0 = sys.residual_norm(x)?;
    rep.residuals.push(r0);
    let target = (cfg.rtol * r0).max(cfg.atol);
    let mut dx = vec![0.0; x.len()];
    let mut eta_prev = None;
    loop {
        let cur = *rep.residuals.last().expect("nonempty");
        if !cur.is_finite() {
            return Err(Error::NewtonDiverged { steps: rep.steps(), history: rep.residuals });
        }
        if cur <= target {
            return Ok(rep);
        }
        if rep.steps() >= cfg.max_steps {
            return Err(Error::NewtonDiverged { steps: rep.steps(), history: rep.residuals });
        }
        let tol = match cfg.linear {
            LinearTolMode::Fixed(t) => t,
            LinearTolMode::EisenstatWalker { atol } => {
                let eta = eisenstat_walker_tol(rep.steps(), &rep.residuals, eta_prev);
                eta_prev = Some(eta);
                LinearTolerance { rtol: eta, atol }
            }
        };
        dx.iter_mut().for_each(|t| *t = 0.0);
        let its = sys
            .newton_correction(x, tol, &mut dx)
            .map_err(|e| Error::LinearSolverStalled { newton_step: rep.steps() + 1, source: Box::new(e) })?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        rep.linear_iterations.push(its);
        rep.linear_rtol.push(tol.rtol);
        rep.residuals.push(sys.residual_norm(x)?);
    }
}

/// Parameter path for continuation, ordered by increasing Hartmann number.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationPlan {
    pub stages: Vec<(f64, f64)>,
    pub newton: NewtonConfig,
}

impl ContinuationPlan {
    /// `Re = Re_m = Ha` for `Ha = start, start + step, …, ≤ stop`.
    pub fn hartmann_steps(start: f64, step: f64, stop: f64, newton: NewtonConfig) -> Self {
        let mut stages = Vec::new();
        let mut ha = start;
        while ha <= stop + 1e-9 {
            stages.push((ha, ha));
            ha += step;
        }
        ContinuationPlan { stages, newton }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidParameter("empty continuation path".into()));
        }
        let ha: Vec<f64> = self.stages.iter().map(|&(a, b)| libm::sqrt(a * b)).collect();
        if self.stages.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0)) || ha.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("continuation path must be positive and monotone in Ha".into()));
        }
        self.newton.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub re: f64,
    pub rem: f64,
    pub newton: NewtonReport,
}

impl StageReport {
    pub fn ha(&self) -> f64 {
        libm::sqrt(self.re * self.rem)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationReport {
    pub stages: Vec<StageReport>,
    /// Parameters and error of the stage that stopped the sweep.
    pub failure: Option<((f64, f64), Error)>,
}

impl ContinuationReport {
    /// Largest Hartmann number that converged (0 if none did).
    pub fn max_ha(&self) -> f64 {
        self.stages.iter().map(|s| s.ha()).fold(0.0, f64::max)
    }
}

/// Runs the stages in order, warm-starting each from the previous converged
/// state. `stage(re, rem, x)` solves one stage in place. The sweep stops at
/// the first failing stage.
pub fn continuation_run(
    plan: &ContinuationPlan,
    x: &mut Vec<f64>,
    mut stage: impl FnMut(f64, f64, &mut Vec<f64>) -> Result<NewtonReport>,
) -> Result<ContinuationReport> {
    plan.validate()?;
    let mut out = ContinuationReport { stages: Vec::new(), failure: None };
    for &(re, rem) in &plan.stages {
        let mut trial = x.clone();
        match stage(re, rem, &mut trial) {
            Ok(newton) => {
                *x = trial;
                out.stages.push(StageReport { re, rem, newton });
            }
            Err(e) => {
                out.failure = Some(((re, rem), e));
                break;
            }
        }
    }
    Ok(out)
}

/// Time-discrete weights of one implicit step: `mass·M x + θ S(x) + C(x) + h = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepWeights {
    pub theta: f64,
    pub mass: f64,
}

/// A semi-discrete system `M ẋ + S(x) + C(x) = 0` where `C` collects the
/// constraint terms that stay implicit in every scheme.
pub trait TransientSystem {
    fn dim(&self) -> usize;
    /// `M x`.
    fn mass_action(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// `S(x)` including forcing, without constraint terms.
    fn spatial_action(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// Solves one implicit step in place, starting from the guess in `x`.
    fn solve_step(&mut self, w: StepWeights, history: &[f64], x: &mut [f64]) -> Result<NewtonReport>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    /// One report per implicit solve (ten for the first macro-step).
    pub solves: Vec<NewtonReport>,
}

impl StepReport {
    pub fn newton_steps(&self) -> usize {
        self.solves.iter().map(|s| s.steps()).sum()
    }
    pub fn linear_iterations(&self) -> usize {
        self.solves.iter().map(|s| s.total_linear_iterations()).sum()
    }
}

/// BDF2 with a Crank–Nicolson start. The first macro-step is split into
/// `substeps` equal steps: CN for the first one, BDF2 afterwards.
#[derive(Clone, Debug)]
pub struct TimeStepper {
    pub dt: f64,
    pub substeps: usize,
    t: f64,
    step: usize,
    /// States at the last two macro times, newest first.
    history: Vec<Vec<f64>>,
}

impl TimeStepper {
    pub fn new(dt: f64) -> Result<Self> {
        TimeStepper::with_substeps(dt, 10)
    }

    pub fn with_substeps(dt: f64, substeps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || substeps == 0 {
            return Err(Error::InvalidParameter(alloc::format!("bad time step {dt} / {substeps} substeps")));
        }
        Ok(TimeStepper { dt, substeps, t: 0.0, step: 0, history: Vec::new() })
    }

    pub fn time(&self) -> f64 {
        self.t
    }
    pub fn steps_taken(&self) -> usize {
        self.step
    }
}

fn bdf2_history(sys: &mut dyn TransientSystem, dt: f64, newer: &[f64], older: &[f64]) -> Result<Vec<f64>> {
    let (mn, mo) = (sys.mass_action(newer)?, sys.mass_action(older)?);
    Ok(mn.iter().zip(&mo).map(|(a, b)| (-2.0 * a + 0.5 * b) / dt).collect())
}

const BDF2_A0: f64 = 1.5;

/// Advances `state` by one macro-step of size `stepper.dt`.
pub fn bdf2_advance(stepper: &mut TimeStepper, sys: &mut dyn TransientSystem, state: &mut [f64]) -> Result<StepReport> {
    if state.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: state.len() });
    }
    let index = stepper.step + 1;
    let fail = |e: Error| Error::TimeStepFailed { step: index, source: Box::new(e) };
    let mut solves = Vec::new();
    if stepper.history.is_empty() {
        let h = stepper.dt / stepper.substeps as f64;
        let x0 = state.to_vec();
        // Crank–Nicolson: (M/h)(x − x₀) + ½S(x) + ½S(x₀) + C(x) = 0
        let m0 = sys.mass_action(&x0).map_err(fail)?;
        let s0 = sys.spatial_action(&x0).map_err(fail)?;
        let hist: Vec<f64> = m0.iter().zip(&s0).map(|(m, s)| -m / h + 0.5 * s).collect();
        solves.push(sys.solve_step(StepWeights { theta: 0.5, mass: 1.0 / h }, &hist, state).map_err(fail)?);
        let mut older = x0.clone();
        for _ in 1..stepper.substeps {
            let newer = state.to_vec();
            let hist = bdf2_history(sys, h, &newer, &older).map_err(fail)?;
            solves.push(sys.solve_step(StepWeights { theta: 1.0, mass: BDF2_A0 / h }, &hist, state).map_err(fail)?);
            older = newer;
        }
        stepper.history = vec![state.to_vec(), x0];
    } else {
        let dt = stepper.dt;
        let hist = bdf2_history(sys, dt, &stepper.history[0], &stepper.history[1]).map_err(fail)?;
        solves.push(sys.solve_step(StepWeights { theta: 1.0, mass: BDF2_A0 / dt }, &hist, state).map_err(fail)?);
        let newest = state.to_vec();
        stepper.history.pop();
        stepper.history.insert(0, newest);
    }
    stepper.step = index;
    stepper.t = index as f64 * stepper.dt;
    Ok(StepReport { step: index, t: stepper.t, solves })
}

/// How each Newton correction is solved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearSolver {
    /// FGMRES preconditioned by one V-cycle (or smoothing only, per [`MgConfig`]).
    Multigrid(MgConfig),
    /// Sparse LU of the full Jacobian.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub linear: LinearSolver,
    pub fgmres: FgmresOptions,
    pub newton: NewtonConfig,
}

/// Newton–Krylov–multigrid solver for one problem on one hierarchy.
pub struct MhdSolver {
    hierarchy: MgHierarchy,
    phys: Physics,
    bc: BcSet,
    weights: TermWeights,
    history: Option<Vec<f64>>,
    /// Constant vector subtracted from the spatial operator (see [`MhdSolver::balance_at`]).
    balance: Option<Vec<f64>>,
    cfg: SolverConfig,
}

impl MhdSolver {
    pub fn new(problem: &dyn Problem, coarsest: &MeshFamily, n_levels: usize, cfg: SolverConfig) -> Result<Self> {
        let mg = match cfg.linear {
            LinearSolver::Multigrid(mg) => mg,
            LinearSolver::Direct => MgConfig { coarse_correction: false, ..MgConfig::new(crate::vanka::VankaVariant::Coupled) },
        };
        let hierarchy = MgHierarchy::build(problem, coarsest, n_levels, mg)?;
        let pin = pin_vertex(problem, hierarchy.level(hierarchy.n_levels() - 1).disc.mesh());
        let bc = problem.boundary(hierarchy.finest(), pin)?;
        Ok(MhdSolver {
            hierarchy,
            phys: problem.physics(),
            bc,
            weights: TermWeights::STEADY,
            history: None,
            balance: None,
            cfg,
        })
    }

    pub fn disc(&self) -> &Discretization {
        self.hierarchy.finest()
    }
    pub fn hierarchy(&self) -> &MgHierarchy {
        &self.hierarchy
    }
    pub fn bc(&self) -> &BcSet {
        &self.bc
    }
    pub fn physics(&self) -> &Physics {
        &self.phys
    }
    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Swaps the boundary data (the constrained DoFs must stay the same).
    pub fn set_boundary(&mut self, bc: BcSet) -> Result<BcSet> {
        if bc.mask() != self.bc.mask() {
            return Err(Error::InvalidParameter("replacement boundary data constrain different DoFs".into()));
        }
        Ok(core::mem::replace(&mut self.bc, bc))
    }

    /// Makes `x` an exact steady state of the discrete system by subtracting
    /// its steady residual from the spatial operator.
    pub fn balance_at(&mut self, x: &[f64]) -> Result<()> {
        self.balance = None;
        self.balance = Some(self.disc().residual(x, &self.phys, TermWeights::STEADY)?);
        Ok(())
    }

    pub fn clear_balance(&mut self) {
        self.balance = None;
    }

    /// Zero state with the boundary data written in.
    pub fn initial_guess(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.disc().layout().len()];
        self.bc.lift(&mut x);
        x
    }

    /// Steady solve from `x` (boundary data are written into `x` first).
    pub fn solve_steady(&mut self, x: &mut [f64]) -> Result<NewtonReport> {
        self.weights = TermWeights::STEADY;
        self.history = None;
        self.bc.lift(x);
        let cfg = self.cfg.newton;
        newton_solve(self, x, &cfg)
    }

    /// Constant part of the residual: history terms minus the weighted balance.
    fn shift(&self) -> Option<Vec<f64>> {
        let th = self.weights.spatial;
        match (&self.history, &self.balance) {
            (None, None) => None,
            (Some(h), None) => Some(h.clone()),
            (None, Some(b)) => Some(b.iter().map(|v| -th * v).collect()),
            (Some(h), Some(b)) => Some(h.iter().zip(b).map(|(a, v)| a - th * v).collect()),
        }
    }

    fn full_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.disc().residual(x, &self.phys, self.weights)?;
        if let Some(h) = self.shift() {
            for (ri, hi) in r.iter_mut().zip(&h) {
                *ri += hi;
            }
        }
        self.bc.zero_rows(&mut r);
        Ok(r)
    }
}

impl NonlinearSystem for MhdSolver {
    fn dim(&self) -> usize {
        self.disc().layout().len()
    }

    fn residual_norm(&mut self, x: &[f64]) -> Result<f64> {
        Ok(norm2(&self.full_residual(x)?))
    }

    fn newton_correction(&mut self, x: &[f64], tol: LinearTolerance, dx: &mut [f64]) -> Result<usize> {
        let mut sys = self.disc().jacobian(x, &self.phys, self.weights)?;
        if let Some(h) = self.shift() {
            for (ri, hi) in sys.rhs.iter_mut().zip(&h) {
                *ri -= hi;
            }
        }
        let sys = self.bc.homogeneous().apply(sys)?;
        match self.cfg.linear {
            LinearSolver::Direct => {
                sparse_lu(&sys.matrix)?.solve(&sys.rhs, dx);
                Ok(1)
            }
            LinearSolver::Multigrid(_) => {
                let (phys, w) = (self.phys.clone(), self.weights);
                self.hierarchy.update(x, &phys, w, Some(sys))?;
                let op = self.hierarchy.operator()?;
                let opts = FgmresOptions { rtol: tol.rtol, atol: tol.atol, ..self.cfg.fgmres };
                let res = fgmres(&op.matrix, &self.hierarchy, &op.rhs, dx, &opts)?;
                if !res.converged {
                    let target = (tol.rtol * res.residual_history[0]).max(tol.atol);
                    return Err(Error::LinearNotConverged {
                        iterations: res.iterations,
                        residual: res.final_residual(),
                        target,
                    });
                }
                Ok(res.iterations)
            }
        }
    }
}

impl TransientSystem for MhdSolver {
    fn dim(&self) -> usize {
        self.disc().layout().len()
    }

    fn mass_action(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.disc().residual(x, &self.phys, TermWeights::MASS)
    }

    fn spatial_action(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let mut s = self.disc().residual(x, &self.phys, TermWeights::SPATIAL_ONLY)?;
        if let Some(b) = &self.balance {
            for (si, bi) in s.iter_mut().zip(b) {
                *si -= bi;
            }
        }
        Ok(s)
    }

    fn solve_step(&mut self, w: StepWeights, history: &[f64], x: &mut [f64]) -> Result<NewtonReport> {
        self.weights = TermWeights { spatial: w.theta, mass: w.mass, constraint: 1.0 };
        self.history = Some(history.to_vec());
        self.bc.lift(x);
        let cfg = self.cfg.newton;
        let out = newton_solve(self, x, &cfg);
        self.history = None;
        self.weights = TermWeights::STEADY;
        out
    }
}
