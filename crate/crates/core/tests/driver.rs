mod common;

use common::diff_norm;
use mhdmg_core::driver::{
    bdf2_advance, continuation_run, eisenstat_walker_tol, newton_solve, ContinuationPlan, LinearSolver,
    LinearTolerance, MhdSolver, NewtonConfig, NewtonReport, NonlinearSystem, SolverConfig, StepWeights, TimeStepper,
    TransientSystem,
};
use mhdmg_core::fem::{errors_against, interpolate_fields};
use mhdmg_core::linalg::FgmresOptions;
use mhdmg_core::multigrid::MgConfig;
use mhdmg_core::problems::{HartmannProblem, IslandProblem};
use mhdmg_core::vanka::VankaVariant;
use mhdmg_core::{Error, Result};

#[test]
fn eisenstat_walker_values() {
    assert_eq!(eisenstat_walker_tol(0, &[1.0], None), 0.9);
    // 0.9·(0.5)² = 0.225, safeguard 0.9·0.9² = 0.729 wins
    assert!((eisenstat_walker_tol(1, &[1.0, 0.5], Some(0.9)) - 0.729).abs() < 1e-15);
    // safeguard 0.9·0.3² = 0.081 is below 0.1 and ignored
    assert!((eisenstat_walker_tol(2, &[1.0, 0.5, 0.2], Some(0.3)) - 0.9 * 0.16).abs() < 1e-15);
    assert_eq!(eisenstat_walker_tol(3, &[1.0, 1e-4], Some(0.01)), 1e-6);
    assert_eq!(eisenstat_walker_tol(1, &[1.0, 2.0], None), 0.9);
}

/// `F(x) = x ∘ x − c` componentwise, with exact corrections.
struct Squares {
    c: Vec<f64>,
    fail_linear: bool,
}

impl NonlinearSystem for Squares {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn residual_norm(&mut self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().zip(&self.c).map(|(a, c)| (a * a - c).powi(2)).sum::<f64>().sqrt())
    }
    fn newton_correction(&mut self, x: &[f64], _tol: LinearTolerance, dx: &mut [f64]) -> Result<usize> {
        if self.fail_linear {
            return Err(Error::LinearNotConverged { iterations: 3, residual: 1.0, target: 0.1 });
        }
        for ((d, a), c) in dx.iter_mut().zip(x).zip(&self.c) {
            *d = -(a * a - c) / (2.0 * a);
        }
        Ok(1)
    }
}

/// `A x − b` for diagonal `A`.
struct Affine(Vec<f64>, Vec<f64>);

impl NonlinearSystem for Affine {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn residual_norm(&mut self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().zip(&self.0).zip(&self.1).map(|((x, a), b)| (a * x - b).powi(2)).sum::<f64>().sqrt())
    }
    fn newton_correction(&mut self, x: &[f64], _tol: LinearTolerance, dx: &mut [f64]) -> Result<usize> {
        for i in 0..x.len() {
            dx[i] = (self.1[i] - self.0[i] * x[i]) / self.0[i];
        }
        Ok(2)
    }
}

#[test]
fn newton_on_an_affine_map_takes_one_step() {
    let mut sys = Affine(vec![2.0, -1.0, 4.0], vec![1.0, 1.0, 1.0]);
    let mut x = vec![0.0; 3];
    let rep = newton_solve(&mut sys, &mut x, &NewtonConfig::hartmann()).unwrap();
    assert_eq!(rep.steps(), 1);
    assert_eq!(rep.linear_iterations, vec![2]);
    assert!(diff_norm(&x, &[0.5, -1.0, 0.25]) < 1e-15);
}

#[test]
fn newton_converges_quadratically() {
    let mut sys = Squares { c: vec![2.0, 3.0], fail_linear: false };
    let mut x = vec![1.0, 1.0];
    let cfg = NewtonConfig { rtol: 1e-14, atol: 0.0, ..NewtonConfig::hartmann() };
    let rep = newton_solve(&mut sys, &mut x, &cfg).unwrap();
    assert!((x[0] - 2f64.sqrt()).abs() < 1e-14 && (x[1] - 3f64.sqrt()).abs() < 1e-14);
    let r = &rep.residuals;
    for k in (2..r.len() - 1).filter(|&k| r[k] > 1e-6) {
        // ‖R_{k+1}‖ ≲ C ‖R_k‖² once in the basin
        assert!(r[k + 1] <= 2.0 * r[k] * r[k], "{r:?}");
    }
}

#[test]
fn newton_failures_are_reported() {
    let mut sys = Squares { c: vec![2.0], fail_linear: false };
    let mut x = vec![1.0];
    let cfg = NewtonConfig { rtol: 1e-30, atol: 0.0, max_steps: 2, ..NewtonConfig::hartmann() };
    match newton_solve(&mut sys, &mut x, &cfg) {
        Err(Error::NewtonDiverged { steps, history }) => {
            assert_eq!(steps, 2);
            assert_eq!(history.len(), 3);
        }
        other => panic!("{other:?}"),
    }
    let mut sys = Squares { c: vec![2.0], fail_linear: true };
    let err = newton_solve(&mut sys, &mut [1.0], &NewtonConfig::hartmann()).unwrap_err();
    assert!(matches!(err, Error::LinearSolverStalled { newton_step: 1, .. }), "{err}");
}

#[test]
fn continuation_stops_at_the_first_failure() {
    let plan = ContinuationPlan::hartmann_steps(16.0, 16.0, 80.0, NewtonConfig::hartmann());
    assert_eq!(plan.stages.len(), 5);
    let mut x = vec![0.0];
    let rep = continuation_run(&plan, &mut x, |re, _rem, x| {
        if re > 40.0 {
            x[0] = f64::NAN;
            return Err(Error::NewtonDiverged { steps: 20, history: vec![1.0] });
        }
        x[0] += re;
        Ok(NewtonReport::default())
    })
    .unwrap();
    assert_eq!(rep.stages.len(), 2);
    assert_eq!(rep.max_ha(), 32.0);
    assert_eq!(rep.failure.as_ref().unwrap().0, (48.0, 48.0));
    // warm start carried through, failed stage discarded
    assert_eq!(x, vec![48.0]);
    let bad = ContinuationPlan { stages: vec![(32.0, 32.0), (16.0, 16.0)], newton: NewtonConfig::hartmann() };
    assert!(continuation_run(&bad, &mut x, |_, _, _| Ok(NewtonReport::default())).is_err());
}

/// `y' = −λ y`.
struct Decay(f64);

impl TransientSystem for Decay {
    fn dim(&self) -> usize {
        1
    }
    fn mass_action(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
    fn spatial_action(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![self.0 * x[0]])
    }
    fn solve_step(&mut self, w: StepWeights, history: &[f64], x: &mut [f64]) -> Result<NewtonReport> {
        x[0] = -history[0] / (w.mass + w.theta * self.0);
        Ok(NewtonReport { residuals: vec![1.0, 0.0], linear_iterations: vec![1], linear_rtol: vec![0.0] })
    }
}

#[test]
fn bdf2_is_second_order() {
    let lam = 1.3;
    let err = |dt: f64| {
        let mut ts = TimeStepper::new(dt).unwrap();
        let mut y = vec![1.0];
        let n = (1.0 / dt).round() as usize;
        for k in 0..n {
            let rep = bdf2_advance(&mut ts, &mut Decay(lam), &mut y).unwrap();
            assert_eq!(rep.solves.len(), if k == 0 { 10 } else { 1 });
        }
        assert!((ts.time() - 1.0).abs() < 1e-12);
        (y[0] - (-lam).exp()).abs()
    };
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&dt| err(dt)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.15, "{e:?}");
    }
}

#[test]
fn stepper_rejects_bad_steps() {
    assert!(TimeStepper::new(0.0).is_err());
    assert!(TimeStepper::with_substeps(0.1, 0).is_err());
}

fn mg(variant: VankaVariant, newton: NewtonConfig) -> SolverConfig {
    SolverConfig { linear: LinearSolver::Multigrid(MgConfig::new(variant)), fgmres: FgmresOptions::default(), newton }
}

#[test]
fn hartmann_steady_solve_multigrid_and_direct_agree() {
    let prob = HartmannProblem::new(4.0, 4.0).unwrap();
    let family = HartmannProblem::family(4);
    let mut sols = Vec::new();
    for cfg in [
        mg(VankaVariant::Coupled, NewtonConfig::hartmann()),
        SolverConfig { linear: LinearSolver::Direct, ..mg(VankaVariant::Coupled, NewtonConfig::hartmann()) },
    ] {
        let mut s = MhdSolver::new(&prob, &family, 3, cfg).unwrap();
        let mut x = s.initial_guess();
        let rep = s.solve_steady(&mut x).unwrap();
        assert!(rep.steps() <= 4, "{rep:?}");
        let e = errors_against(s.disc(), &x, &prob.exact);
        assert!(e.u_l2 < 1e-3 && e.b_l2 < 5e-2, "{e:?}");
        sols.push(x);
    }
    // both stop at a 1e5 residual reduction
    let scale = sols[1].iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(diff_norm(&sols[0], &sols[1]) < 1e-4 * scale, "{}", diff_norm(&sols[0], &sols[1]) / scale);
}

fn island_steps(balanced: bool) -> f64 {
    let prob = IslandProblem::new(5000.0, 5000.0, 0.0).unwrap();
    let mut s = MhdSolver::new(&prob, &IslandProblem::family(4), 2, mg(VankaVariant::Coupled, NewtonConfig::island())).unwrap();
    let x0 = interpolate_fields(s.disc(), &prob.eq);
    if balanced {
        s.balance_at(&x0).unwrap();
    }
    let mut x = x0.clone();
    s.bc().lift(&mut x);
    let mut ts = TimeStepper::new(0.1).unwrap();
    for _ in 0..2 {
        let rep = bdf2_advance(&mut ts, &mut s, &mut x).unwrap();
        if balanced {
            assert_eq!(rep.newton_steps(), 0);
        }
    }
    diff_norm(&x, &x0)
}

#[test]
fn balanced_equilibrium_is_preserved() {
    assert_eq!(island_steps(true), 0.0);
    assert!(island_steps(false) > 1e-4);
}
