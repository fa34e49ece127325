use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mhdmg::{
    emit_csv, run_continuation, run_hartmann_table, run_island, run_verify, ContinuationSettings, IslandSettings,
    RunConfig, RunReport, SolverSettings, TableSettings, VerifySettings,
};
use mhdmg_core::vanka::VankaVariant;

#[derive(Parser)]
#[command(name = "mhdmg", version, about = "Monolithic multigrid benchmarks for 2D incompressible MHD")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Newton and FGMRES counts over the Hartmann (Re, Re_m) grid.
    HartmannTable(Common),
    /// Re = Re_m = Ha continuation until the solver fails.
    Continuation(Common),
    /// Transient island coalescence.
    Island(Common),
    /// Hartmann discretization errors under refinement.
    Verify(Common),
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Finest mesh cells per side.
    #[arg(long)]
    mesh: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    /// segregated, purist, coupled (or all for the table).
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    re: Option<f64>,
    #[arg(long)]
    rem: Option<f64>,
    /// Pre- and post-smoothing steps, e.g. 2,2.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    cycle: Option<Vec<usize>>,
    /// Chebyshev interval, e.g. 2.0,8.0.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    cheb: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Island perturbation amplitude.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Use the analytic island forcing without the discrete balance.
    #[arg(long)]
    unbalanced: bool,
    /// Smoothing on the finest level only.
    #[arg(long)]
    no_coarse: bool,
    /// FGMRES iteration cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    ha_start: Option<f64>,
    #[arg(long)]
    ha_step: Option<f64>,
    #[arg(long)]
    ha_max: Option<f64>,
    /// Mesh sizes for verify, e.g. 8,16,32.
    #[arg(long, value_delimiter = ',')]
    meshes: Option<Vec<usize>>,
    /// Coarsest grid for verify.
    #[arg(long)]
    coarse: Option<usize>,
    /// Direct sparse solves for verify.
    #[arg(long)]
    direct: bool,
    /// TOML file whose settings override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let flags = RunConfig {
            mesh: self.mesh,
            levels: self.levels,
            variant: self.variant.clone(),
            re: self.re,
            rem: self.rem,
            cycle: self.cycle.as_ref().map(|c| [c[0], c[1]]),
            cheb: self.cheb.as_ref().map(|c| [c[0], c[1]]),
            dt: self.dt,
            tfinal: self.tfinal,
            out: self.out.clone(),
            epsilon: self.epsilon,
            balanced: self.unbalanced.then_some(false),
            coarse_correction: self.no_coarse.then_some(false),
            max_iterations: self.max_iterations,
            ha_start: self.ha_start,
            ha_step: self.ha_step,
            ha_max: self.ha_max,
            meshes: self.meshes.clone(),
            coarse: self.coarse,
            direct: self.direct.then_some(true),
        };
        match &self.config {
            Some(path) => Ok(flags.overridden_by(&RunConfig::load(path)?)),
            None => Ok(flags),
        }
    }
}

fn single_variant(cfg: &RunConfig) -> anyhow::Result<VankaVariant> {
    let v = cfg.variants(&[VankaVariant::Coupled])?;
    anyhow::ensure!(v.len() == 1, "this verb runs one variant at a time");
    Ok(v[0])
}

fn finish(report: &RunReport, cfg: &RunConfig) -> anyhow::Result<()> {
    match &cfg.out {
        Some(path) => emit_csv(report, path)?,
        None => print!("{}", report.to_csv_string()),
    }
    Ok(())
}

fn run(verb: Verb) -> anyhow::Result<bool> {
    match verb {
        Verb::HartmannTable(c) => {
            let cfg = c.resolve()?;
            let mut t = TableSettings::default();
            t.mesh = cfg.mesh.unwrap_or(t.mesh);
            t.levels = cfg.levels.unwrap_or(t.levels);
            t.variants = cfg.variants(&t.variants)?;
            if cfg.re.is_some() || cfg.rem.is_some() {
                t.parameters = vec![(cfg.re.unwrap_or(4.0), cfg.rem.unwrap_or(4.0))];
            }
            if let Some([a, b]) = cfg.cycle {
                t.cycle = (a, b);
            }
            t.cheb = cfg.cheb.map(|[a, b]| (a, b));
            t.max_iterations = cfg.max_iterations.unwrap_or(t.max_iterations);
            let report = run_hartmann_table(&t, |r| {
                eprintln!(
                    "({}, {}) {:>10}: {:.2} mean over {} Newton steps, {:.1} s{}",
                    r.re,
                    r.rem,
                    r.variant,
                    r.mean_linear(),
                    r.newton_steps,
                    r.wall_seconds,
                    r.failure.as_deref().map(|f| format!(" FAILED: {f}")).unwrap_or_default()
                )
            })?;
            finish(&report, &cfg)?;
            Ok(true)
        }
        Verb::Continuation(c) => {
            let cfg = c.resolve()?;
            let mut s = ContinuationSettings::default();
            s.mesh = cfg.mesh.unwrap_or(s.mesh);
            s.levels = cfg.levels.unwrap_or(s.levels);
            s.ha_start = cfg.ha_start.unwrap_or(s.ha_start);
            s.ha_step = cfg.ha_step.unwrap_or(s.ha_step);
            s.ha_max = cfg.ha_max.unwrap_or(s.ha_max);
            s.solver = SolverSettings::new(single_variant(&cfg)?).with(&cfg);
            let out = run_continuation(&s, |r| {
                eprintln!("Ha {}: {} Newton steps, {:?} linear, {:.1} s", r.ha(), r.newton_steps, r.linear, r.wall_seconds)
            })?;
            eprintln!("maximum Ha reached: {}", out.max_ha);
            finish(&out.report, &cfg)?;
            Ok(true)
        }
        Verb::Island(c) => {
            let cfg = c.resolve()?;
            let mut s = IslandSettings::default();
            s.mesh = cfg.mesh.unwrap_or(s.mesh);
            s.levels = cfg.levels.unwrap_or(s.levels);
            s.re = cfg.re.unwrap_or(s.re);
            s.rem = cfg.rem.unwrap_or(s.rem);
            s.epsilon = cfg.epsilon.unwrap_or(s.epsilon);
            s.dt = cfg.dt.unwrap_or(s.dt);
            s.tfinal = cfg.tfinal.unwrap_or(s.tfinal);
            s.balanced = cfg.balanced.unwrap_or(s.balanced);
            let variant = single_variant(&cfg)?;
            if variant != s.solver.variant {
                s.solver.variant = variant;
                s.solver.cheb = SolverSettings::new(variant).cheb;
            }
            s.solver = s.solver.with(&cfg);
            let out = run_island(&s, |r| {
                eprintln!(
                    "t = {:.3}: {} Newton, {} linear, CFL fluid {:.3e} Alfven {:.3e}, rate {:.6e}",
                    r.t, r.newton_steps, r.linear_iterations, r.fluid_cfl, r.alfven_cfl, r.reconnection_rate
                )
            })?;
            finish(&out.report, &cfg)?;
            if let Some(f) = &out.failure {
                eprintln!("run stopped early: {f}");
            }
            Ok(out.failure.is_none())
        }
        Verb::Verify(c) => {
            let cfg = c.resolve()?;
            let mut v = VerifySettings::default();
            v.meshes = cfg.meshes.clone().unwrap_or(v.meshes);
            v.coarse = cfg.coarse.unwrap_or(v.coarse);
            v.re = cfg.re.unwrap_or(v.re);
            v.rem = cfg.rem.unwrap_or(v.rem);
            v.direct = cfg.direct.unwrap_or(v.direct);
            v.solver = SolverSettings::new(single_variant(&cfg)?).with(&cfg);
            let report = run_verify(&v, |r| {
                eprintln!("{}x{}: u {:.3e}  p {:.3e}  B {:.3e}  r {:.3e}", r.mesh, r.mesh, r.u_l2, r.p_l2, r.b_hcurl, r.r_l2)
            })?;
            finish(&report, &cfg)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
