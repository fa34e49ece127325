//! Run records and their CSV form.

use std::io::Write;
use std::path::Path;

/// One nonlinear solve: a Hartmann table cell or a continuation stage.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveRecord {
    pub mesh: usize,
    pub coarse: usize,
    pub levels: usize,
    pub variant: String,
    pub re: f64,
    pub rem: f64,
    pub newton_steps: usize,
    /// Linear iterations of each Newton step.
    pub linear: Vec<usize>,
    pub wall_seconds: f64,
    /// `None` when the solve converged.
    pub failure: Option<String>,
}

impl SolveRecord {
    pub fn ha(&self) -> f64 {
        (self.re * self.rem).sqrt()
    }
    pub fn total_linear(&self) -> usize {
        self.linear.iter().sum()
    }
    /// Total linear iterations over Newton steps.
    pub fn mean_linear(&self) -> f64 {
        if self.newton_steps == 0 {
            0.0
        } else {
            self.total_linear() as f64 / self.newton_steps as f64
        }
    }
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

/// One macro time step of a transient run (step 0 is the initial state).
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub newton_steps: usize,
    /// Largest Newton step count of the implicit solves in this step.
    pub max_newton_per_solve: usize,
    pub linear_iterations: usize,
    pub fluid_cfl: f64,
    pub alfven_cfl: f64,
    pub reconnection_rate: f64,
    /// Euclidean distance of the state to the initial state.
    pub drift: f64,
    pub wall_seconds: f64,
}

/// Discretization errors on one mesh of a refinement sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub mesh: usize,
    pub h: f64,
    pub u_l2: f64,
    pub p_l2: f64,
    pub b_l2: f64,
    pub b_hcurl: f64,
    pub r_l2: f64,
    pub newton_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunReport {
    Solves(Vec<SolveRecord>),
    Steps(Vec<StepRecord>),
    Convergence(Vec<ErrorRecord>),
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Observed order `log(e_c/e_f)/log(h_c/h_f)` between consecutive meshes.
pub fn observed_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2).zip(e.windows(2)).map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect()
}

impl RunReport {
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            RunReport::Solves(_) => &[
                "re", "rem", "ha", "mesh", "coarse", "levels", "variant", "newton_steps", "total_linear",
                "mean_linear", "linear_per_step", "wall_seconds", "status",
            ],
            RunReport::Steps(_) => &[
                "step", "t", "newton_steps", "max_newton_per_solve", "linear_iterations", "fluid_cfl", "alfven_cfl",
                "reconnection_rate", "drift", "wall_seconds",
            ],
            RunReport::Convergence(_) => &[
                "mesh", "h", "u_l2", "p_l2", "b_l2", "b_hcurl", "r_l2", "u_order", "p_order", "b_hcurl_order",
                "newton_steps",
            ],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RunReport::Solves(r) => r.len(),
            RunReport::Steps(r) => r.len(),
            RunReport::Convergence(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn rows(&self) -> Vec<Vec<String>> {
        match self {
            RunReport::Solves(rs) => rs
                .iter()
                .map(|r| {
                    let per: Vec<String> = r.linear.iter().map(|n| n.to_string()).collect();
                    vec![
                        float(r.re),
                        float(r.rem),
                        float(r.ha()),
                        r.mesh.to_string(),
                        r.coarse.to_string(),
                        r.levels.to_string(),
                        r.variant.clone(),
                        r.newton_steps.to_string(),
                        r.total_linear().to_string(),
                        float(r.mean_linear()),
                        per.join(";"),
                        float(r.wall_seconds),
                        r.failure.clone().unwrap_or_else(|| "ok".into()),
                    ]
                })
                .collect(),
            RunReport::Steps(rs) => rs
                .iter()
                .map(|r| {
                    vec![
                        r.step.to_string(),
                        float(r.t),
                        r.newton_steps.to_string(),
                        r.max_newton_per_solve.to_string(),
                        r.linear_iterations.to_string(),
                        float(r.fluid_cfl),
                        float(r.alfven_cfl),
                        float(r.reconnection_rate),
                        float(r.drift),
                        float(r.wall_seconds),
                    ]
                })
                .collect(),
            RunReport::Convergence(rs) => {
                let h: Vec<f64> = rs.iter().map(|r| r.h).collect();
                let col = |f: fn(&ErrorRecord) -> f64| observed_orders(&h, &rs.iter().map(f).collect::<Vec<_>>());
                let (ou, op, ob) = (col(|r| r.u_l2), col(|r| r.p_l2), col(|r| r.b_hcurl));
                rs.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let order = |o: &[f64]| if i == 0 { String::new() } else { float(o[i - 1]) };
                        vec![
                            r.mesh.to_string(),
                            float(r.h),
                            float(r.u_l2),
                            float(r.p_l2),
                            float(r.b_l2),
                            float(r.b_hcurl),
                            float(r.r_l2),
                            order(&ou),
                            order(&op),
                            order(&ob),
                            r.newton_steps.to_string(),
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Writes the header and one row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in self.rows() {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

pub fn emit_csv(report: &RunReport, path: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path)?;
    report.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}
