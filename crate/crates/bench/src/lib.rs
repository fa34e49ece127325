//! Benchmarks for `mhdmg-core`: the Hartmann duct-flow iteration table,
//! Hartmann-number continuation, island coalescence and a discretization
//! convergence sweep, with TOML run configs and CSV output.

pub mod config;
pub mod report;
pub mod runs;

pub use config::{coarsest, RunConfig, SolverSettings};
pub use report::{emit_csv, observed_orders, ErrorRecord, RunReport, SolveRecord, StepRecord};
pub use runs::{
    hartmann_solve, run_continuation, run_hartmann_table, run_island, run_verify, ContinuationOutcome,
    ContinuationSettings, IslandOutcome, IslandSettings, TableSettings, VerifySettings, TABLE_PARAMETERS,
};
