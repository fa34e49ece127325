//! Benchmark problems and their diagnostics.

mod diagnostics;
mod hartmann;
mod island;

pub use diagnostics::{cfl_numbers, reconnection_rate, ReconnectionProbe};
pub use hartmann::{hartmann_exact, Hartmann, HartmannProblem};
pub use island::{IslandEquilibrium, IslandProblem, IslandSource};

use crate::error::Result;
use crate::fem::{BcSet, Discretization, Physics};
use crate::mesh::{Mesh, MeshFamily};

/// What the solver stack needs from a boundary-value problem.
pub trait Problem: Send + Sync {
    fn physics(&self) -> Physics;
    /// Coarsest mesh of a hierarchy (periodic identification already applied).
    fn coarse_mesh(&self, family: &MeshFamily) -> Result<Mesh>;
    /// Boundary data on a level; `pin` is the vertex carrying the pressure pin.
    fn boundary(&self, disc: &Discretization, pin: usize) -> Result<BcSet>;
    /// Point whose nearest coarse vertex carries the pressure pin.
    fn pin_point(&self) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// Vertex nearest to the problem's pin point on the coarsest mesh. Refinement
/// keeps vertex ids, so the same id is valid on every finer level.
pub fn pin_vertex(problem: &dyn Problem, coarsest: &Mesh) -> usize {
    coarsest.master_vertex(coarsest.nearest_vertex(problem.pin_point()))
}
