use core::fmt;

use alloc::string::String;

/// Errors produced by the solver stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A mesh was requested with zero cells in some direction or a degenerate domain.
    InvalidMesh(String),
    /// Left and right boundaries cannot be identified by an x-translation.
    PeriodicMismatch { y: f64 },
    /// Entity index out of range.
    InvalidIndex { what: &'static str, index: usize, len: usize },
    /// Vector or matrix sizes disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A factorization hit a zero pivot.
    Singular { pivot: usize, rank: usize },
    /// A Vanka patch stayed singular after regularization.
    SingularPatch { seed: usize, rank: usize, size: usize },
    /// Patch factorizations were built for another revision of the system.
    StaleFactorization { expected: u64, found: u64 },
    /// Krylov breakdown (zero Arnoldi norm) before reaching tolerance.
    Breakdown { iteration: usize, residual: f64 },
    /// Linear solver hit its iteration cap.
    LinearNotConverged { iterations: usize, residual: f64, target: f64 },
    /// Newton hit its step cap or produced a non-finite residual.
    NewtonDiverged { steps: usize, history: alloc::vec::Vec<f64> },
    /// Newton stopped because an inner linear solve failed.
    LinearSolverStalled { newton_step: usize, source: alloc::boxed::Box<Error> },
    /// A time step failed.
    TimeStepFailed { step: usize, source: alloc::boxed::Box<Error> },
    /// Bad Chebyshev interval or other parameter.
    InvalidParameter(String),
    /// Fine mesh is not a uniform refinement of the coarse mesh.
    NotNested,
    /// A point that must be a mesh vertex is not.
    NotAVertex { x: f64, y: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::PeriodicMismatch { y } => {
                write!(f, "left/right boundaries do not match under x-translation (y = {y})")
            }
            Error::InvalidIndex { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Singular { pivot, rank } => {
                write!(f, "matrix is singular at pivot {pivot} (rank estimate {rank})")
            }
            Error::SingularPatch { seed, rank, size } => {
                write!(f, "Vanka patch seeded at vertex {seed} is singular (rank {rank} of {size})")
            }
            Error::StaleFactorization { expected, found } => write!(
                f,
                "patch factorizations belong to system revision {found}, not {expected}"
            ),
            Error::Breakdown { iteration, residual } => {
                write!(f, "Krylov breakdown at iteration {iteration} (residual {residual:e})")
            }
            Error::LinearNotConverged { iterations, residual, target } => write!(
                f,
                "linear solver did not converge in {iterations} iterations ({residual:e} > {target:e})"
            ),
            Error::NewtonDiverged { steps, history } => write!(
                f,
                "Newton failed after {steps} steps (last residual {:e})",
                history.last().copied().unwrap_or(f64::NAN)
            ),
            Error::LinearSolverStalled { newton_step, source } => {
                write!(f, "linear solver failed in Newton step {newton_step}: {source}")
            }
            Error::TimeStepFailed { step, source } => write!(f, "time step {step} failed: {source}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotNested => write!(f, "meshes are not nested by uniform refinement"),
            Error::NotAVertex { x, y } => write!(f, "point ({x}, {y}) is not a mesh vertex"),
        }
    }
}

impl core::error::Error for Error {}
