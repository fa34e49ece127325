//! Monolithic geometric multigrid for the 2D incompressible viscoresistive
//! MHD system with a Lagrange multiplier enforcing `div B = 0`.
//!
//! Discretization: vector P2 velocity, lowest-order Nédélec (first kind)
//! magnetic field, P1 pressure and P1 multiplier on simplicial meshes.
//! Newton linearizations are preconditioned by V-cycles whose smoother is a
//! Chebyshev-accelerated additive Vanka sweep in one of three flavours
//! (segregated, purist, coupled).
//!
//! The crate is `no_std` and only needs `alloc`; IO, configuration files
//! and the command line live in the companion `mhdmg` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod driver;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod problems;
pub mod vanka;

pub use error::{Error, Result};
