//! Finite-element spaces, DoF numbering, assembly and boundary conditions.

mod assembly;
pub mod basis;
mod bc;
mod interpolate;
mod layout;
mod quadrature;

pub use assembly::{
    assemble_jacobian, assemble_nedelec_mass, assemble_residual, BlockSystem, Discretization, NoSource, Physics,
    Source, TermWeights,
};
pub use basis::{eval_basis, CellGeometry, SpaceKind, Tabulation};
pub use bc::{apply_bcs, BcSet, BoundaryData};
pub use interpolate::{
    curl_at_quadrature, errors_against, interpolate_fields, project_to_p1, ExactFields, FieldErrors, P1Projector,
};
pub use layout::{Field, SpaceLayout, StateVector, LB, LOCAL_DOFS, LP, LR, LU};
pub use quadrature::{gauss_legendre, TriangleRule};
