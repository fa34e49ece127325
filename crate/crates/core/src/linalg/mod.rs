//! Sparse and dense kernels plus the Krylov and polynomial iterations.

mod banded;
mod block;
mod chebyshev;
mod csr;
mod dense;
mod fgmres;

pub use banded::{reverse_cuthill_mckee, sparse_lu, SparseLu};
pub use block::{BlockName, BlockOperator};
pub use chebyshev::{chebyshev_apply, ChebyshevParams};
pub use csr::CsrMatrix;
pub use dense::{dense_lu_factor, DenseLu};
pub use fgmres::{fgmres, FgmresOptions, KrylovResult};

/// A linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Action of an (approximate) inverse, `z = M⁻¹ r`. May vary between calls.
pub trait Preconditioner {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]);
}

/// `M = I`.
pub struct Identity;

impl Preconditioner for Identity {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl<T: Preconditioner + ?Sized> Preconditioner for &T {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        (**self).apply_inverse(r, z)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
