use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{curl_at_quadrature, CellGeometry, Discretization, P1Projector, LB, LOCAL_DOFS};
use crate::fem::basis::{nedelec, p2};

/// Projected current density at the origin, with a cached P1 mass factorization.
pub struct ReconnectionProbe {
    projector: P1Projector,
    origin_dof: usize,
    baseline: f64,
}

impl ReconnectionProbe {
    /// Records the baseline from the initial state. The origin must be a mesh vertex.
    pub fn new(disc: &Discretization, initial: &[f64]) -> Result<Self> {
        let v = disc.mesh().vertex_at([0.0, 0.0])?;
        let projector = P1Projector::new(disc)?;
        let mut probe = ReconnectionProbe { projector, origin_dof: disc.layout().vertex_dof(v), baseline: 0.0 };
        probe.baseline = probe.current_at_origin(disc, initial);
        Ok(probe)
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// P1 projection of `curl B_h` evaluated at the origin.
    pub fn current_at_origin(&self, disc: &Discretization, state: &[f64]) -> f64 {
        let curls = curl_at_quadrature(disc, state);
        let proj = self.projector.project(disc, &|c, _| curls[c]);
        proj[self.origin_dof]
    }

    pub fn rate(&self, disc: &Discretization, state: &[f64], rem: f64) -> f64 {
        (self.current_at_origin(disc, state) - self.baseline) / libm::sqrt(rem)
    }
}

/// `(j(0) − baseline)/√Re_m` for a one-off evaluation.
pub fn reconnection_rate(disc: &Discretization, state: &[f64], baseline: f64, rem: f64) -> Result<f64> {
    let mut probe = ReconnectionProbe::new(disc, state)?;
    probe.baseline = baseline;
    Ok(probe.rate(disc, state, rem))
}

/// Fluid and Alfvén CFL numbers, `u_max Δt / h` and `B_max Δt / h`, with the
/// maxima taken over cell means of `u·u` and `B·B`.
pub fn cfl_numbers(disc: &Discretization, state: &[f64], dt: f64, h: f64) -> Result<(f64, f64)> {
    let (mesh, layout) = (disc.mesh(), disc.layout());
    if state.len() != layout.len() {
        return Err(Error::DimensionMismatch { expected: layout.len(), found: state.len() });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("mesh size {h} must be positive")));
    }
    let rule = disc.rule();
    let (mut umax, mut bmax) = (0.0f64, 0.0f64);
    for c in 0..mesh.n_cells() {
        let geo = CellGeometry::new(mesh.cell_coords(c));
        let signs = layout.edge_signs(mesh, c);
        let dofs = layout.cell_dofs(mesh, c);
        let x: Vec<f64> = dofs.iter().map(|&d| state[d]).collect();
        debug_assert_eq!(x.len(), LOCAL_DOFS);
        let (mut uu, mut bb) = (0.0, 0.0);
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            let (n, _) = p2(&geo, lam);
            let (wv, _) = nedelec(&geo, lam, &signs);
            let mut u = [0.0; 2];
            for k in 0..6 {
                u[0] += x[2 * k] * n[k];
                u[1] += x[2 * k + 1] * n[k];
            }
            let mut b = [0.0; 2];
            for i in 0..3 {
                b[0] += x[LB + i] * wv[i][0];
                b[1] += x[LB + i] * wv[i][1];
            }
            uu += w * (u[0] * u[0] + u[1] * u[1]);
            bb += w * (b[0] * b[0] + b[1] * b[1]);
        }
        umax = umax.max(uu);
        bmax = bmax.max(bb);
    }
    Ok((libm::sqrt(umax) * dt / h, libm::sqrt(bmax) * dt / h))
}
