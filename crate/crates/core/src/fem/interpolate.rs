use alloc::vec;
use alloc::vec::Vec;

use super::assembly::Discretization;
use super::basis::{nedelec, p2, CellGeometry};
use super::bc::edge_moment;
use super::layout::{LB, LP, LR};
use super::quadrature::TriangleRule;
use crate::error::Result;
use crate::linalg::{sparse_lu, SparseLu};

/// Closed-form fields `(u, B, p, r)` plus `curl B`.
pub trait ExactFields {
    fn u(&self, x: [f64; 2]) -> [f64; 2];
    fn b(&self, x: [f64; 2]) -> [f64; 2];
    fn p(&self, x: [f64; 2]) -> f64;
    fn r(&self, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn curl_b(&self, x: [f64; 2]) -> f64;
}

/// Canonical interpolant: P2 nodal values, Nédélec edge moments, P1 nodal values.
pub fn interpolate_fields(disc: &Discretization, ex: &dyn ExactFields) -> Vec<f64> {
    let (mesh, layout) = (disc.mesh(), disc.layout());
    let mut x = vec![0.0; layout.len()];
    let nv = layout.n_vertex_dofs();
    for vd in 0..nv {
        let pt = layout.vdof_coords(vd);
        let u = ex.u(pt);
        x[2 * vd] = u[0];
        x[2 * vd + 1] = u[1];
        x[layout.pressure_dof(vd)] = ex.p(pt);
        x[layout.multiplier_dof(vd)] = ex.r(pt);
    }
    for e in 0..mesh.n_edges() {
        if mesh.master_edge(e) != e {
            continue;
        }
        let ed = layout.edge_dof(e);
        let [a, b] = mesh.edge(e);
        let (pa, pb) = (mesh.vertex(a as usize), mesh.vertex(b as usize));
        let u = ex.u([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        x[2 * (nv + ed)] = u[0];
        x[2 * (nv + ed) + 1] = u[1];
        x[layout.magnetic_dof(ed)] = edge_moment(layout, mesh, e, &|p| ex.b(p));
    }
    x
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldErrors {
    pub u_l2: f64,
    pub p_l2: f64,
    pub b_l2: f64,
    /// `(‖B − B_h‖² + ‖curl(B − B_h)‖²)^½`
    pub b_hcurl: f64,
    pub r_l2: f64,
}

/// Errors of a discrete state against closed-form fields.
pub fn errors_against(disc: &Discretization, state: &[f64], ex: &dyn ExactFields) -> FieldErrors {
    let (mesh, layout) = (disc.mesh(), disc.layout());
    let rule = TriangleRule::collapsed(6);
    let mut acc = [0.0; 5];
    for c in 0..mesh.n_cells() {
        let geo = CellGeometry::new(mesh.cell_coords(c));
        let signs = layout.edge_signs(mesh, c);
        let dofs = layout.cell_dofs(mesh, c);
        let (_, cw) = nedelec(&geo, &[1.0 / 3.0; 3], &signs);
        let jh: f64 = (0..3).map(|i| state[dofs[LB + i]] * cw[i]).sum();
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            let s = w * geo.area;
            let pt = geo.point(lam);
            let (n, _) = p2(&geo, lam);
            let (wv, _) = nedelec(&geo, lam, &signs);
            let mut u = [0.0; 2];
            for k in 0..6 {
                u[0] += state[dofs[2 * k]] * n[k];
                u[1] += state[dofs[2 * k + 1]] * n[k];
            }
            let mut b = [0.0; 2];
            let (mut p, mut r) = (0.0, 0.0);
            for i in 0..3 {
                b[0] += state[dofs[LB + i]] * wv[i][0];
                b[1] += state[dofs[LB + i]] * wv[i][1];
                p += state[dofs[LP + i]] * lam[i];
                r += state[dofs[LR + i]] * lam[i];
            }
            let (ue, be) = (ex.u(pt), ex.b(pt));
            let sq = |t: f64| t * t;
            acc[0] += s * (sq(u[0] - ue[0]) + sq(u[1] - ue[1]));
            acc[1] += s * sq(p - ex.p(pt));
            acc[2] += s * (sq(b[0] - be[0]) + sq(b[1] - be[1]));
            acc[3] += s * sq(jh - ex.curl_b(pt));
            acc[4] += s * sq(r - ex.r(pt));
        }
    }
    FieldErrors {
        u_l2: libm::sqrt(acc[0]),
        p_l2: libm::sqrt(acc[1]),
        b_l2: libm::sqrt(acc[2]),
        b_hcurl: libm::sqrt(acc[2] + acc[3]),
        r_l2: libm::sqrt(acc[4]),
    }
}

/// Cellwise (constant) curl of the discrete magnetic field.
pub fn curl_at_quadrature(disc: &Discretization, state: &[f64]) -> Vec<f64> {
    let (mesh, layout) = (disc.mesh(), disc.layout());
    (0..mesh.n_cells())
        .map(|c| {
            let geo = CellGeometry::new(mesh.cell_coords(c));
            let signs = layout.edge_signs(mesh, c);
            let dofs = layout.cell_dofs(mesh, c);
            let (_, cw) = nedelec(&geo, &[1.0 / 3.0; 3], &signs);
            (0..3).map(|i| state[dofs[LB + i]] * cw[i]).sum()
        })
        .collect()
}

/// L2 projection onto continuous P1 with a cached mass factorization.
pub struct P1Projector {
    lu: SparseLu,
}

impl P1Projector {
    pub fn new(disc: &Discretization) -> Result<Self> {
        Ok(P1Projector { lu: sparse_lu(&disc.p1_mass())? })
    }

    /// `source(cell, point)` is integrated with the discretization's rule.
    pub fn project(&self, disc: &Discretization, source: &dyn Fn(usize, [f64; 2]) -> f64) -> Vec<f64> {
        let (mesh, layout) = (disc.mesh(), disc.layout());
        let mut rhs = vec![0.0; layout.n_p()];
        let rule = disc.rule();
        for c in 0..mesh.n_cells() {
            let geo = CellGeometry::new(mesh.cell_coords(c));
            let cv = mesh.cell(c);
            for (lam, &w) in rule.points.iter().zip(&rule.weights) {
                let v = w * geo.area * source(c, geo.point(lam));
                for i in 0..3 {
                    rhs[layout.vertex_dof(cv[i] as usize)] += v * lam[i];
                }
            }
        }
        let mut x = vec![0.0; rhs.len()];
        self.lu.solve(&rhs, &mut x);
        x
    }
}

/// One-shot L2 projection onto P1 (see [`P1Projector`] for repeated use).
pub fn project_to_p1(disc: &Discretization, source: &dyn Fn(usize, [f64; 2]) -> f64) -> Result<Vec<f64>> {
    Ok(P1Projector::new(disc)?.project(disc, source))
}
