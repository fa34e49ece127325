//! Reference bases mapped to physical cells.
//!
//! P2 local nodes: 0..3 are the vertices, 3..6 the edge midpoints (node
//! `3 + i` sits on local edge `i`, opposite vertex `i`). Nédélec functions
//! are the Whitney forms `λa ∇λb − λb ∇λa` for local edge `i` running from
//! local vertex `a = (i+1)%3` to `b = (i+2)%3`, multiplied by the sign of
//! the global edge orientation.

use crate::error::{Error, Result};

/// Affine cell data: coordinates, area and barycentric gradients.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = coords;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let inv = 1.0 / det;
        // ∇λ_i is the inward normal of the opposite edge divided by twice the area
        let grad = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) * inv, (q[0] - p[0]) * inv];
        CellGeometry { coords, area: 0.5 * det, grad_lambda: [grad(b, c), grad(c, a), grad(a, b)] }
    }

    pub fn point(&self, lam: &[f64; 3]) -> [f64; 2] {
        let c = &self.coords;
        [
            lam[0] * c[0][0] + lam[1] * c[1][0] + lam[2] * c[2][0],
            lam[0] * c[0][1] + lam[1] * c[1][1] + lam[2] * c[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let a = self.coords[0];
        let g = &self.grad_lambda;
        let d = [x[0] - a[0], x[1] - a[1]];
        let l1 = g[1][0] * d[0] + g[1][1] * d[1];
        let l2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

#[inline]
pub fn cross2(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

#[inline]
pub fn dot2(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    P1,
    P2,
    Nedelec,
}

impl SpaceKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "P1" | "p1" => Ok(SpaceKind::P1),
            "P2" | "p2" => Ok(SpaceKind::P2),
            "N1curl" | "nedelec" | "Nedelec" => Ok(SpaceKind::Nedelec),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown space kind {name:?}"))),
        }
    }
}

/// P1 values and gradients at a point.
pub fn p1(geo: &CellGeometry, lam: &[f64; 3]) -> ([f64; 3], [[f64; 2]; 3]) {
    (*lam, geo.grad_lambda)
}

/// P2 values and gradients at a point.
pub fn p2(geo: &CellGeometry, lam: &[f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
    let g = &geo.grad_lambda;
    let mut v = [0.0; 6];
    let mut d = [[0.0; 2]; 6];
    for i in 0..3 {
        v[i] = lam[i] * (2.0 * lam[i] - 1.0);
        let s = 4.0 * lam[i] - 1.0;
        d[i] = [s * g[i][0], s * g[i][1]];
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        v[3 + i] = 4.0 * lam[a] * lam[b];
        d[3 + i] = [4.0 * (lam[a] * g[b][0] + lam[b] * g[a][0]), 4.0 * (lam[a] * g[b][1] + lam[b] * g[a][1])];
    }
    (v, d)
}

/// Nédélec values and (scalar) curls at a point, with global orientation signs applied.
pub fn nedelec(geo: &CellGeometry, lam: &[f64; 3], signs: &[f64; 3]) -> ([[f64; 2]; 3], [f64; 3]) {
    let g = &geo.grad_lambda;
    let mut w = [[0.0; 2]; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let s = signs[i];
        w[i] = [s * (lam[a] * g[b][0] - lam[b] * g[a][0]), s * (lam[a] * g[b][1] - lam[b] * g[a][1])];
        c[i] = s * 2.0 * cross2(g[a], g[b]);
    }
    (w, c)
}

/// Tabulated basis values for one cell at the points of a rule.
#[derive(Clone, Debug)]
pub enum Tabulation {
    P1 { values: alloc::vec::Vec<[f64; 3]>, grads: [[f64; 2]; 3] },
    P2 { values: alloc::vec::Vec<[f64; 6]>, grads: alloc::vec::Vec<[[f64; 2]; 6]> },
    Nedelec { values: alloc::vec::Vec<[[f64; 2]; 3]>, curls: [f64; 3] },
}

/// Evaluates a space's basis on `cell` at every point of `rule`.
pub fn eval_basis(
    space: SpaceKind,
    mesh: &crate::mesh::Mesh,
    layout: &super::SpaceLayout,
    cell: usize,
    rule: &super::TriangleRule,
) -> Result<Tabulation> {
    if cell >= mesh.n_cells() {
        return Err(Error::InvalidIndex { what: "cell", index: cell, len: mesh.n_cells() });
    }
    let geo = CellGeometry::new(mesh.cell_coords(cell));
    Ok(match space {
        SpaceKind::P1 => Tabulation::P1 { values: rule.points.clone(), grads: geo.grad_lambda },
        SpaceKind::P2 => {
            let (values, grads) = rule.points.iter().map(|l| p2(&geo, l)).unzip();
            Tabulation::P2 { values, grads }
        }
        SpaceKind::Nedelec => {
            let signs = layout.edge_signs(mesh, cell);
            let mut curls = [0.0; 3];
            let values = rule
                .points
                .iter()
                .map(|l| {
                    let (w, c) = nedelec(&geo, l, &signs);
                    curls = c;
                    w
                })
                .collect();
            Tabulation::Nedelec { values, curls }
        }
    })
}
