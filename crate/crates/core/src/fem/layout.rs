use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Number of local DoFs per cell: 12 velocity, 3 magnetic, 3 pressure, 3 multiplier.
pub const LOCAL_DOFS: usize = 21;
pub const LU: usize = 0;
pub const LB: usize = 12;
pub const LP: usize = 15;
pub const LR: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Velocity,
    Magnetic,
    Pressure,
    Multiplier,
}

/// Global numbering of the four discrete spaces, concatenated as `(u, B, p, r)`.
///
/// Vertex and edge DoFs are numbered over periodic masters only. Velocity
/// DoFs are interleaved: P2 node `n` owns `2n` (x) and `2n + 1` (y); vertex
/// nodes come first, then edge midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceLayout {
    vertex_dof: Vec<u32>,
    edge_dof: Vec<u32>,
    n_vdof: usize,
    n_edof: usize,
    offsets: [usize; 5],
    /// Coordinates of each vertex DoF (taken from its master vertex).
    vdof_coords: Vec<[f64; 2]>,
}

impl SpaceLayout {
    pub fn new(mesh: &Mesh) -> Self {
        let number = |n: usize, master: &dyn Fn(usize) -> usize| {
            let mut ids = vec![u32::MAX; n];
            let mut next = 0u32;
            for i in 0..n {
                if master(i) == i {
                    ids[i] = next;
                    next += 1;
                }
            }
            for i in 0..n {
                let m = master(i);
                if m != i {
                    ids[i] = ids[m];
                }
            }
            (ids, next as usize)
        };
        let (vertex_dof, n_vdof) = number(mesh.n_vertices(), &|v| mesh.master_vertex(v));
        let (edge_dof, n_edof) = number(mesh.n_edges(), &|e| mesh.master_edge(e));
        let n_u = 2 * (n_vdof + n_edof);
        let n_b = n_edof;
        let offsets = [0, n_u, n_u + n_b, n_u + n_b + n_vdof, n_u + n_b + 2 * n_vdof];
        let mut vdof_coords = vec![[0.0; 2]; n_vdof];
        for v in 0..mesh.n_vertices() {
            if mesh.master_vertex(v) == v {
                vdof_coords[vertex_dof[v] as usize] = mesh.vertex(v);
            }
        }
        SpaceLayout { vertex_dof, edge_dof, n_vdof, n_edof, offsets, vdof_coords }
    }

    pub fn n_u(&self) -> usize {
        self.offsets[1]
    }
    pub fn n_b(&self) -> usize {
        self.offsets[2] - self.offsets[1]
    }
    pub fn n_p(&self) -> usize {
        self.n_vdof
    }
    pub fn n_r(&self) -> usize {
        self.n_vdof
    }
    pub fn len(&self) -> usize {
        self.offsets[4]
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn offsets(&self) -> [usize; 5] {
        self.offsets
    }
    pub fn n_vertex_dofs(&self) -> usize {
        self.n_vdof
    }
    pub fn n_edge_dofs(&self) -> usize {
        self.n_edof
    }

    pub fn range(&self, f: Field) -> core::ops::Range<usize> {
        let k = f as usize;
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn field_of(&self, dof: usize) -> Field {
        match dof {
            d if d < self.offsets[1] => Field::Velocity,
            d if d < self.offsets[2] => Field::Magnetic,
            d if d < self.offsets[3] => Field::Pressure,
            _ => Field::Multiplier,
        }
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        self.vertex_dof[v] as usize
    }

    pub fn edge_dof(&self, e: usize) -> usize {
        self.edge_dof[e] as usize
    }

    pub fn vdof_coords(&self, vd: usize) -> [f64; 2] {
        self.vdof_coords[vd]
    }

    /// Velocity DoF of component `c` at P2 node `node` (vertex DoFs first).
    pub fn velocity_dof(&self, node: usize, c: usize) -> usize {
        2 * node + c
    }
    pub fn magnetic_dof(&self, edof: usize) -> usize {
        self.offsets[1] + edof
    }
    pub fn pressure_dof(&self, vdof: usize) -> usize {
        self.offsets[2] + vdof
    }
    pub fn multiplier_dof(&self, vdof: usize) -> usize {
        self.offsets[3] + vdof
    }

    /// P2 node numbers of a cell (3 vertices then 3 edges).
    pub fn p2_nodes(&self, mesh: &Mesh, c: usize) -> [usize; 6] {
        let cv = mesh.cell(c);
        let ce = mesh.cell_edges(c);
        [
            self.vertex_dof(cv[0] as usize),
            self.vertex_dof(cv[1] as usize),
            self.vertex_dof(cv[2] as usize),
            self.n_vdof + self.edge_dof(ce[0] as usize),
            self.n_vdof + self.edge_dof(ce[1] as usize),
            self.n_vdof + self.edge_dof(ce[2] as usize),
        ]
    }

    /// Orientation signs of a cell's local edges relative to the global orientation
    /// (ascending master vertex id).
    pub fn edge_signs(&self, mesh: &Mesh, c: usize) -> [f64; 3] {
        let cv = mesh.cell(c);
        let mut s = [1.0; 3];
        for (i, si) in s.iter_mut().enumerate() {
            let a = mesh.master_vertex(cv[(i + 1) % 3] as usize);
            let b = mesh.master_vertex(cv[(i + 2) % 3] as usize);
            if a > b {
                *si = -1.0;
            }
        }
        s
    }

    /// Global DoF indices of a cell in local order `[u(12), B(3), p(3), r(3)]`.
    pub fn cell_dofs(&self, mesh: &Mesh, c: usize) -> [usize; LOCAL_DOFS] {
        let nodes = self.p2_nodes(mesh, c);
        let cv = mesh.cell(c);
        let ce = mesh.cell_edges(c);
        let mut d = [0usize; LOCAL_DOFS];
        for k in 0..6 {
            d[2 * k] = 2 * nodes[k];
            d[2 * k + 1] = 2 * nodes[k] + 1;
        }
        for i in 0..3 {
            d[LB + i] = self.magnetic_dof(self.edge_dof(ce[i] as usize));
            d[LP + i] = self.pressure_dof(self.vertex_dof(cv[i] as usize));
            d[LR + i] = self.multiplier_dof(self.vertex_dof(cv[i] as usize));
        }
        d
    }

    /// Global orientation of edge DoF: the (start, end) points of the master edge,
    /// running from the lower master vertex id to the higher one.
    pub fn edge_direction(&self, mesh: &Mesh, e: usize) -> ([f64; 2], [f64; 2]) {
        let [a, b] = mesh.edge(e);
        let (ma, mb) = (mesh.master_vertex(a as usize), mesh.master_vertex(b as usize));
        let (pa, pb) = (mesh.vertex(a as usize), mesh.vertex(b as usize));
        if ma <= mb {
            (pa, pb)
        } else {
            (pb, pa)
        }
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector { data: vec![0.0; self.len()], offsets: self.offsets }
    }

    pub fn state_from(&self, data: Vec<f64>) -> Result<StateVector> {
        if data.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: data.len() });
        }
        Ok(StateVector { data, offsets: self.offsets })
    }
}

/// Block coefficient vector `(x_u, x_B, x_p, x_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub data: Vec<f64>,
    offsets: [usize; 5],
}

impl StateVector {
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn offsets(&self) -> [usize; 5] {
        self.offsets
    }
    pub fn u(&self) -> &[f64] {
        &self.data[self.offsets[0]..self.offsets[1]]
    }
    pub fn b(&self) -> &[f64] {
        &self.data[self.offsets[1]..self.offsets[2]]
    }
    pub fn p(&self) -> &[f64] {
        &self.data[self.offsets[2]..self.offsets[3]]
    }
    pub fn r(&self) -> &[f64] {
        &self.data[self.offsets[3]..self.offsets[4]]
    }
    pub fn block_mut(&mut self, f: Field) -> &mut [f64] {
        let k = f as usize;
        &mut self.data[self.offsets[k]..self.offsets[k + 1]]
    }
    pub fn block(&self, f: Field) -> &[f64] {
        let k = f as usize;
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
    pub fn check_layout(&self, layout: &SpaceLayout) -> Result<()> {
        if self.offsets != layout.offsets() {
            return Err(Error::DimensionMismatch { expected: layout.len(), found: self.len() });
        }
        Ok(())
    }
}
