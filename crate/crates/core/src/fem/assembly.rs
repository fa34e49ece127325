use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use super::basis::{nedelec, p2, CellGeometry};
use super::layout::{SpaceLayout, LB, LOCAL_DOFS, LP, LR};
use super::quadrature::TriangleRule;
use crate::error::{Error, Result};
use crate::linalg::{BlockOperator, CsrMatrix};
use crate::mesh::Mesh;

/// Right-hand sides `f` (momentum) and `g` (Faraday).
pub trait Source: Send + Sync {
    fn momentum(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn faraday(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
}

pub struct NoSource;
impl Source for NoSource {}

#[derive(Clone)]
pub struct Physics {
    pub re: f64,
    pub rem: f64,
    pub source: Option<Arc<dyn Source>>,
}

impl core::fmt::Debug for Physics {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Physics")
            .field("re", &self.re)
            .field("rem", &self.rem)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Physics {
    pub fn new(re: f64, rem: f64) -> Self {
        Physics { re, rem, source: None }
    }

    pub fn with_source(mut self, s: Arc<dyn Source>) -> Self {
        self.source = Some(s);
        self
    }
}

/// Scalings of the three groups of terms.
///
/// `spatial` multiplies the viscous, convective, Lorentz, induction, resistive
/// and forcing terms; `mass` multiplies the `u` and `B` mass terms; `constraint`
/// multiplies the pressure, multiplier and divergence terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermWeights {
    pub spatial: f64,
    pub mass: f64,
    pub constraint: f64,
}

impl TermWeights {
    pub const STEADY: TermWeights = TermWeights { spatial: 1.0, mass: 0.0, constraint: 1.0 };
    pub const MASS: TermWeights = TermWeights { spatial: 0.0, mass: 1.0, constraint: 0.0 };
    pub const SPATIAL_ONLY: TermWeights = TermWeights { spatial: 1.0, mass: 0.0, constraint: 0.0 };
}

static REVISION: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Monolithic Newton system with block offsets `(u, B, p, r)`.
///
/// Each instance carries a unique revision; anything derived from the
/// matrix (patch factorizations) records it to detect staleness.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    offsets: [usize; 5],
    revision: u64,
    constrained: Vec<bool>,
}

impl BlockSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, offsets: [usize; 5]) -> Result<Self> {
        if matrix.nrows() != offsets[4] || matrix.ncols() != offsets[4] || rhs.len() != offsets[4] {
            return Err(Error::DimensionMismatch { expected: offsets[4], found: matrix.nrows() });
        }
        let n = offsets[4];
        Ok(BlockSystem { matrix, rhs, offsets, revision: next_revision(), constrained: vec![false; n] })
    }

    pub fn offsets(&self) -> [usize; 5] {
        self.offsets
    }
    pub fn len(&self) -> usize {
        self.offsets[4]
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn revision(&self) -> u64 {
        self.revision
    }
    /// Marks the matrix as modified.
    pub fn touch(&mut self) {
        self.revision = next_revision();
    }

    /// DoFs eliminated by boundary conditions.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }
    pub fn bc_applied(&self) -> bool {
        self.constrained.iter().any(|&c| c)
    }
    pub(crate) fn set_constrained(&mut self, mask: Vec<bool>) {
        self.constrained = mask;
    }

    pub fn blocks(&self) -> BlockOperator {
        BlockOperator::from_monolithic(&self.matrix, self.offsets)
    }
}

/// A mesh with its DoF layout, sparsity pattern and quadrature rule.
#[derive(Clone, Debug)]
pub struct Discretization {
    mesh: Mesh,
    layout: SpaceLayout,
    pattern: CsrMatrix,
    rule: TriangleRule,
}

/// Which field pairs couple in the Newton matrix (u, B, p, r).
const COUPLES: [[bool; 4]; 4] =
    [[true, true, true, false], [true, true, false, true], [true, false, false, false], [false, true, false, false]];

fn local_field(i: usize) -> usize {
    match i {
        i if i < LB => 0,
        i if i < LP => 1,
        i if i < LR => 2,
        _ => 3,
    }
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Self {
        Self::with_rule(mesh, TriangleRule::degree6())
    }

    pub fn with_rule(mesh: Mesh, rule: TriangleRule) -> Self {
        let layout = SpaceLayout::new(&mesh);
        let pattern = sparsity_pattern(&mesh, &layout);
        Discretization { mesh, layout, pattern, rule }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }
    pub fn rule(&self) -> &TriangleRule {
        &self.rule
    }

    fn check(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.layout.len() {
            return Err(Error::DimensionMismatch { expected: self.layout.len(), found: state.len() });
        }
        Ok(())
    }

    /// Nonlinear residual without boundary conditions.
    pub fn residual(&self, state: &[f64], phys: &Physics, w: TermWeights) -> Result<Vec<f64>> {
        self.check(state)?;
        let mut r = vec![0.0; self.layout.len()];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.layout.cell_dofs(&self.mesh, c);
            let x = gather(state, &dofs);
            let (re, _) = self.element(c, &x, phys, w, false);
            for (i, &d) in dofs.iter().enumerate() {
                r[d] += re[i];
            }
        }
        Ok(r)
    }

    /// Newton matrix at `state` with `rhs = -R(state)`, boundary conditions not applied.
    pub fn jacobian(&self, state: &[f64], phys: &Physics, w: TermWeights) -> Result<BlockSystem> {
        self.check(state)?;
        let mut a = self.pattern.zeroed_like();
        let mut r = vec![0.0; self.layout.len()];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.layout.cell_dofs(&self.mesh, c);
            let x = gather(state, &dofs);
            let (re, ke) = self.element(c, &x, phys, w, true);
            scatter(&mut a, &dofs, &ke);
            for (i, &d) in dofs.iter().enumerate() {
                r[d] -= re[i];
            }
        }
        BlockSystem::new(a, r, self.layout.offsets())
    }

    /// Mass matrix of the Nédélec space, `∫ φ_i·φ_j`.
    pub fn nedelec_mass(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(9 * self.mesh.n_cells());
        for c in 0..self.mesh.n_cells() {
            let geo = CellGeometry::new(self.mesh.cell_coords(c));
            let signs = self.layout.edge_signs(&self.mesh, c);
            let ce = self.mesh.cell_edges(c);
            let mut m = [[0.0; 3]; 3];
            for (lam, &wq) in self.rule.points.iter().zip(&self.rule.weights) {
                let (wv, _) = nedelec(&geo, lam, &signs);
                let s = wq * geo.area;
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += s * (wv[i][0] * wv[j][0] + wv[i][1] * wv[j][1]);
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    t.push((self.layout.edge_dof(ce[i] as usize), self.layout.edge_dof(ce[j] as usize), m[i][j]));
                }
            }
        }
        let n = self.layout.n_b();
        CsrMatrix::from_triplets(n, n, &t)
    }

    /// Mass matrix of the P1 space on vertex DoFs.
    pub fn p1_mass(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(9 * self.mesh.n_cells());
        for c in 0..self.mesh.n_cells() {
            let area = self.mesh.signed_area(c);
            let cv = self.mesh.cell(c);
            for i in 0..3 {
                for j in 0..3 {
                    let m = if i == j { area / 6.0 } else { area / 12.0 };
                    t.push((self.layout.vertex_dof(cv[i] as usize), self.layout.vertex_dof(cv[j] as usize), m));
                }
            }
        }
        let n = self.layout.n_p();
        CsrMatrix::from_triplets(n, n, &t)
    }

    /// Element residual and (optionally) element Jacobian in local DoF order.
    fn element(
        &self,
        c: usize,
        x: &[f64; LOCAL_DOFS],
        phys: &Physics,
        w: TermWeights,
        want_matrix: bool,
    ) -> ([f64; LOCAL_DOFS], [[f64; LOCAL_DOFS]; LOCAL_DOFS]) {
        let geo = CellGeometry::new(self.mesh.cell_coords(c));
        let signs = self.layout.edge_signs(&self.mesh, c);
        let gl = geo.grad_lambda;
        let (th, mu, ka) = (w.spatial, w.mass, w.constraint);
        let (ire, irem) = (1.0 / phys.re, 1.0 / phys.rem);
        let mut re = [0.0; LOCAL_DOFS];
        let mut ke = [[0.0; LOCAL_DOFS]; LOCAL_DOFS];
        let (_, cw) = nedelec(&geo, &[1.0 / 3.0; 3], &signs);
        let pc = [x[LP], x[LP + 1], x[LP + 2]];
        let rc = [x[LR], x[LR + 1], x[LR + 2]];
        let grad_r = [
            rc[0] * gl[0][0] + rc[1] * gl[1][0] + rc[2] * gl[2][0],
            rc[0] * gl[0][1] + rc[1] * gl[1][1] + rc[2] * gl[2][1],
        ];
        let j: f64 = (0..3).map(|i| x[LB + i] * cw[i]).sum();
        for (lam, &wq) in self.rule.points.iter().zip(&self.rule.weights) {
            let s = wq * geo.area;
            let (n, dn) = p2(&geo, lam);
            let (wv, _) = nedelec(&geo, lam, &signs);
            let mut u = [0.0; 2];
            let mut gu = [[0.0; 2]; 2];
            for k in 0..6 {
                for comp in 0..2 {
                    let xv = x[2 * k + comp];
                    u[comp] += xv * n[k];
                    gu[comp][0] += xv * dn[k][0];
                    gu[comp][1] += xv * dn[k][1];
                }
            }
            let mut b = [0.0; 2];
            for i in 0..3 {
                b[0] += x[LB + i] * wv[i][0];
                b[1] += x[LB + i] * wv[i][1];
            }
            let p = pc[0] * lam[0] + pc[1] * lam[1] + pc[2] * lam[2];
            let div_u = gu[0][0] + gu[1][1];
            let (f, g) = match &phys.source {
                Some(src) => {
                    let xp = geo.point(lam);
                    (src.momentum(xp), src.faraday(xp))
                }
                None => ([0.0; 2], [0.0; 2]),
            };
            let lorentz = [j * b[1], -j * b[0]];
            let uxb = u[0] * b[1] - u[1] * b[0];
            let conv = [u[0] * gu[0][0] + u[1] * gu[0][1], u[0] * gu[1][0] + u[1] * gu[1][1]];

            for k in 0..6 {
                for comp in 0..2 {
                    let visc = ire
                        * (gu[comp][0] * dn[k][0]
                            + gu[comp][1] * dn[k][1]
                            + gu[0][comp] * dn[k][0]
                            + gu[1][comp] * dn[k][1]);
                    let val = th * (visc + (conv[comp] + lorentz[comp] - f[comp]) * n[k]) + mu * u[comp] * n[k]
                        - ka * p * dn[k][comp];
                    re[2 * k + comp] += s * val;
                }
            }
            for i in 0..3 {
                let val = th * ((irem * j - uxb) * cw[i] - (g[0] * wv[i][0] + g[1] * wv[i][1]))
                    + mu * (b[0] * wv[i][0] + b[1] * wv[i][1])
                    - ka * (grad_r[0] * wv[i][0] + grad_r[1] * wv[i][1]);
                re[LB + i] += s * val;
                re[LP + i] -= s * ka * lam[i] * div_u;
                re[LR + i] -= s * ka * (gl[i][0] * b[0] + gl[i][1] * b[1]);
            }

            if !want_matrix {
                continue;
            }
            let sth = s * th;
            // velocity rows
            for k in 0..6 {
                for m in 0..6 {
                    let gg = dn[m][0] * dn[k][0] + dn[m][1] * dn[k][1];
                    let adv = u[0] * dn[m][0] + u[1] * dn[m][1];
                    let diag = sth * (ire * gg + n[k] * adv) + s * mu * n[m] * n[k];
                    for cr in 0..2 {
                        for ec in 0..2 {
                            let mut v = sth * (ire * dn[m][cr] * dn[k][ec] + n[k] * n[m] * gu[cr][ec]);
                            if cr == ec {
                                v += diag;
                            }
                            ke[2 * k + cr][2 * m + ec] += v;
                        }
                    }
                }
                for i in 0..3 {
                    ke[2 * k][LB + i] += sth * n[k] * (cw[i] * b[1] + j * wv[i][1]);
                    ke[2 * k + 1][LB + i] -= sth * n[k] * (cw[i] * b[0] + j * wv[i][0]);
                    ke[2 * k][LP + i] -= s * ka * lam[i] * dn[k][0];
                    ke[2 * k + 1][LP + i] -= s * ka * lam[i] * dn[k][1];
                    ke[LP + i][2 * k] -= s * ka * lam[i] * dn[k][0];
                    ke[LP + i][2 * k + 1] -= s * ka * lam[i] * dn[k][1];
                }
            }
            // magnetic rows
            for i in 0..3 {
                for m in 0..6 {
                    ke[LB + i][2 * m] -= sth * n[m] * b[1] * cw[i];
                    ke[LB + i][2 * m + 1] += sth * n[m] * b[0] * cw[i];
                }
                for jj in 0..3 {
                    let uxw = u[0] * wv[jj][1] - u[1] * wv[jj][0];
                    ke[LB + i][LB + jj] += sth * (irem * cw[jj] * cw[i] - uxw * cw[i])
                        + s * mu * (wv[jj][0] * wv[i][0] + wv[jj][1] * wv[i][1]);
                    let gw = s * ka * (gl[jj][0] * wv[i][0] + gl[jj][1] * wv[i][1]);
                    ke[LB + i][LR + jj] -= gw;
                    ke[LR + jj][LB + i] -= gw;
                }
            }
        }
        (re, ke)
    }
}

fn gather(state: &[f64], dofs: &[usize; LOCAL_DOFS]) -> [f64; LOCAL_DOFS] {
    let mut x = [0.0; LOCAL_DOFS];
    for (xi, &d) in x.iter_mut().zip(dofs) {
        *xi = state[d];
    }
    x
}

fn scatter(a: &mut CsrMatrix, dofs: &[usize; LOCAL_DOFS], ke: &[[f64; LOCAL_DOFS]; LOCAL_DOFS]) {
    for i in 0..LOCAL_DOFS {
        let fi = local_field(i);
        let row = dofs[i];
        let start = a.row_ptr()[row];
        let (cols, _) = a.row(row);
        let mut pos = [usize::MAX; LOCAL_DOFS];
        for j in 0..LOCAL_DOFS {
            if COUPLES[fi][local_field(j)] {
                pos[j] = start + cols.binary_search(&(dofs[j] as u32)).expect("pattern covers cell couplings");
            }
        }
        let vals = a.values_mut();
        for j in 0..LOCAL_DOFS {
            if pos[j] != usize::MAX {
                vals[pos[j]] += ke[i][j];
            }
        }
    }
}

/// Pattern of all cell couplings between coupled fields, plus every diagonal entry.
fn sparsity_pattern(mesh: &Mesh, layout: &SpaceLayout) -> CsrMatrix {
    let n = layout.len();
    let mut rows: Vec<Vec<u32>> = (0..n).map(|i| vec![i as u32]).collect();
    for c in 0..mesh.n_cells() {
        let dofs = layout.cell_dofs(mesh, c);
        for i in 0..LOCAL_DOFS {
            let fi = local_field(i);
            for j in 0..LOCAL_DOFS {
                if COUPLES[fi][local_field(j)] {
                    rows[dofs[i]].push(dofs[j] as u32);
                }
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
        col_idx.extend_from_slice(r);
        row_ptr.push(col_idx.len());
    }
    let nnz = col_idx.len();
    CsrMatrix::from_raw(n, n, row_ptr, col_idx, vec![0.0; nnz]).expect("sorted pattern")
}

/// Residual `R(x)` of the steady system (no boundary conditions).
pub fn assemble_residual(disc: &Discretization, state: &[f64], phys: &Physics) -> Result<Vec<f64>> {
    disc.residual(state, phys, TermWeights::STEADY)
}

/// Steady Newton matrix at `state` with `rhs = -R(state)`.
pub fn assemble_jacobian(disc: &Discretization, state: &[f64], phys: &Physics) -> Result<BlockSystem> {
    disc.jacobian(state, phys, TermWeights::STEADY)
}

pub fn assemble_nedelec_mass(disc: &Discretization) -> CsrMatrix {
    disc.nedelec_mass()
}
