//! Geometric hierarchy, grid transfers and the V-cycle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::basis::{nedelec, p2, CellGeometry};
use crate::fem::{BcSet, BlockSystem, Discretization, Physics, SpaceKind, TermWeights};
use crate::linalg::{sparse_lu, ChebyshevParams, CsrMatrix, Preconditioner, SparseLu};
use crate::mesh::{refine_uniform, EdgeOrigin, Lineage, Mesh, MeshFamily, VertexOrigin};
use crate::problems::{pin_vertex, Problem};
use crate::vanka::{build_patches, factorize_patches, smooth, PatchSet, VankaVariant};

/// Smoother and cycle settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgConfig {
    pub variant: VankaVariant,
    pub pre: usize,
    pub post: usize,
    /// Chebyshev interval `[a, b]` for the Vanka-preconditioned operator.
    pub cheb: (f64, f64),
    /// Scale of the Nédélec mass added to regularized patches.
    pub gamma: f64,
    /// When false the cycle only smooths on the finest level.
    pub coarse_correction: bool,
}

impl MgConfig {
    pub fn new(variant: VankaVariant) -> Self {
        MgConfig { variant, pre: 2, post: 2, cheb: default_interval(variant), gamma: 1.0, coarse_correction: true }
    }

    fn params(&self, steps: usize) -> Result<ChebyshevParams> {
        ChebyshevParams::new(self.cheb.0, self.cheb.1, steps)
    }
}

/// Hand-tuned Chebyshev intervals for the Hartmann runs.
pub fn default_interval(variant: VankaVariant) -> (f64, f64) {
    match variant {
        VankaVariant::Segregated => (1.5, 8.0),
        VankaVariant::Purist => (1.5, 16.0),
        VankaVariant::Coupled => (2.0, 8.0),
    }
}

fn lineage<'a>(coarse: &Mesh, fine: &'a Mesh) -> Result<&'a Lineage> {
    let lin = fine.lineage().ok_or(Error::NotNested)?;
    if fine.n_cells() != 4 * coarse.n_cells()
        || lin.cell_parent.len() != fine.n_cells()
        || fine.n_vertices() != coarse.n_vertices() + coarse.n_edges()
    {
        return Err(Error::NotNested);
    }
    let tol = 1e-12 * (1.0 + coarse.domain().area());
    for v in 0..coarse.n_vertices() {
        let (a, b) = (coarse.vertex(v), fine.vertex(v));
        if (a[0] - b[0]).abs() > tol || (a[1] - b[1]).abs() > tol {
            return Err(Error::NotNested);
        }
    }
    Ok(lin)
}

fn midpoint(m: &Mesh, e: usize) -> [f64; 2] {
    let [a, b] = m.edge(e);
    let (pa, pb) = (m.vertex(a as usize), m.vertex(b as usize));
    [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
}

/// Coarse cell containing fine edge `e`.
fn parent_cell(fine: &Mesh, lin: &Lineage, e: usize) -> usize {
    lin.cell_parent[fine.edge_cells(e)[0] as usize] as usize
}

/// Space-local interpolation from `coarse` to `fine` for one space. The P2
/// matrix acts on interleaved vector coefficients.
pub fn build_interpolation(coarse: &Discretization, fine: &Discretization, space: SpaceKind) -> Result<CsrMatrix> {
    let mut t = Vec::new();
    interpolation_triplets(coarse, fine, space, &mut t)?;
    let (lc, lf) = (coarse.layout(), fine.layout());
    let (nr, nc) = match space {
        SpaceKind::P1 => (lf.n_p(), lc.n_p()),
        SpaceKind::P2 => (lf.n_u(), lc.n_u()),
        SpaceKind::Nedelec => (lf.n_b(), lc.n_b()),
    };
    Ok(CsrMatrix::from_triplets(nr, nc, &t))
}

fn interpolation_triplets(
    coarse: &Discretization,
    fine: &Discretization,
    space: SpaceKind,
    t: &mut Vec<(usize, usize, f64)>,
) -> Result<()> {
    let (mc, mf) = (coarse.mesh(), fine.mesh());
    let (lc, lf) = (coarse.layout(), fine.layout());
    let lin = lineage(mc, mf)?;
    let tiny = 1e-14;
    match space {
        SpaceKind::P1 => {
            for v in (0..mf.n_vertices()).filter(|&v| mf.master_vertex(v) == v) {
                let row = lf.vertex_dof(v);
                match lin.vertex_origin[v] {
                    VertexOrigin::Vertex(c) => t.push((row, lc.vertex_dof(c as usize), 1.0)),
                    VertexOrigin::EdgeMidpoint(e) => {
                        for w in mc.edge(e as usize) {
                            t.push((row, lc.vertex_dof(w as usize), 0.5));
                        }
                    }
                }
            }
        }
        SpaceKind::P2 => {
            let nvc = lc.n_vertex_dofs();
            let mut push = |node: usize, cnode: usize, val: f64| {
                t.push((2 * node, 2 * cnode, val));
                t.push((2 * node + 1, 2 * cnode + 1, val));
            };
            for v in (0..mf.n_vertices()).filter(|&v| mf.master_vertex(v) == v) {
                let node = lf.vertex_dof(v);
                match lin.vertex_origin[v] {
                    VertexOrigin::Vertex(c) => push(node, lc.vertex_dof(c as usize), 1.0),
                    VertexOrigin::EdgeMidpoint(e) => push(node, nvc + lc.edge_dof(e as usize), 1.0),
                }
            }
            let nvf = lf.n_vertex_dofs();
            for e in (0..mf.n_edges()).filter(|&e| mf.master_edge(e) == e) {
                let node = nvf + lf.edge_dof(e);
                let pc = parent_cell(mf, lin, e);
                let geo = CellGeometry::new(mc.cell_coords(pc));
                let (vals, _) = p2(&geo, &geo.barycentric(midpoint(mf, e)));
                for (k, &cn) in lc.p2_nodes(mc, pc).iter().enumerate() {
                    if vals[k].abs() > tiny {
                        push(node, cn, vals[k]);
                    }
                }
            }
        }
        SpaceKind::Nedelec => {
            for e in (0..mf.n_edges()).filter(|&e| mf.master_edge(e) == e) {
                let row = lf.edge_dof(e);
                let (p, q) = lf.edge_direction(mf, e);
                let tang = [q[0] - p[0], q[1] - p[1]];
                let pc = parent_cell(mf, lin, e);
                let geo = CellGeometry::new(mc.cell_coords(pc));
                let signs = lc.edge_signs(mc, pc);
                // W·t is affine along a straight edge, so the midpoint rule is exact
                let (w, _) = nedelec(&geo, &geo.barycentric(midpoint(mf, e)), &signs);
                for (i, &ce) in mc.cell_edges(pc).iter().enumerate() {
                    let val = w[i][0] * tang[0] + w[i][1] * tang[1];
                    if val.abs() > tiny {
                        t.push((row, lc.edge_dof(ce as usize), val));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Block-diagonal interpolation of the full `(u, B, p, r)` vector with
/// constrained fine rows and constrained coarse columns removed.
pub fn block_interpolation(
    coarse: &Discretization,
    fine: &Discretization,
    coarse_mask: &[bool],
    fine_mask: &[bool],
) -> Result<CsrMatrix> {
    let (oc, of) = (coarse.layout().offsets(), fine.layout().offsets());
    let mut all = Vec::new();
    for (k, space) in [SpaceKind::P2, SpaceKind::Nedelec, SpaceKind::P1, SpaceKind::P1].into_iter().enumerate() {
        let mut t = Vec::new();
        interpolation_triplets(coarse, fine, space, &mut t)?;
        all.extend(t.into_iter().map(|(i, j, v)| (i + of[k], j + oc[k], v)));
    }
    all.retain(|&(i, j, _)| !fine_mask[i] && !coarse_mask[j]);
    Ok(CsrMatrix::from_triplets(of[4], oc[4], &all))
}

/// Transfers a fine state to the coarse spaces by FE interpolation: nodal
/// values for P1/P2 and summed half-edge moments for the Nédélec space.
pub fn restrict_state(fine: &Discretization, coarse: &Discretization, state: &[f64]) -> Result<Vec<f64>> {
    let (mc, mf) = (coarse.mesh(), fine.mesh());
    let (lc, lf) = (coarse.layout(), fine.layout());
    let lin = lineage(mc, mf)?;
    if state.len() != lf.len() {
        return Err(Error::DimensionMismatch { expected: lf.len(), found: state.len() });
    }
    let mut out = vec![0.0; lc.len()];
    let nvc = mc.n_vertices();
    let (nvdc, nvdf) = (lc.n_vertex_dofs(), lf.n_vertex_dofs());
    for v in (0..nvc).filter(|&v| mc.master_vertex(v) == v) {
        let (cd, fd) = (lc.vertex_dof(v), lf.vertex_dof(v));
        for c in 0..2 {
            out[2 * cd + c] = state[2 * fd + c];
        }
        out[lc.pressure_dof(cd)] = state[lf.pressure_dof(fd)];
        out[lc.multiplier_dof(cd)] = state[lf.multiplier_dof(fd)];
    }
    let mut halves = vec![Vec::with_capacity(2); mc.n_edges()];
    for (ef, o) in lin.edge_origin.iter().enumerate() {
        if let EdgeOrigin::HalfOf(ec) = *o {
            halves[ec as usize].push(ef);
        }
    }
    for ec in (0..mc.n_edges()).filter(|&e| mc.master_edge(e) == e) {
        let cnode = nvdc + lc.edge_dof(ec);
        let fnode = lf.vertex_dof(nvc + ec);
        debug_assert!(fnode < nvdf);
        for c in 0..2 {
            out[2 * cnode + c] = state[2 * fnode + c];
        }
        let (p, q) = lc.edge_direction(mc, ec);
        let dir = [q[0] - p[0], q[1] - p[1]];
        let mut m = 0.0;
        for &ef in &halves[ec] {
            let (fp, fq) = lf.edge_direction(mf, ef);
            let s = (fq[0] - fp[0]) * dir[0] + (fq[1] - fp[1]) * dir[1];
            let val = state[lf.magnetic_dof(lf.edge_dof(ef))];
            m += if s > 0.0 { val } else { -val };
        }
        out[lc.magnetic_dof(lc.edge_dof(ec))] = m;
    }
    Ok(out)
}

pub struct MgLevel {
    pub disc: Discretization,
    /// Homogeneous constraints of the correction equation on this level.
    pub bc: BcSet,
    mask: Vec<bool>,
    /// Interpolation from this level to the next finer one.
    interp: Option<CsrMatrix>,
    mass_n: CsrMatrix,
    system: Option<BlockSystem>,
    patches: Option<PatchSet>,
}

impl MgLevel {
    pub fn interp(&self) -> Option<&CsrMatrix> {
        self.interp.as_ref()
    }
    pub fn system(&self) -> Option<&BlockSystem> {
        self.system.as_ref()
    }
    pub fn patches(&self) -> Option<&PatchSet> {
        self.patches.as_ref()
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Per-level sizes for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelInfo {
    pub cells: usize,
    pub dofs: usize,
    pub patches: usize,
}

/// Levels ordered finest first.
pub struct MgHierarchy {
    levels: Vec<MgLevel>,
    coarse_lu: Option<SparseLu>,
    cfg: MgConfig,
}

impl MgHierarchy {
    /// `levels` are finest first; each must be the uniform refinement of the next.
    pub fn new(levels: Vec<(Discretization, BcSet)>, cfg: MgConfig) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("hierarchy needs at least one level".into()));
        }
        if cfg.coarse_correction && levels.len() < 2 {
            return Err(Error::InvalidParameter("a coarse-grid correction needs at least two levels".into()));
        }
        cfg.params(cfg.pre.max(1))?;
        let mut out: Vec<MgLevel> = levels
            .into_iter()
            .map(|(disc, bc)| {
                let bc = bc.homogeneous();
                let mass_n = disc.nedelec_mass();
                MgLevel { mask: bc.mask(), disc, bc, interp: None, mass_n, system: None, patches: None }
            })
            .collect();
        for l in 1..out.len() {
            let p = block_interpolation(&out[l].disc, &out[l - 1].disc, &out[l].mask, &out[l - 1].mask)?;
            out[l].interp = Some(p);
        }
        Ok(MgHierarchy { levels: out, coarse_lu: None, cfg })
    }

    /// Refines `problem`'s coarsest mesh `n_levels − 1` times.
    pub fn build(problem: &dyn Problem, coarsest: &MeshFamily, n_levels: usize, cfg: MgConfig) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::InvalidParameter("need at least one level".into()));
        }
        let mut meshes = vec![problem.coarse_mesh(coarsest)?];
        let pin = pin_vertex(problem, &meshes[0]);
        for _ in 1..n_levels {
            let next = refine_uniform(meshes.last().expect("nonempty"));
            meshes.push(next);
        }
        let mut levels = Vec::with_capacity(n_levels);
        for m in meshes.into_iter().rev() {
            let disc = Discretization::new(m);
            let bc = problem.boundary(&disc, pin)?;
            levels.push((disc, bc));
        }
        MgHierarchy::new(levels, cfg)
    }

    pub fn config(&self) -> &MgConfig {
        &self.cfg
    }
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
    pub fn level(&self, i: usize) -> &MgLevel {
        &self.levels[i]
    }
    pub fn finest(&self) -> &Discretization {
        &self.levels[0].disc
    }

    /// Replaces the patches of one level (for experiments with custom smoothers).
    pub fn set_patches(&mut self, level: usize, patches: PatchSet) -> Result<()> {
        let lv = &self.levels[level];
        if let Some(s) = &lv.system {
            patches.check(s)?;
        }
        self.levels[level].patches = Some(patches);
        Ok(())
    }

    fn uses_coarse(&self) -> bool {
        self.cfg.coarse_correction && self.levels.len() >= 2
    }

    /// Relinearizes every level about `state` (given on the finest level).
    /// `finest` may supply the already assembled, constrained finest Jacobian.
    pub fn update(
        &mut self,
        state: &[f64],
        phys: &Physics,
        weights: TermWeights,
        finest: Option<BlockSystem>,
    ) -> Result<()> {
        let coarse = self.uses_coarse();
        let nl = if coarse { self.levels.len() } else { 1 };
        let mut x = state.to_vec();
        for l in 0..nl {
            if l > 0 {
                x = restrict_state(&self.levels[l - 1].disc, &self.levels[l].disc, &x)?;
            }
            let lv = &mut self.levels[l];
            let sys = match (l, &finest) {
                (0, Some(s)) => {
                    if s.len() != lv.disc.layout().len() {
                        return Err(Error::DimensionMismatch { expected: lv.disc.layout().len(), found: s.len() });
                    }
                    lv.bc.apply(s.clone())?
                }
                _ => lv.bc.apply(lv.disc.jacobian(&x, phys, weights)?)?,
            };
            lv.patches = None;
            if coarse && l + 1 == nl {
                self.coarse_lu = Some(sparse_lu(&sys.matrix)?);
            } else {
                let specs = build_patches(&sys, &lv.disc, self.cfg.variant)?;
                lv.patches = Some(factorize_patches(&sys, specs, &lv.mass_n, self.cfg.gamma)?);
            }
            lv.system = Some(sys);
        }
        Ok(())
    }

    pub fn level_info(&self) -> Vec<LevelInfo> {
        self.levels
            .iter()
            .map(|l| LevelInfo {
                cells: l.disc.mesh().n_cells(),
                dofs: l.disc.layout().len(),
                patches: l.patches.as_ref().map_or(0, |p| p.len()),
            })
            .collect()
    }

    /// The finest-level operator the cycle preconditions.
    pub fn operator(&self) -> Result<&BlockSystem> {
        self.levels[0].system.as_ref().ok_or_else(|| Error::InvalidParameter("hierarchy not linearized".into()))
    }

    /// One V-cycle for `A x = b` on the finest level, starting from `x`.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        let n = self.operator()?.len();
        if b.len() != n || x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len().min(x.len()) });
        }
        self.cycle(0, b, x)
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) -> Result<()> {
        let lv = &self.levels[l];
        let sys = lv.system.as_ref().ok_or_else(|| Error::InvalidParameter("hierarchy not linearized".into()))?;
        if self.uses_coarse() && l + 1 == self.levels.len() {
            let lu = self.coarse_lu.as_ref().expect("coarse factorization present after update");
            lu.solve(b, x);
            return Ok(());
        }
        let patches = lv.patches.as_ref().expect("patches present after update");
        if self.cfg.pre > 0 {
            smooth(sys, patches, &self.cfg.params(self.cfg.pre)?, b, x)?;
        }
        if self.uses_coarse() {
            let child = &self.levels[l + 1];
            let p = child.interp.as_ref().expect("interpolation on coarse levels");
            let mut r = vec![0.0; b.len()];
            sys.matrix.residual(b, x, &mut r);
            let mut rc = vec![0.0; p.ncols()];
            p.matvec_transpose_add(&r, &mut rc);
            let mut xc = vec![0.0; rc.len()];
            self.cycle(l + 1, &rc, &mut xc)?;
            p.matvec_add(&xc, x);
        }
        if self.cfg.post > 0 {
            smooth(sys, patches, &self.cfg.params(self.cfg.post)?, b, x)?;
        }
        Ok(())
    }
}

impl Preconditioner for MgHierarchy {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|t| *t = 0.0);
        self.cycle(0, r, z).expect("hierarchy linearized before use as a preconditioner");
    }
}
