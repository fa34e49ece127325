//! Vanka patches, their factorizations and the additive sweep.
//!
//! Every patch is seeded by a mesh vertex. The field DoFs of a patch are the
//! velocity and/or magnetic DoFs on the closure of the vertex star; the
//! constraint DoFs are the pressure and/or multiplier at the seed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{BlockSystem, Discretization, LB};
use crate::linalg::{chebyshev_apply, dense_lu_factor, ChebyshevParams, CsrMatrix, DenseLu, Preconditioner};

/// Which grouping of DoFs the smoother uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VankaVariant {
    Segregated,
    Purist,
    Coupled,
}

impl VankaVariant {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "segregated" => Ok(VankaVariant::Segregated),
            "purist" => Ok(VankaVariant::Purist),
            "coupled" => Ok(VankaVariant::Coupled),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown Vanka variant {name:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VankaVariant::Segregated => "segregated",
            VankaVariant::Purist => "purist",
            VankaVariant::Coupled => "coupled",
        }
    }

    pub const ALL: [VankaVariant; 3] = [VankaVariant::Segregated, VankaVariant::Purist, VankaVariant::Coupled];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatchKind {
    SegregatedFluid,
    SegregatedEm,
    PuristPressure,
    PuristMultiplier,
    Coupled,
}

/// DoFs of one patch, sorted ascending (so field DoFs precede constraint DoFs).
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSpec {
    pub kind: PatchKind,
    /// Master vertex id of the seed.
    pub seed: usize,
    pub dofs: Vec<usize>,
    /// The magnetic block gets `γ·M_N` added before factorization.
    pub regularized: bool,
}

impl PatchSpec {
    /// DoFs that are neither pressure nor multiplier.
    pub fn field_dofs(&self, disc: &Discretization) -> Vec<usize> {
        let end = disc.layout().offsets()[2];
        self.dofs.iter().copied().filter(|&d| d < end).collect()
    }

    pub fn constraint_dofs(&self, disc: &Discretization) -> Vec<usize> {
        let end = disc.layout().offsets()[2];
        self.dofs.iter().copied().filter(|&d| d >= end).collect()
    }
}

/// Star cells of every master vertex, merging periodic copies.
fn master_stars(disc: &Discretization) -> Vec<Vec<u32>> {
    let mesh = disc.mesh();
    let mut stars = vec![Vec::new(); mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        stars[mesh.master_vertex(v)].extend_from_slice(mesh.cells_of_vertex(v));
    }
    for s in stars.iter_mut() {
        s.sort_unstable();
        s.dedup();
    }
    stars
}

/// Topological patches for `variant`. Constrained DoFs are left out and a
/// seed whose constraint DoFs are all constrained produces no patch.
pub fn build_patches(system: &BlockSystem, disc: &Discretization, variant: VankaVariant) -> Result<Vec<PatchSpec>> {
    let (mesh, layout) = (disc.mesh(), disc.layout());
    if system.len() != layout.len() {
        return Err(Error::DimensionMismatch { expected: layout.len(), found: system.len() });
    }
    let fixed = system.constrained();
    let free = |d: usize| !fixed.get(d).copied().unwrap_or(false);
    let stars = master_stars(disc);
    let mut out = Vec::new();
    for v in 0..mesh.n_vertices() {
        if mesh.master_vertex(v) != v {
            continue;
        }
        let vd = layout.vertex_dof(v);
        let (pd, rd) = (layout.pressure_dof(vd), layout.multiplier_dof(vd));
        let (mut u, mut b) = (Vec::new(), Vec::new());
        for &c in &stars[v] {
            let dofs = layout.cell_dofs(mesh, c as usize);
            u.extend(dofs[..LB].iter().copied().filter(|&d| free(d)));
            b.extend(dofs[LB..LB + 3].iter().copied().filter(|&d| free(d)));
        }
        for s in [&mut u, &mut b] {
            s.sort_unstable();
            s.dedup();
        }
        let mut push = |kind: PatchKind, mut dofs: Vec<usize>, extra: &[usize], regularized: bool| -> Result<()> {
            if dofs.is_empty() {
                return Err(Error::InvalidMesh(alloc::format!("vertex {v} has no free field DoFs in its star")));
            }
            dofs.extend_from_slice(extra);
            out.push(PatchSpec { kind, seed: v, dofs, regularized });
            Ok(())
        };
        let field = || {
            let mut f = u.clone();
            f.extend_from_slice(&b);
            f
        };
        match variant {
            VankaVariant::Segregated => {
                if free(pd) {
                    push(PatchKind::SegregatedFluid, u.clone(), &[pd], false)?;
                }
                if free(rd) {
                    push(PatchKind::SegregatedEm, b.clone(), &[rd], false)?;
                }
            }
            VankaVariant::Purist => {
                if free(pd) {
                    push(PatchKind::PuristPressure, field(), &[pd], true)?;
                }
                if free(rd) {
                    push(PatchKind::PuristMultiplier, field(), &[rd], false)?;
                }
            }
            VankaVariant::Coupled => {
                let cons: Vec<usize> = [pd, rd].into_iter().filter(|&d| free(d)).collect();
                if !cons.is_empty() {
                    push(PatchKind::Coupled, field(), &cons, false)?;
                }
            }
        }
    }
    Ok(out)
}

/// Diagnostic construction: each free constraint row becomes a patch holding
/// the free columns of its stored sparsity. For pressure rows this picks
/// only velocity DoFs and for multiplier rows only magnetic DoFs.
pub fn build_patches_by_sparsity(system: &BlockSystem, disc: &Discretization) -> Vec<PatchSpec> {
    let layout = disc.layout();
    let fixed = system.constrained();
    let free = |d: usize| !fixed.get(d).copied().unwrap_or(false);
    let mut seed_of = vec![0usize; layout.n_p()];
    for v in 0..disc.mesh().n_vertices() {
        if disc.mesh().master_vertex(v) == v {
            seed_of[layout.vertex_dof(v)] = v;
        }
    }
    let mut out = Vec::new();
    let [_, _, p0, r0, end] = layout.offsets();
    for row in p0..end {
        if !free(row) {
            continue;
        }
        let (cols, _) = system.matrix.row(row);
        let dofs: Vec<usize> = cols.iter().map(|&c| c as usize).filter(|&c| free(c)).collect();
        let (kind, vd) = if row < r0 { (PatchKind::SegregatedFluid, row - p0) } else { (PatchKind::SegregatedEm, row - r0) };
        out.push(PatchSpec { kind, seed: seed_of[vd], dofs, regularized: false });
    }
    out.sort_by_key(|p| (p.seed, p.kind));
    out
}

/// Dense row-major restriction of the system matrix to `dofs`, optionally
/// with `gamma·M_N` added on the magnetic DoFs.
pub fn patch_matrix(
    system: &BlockSystem,
    dofs: &[usize],
    regularization: Option<(&CsrMatrix, f64)>,
) -> Vec<f64> {
    let mut marker = vec![u32::MAX; system.len()];
    gather_dense(system, dofs, regularization, &mut marker)
}

fn gather_dense(
    system: &BlockSystem,
    dofs: &[usize],
    regularization: Option<(&CsrMatrix, f64)>,
    marker: &mut [u32],
) -> Vec<f64> {
    let m = dofs.len();
    for (i, &d) in dofs.iter().enumerate() {
        marker[d] = i as u32;
    }
    let mut a = vec![0.0; m * m];
    for (i, &d) in dofs.iter().enumerate() {
        let (cols, vals) = system.matrix.row(d);
        for (&c, &v) in cols.iter().zip(vals) {
            let j = marker[c as usize];
            if j != u32::MAX {
                a[i * m + j as usize] += v;
            }
        }
    }
    if let Some((mass, gamma)) = regularization {
        let [_, b0, b1, _, _] = system.offsets();
        for (i, &d) in dofs.iter().enumerate() {
            if d < b0 || d >= b1 {
                continue;
            }
            let (cols, vals) = mass.row(d - b0);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = marker[b0 + c as usize];
                if j != u32::MAX {
                    a[i * m + j as usize] += gamma * v;
                }
            }
        }
    }
    for &d in dofs {
        marker[d] = u32::MAX;
    }
    a
}

#[derive(Clone, Debug)]
pub struct FactorizedPatch {
    pub spec: PatchSpec,
    lu: DenseLu,
}

/// Factorized patches tied to one revision of a system.
#[derive(Clone, Debug)]
pub struct PatchSet {
    patches: Vec<FactorizedPatch>,
    revision: u64,
    n: usize,
}

/// Factorizes every patch. Regularized patches use `D + γ·M_N`; a patch
/// that is still singular is a hard error naming its seed.
pub fn factorize_patches(
    system: &BlockSystem,
    patches: Vec<PatchSpec>,
    mass_n: &CsrMatrix,
    gamma: f64,
) -> Result<PatchSet> {
    let mut marker = vec![u32::MAX; system.len()];
    let mut out = Vec::with_capacity(patches.len());
    for spec in patches {
        if let Some(&d) = spec.dofs.iter().find(|&&d| d >= system.len()) {
            return Err(Error::InvalidIndex { what: "patch dof", index: d, len: system.len() });
        }
        let reg = if spec.regularized { Some((mass_n, gamma)) } else { None };
        let a = gather_dense(system, &spec.dofs, reg, &mut marker);
        let size = spec.dofs.len();
        let lu = dense_lu_factor(size, a).map_err(|e| match e {
            Error::Singular { rank, .. } => Error::SingularPatch { seed: spec.seed, rank, size },
            other => other,
        })?;
        out.push(FactorizedPatch { spec, lu });
    }
    Ok(PatchSet { patches: out, revision: system.revision(), n: system.len() })
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }
    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
    pub fn revision(&self) -> u64 {
        self.revision
    }
    pub fn patches(&self) -> &[FactorizedPatch] {
        &self.patches
    }

    /// Reorders the patches (the sweep result is independent of the order up to rounding).
    pub fn permute(&mut self, order: &[usize]) {
        let mut taken: Vec<Option<FactorizedPatch>> = self.patches.drain(..).map(Some).collect();
        self.patches = order.iter().map(|&i| taken[i].take().expect("order is a permutation")).collect();
    }

    pub fn check(&self, system: &BlockSystem) -> Result<()> {
        if system.revision() != self.revision {
            return Err(Error::StaleFactorization { expected: system.revision(), found: self.revision });
        }
        Ok(())
    }

    /// `z = Σ V_ℓ M_ℓℓ⁻¹ V_ℓᵀ r`.
    pub fn correction(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|t| *t = 0.0);
        let mut local = Vec::new();
        for p in &self.patches {
            local.clear();
            local.extend(p.spec.dofs.iter().map(|&d| r[d]));
            p.lu.solve_in_place(&mut local);
            for (&d, &v) in p.spec.dofs.iter().zip(&local) {
                z[d] += v;
            }
        }
    }

    /// Per-patch sizes for diagnostics.
    pub fn summary(&self) -> Vec<(PatchKind, usize, usize)> {
        self.patches.iter().map(|p| (p.spec.kind, p.spec.seed, p.spec.dofs.len())).collect()
    }
}

impl Preconditioner for PatchSet {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        self.correction(r, z);
    }
}

/// One additive sweep: `x ← x + Σ V M⁻¹ Vᵀ (b − A x)` with the residual formed once.
pub fn additive_sweep(system: &BlockSystem, patches: &PatchSet, b: &[f64], x: &mut [f64]) -> Result<()> {
    patches.check(system)?;
    if b.len() != patches.n || x.len() != patches.n {
        return Err(Error::DimensionMismatch { expected: patches.n, found: b.len().min(x.len()) });
    }
    let mut r = vec![0.0; b.len()];
    system.matrix.residual(b, x, &mut r);
    let mut z = vec![0.0; b.len()];
    patches.correction(&r, &mut z);
    for (xi, zi) in x.iter_mut().zip(&z) {
        *xi += zi;
    }
    Ok(())
}

/// Chebyshev-accelerated smoothing whose preconditioner is one additive sweep.
pub fn smooth(
    system: &BlockSystem,
    patches: &PatchSet,
    cheb: &ChebyshevParams,
    b: &[f64],
    x: &mut [f64],
) -> Result<()> {
    patches.check(system)?;
    if b.len() != patches.n || x.len() != patches.n {
        return Err(Error::DimensionMismatch { expected: patches.n, found: b.len().min(x.len()) });
    }
    chebyshev_apply(&system.matrix, patches, cheb, b, x)
}

/// One line of the patch diagnostic dump.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchDiagnostic {
    pub kind: PatchKind,
    pub seed: usize,
    pub n_dofs: usize,
    pub regularized: bool,
    /// Numerical rank of the (possibly regularized) patch matrix.
    pub rank: usize,
}

impl PatchDiagnostic {
    pub fn singular(&self) -> bool {
        self.rank < self.n_dofs
    }
}

pub fn patch_diagnostics(
    system: &BlockSystem,
    patches: &[PatchSpec],
    mass_n: &CsrMatrix,
    gamma: f64,
) -> Vec<PatchDiagnostic> {
    let mut marker = vec![u32::MAX; system.len()];
    patches
        .iter()
        .map(|p| {
            let reg = if p.regularized { Some((mass_n, gamma)) } else { None };
            let a = gather_dense(system, &p.dofs, reg, &mut marker);
            let n = p.dofs.len();
            let rank = match dense_lu_factor(n, a) {
                Ok(_) => n,
                Err(Error::Singular { rank, .. }) => rank,
                Err(_) => 0,
            };
            PatchDiagnostic { kind: p.kind, seed: p.seed, n_dofs: n, regularized: p.regularized, rank }
        })
        .collect()
}

/// Plain-text dump, one patch per line.
pub fn format_diagnostics(diag: &[PatchDiagnostic]) -> String {
    use core::fmt::Write;
    let mut s = String::from("kind,seed,n_dofs,regularized,rank,singular\n");
    for d in diag {
        let _ = writeln!(s, "{:?},{},{},{},{},{}", d.kind, d.seed, d.n_dofs, d.regularized, d.rank, d.singular());
    }
    s
}
