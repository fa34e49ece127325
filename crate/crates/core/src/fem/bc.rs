use alloc::vec;
use alloc::vec::Vec;

use super::assembly::BlockSystem;
use super::layout::{Field, SpaceLayout};
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Strongly imposed values: Dirichlet DoFs plus optional pinned constraint DoFs.
#[derive(Clone, Debug, PartialEq)]
pub struct BcSet {
    dirichlet: Vec<(usize, f64)>,
    pinned_pressure: Option<(usize, f64)>,
    pinned_multiplier: Option<(usize, f64)>,
    n: usize,
}

impl BcSet {
    /// `dirichlet` holds global DoF ids; pins hold vertex-DoF ids of the P1 spaces.
    pub fn new(
        layout: &SpaceLayout,
        mut dirichlet: Vec<(usize, f64)>,
        pinned_pressure: Option<(usize, f64)>,
        pinned_multiplier: Option<(usize, f64)>,
    ) -> Result<Self> {
        let n = layout.len();
        dirichlet.sort_by_key(|d| d.0);
        for w in dirichlet.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(alloc::format!("DoF {} constrained twice", w[0].0)));
            }
        }
        if let Some(&(d, _)) = dirichlet.last() {
            if d >= n {
                return Err(Error::InvalidIndex { what: "dof", index: d, len: n });
            }
        }
        let mut pins = [(pinned_pressure, Field::Pressure), (pinned_multiplier, Field::Multiplier)];
        for (pin, field) in pins.iter_mut() {
            if let Some((v, _)) = *pin {
                if v >= layout.n_p() {
                    return Err(Error::InvalidIndex { what: "vertex dof", index: v, len: layout.n_p() });
                }
                let g = layout.range(*field).start + v;
                if dirichlet.binary_search_by_key(&g, |d| d.0).is_ok() {
                    return Err(Error::InvalidParameter(alloc::format!("pinned DoF {g} is also Dirichlet")));
                }
            }
        }
        let mut out = BcSet { dirichlet, pinned_pressure: None, pinned_multiplier: None, n };
        out.pinned_pressure = pinned_pressure.map(|(v, x)| (layout.pressure_dof(v), x));
        out.pinned_multiplier = pinned_multiplier.map(|(v, x)| (layout.multiplier_dof(v), x));
        Ok(out)
    }

    pub fn dirichlet(&self) -> &[(usize, f64)] {
        &self.dirichlet
    }
    /// Global DoF and value of the pinned pressure.
    pub fn pinned_pressure(&self) -> Option<(usize, f64)> {
        self.pinned_pressure
    }
    pub fn pinned_multiplier(&self) -> Option<(usize, f64)> {
        self.pinned_multiplier
    }

    /// All constrained global DoFs with their values, sorted.
    pub fn constraints(&self) -> Vec<(usize, f64)> {
        let mut all = self.dirichlet.clone();
        all.extend(self.pinned_pressure);
        all.extend(self.pinned_multiplier);
        all.sort_by_key(|d| d.0);
        all
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for (d, _) in self.constraints() {
            m[d] = true;
        }
        m
    }

    /// Same DoFs with zero values (for Newton corrections).
    pub fn homogeneous(&self) -> BcSet {
        BcSet {
            dirichlet: self.dirichlet.iter().map(|&(d, _)| (d, 0.0)).collect(),
            pinned_pressure: self.pinned_pressure.map(|(d, _)| (d, 0.0)),
            pinned_multiplier: self.pinned_multiplier.map(|(d, _)| (d, 0.0)),
            n: self.n,
        }
    }

    /// Writes the prescribed values into `x`.
    pub fn lift(&self, x: &mut [f64]) {
        for (d, v) in self.constraints() {
            x[d] = v;
        }
    }

    pub fn zero_rows(&self, r: &mut [f64]) {
        for (d, _) in self.constraints() {
            r[d] = 0.0;
        }
    }

    /// Symmetric elimination: lifts the right-hand side, zeros constrained
    /// rows and columns and puts 1 on their diagonal. Idempotent.
    pub fn apply(&self, mut sys: BlockSystem) -> Result<BlockSystem> {
        if sys.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: sys.len() });
        }
        let cons = self.constraints();
        let mut mask = vec![false; self.n];
        let mut value = vec![0.0; self.n];
        for &(d, v) in &cons {
            mask[d] = true;
            value[d] = v;
        }
        let n = self.n;
        for i in 0..n {
            let row_constrained = mask[i];
            let (cols, vals) = sys.matrix.row_mut(i);
            let mut lift = 0.0;
            for (&c, v) in cols.iter().zip(vals.iter_mut()) {
                let c = c as usize;
                if row_constrained {
                    *v = if c == i { 1.0 } else { 0.0 };
                } else if mask[c] {
                    lift += *v * value[c];
                    *v = 0.0;
                }
            }
            if row_constrained {
                sys.rhs[i] = value[i];
            } else {
                sys.rhs[i] -= lift;
            }
        }
        let mut prev = sys.constrained().to_vec();
        for (p, m) in prev.iter_mut().zip(&mask) {
            *p |= *m;
        }
        sys.set_constrained(prev);
        sys.touch();
        Ok(sys)
    }
}

pub fn apply_bcs(system: BlockSystem, bc: &BcSet) -> Result<BlockSystem> {
    bc.apply(system)
}

/// Builds Dirichlet lists by evaluating fields on tagged boundary entities.
pub struct BoundaryData<'a> {
    pub mesh: &'a Mesh,
    pub layout: &'a SpaceLayout,
}

impl<'a> BoundaryData<'a> {
    pub fn new(mesh: &'a Mesh, layout: &'a SpaceLayout) -> Self {
        BoundaryData { mesh, layout }
    }

    fn vertices(&self, tags: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> =
            (0..self.mesh.n_vertices()).filter(|&v| self.mesh.vertex_tag(v).intersects(tags)).collect();
        v.sort_by_key(|&x| self.layout.vertex_dof(x));
        v.dedup_by_key(|x| self.layout.vertex_dof(*x));
        v
    }

    fn edges(&self, tags: BoundaryTag) -> Vec<usize> {
        let mut e: Vec<usize> = (0..self.mesh.n_edges()).filter(|&e| self.mesh.edge_tag(e).intersects(tags)).collect();
        e.sort_by_key(|&x| self.layout.edge_dof(x));
        e.dedup_by_key(|x| self.layout.edge_dof(*x));
        e
    }

    /// Both velocity components at P2 nodes on tagged vertices and edges.
    pub fn velocity(&self, tags: BoundaryTag, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for v in self.vertices(tags) {
            let val = f(self.mesh.vertex(v));
            let node = self.layout.vertex_dof(v);
            out.push((2 * node, val[0]));
            out.push((2 * node + 1, val[1]));
        }
        for e in self.edges(tags) {
            let [a, b] = self.mesh.edge(e);
            let (pa, pb) = (self.mesh.vertex(a as usize), self.mesh.vertex(b as usize));
            let val = f([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            let node = self.layout.n_vertex_dofs() + self.layout.edge_dof(e);
            out.push((2 * node, val[0]));
            out.push((2 * node + 1, val[1]));
        }
        out
    }

    /// Tangential moments `∫_e B·t ds` on tagged edges.
    pub fn magnetic_tangential(&self, tags: BoundaryTag, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<(usize, f64)> {
        self.edges(tags)
            .into_iter()
            .map(|e| (self.layout.magnetic_dof(self.layout.edge_dof(e)), edge_moment(self.layout, self.mesh, e, &f)))
            .collect()
    }

    /// Vertex values of a P1 field.
    pub fn vertex_field(&self, field: Field, tags: BoundaryTag, f: impl Fn([f64; 2]) -> f64) -> Vec<(usize, f64)> {
        let base = self.layout.range(field).start;
        self.vertices(tags).into_iter().map(|v| (base + self.layout.vertex_dof(v), f(self.mesh.vertex(v)))).collect()
    }
}

/// Tangential moment of `f` along edge `e` in its global orientation.
pub(crate) fn edge_moment(layout: &SpaceLayout, mesh: &Mesh, e: usize, f: &impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let (p, q) = layout.edge_direction(mesh, e);
    let t = [q[0] - p[0], q[1] - p[1]];
    let (xs, ws) = gauss_legendre(5);
    let mut m = 0.0;
    for (&s, &w) in xs.iter().zip(&ws) {
        let v = f([p[0] + s * t[0], p[1] + s * t[1]]);
        m += w * (v[0] * t[0] + v[1] * t[1]);
    }
    m
}
