use alloc::vec::Vec;

use super::Problem;
use crate::error::{Error, Result};
use crate::fem::{BcSet, BoundaryData, Discretization, ExactFields, Field, Physics};
use crate::mesh::{build_structured, BoundaryTag, Domain, Mesh, MeshFamily};

/// Closed-form Hartmann duct flow on `[-1/2, 1/2]²` with `B₀ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hartmann {
    pub re: f64,
    pub rem: f64,
    ha: f64,
    g: f64,
}

pub fn hartmann_exact(re: f64, rem: f64) -> Result<Hartmann> {
    Hartmann::new(re, rem)
}

impl Hartmann {
    pub const DOMAIN: Domain = Domain::square(-0.5, 0.5);

    pub fn new(re: f64, rem: f64) -> Result<Self> {
        if !(re > 0.0 && rem > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("Re = {re}, Re_m = {rem} must be positive")));
        }
        let ha = libm::sqrt(re * rem);
        let g = 2.0 * ha * libm::sinh(ha / 2.0) / (re * (libm::cosh(ha / 2.0) - 1.0));
        Ok(Hartmann { re, rem, ha, g })
    }

    pub fn ha(&self) -> f64 {
        self.ha
    }
    /// Pressure-gradient drive `G`.
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn u1(&self, y: f64) -> f64 {
        let h = self.ha;
        self.g * self.re / (2.0 * h * libm::tanh(h / 2.0)) * (1.0 - libm::cosh(y * h) / libm::cosh(h / 2.0))
    }

    pub fn b1(&self, y: f64) -> f64 {
        let h = self.ha;
        0.5 * self.g * (libm::sinh(y * h) / libm::sinh(h / 2.0) - 2.0 * y)
    }

    fn db1(&self, y: f64) -> f64 {
        let h = self.ha;
        0.5 * self.g * (h * libm::cosh(y * h) / libm::sinh(h / 2.0) - 2.0)
    }
}

impl ExactFields for Hartmann {
    fn u(&self, x: [f64; 2]) -> [f64; 2] {
        [self.u1(x[1]), 0.0]
    }
    fn b(&self, x: [f64; 2]) -> [f64; 2] {
        [self.b1(x[1]), 1.0]
    }
    fn p(&self, x: [f64; 2]) -> f64 {
        let b = self.b1(x[1]);
        -self.g * x[0] - 0.5 * b * b
    }
    fn curl_b(&self, x: [f64; 2]) -> f64 {
        -self.db1(x[1])
    }
}

/// Hartmann flow with Dirichlet `u`, tangential `B` and `r` on all sides and a pinned pressure.
#[derive(Clone, Copy, Debug)]
pub struct HartmannProblem {
    pub exact: Hartmann,
}

impl HartmannProblem {
    pub fn new(re: f64, rem: f64) -> Result<Self> {
        Ok(HartmannProblem { exact: Hartmann::new(re, rem)? })
    }

    pub fn family(n: usize) -> MeshFamily {
        MeshFamily::diagonal(n, n, Hartmann::DOMAIN)
    }
}

impl Problem for HartmannProblem {
    fn physics(&self) -> Physics {
        Physics::new(self.exact.re, self.exact.rem)
    }

    fn coarse_mesh(&self, family: &MeshFamily) -> Result<Mesh> {
        build_structured(family)
    }

    fn boundary(&self, disc: &Discretization, pin: usize) -> Result<BcSet> {
        let (mesh, layout) = (disc.mesh(), disc.layout());
        let all = BoundaryTag::LEFT.union(BoundaryTag::RIGHT).union(BoundaryTag::BOTTOM).union(BoundaryTag::TOP);
        let bd = BoundaryData::new(mesh, layout);
        let ex = &self.exact;
        let mut d: Vec<(usize, f64)> = bd.velocity(all, |x| ex.u(x));
        d.extend(bd.magnetic_tangential(all, |x| ex.b(x)));
        d.extend(bd.vertex_field(Field::Multiplier, all, |_| 0.0));
        let pv = layout.vertex_dof(pin);
        BcSet::new(layout, d, Some((pv, ex.p(mesh.vertex(pin)))), None)
    }
}
