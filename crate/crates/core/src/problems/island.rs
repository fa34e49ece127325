use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::Problem;
use crate::error::{Error, Result};
use crate::fem::{BcSet, BoundaryData, Discretization, ExactFields, Field, Physics, Source};
use crate::mesh::{apply_periodic_x, build_structured, BoundaryTag, Domain, Mesh, MeshFamily};

/// Current-sheet equilibrium with islands of width parameter `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IslandEquilibrium {
    pub k: f64,
}

impl IslandEquilibrium {
    fn denom(&self, x: [f64; 2]) -> f64 {
        libm::cosh(2.0 * PI * x[1]) + self.k * libm::cos(2.0 * PI * x[0])
    }

    fn shape(&self, x: [f64; 2]) -> [f64; 2] {
        [libm::sinh(2.0 * PI * x[1]), self.k * libm::sin(2.0 * PI * x[0])]
    }
}

impl ExactFields for IslandEquilibrium {
    fn u(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn b(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.denom(x);
        let s = self.shape(x);
        [s[0] / d, s[1] / d]
    }
    fn p(&self, x: [f64; 2]) -> f64 {
        let d = self.denom(x);
        0.5 * (1.0 - self.k * self.k) * (1.0 + 1.0 / (d * d))
    }
    fn curl_b(&self, x: [f64; 2]) -> f64 {
        let d = self.denom(x);
        2.0 * PI * (self.k * self.k - 1.0) / (d * d)
    }
}

/// Faraday forcing that makes the equilibrium steady.
#[derive(Clone, Copy, Debug)]
pub struct IslandSource {
    pub eq: IslandEquilibrium,
    pub rem: f64,
}

impl Source for IslandSource {
    fn faraday(&self, x: [f64; 2]) -> [f64; 2] {
        let k = self.eq.k;
        let d = self.eq.denom(x);
        let c = -8.0 * PI * PI * (k * k - 1.0) / (self.rem * d * d * d);
        let s = self.eq.shape(x);
        [c * s[0], c * s[1]]
    }
}

/// Island coalescence on `[-1, 1]²`, periodic in x, with walls at `y = ±1`.
#[derive(Clone, Copy, Debug)]
pub struct IslandProblem {
    pub eq: IslandEquilibrium,
    pub epsilon: f64,
    pub re: f64,
    pub rem: f64,
}

impl IslandProblem {
    pub const DOMAIN: Domain = Domain::square(-1.0, 1.0);

    pub fn new(re: f64, rem: f64, epsilon: f64) -> Result<Self> {
        if !(re > 0.0 && rem > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("Re = {re}, Re_m = {rem} must be positive")));
        }
        Ok(IslandProblem { eq: IslandEquilibrium { k: 0.2 }, epsilon, re, rem })
    }

    pub fn family(n: usize) -> MeshFamily {
        MeshFamily::crossed(n, n, Self::DOMAIN)
    }

    /// Magnetic perturbation `δB`.
    pub fn perturbation(&self, x: [f64; 2]) -> [f64; 2] {
        let e = self.epsilon / PI;
        [
            -e * libm::cos(PI * x[0]) * libm::sin(0.5 * PI * x[1]),
            0.5 * e * libm::cos(0.5 * PI * x[1]) * libm::sin(PI * x[0]),
        ]
    }

    /// Initial fields: the equilibrium with `δB` added.
    pub fn initial(&self) -> InitialCondition {
        InitialCondition { problem: *self }
    }
}

/// Equilibrium plus perturbation, as closed-form fields.
#[derive(Clone, Copy, Debug)]
pub struct InitialCondition {
    problem: IslandProblem,
}

impl ExactFields for InitialCondition {
    fn u(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn b(&self, x: [f64; 2]) -> [f64; 2] {
        let b = self.problem.eq.b(x);
        let d = self.problem.perturbation(x);
        [b[0] + d[0], b[1] + d[1]]
    }
    fn p(&self, x: [f64; 2]) -> f64 {
        self.problem.eq.p(x)
    }
    fn curl_b(&self, x: [f64; 2]) -> f64 {
        self.problem.eq.curl_b(x) + self.problem.epsilon * libm::cos(PI * x[0]) * libm::cos(0.5 * PI * x[1])
    }
}

impl Problem for IslandProblem {
    fn physics(&self) -> Physics {
        Physics::new(self.re, self.rem).with_source(Arc::new(IslandSource { eq: self.eq, rem: self.rem }))
    }

    fn coarse_mesh(&self, family: &MeshFamily) -> Result<Mesh> {
        apply_periodic_x(&build_structured(family)?)
    }

    fn boundary(&self, disc: &Discretization, pin: usize) -> Result<BcSet> {
        let (mesh, layout) = (disc.mesh(), disc.layout());
        let walls = BoundaryTag::BOTTOM.union(BoundaryTag::TOP);
        let bd = BoundaryData::new(mesh, layout);
        let ic = self.initial();
        let mut d: Vec<(usize, f64)> = bd.velocity(walls, |_| [0.0, 0.0]);
        d.extend(bd.magnetic_tangential(walls, |x| ic.b(x)));
        d.extend(bd.vertex_field(Field::Multiplier, walls, |_| 0.0));
        let pv = layout.vertex_dof(pin);
        BcSet::new(layout, d, Some((pv, self.eq.p(mesh.vertex(pin)))), None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_solenoidal() {
        let eq = IslandEquilibrium { k: 0.2 };
        let h = 1e-5;
        for &x in &[[0.1, 0.2], [-0.7, 0.9], [0.45, -0.33]] {
            let dbx = (eq.b([x[0] + h, x[1]])[0] - eq.b([x[0] - h, x[1]])[0]) / (2.0 * h);
            let dby = (eq.b([x[0], x[1] + h])[1] - eq.b([x[0], x[1] - h])[1]) / (2.0 * h);
            assert!((dbx + dby).abs() < 1e-8);
        }
    }

    #[test]
    fn curl_at_origin() {
        let eq = IslandEquilibrium { k: 0.2 };
        assert!((eq.curl_b([0.0, 0.0]) + 4.0 * PI / 3.0).abs() < 1e-14);
        let h = 1e-5;
        let x = [0.3, -0.2];
        let fd = (eq.b([x[0] + h, x[1]])[1] - eq.b([x[0] - h, x[1]])[1]) / (2.0 * h)
            - (eq.b([x[0], x[1] + h])[0] - eq.b([x[0], x[1] - h])[0]) / (2.0 * h);
        assert!((fd - eq.curl_b(x)).abs() < 1e-7);
    }

    #[test]
    fn perturbation_curl() {
        let p = IslandProblem::new(1.0, 1.0, -0.01).unwrap();
        let ic = p.initial();
        let h = 1e-5;
        let x = [0.3, -0.2];
        let fd = (ic.b([x[0] + h, x[1]])[1] - ic.b([x[0] - h, x[1]])[1]) / (2.0 * h)
            - (ic.b([x[0], x[1] + h])[0] - ic.b([x[0], x[1] - h])[0]) / (2.0 * h);
        assert!((fd - ic.curl_b(x)).abs() < 1e-7);
    }
}
