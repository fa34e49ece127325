mod common;

use common::{diff_norm, norm, Rng};
use mhdmg_core::fem::{interpolate_fields, Discretization, ExactFields, TermWeights};
use mhdmg_core::linalg::{fgmres, FgmresOptions};
use mhdmg_core::mesh::{apply_periodic_x, build_structured, refine_uniform, Domain, MeshFamily};
use mhdmg_core::multigrid::{block_interpolation, restrict_state, MgConfig, MgHierarchy};
use mhdmg_core::problems::{pin_vertex, HartmannProblem, Problem};
use mhdmg_core::vanka::{factorize_patches, PatchKind, PatchSpec, VankaVariant};
use mhdmg_core::Error;

/// Quadratic velocity, rotational Nédélec field, linear scalars: all exactly
/// representable in the discrete spaces.
struct Poly;

impl ExactFields for Poly {
    fn u(&self, x: [f64; 2]) -> [f64; 2] {
        [x[0] * x[0] + 2.0 * x[0] * x[1] - x[1], 3.0 * x[1] * x[1] - x[0] + 1.0]
    }
    fn b(&self, x: [f64; 2]) -> [f64; 2] {
        [0.3 - 0.7 * x[1], -0.2 + 0.7 * x[0]]
    }
    fn p(&self, x: [f64; 2]) -> f64 {
        1.0 + 2.0 * x[0] - x[1]
    }
    fn r(&self, x: [f64; 2]) -> f64 {
        2.0 - 0.5 * x[0] + x[1]
    }
    fn curl_b(&self, _x: [f64; 2]) -> f64 {
        1.4
    }
}

struct Constant;

impl ExactFields for Constant {
    fn u(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.4, -1.1]
    }
    fn b(&self, _x: [f64; 2]) -> [f64; 2] {
        [-0.25, 0.9]
    }
    fn p(&self, _x: [f64; 2]) -> f64 {
        3.0
    }
    fn r(&self, _x: [f64; 2]) -> f64 {
        -1.0
    }
    fn curl_b(&self, _x: [f64; 2]) -> f64 {
        0.0
    }
}

fn pair(family: &MeshFamily, periodic: bool) -> (Discretization, Discretization) {
    let mut coarse = build_structured(family).unwrap();
    if periodic {
        coarse = apply_periodic_x(&coarse).unwrap();
    }
    let fine = refine_uniform(&coarse);
    (Discretization::new(coarse), Discretization::new(fine))
}

fn check_transfer(c: &Discretization, f: &Discretization, ex: &dyn ExactFields) {
    let (xc, xf) = (interpolate_fields(c, ex), interpolate_fields(f, ex));
    let p = block_interpolation(c, f, &vec![false; xc.len()], &vec![false; xf.len()]).unwrap();
    let mut y = vec![0.0; xf.len()];
    p.matvec(&xc, &mut y);
    assert!(diff_norm(&y, &xf) <= 1e-12 * norm(&xf), "prolongation {}", diff_norm(&y, &xf));
    let back = restrict_state(f, c, &xf).unwrap();
    assert!(diff_norm(&back, &xc) <= 1e-12 * norm(&xc), "restriction {}", diff_norm(&back, &xc));
}

#[test]
fn transfers_reproduce_discrete_fields() {
    let d = Domain::square(-0.5, 0.5);
    for family in [MeshFamily::diagonal(3, 3, d), MeshFamily::crossed(2, 2, d), MeshFamily::diagonal(2, 3, d)] {
        let (c, f) = pair(&family, false);
        check_transfer(&c, &f, &Poly);
        check_transfer(&c, &f, &Constant);
    }
    let (c, f) = pair(&MeshFamily::crossed(3, 3, Domain::square(-1.0, 1.0)), true);
    check_transfer(&c, &f, &Constant);
}

#[test]
fn masked_rows_and_columns_are_dropped() {
    let (c, f) = pair(&MeshFamily::diagonal(2, 2, Domain::square(0.0, 1.0)), false);
    let mut cm = vec![false; c.layout().len()];
    let mut fm = vec![false; f.layout().len()];
    cm[0] = true;
    fm[5] = true;
    let p = block_interpolation(&c, &f, &cm, &fm).unwrap();
    assert!(p.row(5).0.is_empty());
    let pt = p.transpose();
    assert!(pt.row(0).0.is_empty());
}

#[test]
fn non_nested_meshes_are_rejected() {
    let d = Domain::square(0.0, 1.0);
    let coarse = Discretization::new(build_structured(&MeshFamily::diagonal(2, 2, d)).unwrap());
    let direct = Discretization::new(build_structured(&MeshFamily::diagonal(4, 4, d)).unwrap());
    let other = Discretization::new(refine_uniform(&build_structured(&MeshFamily::diagonal(3, 3, d)).unwrap()));
    for fine in [&direct, &other] {
        let n = fine.layout().len();
        assert_eq!(restrict_state(fine, &coarse, &vec![0.0; n]).unwrap_err(), Error::NotNested);
        let masks = (vec![false; coarse.layout().len()], vec![false; n]);
        assert_eq!(block_interpolation(&coarse, fine, &masks.0, &masks.1).unwrap_err(), Error::NotNested);
    }
}

fn hartmann_hierarchy(n: usize, levels: usize, cfg: MgConfig) -> (MgHierarchy, Vec<f64>) {
    let prob = HartmannProblem::new(4.0, 4.0).unwrap();
    let family = HartmannProblem::family(n);
    let mut h = MgHierarchy::build(&prob, &family, levels, cfg).unwrap();
    let pin = pin_vertex(&prob, &prob.coarse_mesh(&family).unwrap());
    let bc = prob.boundary(h.finest(), pin).unwrap();
    let mut x = vec![0.0; h.finest().layout().len()];
    bc.lift(&mut x);
    h.update(&x, &prob.physics(), TermWeights::STEADY, None).unwrap();
    let mut b = Rng::new(5).vector(x.len());
    for (bi, &m) in b.iter_mut().zip(h.level(0).mask()) {
        if m {
            *bi = 0.0;
        }
    }
    (h, b)
}

#[test]
fn coarse_correction_needs_two_levels() {
    let prob = HartmannProblem::new(4.0, 4.0).unwrap();
    let family = HartmannProblem::family(4);
    assert!(MgHierarchy::build(&prob, &family, 1, MgConfig::new(VankaVariant::Coupled)).is_err());
    let relax = MgConfig { coarse_correction: false, ..MgConfig::new(VankaVariant::Coupled) };
    assert!(MgHierarchy::build(&prob, &family, 1, relax).is_ok());
}

#[test]
fn two_level_cycle_with_exact_smoother_solves() {
    // Richardson with ω = 1 and a single patch holding every free DoF
    let cfg = MgConfig { cheb: (1.0, 1.0), ..MgConfig::new(VankaVariant::Coupled) };
    let (mut h, b) = hartmann_hierarchy(2, 2, cfg);
    let sys = h.operator().unwrap().clone();
    let free: Vec<usize> = (0..sys.len()).filter(|&d| !sys.constrained()[d]).collect();
    let spec = PatchSpec { kind: PatchKind::Coupled, seed: 0, dofs: free, regularized: false };
    let set = factorize_patches(&sys, vec![spec], &h.finest().nedelec_mass(), 1.0).unwrap();
    h.set_patches(0, set).unwrap();
    let mut x = vec![0.0; b.len()];
    h.vcycle(&b, &mut x).unwrap();
    let mut r = vec![0.0; b.len()];
    sys.matrix.residual(&b, &x, &mut r);
    assert!(norm(&r) <= 1e-10 * norm(&b), "{}", norm(&r));
}

#[test]
fn cycle_from_zero_is_linear() {
    let (h, b) = hartmann_hierarchy(4, 2, MgConfig::new(VankaVariant::Purist));
    let b2 = Rng::new(6).vector(b.len());
    let b2: Vec<f64> = b2.iter().zip(h.level(0).mask()).map(|(v, &m)| if m { 0.0 } else { *v }).collect();
    let run = |rhs: &[f64]| {
        let mut x = vec![0.0; rhs.len()];
        h.vcycle(rhs, &mut x).unwrap();
        x
    };
    let (x1, x2) = (run(&b), run(&b2));
    let mix: Vec<f64> = b.iter().zip(&b2).map(|(a, c)| a - 2.0 * c).collect();
    let xm = run(&mix);
    let lin: Vec<f64> = x1.iter().zip(&x2).map(|(a, c)| a - 2.0 * c).collect();
    assert!(diff_norm(&xm, &lin) <= 1e-10 * norm(&lin));
}

#[test]
fn two_grid_iteration_contracts() {
    for variant in VankaVariant::ALL {
        let (h, b) = hartmann_hierarchy(8, 2, MgConfig::new(variant));
        let a = &h.operator().unwrap().matrix;
        let mut x = vec![0.0; b.len()];
        let mut r = b.clone();
        let r0 = norm(&r);
        for _ in 0..6 {
            let mut dx = vec![0.0; b.len()];
            h.vcycle(&r, &mut dx).unwrap();
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            a.residual(&b, &x, &mut r);
        }
        let rate = (norm(&r) / r0).powf(1.0 / 6.0);
        assert!(rate < 0.85, "{variant:?}: rate {rate}");
    }
}

#[test]
fn fgmres_with_vcycles_converges_quickly() {
    for variant in VankaVariant::ALL {
        let (h, b) = hartmann_hierarchy(4, 3, MgConfig::new(variant));
        let mut x = vec![0.0; b.len()];
        let opts = FgmresOptions { rtol: 1e-8, atol: 0.0, ..Default::default() };
        let res = fgmres(&h.operator().unwrap().matrix, &h, &b, &mut x, &opts).unwrap();
        assert!(res.converged && res.iterations <= 30, "{variant:?}: {} iterations", res.iterations);
    }
}

#[test]
fn relaxation_only_mode_skips_coarse_levels() {
    let cfg = MgConfig { coarse_correction: false, ..MgConfig::new(VankaVariant::Coupled) };
    let (h, _) = hartmann_hierarchy(4, 2, cfg);
    let info = h.level_info();
    assert!(info[0].patches > 0);
    assert_eq!(info[1].patches, 0);
    assert!(h.level(1).system().is_none());
}
