mod common;

use common::{diff_norm, norm, Rng};
use mhdmg_core::fem::{Discretization, TermWeights};
use mhdmg_core::linalg::{
    chebyshev_apply, dense_lu_factor, fgmres, sparse_lu, ChebyshevParams, CsrMatrix, FgmresOptions, Identity,
    Preconditioner, SparseLu,
};
use mhdmg_core::problems::{pin_vertex, HartmannProblem, Problem};

fn diag(d: &[f64]) -> CsrMatrix {
    CsrMatrix::from_triplets(d.len(), d.len(), &d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect::<Vec<_>>())
}

/// Minimal residual over the Krylov space of dimension k, by modified
/// Gram-Schmidt on normalized columns `A b, A² b, ...`.
fn gmres_oracle(a: &[f64], b: &[f64], k: usize) -> f64 {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut col = b.to_vec();
    for _ in 0..k {
        col = col.iter().zip(a).map(|(c, l)| c * l).collect();
        let s = norm(&col);
        col.iter_mut().for_each(|c| *c /= s);
        let mut v = col.clone();
        for _ in 0..2 {
            for qj in &q {
                let d: f64 = v.iter().zip(qj).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(qj).for_each(|(x, y)| *x -= d * y);
            }
        }
        let s = norm(&v);
        q.push(v.into_iter().map(|x| x / s).collect());
    }
    let mut r = b.to_vec();
    for qj in &q {
        let d: f64 = r.iter().zip(qj).map(|(x, y)| x * y).sum();
        r.iter_mut().zip(qj).for_each(|(x, y)| *x -= d * y);
    }
    norm(&r)
}

#[test]
fn fgmres_matches_minimal_residual_oracle() {
    let n = 100;
    let d: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let a = diag(&d);
    let b: Vec<f64> = Rng::new(3).vector(n);
    let mut x = vec![0.0; n];
    let opts = FgmresOptions { rtol: 1e-14, atol: 0.0, max_iterations: 8, restart: None };
    let res = fgmres(&a, &Identity, &b, &mut x, &opts).unwrap();
    assert_eq!(res.residual_history.len(), 9);
    for k in 0..=8 {
        let oracle = gmres_oracle(&d, &b, k);
        let got = res.residual_history[k];
        assert!((got - oracle).abs() <= 1e-8 * oracle, "k = {k}: {got} vs {oracle}");
    }
    // the estimate is the true residual
    let mut r = vec![0.0; n];
    a.residual(&b, &x, &mut r);
    assert!((norm(&r) - res.final_residual()).abs() <= 1e-10 * norm(&b));
    assert!(!res.converged);
}

#[test]
fn chebyshev_respects_minmax_bound() {
    let (lo, hi) = (1.0, 10.0);
    let n = 50;
    let d: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let a = diag(&d);
    let exact = Rng::new(5).vector(n);
    let mut b = vec![0.0; n];
    a.matvec(&exact, &mut b);
    let e0 = norm(&exact);
    let sigma = (hi + lo) / (hi - lo);
    for k in 1..=6 {
        let mut x = vec![0.0; n];
        chebyshev_apply(&a, &Identity, &ChebyshevParams::new(lo, hi, k).unwrap(), &b, &mut x).unwrap();
        let tk = (k as f64 * sigma.acosh()).cosh();
        let e = diff_norm(&x, &exact);
        assert!(e <= e0 / tk * (1.0 + 1e-10), "k = {k}: {e} > {}", e0 / tk);
    }
}

fn hartmann_jacobian() -> (CsrMatrix, Vec<f64>) {
    let prob = HartmannProblem::new(4.0, 4.0).unwrap();
    let mesh = prob.coarse_mesh(&HartmannProblem::family(6)).unwrap();
    let pin = pin_vertex(&prob, &mesh);
    let disc = Discretization::new(mesh);
    let bc = prob.boundary(&disc, pin).unwrap();
    let mut x = Rng::new(9).vector(disc.layout().len());
    bc.lift(&mut x);
    let sys = bc.apply(disc.jacobian(&x, &prob.physics(), TermWeights::STEADY).unwrap()).unwrap();
    let rhs = Rng::new(10).vector(sys.len());
    (sys.matrix, rhs)
}

#[test]
fn sparse_lu_agrees_with_dense_lu() {
    let (a, b) = hartmann_jacobian();
    let n = a.nrows();
    let dense = dense_lu_factor(n, a.to_dense()).unwrap();
    let xd = dense.solve(&b);
    let mut xs = vec![0.0; n];
    sparse_lu(&a).unwrap().solve(&b, &mut xs);
    assert!(diff_norm(&xs, &xd) <= 1e-9 * norm(&xd));
}

struct Exact(SparseLu);

impl Preconditioner for Exact {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        self.0.solve(r, z);
    }
}

#[test]
fn fgmres_with_exact_preconditioner_takes_one_iteration() {
    let (a, b) = hartmann_jacobian();
    let m = Exact(sparse_lu(&a).unwrap());
    let mut x = vec![0.0; a.nrows()];
    let opts = FgmresOptions { rtol: 1e-10, atol: 0.0, ..Default::default() };
    let res = fgmres(&a, &m, &b, &mut x, &opts).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations, 1);
    let mut r = vec![0.0; b.len()];
    a.residual(&b, &x, &mut r);
    assert!(norm(&r) <= 1e-9 * norm(&b));
}

#[test]
fn fgmres_rejects_mismatched_sizes() {
    let a = CsrMatrix::identity(4);
    let mut x = vec![0.0; 3];
    assert!(fgmres(&a, &Identity, &[1.0; 4], &mut x, &FgmresOptions::default()).is_err());
}
