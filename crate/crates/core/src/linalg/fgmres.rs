use alloc::vec;
use alloc::vec::Vec;

use super::{axpy, dot, norm2, LinearOperator, Preconditioner};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FgmresOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_iterations: usize,
    /// Krylov dimension before restart; `None` never restarts.
    pub restart: Option<usize>,
}

impl Default for FgmresOptions {
    fn default() -> Self {
        FgmresOptions { rtol: 1e-6, atol: 1e-6, max_iterations: 200, restart: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovResult {
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm estimate after each iteration, starting with the initial residual.
    pub residual_history: Vec<f64>,
}

impl KrylovResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Right-preconditioned flexible GMRES. `x` holds the initial guess on entry.
///
/// Stops when the residual norm drops below `max(rtol·‖r₀‖, atol)`. A lucky
/// breakdown (exact solution in the Krylov space) is a success; a zero
/// Arnoldi norm while the residual is still large is [`Error::Breakdown`].
pub fn fgmres<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    m: &M,
    b: &[f64],
    x: &mut [f64],
    opts: &FgmresOptions,
) -> Result<KrylovResult> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len().min(x.len()) });
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut beta = norm2(&r);
    let target = (opts.rtol * beta).max(opts.atol);
    let mut history = vec![beta];
    if beta <= target {
        return Ok(KrylovResult { iterations: 0, converged: true, residual_history: history });
    }
    let restart = opts.restart.unwrap_or(opts.max_iterations).max(1);
    let mut its = 0;
    while its < opts.max_iterations {
        let mdim = restart.min(opts.max_iterations - its);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(mdim + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(mdim);
        let mut h = vec![vec![0.0; mdim]; mdim + 1];
        let (mut cs, mut sn) = (vec![0.0; mdim], vec![0.0; mdim]);
        let mut g = vec![0.0; mdim + 1];
        g[0] = beta;
        v.push(r.iter().map(|t| t / beta).collect());
        let mut k = 0;
        let mut done = false;
        while k < mdim {
            let mut zk = vec![0.0; n];
            m.apply_inverse(&v[k], &mut zk);
            let mut w = vec![0.0; n];
            a.apply(&zk, &mut w);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                axpy(-hik, vi, &mut w);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = libm::hypot(h[k][k], h[k + 1][k]);
            if denom == 0.0 {
                its += 1;
                return Err(Error::Breakdown { iteration: its, residual: g[k].abs() });
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            its += 1;
            k += 1;
            let res = g[k].abs();
            history.push(res);
            if res <= target {
                done = true;
                break;
            }
            if hn == 0.0 {
                // invariant subspace found but residual still above target
                update(x, &h, &g, &z, k);
                return Err(Error::Breakdown { iteration: its, residual: res });
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        update(x, &h, &g, &z, k);
        if done {
            return Ok(KrylovResult { iterations: its, converged: true, residual_history: history });
        }
        a.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        beta = norm2(&r);
        if beta <= target {
            return Ok(KrylovResult { iterations: its, converged: true, residual_history: history });
        }
    }
    Ok(KrylovResult { iterations: its, converged: false, residual_history: history })
}

fn update(x: &mut [f64], h: &[Vec<f64>], g: &[f64], z: &[Vec<f64>], k: usize) {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[i][j] * y[j];
        }
        y[i] = s / h[i][i];
    }
    for (yi, zi) in y.iter().zip(z) {
        axpy(*yi, zi, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, Identity};

    #[test]
    fn identity_converges_in_one() {
        let a = CsrMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let mut x = vec![0.0; 7];
        let opts = FgmresOptions { rtol: 1e-12, atol: 0.0, ..Default::default() };
        let res = fgmres(&a, &Identity, &b, &mut x, &opts).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let a = CsrMatrix::identity(3);
        let mut x = vec![0.0; 3];
        let res = fgmres(&a, &Identity, &[0.0; 3], &mut x, &FgmresOptions::default()).unwrap();
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn restarted_still_converges() {
        let n = 30;
        let diag: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let a = CsrMatrix::from_triplets(n, n, &diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect::<Vec<_>>());
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let opts = FgmresOptions { rtol: 1e-10, atol: 0.0, max_iterations: 500, restart: Some(5) };
        let res = fgmres(&a, &Identity, &b, &mut x, &opts).unwrap();
        assert!(res.converged);
        for i in 0..n {
            assert!((x[i] - 1.0 / diag[i]).abs() < 1e-8);
        }
    }
}
