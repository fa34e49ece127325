use alloc::vec;

use super::{LinearOperator, Preconditioner};
use crate::error::{Error, Result};

/// Eigenvalue interval `[a, b]` of the preconditioned operator and step count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevParams {
    pub a: f64,
    pub b: f64,
    pub steps: usize,
}

impl ChebyshevParams {
    pub fn new(a: f64, b: f64, steps: usize) -> Result<Self> {
        let p = ChebyshevParams { a, b, steps };
        p.validate()?;
        Ok(p)
    }

    /// `a == b` is accepted and gives Richardson iteration with `ω = 1/a`.
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.a <= self.b) || !self.b.is_finite() || self.steps == 0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "invalid Chebyshev interval [{}, {}] with {} steps",
                self.a,
                self.b,
                self.steps
            )));
        }
        Ok(())
    }
}

/// `k` steps of Chebyshev semi-iteration for `M⁻¹A` on `[a, b]`, updating `x` in place.
pub fn chebyshev_apply<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    m: &M,
    params: &ChebyshevParams,
    b: &[f64],
    x: &mut [f64],
) -> Result<()> {
    params.validate()?;
    let n = a.dim();
    let theta = 0.5 * (params.a + params.b);
    let delta = 0.5 * (params.b - params.a);
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    m.apply_inverse(&r, &mut z);
    let mut d: alloc::vec::Vec<f64> = z.iter().map(|t| t / theta).collect();
    let sigma = if delta > 0.0 { theta / delta } else { f64::INFINITY };
    let mut rho = 1.0 / sigma;
    let mut ad = vec![0.0; n];
    for k in 0..params.steps {
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        if k + 1 == params.steps {
            break;
        }
        a.apply(&d, &mut ad);
        for (ri, adi) in r.iter_mut().zip(&ad) {
            *ri -= adi;
        }
        m.apply_inverse(&r, &mut z);
        if delta > 0.0 {
            let rho_next = 1.0 / (2.0 * sigma - rho);
            let c1 = rho_next * rho;
            let c2 = 2.0 * rho_next / delta;
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = c1 * *di + c2 * zi;
            }
            rho = rho_next;
        } else {
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = zi / theta;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, Identity};
    use alloc::vec::Vec;

    fn diag(d: &[f64]) -> CsrMatrix {
        CsrMatrix::from_triplets(d.len(), d.len(), &d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect::<Vec<_>>())
    }

    #[test]
    fn one_step_is_weighted_richardson() {
        let a = diag(&[1.0, 3.0, 5.0]);
        let b = [1.0, 1.0, 1.0];
        let mut x = [0.5, 0.0, -1.0];
        let p = ChebyshevParams::new(2.0, 8.0, 1).unwrap();
        chebyshev_apply(&a, &Identity, &p, &b, &mut x).unwrap();
        let w = 2.0 / 10.0;
        let expect = [0.5 + w * (1.0 - 0.5), w, -1.0 + w * 6.0];
        for i in 0..3 {
            assert!((x[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_steps_match_closed_form() {
        // degree-2 residual polynomial on [2,8]: T2((5-t)/3)/T2(5/3)
        let a = diag(&[2.0, 4.5, 8.0, 1.0]);
        let b = [1.0, -2.0, 0.5, 3.0];
        let mut x = [0.0; 4];
        let p = ChebyshevParams::new(2.0, 8.0, 2).unwrap();
        chebyshev_apply(&a, &Identity, &p, &b, &mut x).unwrap();
        let t2 = |s: f64| 2.0 * s * s - 1.0;
        let lam = [2.0, 4.5, 8.0, 1.0];
        for i in 0..4 {
            let res = t2((5.0 - lam[i]) / 3.0) / t2(5.0 / 3.0);
            let expect = b[i] / lam[i] * (1.0 - res);
            assert!((x[i] - expect).abs() < 1e-14, "{i}: {} vs {}", x[i], expect);
        }
    }

    #[test]
    fn degenerate_interval_is_richardson() {
        let a = diag(&[1.0, 0.5]);
        let mut x = [0.0; 2];
        let p = ChebyshevParams::new(1.0, 1.0, 3).unwrap();
        chebyshev_apply(&a, &Identity, &p, &[1.0, 1.0], &mut x).unwrap();
        // e_{k+1} = (1 - λ) e_k
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] - 1.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_intervals() {
        assert!(ChebyshevParams::new(0.0, 1.0, 1).is_err());
        assert!(ChebyshevParams::new(2.0, 1.0, 1).is_err());
        assert!(ChebyshevParams::new(1.0, 2.0, 0).is_err());
    }
}
