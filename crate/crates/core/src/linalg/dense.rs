use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major LU factorization with partial pivoting, `PA = LU`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

/// Factorizes the `n × n` row-major matrix `a`.
///
/// A pivot is treated as zero when it falls below `64·n·ε·max|a_ij|`. The
/// elimination continues past zero pivots so that the returned
/// [`Error::Singular`] carries a rank estimate.
pub fn dense_lu_factor(n: usize, mut a: Vec<f64>) -> Result<DenseLu> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 64.0 * n as f64 * f64::EPSILON * scale;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    let mut first_bad = None;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol || scale == 0.0 {
            first_bad.get_or_insert(k);
            continue;
        }
        rank += 1;
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let piv = a[k * n + k];
        for i in k + 1..n {
            let l = a[i * n + k] / piv;
            if l == 0.0 {
                continue;
            }
            a[i * n + k] = l;
            let (top, bottom) = a.split_at_mut(i * n);
            let rk = &top[k * n + k + 1..k * n + n];
            let ri = &mut bottom[k + 1..n];
            for (x, y) in ri.iter_mut().zip(rk) {
                *x -= l * y;
            }
        }
    }
    if let Some(k) = first_bad {
        return Err(Error::Singular { pivot: k, rank });
    }
    Ok(DenseLu { n, lu: a, perm })
}

impl DenseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, x)| l * x).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(u, x)| u * x).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn diagonal_two_by_two() {
        let lu = dense_lu_factor(2, vec![2.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(lu.solve(&[2.0, 3.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn needs_pivoting() {
        let lu = dense_lu_factor(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_reports_rank() {
        let a = vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0];
        match dense_lu_factor(3, a) {
            Err(Error::Singular { rank, .. }) => assert_eq!(rank, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(dense_lu_factor(2, vec![0.0; 4]), Err(Error::Singular { rank: 0, .. })));
    }

    #[test]
    fn random_backward_error() {
        let n = 50;
        let mut s = 12345u64;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a: Vec<f64> = (0..n * n).map(|_| rnd()).collect();
        for i in 0..n {
            a[i * n + i] += 4.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let x = dense_lu_factor(n, a.clone()).unwrap().solve(&b);
        let mut rn = 0.0;
        for i in 0..n {
            let r = b[i] - (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>();
            rn += r * r;
        }
        let bn: f64 = b.iter().map(|v| v * v).sum();
        assert!((rn / bn).sqrt() <= 1e-12);
    }
}
