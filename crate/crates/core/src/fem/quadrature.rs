//! Triangle and interval quadrature.
//!
//! Points are barycentric coordinates; weights sum to one, so
//! `∫_K f ≈ |K| Σ w_q f(x_q)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Symmetric 12-point rule exact for polynomials of degree 6.
    pub fn degree6() -> Self {
        let mut points = Vec::with_capacity(12);
        let mut weights = Vec::with_capacity(12);
        let mut orbit3 = |a: f64, b: f64, w: f64| {
            for p in [[a, b, b], [b, a, b], [b, b, a]] {
                points.push(p);
                weights.push(w);
            }
        };
        orbit3(0.501426509658179, 0.249286745170910, 0.116786275726379);
        orbit3(0.873821971016996, 0.063089014491502, 0.050844906370207);
        let (a, b, c, w) = (0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374);
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            points.push(p);
            weights.push(w);
        }
        TriangleRule { points, weights, degree: 6 }
    }

    /// Collapsed Gauss-Legendre product rule with `n` points per direction,
    /// exact for total degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&s, &ws) in x.iter().zip(&w) {
            for (&t, &wt) in x.iter().zip(&w) {
                // (s, t) in [0,1]^2 -> (xi, eta) = (s, (1-s) t)
                let xi = s;
                let eta = (1.0 - s) * t;
                points.push([1.0 - xi - eta, xi, eta]);
                // Jacobian (1-s); reference area 1/2 normalised away
                weights.push(2.0 * ws * wt * (1.0 - s));
            }
        }
        TriangleRule { points, weights, degree: 2 * n - 2 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - z));
        weights.push(1.0 / ((1.0 - z * z) * dp * dp));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // ∫_ref x^a y^b = a! b! / (a+b+2)! on the unit reference triangle (area 1/2)
    fn exact_monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check(rule: &TriangleRule, deg: u32, tol: f64) {
        for a in 0..=deg {
            for b in 0..=deg - a {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| 0.5 * w * libm::pow(p[1], a as f64) * libm::pow(p[2], b as f64))
                    .sum();
                let e = exact_monomial(a, b);
                assert!((q - e).abs() <= tol * e, "x^{a} y^{b}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn degree6_exact() {
        let r = TriangleRule::degree6();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        check(&r, 6, 1e-13);
    }

    #[test]
    fn collapsed_exact() {
        for n in 1..8 {
            check(&TriangleRule::collapsed(n), (2 * n - 2) as u32, 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_interval() {
        let (x, w) = gauss_legendre(5);
        for k in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, k as f64)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
        }
    }
}
