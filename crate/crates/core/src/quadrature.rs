//! Gauss–Legendre and Gauss–Jacobi rules on [-1, 1].

use crate::linalg::{jacobi_eigen, DenseMatrix};
use crate::special::ln_gamma;

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Integrates `f` against the rule's weight over [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// n-point Gauss–Legendre rule by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// n-point Gauss–Jacobi rule for the weight (1-x)^a (1+x)^b, a, b > -1.
///
/// Golub–Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix of
/// the monic recurrence, weights are μ₀ times the squared first eigenvector
/// components.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let ab = a + b;
    let mut jac = DenseMatrix::zeros(n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + ab;
            let beta = 4.0 * j * (j + a) * (j + b) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0));
            jac[(k, k + 1)] = beta.sqrt();
            jac[(k + 1, k)] = beta.sqrt();
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = jacobi_eigen(&jac);
    let weights = (0..n).map(|k| mu0 * eig.vectors[(0, k)].powi(2)).collect();
    GaussRule {
        nodes: eig.values,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let rule = gauss_legendre(n);
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for k in 0..2 * n {
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k + 1) as f64
                };
                assert_relative_eq!(rule.integrate(|x| x.powi(k as i32)), exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn legendre_nodes_sorted_and_symmetric() {
        let rule = gauss_legendre(33);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..33 {
            assert_eq!(rule.nodes[i], -rule.nodes[32 - i]);
        }
    }

    #[test]
    fn jacobi_moments_match_beta_integrals() {
        // ∫_{-1}^{1} (1+x)^{b+k} dx = 2^{b+k+1}/(b+k+1), expanded against (1+x)^b.
        for &b in &[-0.5, -0.2, 0.3] {
            for n in 1..=12 {
                let rule = gauss_jacobi(n, 0.0, b);
                for k in 0..2 * n {
                    let exact = 2f64.powf(b + k as f64 + 1.0) / (b + k as f64 + 1.0);
                    let approx = rule.integrate(|x| (1.0 + x).powi(k as i32));
                    assert_relative_eq!(approx, exact, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobi_with_zero_exponents_is_legendre() {
        let gj = gauss_jacobi(9, 0.0, 0.0);
        let gl = gauss_legendre(9);
        for (a, b) in gj.nodes.iter().zip(&gl.nodes) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in gj.weights.iter().zip(&gl.weights) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
