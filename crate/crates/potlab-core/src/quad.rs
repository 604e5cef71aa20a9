//! Gaussian quadrature rules: Gauss-Legendre and Gauss-Jacobi with
//! endpoint-singular weights, built by the Golub-Welsch algorithm.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature rule needs at least one node")]
    Degree,
    #[error("Jacobi exponents must be finite and > -1 (got alpha={0}, beta={1})")]
    Exponents(f64, f64),
}

/// Lanczos approximation of the Gamma function (g = 7, 9 coefficients),
/// accurate to ~2e-10 relative over the range used here.
pub fn gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = G[0];
        for (i, &g) in G.iter().enumerate().skip(1) {
            acc += g / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// A quadrature rule on [-1, 1] against the weight (1-t)^alpha (1+t)^beta.
///
/// `alpha` is the exponent at the right endpoint t = +1 and `beta` at the
/// left endpoint t = -1 (the classical Jacobi convention).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl QuadRule {
    /// Gauss-Jacobi rule by Golub-Welsch: eigenvalues of the symmetrized
    /// three-term recurrence matrix give the nodes, the squared first
    /// eigenvector components scaled by the zeroth moment give the weights.
    pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<QuadRule, QuadError> {
        if n == 0 {
            return Err(QuadError::Degree);
        }
        if !(alpha.is_finite() && alpha > -1.0 && beta.is_finite() && beta > -1.0) {
            return Err(QuadError::Exponents(alpha, beta));
        }
        let mu0 = 2f64.powf(alpha + beta + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0)
            / gamma(alpha + beta + 2.0);
        if n == 1 {
            let node = (beta - alpha) / (alpha + beta + 2.0);
            return Ok(QuadRule {
                nodes: vec![node],
                weights: vec![mu0],
                alpha,
                beta,
            });
        }

        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut diag = (beta - alpha) / (2.0 + beta + alpha);
        for idx in 0..n - 1 {
            let i = idx as f64 + 1.0;
            let denom = 2.0 * i + alpha + beta;
            let off = 2.0 / denom
                * (i * (i + alpha) * (i + beta) * (i + alpha + beta)
                    / ((denom + 1.0) * (denom - 1.0)))
                    .sqrt();
            m[(idx, idx)] = diag;
            m[(idx, idx + 1)] = off;
            m[(idx + 1, idx)] = off;
            diag = (beta * beta - alpha * alpha) / (denom * (denom + 2.0));
        }
        m[(n - 1, n - 1)] = diag;

        let eigen = m.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .copied()
            .zip(
                eigen
                    .eigenvectors
                    .row(0)
                    .iter()
                    .map(|v| v * v * mu0),
            )
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(QuadRule {
            nodes,
            weights,
            alpha,
            beta,
        })
    }

    pub fn gauss_legendre(n: usize) -> QuadRule {
        QuadRule::gauss_jacobi(n, 0.0, 0.0).unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Value of the Jacobi weight function at node i.
    pub fn weight_fn_at(&self, i: usize) -> f64 {
        (1.0 - self.nodes[i]).powf(self.alpha) * (1.0 + self.nodes[i]).powf(self.beta)
    }

    /// Integrates (1-t)^alpha (1+t)^beta f(x(t)) over [a, b] where x maps
    /// [-1, 1] affinely onto [a, b]. For alpha = beta = 0 this is plain
    /// Gauss-Legendre integration of f.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum();
        half * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_small_integers_and_halves() {
        assert_abs_diff_eq!(gamma(1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma(4.0), 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            gamma(1.5),
            0.5 * std::f64::consts::PI.sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn legendre_5_nodes_match_reference() {
        let rule = QuadRule::gauss_legendre(5);
        let expected = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        for (node, want) in rule.nodes().iter().zip(expected) {
            assert_abs_diff_eq!(*node, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = QuadRule::gauss_legendre(8);
        let val = rule.integrate(0.0, 2.0, |x| x.powi(7) - 3.0 * x.powi(2) + 1.0);
        // 2^8/8 - 3*8/3 + 2 = 32 - 8 + 2
        assert_abs_diff_eq!(val, 26.0, epsilon = 1e-11);
    }

    #[test]
    fn jacobi_zeroth_moments() {
        // integral of (1-t)^(1/2) (1+t)^(-1/2) over [-1, 1] is pi
        let rule = QuadRule::gauss_jacobi(6, 0.5, -0.5).unwrap();
        assert_abs_diff_eq!(
            rule.weights().iter().sum::<f64>(),
            std::f64::consts::PI,
            epsilon = 1e-10
        );
        // Chebyshev weight: integral is pi as well
        let rule = QuadRule::gauss_jacobi(6, -0.5, -0.5).unwrap();
        assert_abs_diff_eq!(
            rule.weights().iter().sum::<f64>(),
            std::f64::consts::PI,
            epsilon = 1e-10
        );
    }

    #[test]
    fn jacobi_singular_endpoint_integral() {
        // integral over [-1,1] of (1-t)^(-1/2) cos(t) dt, reference value from
        // adaptive quadrature after substituting t = 1 - u^2:
        // 2 * integral over [0, sqrt(2)] of cos(1 - u^2) du = 2.2074171557313313
        let rule = QuadRule::gauss_jacobi(20, -0.5, 0.0).unwrap();
        let val = rule.integrate(-1.0, 1.0, |t| t.cos());
        assert_abs_diff_eq!(val, 2.207_417_155_731_331_3, epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuadRule::gauss_jacobi(0, 0.0, 0.0).is_err());
        assert!(QuadRule::gauss_jacobi(4, -1.0, 0.0).is_err());
        assert!(QuadRule::gauss_jacobi(4, 0.0, -1.5).is_err());
    }
}
