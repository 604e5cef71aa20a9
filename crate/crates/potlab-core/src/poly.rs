//! Univariate polynomials over the complex numbers and an Aberth-Ehrlich
//! all-roots solver.

use num_complex::Complex64;
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("cannot solve for roots of the zero polynomial")]
    ZeroPolynomial,
}

/// Dense univariate polynomial, coefficients ascending in the variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly::new(vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Degree after trimming exact zeros; zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation of the polynomial and its derivative.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Sum of |c_j| |z|^j, the scale against which residuals are judged.
    pub fn eval_norm(&self, abs_z: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * abs_z + c.norm();
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex64::new(0.0, 0.0));
        for (j, &c) in self.coeffs.iter().enumerate() {
            out.push(c / (j as f64 + 1.0));
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (j, &c) in self.coeffs.iter().enumerate() {
            out[j] += c;
        }
        for (j, &c) in other.coeffs.iter().enumerate() {
            out[j] += c;
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// All complex roots. Leading coefficients smaller than
    /// `1e-12 * max|coeff|` are treated as zero before solving.
    pub fn roots(&self) -> Result<Vec<Complex64>, RootError> {
        let scale = self.max_coeff_norm();
        if scale == 0.0 {
            return Err(RootError::ZeroPolynomial);
        }
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-12 * scale {
            coeffs.pop();
        }
        if coeffs.len() <= 1 {
            return Ok(Vec::new());
        }
        aberth_roots(&coeffs, None)
    }
}

/// Deterministic lexicographic order on (Re, Im).
pub fn sort_lex(points: &mut [Complex64]) {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All roots of the polynomial with the given ascending coefficients
/// (leading coefficient must be nonzero) by simultaneous Aberth-Ehrlich
/// iteration. Initial guesses sit on a scaled circle unless supplied.
pub fn aberth_roots(
    coeffs: &[Complex64],
    guesses: Option<&[Complex64]>,
) -> Result<Vec<Complex64>, RootError> {
    let n = coeffs.len() - 1;
    debug_assert!(n >= 1);
    let lead = coeffs[n];
    debug_assert!(lead.norm() > 0.0);
    if n == 1 {
        return Ok(vec![-coeffs[0] / coeffs[1]]);
    }
    // Monic normalization keeps the residual scale tame.
    let b: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    let poly = Poly { coeffs: b.clone() };

    let mut y: Vec<Complex64> = match guesses {
        Some(g) => {
            debug_assert_eq!(g.len(), n);
            g.to_vec()
        }
        None => {
            let radius = 1.0 + b[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
            (0..n)
                .map(|j| {
                    // fixed angular offset so real-coefficient symmetry cannot trap
                    // the iteration on the real axis
                    let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64 + 0.7;
                    Complex64::from_polar(radius, theta)
                })
                .collect()
        }
    };

    let mut converged = false;
    for _ in 0..tol::MAX_ROOT_ITER {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let (p, dp) = poly.eval_with_derivative(y[i]);
            if !p.is_finite() || !dp.is_finite() {
                return Err(RootError::NoConvergence(tol::MAX_ROOT_ITER));
            }
            if p.norm() == 0.0 {
                continue;
            }
            let w = if dp.norm() == 0.0 {
                // sitting on a critical point: nudge off it
                Complex64::new(1e-8 * (1.0 + y[i].norm()), 1e-8)
            } else {
                p / dp
            };
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = y[i] - y[j];
                    if d.norm() > 0.0 {
                        s += Complex64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let step = if denom.norm() < 1e-12 { w } else { w / denom };
            y[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + y[i].norm()));
        }
        if max_step <= 1e-14 {
            converged = true;
            break;
        }
    }

    // Residual acceptance: backward error relative to the coefficient scale
    // at each root. Multiple roots converge linearly and may exhaust the
    // iteration budget while still being accurate; judge by residual alone.
    let ok = y.iter().all(|&r| {
        let res = poly.eval(r).norm() / poly.eval_norm(r.norm()).max(1e-300);
        res <= 1e-10
    });
    if !(converged || ok) {
        return Err(RootError::NoConvergence(tol::MAX_ROOT_ITER));
    }
    Ok(y)
}

/// Newton refinement of a root seed; returns the refined root.
/// Falls back to the seed when the derivative vanishes.
pub fn newton_refine(poly: &Poly, seed: Complex64, steps: usize) -> Complex64 {
    let mut y = seed;
    for _ in 0..steps {
        let (p, dp) = poly.eval_with_derivative(y);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        y -= step;
        if step.norm() <= 1e-16 * (1.0 + y.norm()) {
            break;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_and_derivative() {
        // 1 + 2y + 3y^2
        let p = Poly::from_real(&[1.0, 2.0, 3.0]);
        let (v, dv) = p.eval_with_derivative(c(2.0, 0.0));
        assert_abs_diff_eq!(v.re, 17.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dv.re, 14.0, epsilon = 1e-14);
    }

    #[test]
    fn roots_of_perfect_square_factorization() {
        // y^2 - 4 = (y-2)(y+2)
        let p = Poly::from_real(&[-4.0, 0.0, 1.0]);
        let mut r = p.roots().unwrap();
        sort_lex(&mut r);
        assert_abs_diff_eq!(r[0].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn roots_complex_cluster() {
        // (y - (1+i))(y - (1-i))(y + 3) = y^3 + y^2 - 4y + 6
        let p = Poly::from_real(&[6.0, -4.0, 1.0, 1.0]);
        let mut r = p.roots().unwrap();
        sort_lex(&mut r);
        assert_abs_diff_eq!(r[0].re, -3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[1].re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[1].im, -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[2].im, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn double_root_converges_by_residual() {
        // (y + 1/2)^2 = y^2 + y + 1/4
        let p = Poly::from_real(&[0.25, 1.0, 1.0]);
        let r = p.roots().unwrap();
        for root in r {
            assert!((root - c(-0.5, 0.0)).norm() < 2e-6);
        }
    }

    #[test]
    fn high_degree_wilkinson_fragment() {
        // (y-1)(y-2)(y-3)(y-4) = y^4 - 10y^3 + 35y^2 - 50y + 24
        let p = Poly::from_real(&[24.0, -50.0, 35.0, -10.0, 1.0]);
        let mut r = p.roots().unwrap();
        sort_lex(&mut r);
        for (k, root) in r.iter().enumerate() {
            assert_abs_diff_eq!(root.re, (k + 1) as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(root.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = Poly::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0)]);
        assert_eq!(p.antiderivative().derivative(), p);
    }

    #[test]
    fn zero_polynomial_root_error() {
        assert_eq!(Poly::zero().roots(), Err(RootError::ZeroPolynomial));
    }
}
