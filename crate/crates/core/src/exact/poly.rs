use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Polynomial in `X = lambda + 1/lambda`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly { coeffs: coeffs.iter().map(|&c| c.into()).collect() }
    }

    pub fn one() -> Self {
        Poly::from_real(&[1.0])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Multiplication by `a + b X`.
    pub fn mul_linear(&self, a: f64, b: f64) -> Poly {
        self.mul(&Poly::from_real(&[a, b]))
    }

    pub fn truncate(&self, max_degree: usize) -> Poly {
        Poly::new(self.coeffs.iter().take(max_degree + 1).copied().collect())
    }

    pub fn sum(&self) -> Complex64 {
        self.coeffs.iter().sum()
    }

    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// Checks that the coefficients form a probability vector.
    pub fn check_pgf(&self, tol: f64) -> Result<()> {
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.im.abs() > tol || c.re < -tol {
                return Err(Error::InvalidArgument(format!("coefficient {k} = {c} is not a probability")));
            }
        }
        let s = self.sum();
        if (s - 1.0).norm() > tol {
            return Err(Error::InvalidArgument(format!("coefficients sum to {s}")));
        }
        Ok(())
    }
}
