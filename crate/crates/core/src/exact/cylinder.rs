use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::kasteleyn::CMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Loop-count normalization on the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PgfConvention {
    /// Natural double-dimer measure: `P(k) ~ N_k 2^k`.
    PairMeasure,
    /// `P(k) ~ N_k`, the normalization `det K(X) / det K(1)`.
    TraceMarking,
}

fn check_odd(n: usize, m: usize) -> Result<()> {
    if n % 2 == 0 {
        return Err(Error::EvenCylinder(n));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("cylinder height must be positive".into()));
    }
    Ok(())
}

/// The roots `alpha_k, beta_k = i(-cos t +- sqrt(1 + cos^2 t))`, `t = pi k / (m + 1)`.
pub fn cylinder_roots(m: usize, k: usize) -> (Complex64, Complex64) {
    let c = (PI * k as f64 / (m + 1) as f64).cos();
    let s = (1.0 + c * c).sqrt();
    (I * (-c + s), I * (-c - s))
}

/// Product formula `prod_k (lambda - alpha_k^2n)(lambda - beta_k^2n) / lambda`.
#[allow(non_snake_case)]
pub fn cylinder_detK(n: usize, m: usize, lambda: Complex64) -> Result<Complex64> {
    check_odd(n, m)?;
    if lambda.norm() == 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    Ok((1..=m)
        .map(|k| {
            let (a, b) = cylinder_roots(m, k);
            (lambda - a.powu(2 * n as u32)) * (lambda - b.powu(2 * n as u32)) / lambda
        })
        .product())
}

/// `1 / c_k` where `det K = prod_k (X + c_k)`; with `r = sqrt(1 + cos^2) - |cos| <= 1`,
/// `c_k = r^-2n + r^2n`. The reciprocal never overflows.
pub fn cylinder_inverse_constants(n: usize, m: usize) -> Result<Vec<f64>> {
    check_odd(n, m)?;
    Ok((1..=m)
        .map(|k| {
            let c = (PI * k as f64 / (m + 1) as f64).cos().abs();
            let r = (1.0 + c * c).sqrt() - c;
            let p = r.powi(2 * n as i32);
            p / (1.0 + p * p)
        })
        .collect())
}

/// Coefficients `N_k` of `det K = sum_k N_k X^k`, by expanding the product.
pub fn cylinder_loop_poly(n: usize, m: usize) -> Result<Poly> {
    let inv = cylinder_inverse_constants(n, m)?;
    let p = inv.iter().fold(Poly::one(), |p, &t| p.mul_linear(1.0 / t, 1.0));
    if p.coeffs.iter().any(|c| !c.re.is_finite()) {
        return Err(Error::InvalidArgument(format!("coefficients overflow for n = {n}, m = {m}; use cylinder_pgf")));
    }
    Ok(p)
}

/// Chebyshev nodes on `[-2.5, 2.5]`.
pub fn chebyshev_nodes(count: usize) -> Vec<f64> {
    (0..count).map(|j| 2.5 * (PI * (2 * j + 1) as f64 / (2 * count) as f64).cos()).collect()
}

/// `lambda` with `lambda + 1/lambda = x`.
pub fn lambda_for(x: Complex64) -> Complex64 {
    x / 2.0 + (x * x / 4.0 - 1.0).sqrt()
}

/// The same coefficients obtained by evaluating [`cylinder_detK`] at
/// Chebyshev-placed values of `X` and solving the Vandermonde system.
pub fn cylinder_loop_poly_interpolated(n: usize, m: usize) -> Result<Poly> {
    check_odd(n, m)?;
    let xs = chebyshev_nodes(m + 1);
    let v = DMatrix::from_fn(m + 1, m + 1, |i, j| Complex64::from(xs[i].powi(j as i32)));
    let mut rhs = DVector::zeros(m + 1);
    for (i, &x) in xs.iter().enumerate() {
        rhs[i] = cylinder_detK(n, m, lambda_for(x.into()))?;
    }
    let sol = v.clone().lu().solve(&rhs).ok_or(Error::Singular)?;
    let resid = (&v * &sol - &rhs).norm() / rhs.norm();
    if resid > 1e-8 {
        return Err(Error::InvalidArgument(format!("interpolation residual {resid:e}")));
    }
    Ok(Poly::new(sol.iter().copied().collect()))
}

/// Loop-count distribution of noncontractible loops.
pub fn cylinder_pgf(n: usize, m: usize, convention: PgfConvention) -> Result<Poly> {
    let w = match convention {
        PgfConvention::PairMeasure => 2.0,
        PgfConvention::TraceMarking => 1.0,
    };
    let inv = cylinder_inverse_constants(n, m)?;
    Ok(inv.iter().fold(Poly::one(), |p, &t| p.mul_linear(1.0 / (1.0 + w * t), w * t / (1.0 + w * t))))
}

/// Truncated q-product with the size of what was left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPgf {
    pub poly: Poly,
    /// `1 - P_tail(0 loops)` for the omitted factors `j > j_max`.
    pub tail: f64,
    /// Probability mass above degree `k_max`, dropped from `poly`.
    pub dropped: f64,
}

/// `q = exp(-pi tau)`. For `m` even the product runs over odd `j`; for `m`
/// odd it runs over even `j >= 2` with the extra factor `(2 + X) / 3`.
/// Each factor is normalized at `X = 1` (trace marking) or `X = 2` (pair
/// measure).
pub fn cylinder_pgf_asymptotic(
    convention: PgfConvention,
    tau: f64,
    m_even: bool,
    k_max: usize,
    j_max: usize,
) -> Result<AsymptoticPgf> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be positive".into()));
    }
    let x = match convention {
        PgfConvention::PairMeasure => 2.0,
        PgfConvention::TraceMarking => 1.0,
    };
    let q = (-PI * tau).exp();
    let factor = |j: usize| {
        let a = q.powi(j as i32);
        let d = 1.0 + x * a + a * a;
        Poly::from_real(&[(1.0 + a * a) / d, x * a / d])
    };
    let mut p = if m_even { Poly::one() } else { Poly::from_real(&[2.0 / (2.0 + x), x / (2.0 + x)]) };
    let first = if m_even { 1 } else { 2 };
    for j in (first..=j_max).step_by(2) {
        let f = factor(j);
        p = p.mul(&f).mul(&f);
    }
    let mut tail_zero = 1.0;
    let mut j = if j_max < first { first } else { j_max + 2 - (j_max - first) % 2 };
    loop {
        let f0 = factor(j).coeffs[0].re;
        tail_zero *= f0 * f0;
        if 1.0 - f0 < 1e-18 {
            break;
        }
        j += 2;
    }
    let kept = p.truncate(k_max);
    let dropped = (p.sum() - kept.sum()).re;
    Ok(AsymptoticPgf { poly: kept, tail: 1.0 - tail_zero, dropped })
}

/// Scalar operator on all `2nm` vertices of the cylinder for the line
/// bundle with transport `a = lambda^(1/2n)` on eastward steps: `a` east,
/// `1/a` west, `i` north and south. Its determinant is
/// `(-1)^{nm}` times [`cylinder_detK`], the sign coming from the
/// black-white block structure.
pub fn cylinder_line_operator(n: usize, m: usize, lambda: Complex64) -> Result<CMatrix> {
    check_odd(n, m)?;
    let w = 2 * n;
    let a = lambda.powf(1.0 / w as f64);
    let id = |x: usize, y: usize| (y - 1) * w + x;
    let mut k = CMatrix::zeros(w * m, w * m);
    for y in 1..=m {
        for x in 0..w {
            let v = id(x, y);
            k[(v, id((x + 1) % w, y))] += a;
            k[(v, id((x + w - 1) % w, y))] += a.inv();
            if y < m {
                k[(v, id(x, y + 1))] += I;
            }
            if y > 1 {
                k[(v, id(x, y - 1))] += I;
            }
        }
    }
    Ok(k)
}

/// Largest relative residual `|K f - mu f| / |f|` over the eigenvectors
/// `f(x, y) = z^x (w^y - w^-y)`, `z^2n = 1`, `w = exp(i pi k / (m + 1))`,
/// with `mu = a z + 1/(a z) + i (w + 1/w)`.
pub fn cylinder_eigen_residual(n: usize, m: usize, lambda: Complex64) -> Result<f64> {
    let k = cylinder_line_operator(n, m, lambda)?;
    let width = 2 * n;
    let a = lambda.powf(1.0 / width as f64);
    let mut worst: f64 = 0.0;
    for zi in 0..width {
        let z = Complex64::from_polar(1.0, 2.0 * PI * zi as f64 / width as f64);
        for kk in 1..=m {
            let w = Complex64::from_polar(1.0, PI * kk as f64 / (m + 1) as f64);
            let f = DVector::from_fn(width * m, |v, _| {
                let (x, y) = (v % width, v / width + 1);
                z.powu(x as u32) * (w.powu(y as u32) - w.powu(y as u32).inv())
            });
            let mu = a * z + (a * z).inv() + I * (w + w.inv());
            worst = worst.max((&k * &f - &f * mu).norm() / f.norm());
        }
    }
    Ok(worst)
}
