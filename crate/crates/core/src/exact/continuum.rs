use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

fn check_upper(z: Complex64, what: &str) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} = {z} is not in the open upper half plane")));
    }
    Ok(())
}

fn check_pair(u: Complex64, v: Complex64) -> Result<()> {
    check_upper(u, "u")?;
    check_upper(v, "v")?;
    if u == v {
        return Err(Error::InvalidArgument("coincident points".into()));
    }
    Ok(())
}

/// Analytic completion of the upper half plane Green's function:
/// `-(1/2pi) log((u - v)/(conj(u) - v))` (Dirichlet) or
/// `-(1/2pi) log((u - v)(conj(u) - v))` (Neumann), principal branch of
/// each logarithm factor.
pub fn halfplane_greens(u: Complex64, v: Complex64, kind: BoundaryKind) -> Result<Complex64> {
    check_pair(u, v)?;
    let (a, b) = ((u - v).ln(), (u.conj() - v).ln());
    Ok(match kind {
        BoundaryKind::Dirichlet => -(a - b) / (2.0 * PI),
        BoundaryKind::Neumann => -(a + b) / (2.0 * PI),
    })
}

/// `F_+(u, v)`, the derivative of the Dirichlet potential in `u`.
pub fn f_plus(u: Complex64, v: Complex64) -> Result<Complex64> {
    check_pair(u, v)?;
    Ok(-1.0 / (2.0 * PI * (u - v)))
}

/// `F_-(u, v)`, the derivative of the Dirichlet potential in `conj(u)`.
pub fn f_minus(u: Complex64, v: Complex64) -> Result<Complex64> {
    check_upper(u, "u")?;
    check_upper(v, "v")?;
    Ok(1.0 / (2.0 * PI * (u.conj() - v)))
}

/// `lim_{v -> u} F_+(u, v) - 1/(2 pi (v - u))`. On the half plane `F_+`
/// is exactly the subtracted pole, so the limit vanishes.
pub fn f_plus_dagger(u: Complex64) -> Result<Complex64> {
    check_upper(u, "u")?;
    Ok(Complex64::new(0.0, 0.0))
}

/// `(1/pi)(arg(z - w) - arg(z - b))`: the harmonic measure of `(b, w)`
/// seen from `z`.
pub fn chordal_left_probability(b: f64, w: f64, z: Complex64) -> Result<f64> {
    if !(b < w) {
        return Err(Error::InvalidArgument("need b < w".into()));
    }
    check_upper(z, "z")?;
    Ok(((z - w).arg() - (z - b).arg()) / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum TwoPointMode {
    Continuum,
    Discrete { eps: f64 },
}

/// Breakdown of a discrete two-point evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPointSum {
    pub value: f64,
    pub eps: f64,
    /// Contribution of the window `y2 > window` evaluated in closed form.
    pub tail: f64,
    pub window: f64,
    pub pairs: usize,
}

/// Expected number of loops surrounding both `z1` and `z2`.
pub fn two_point_loop_expectation(z1: Complex64, z2: Complex64, mode: TwoPointMode) -> Result<f64> {
    match mode {
        TwoPointMode::Continuum => {
            check_pair(z1, z2)?;
            Ok(-4.0 / (PI * PI) * ((z1 - z2) / (z1 - z2.conj())).norm().ln())
        }
        TwoPointMode::Discrete { eps } => Ok(two_point_discrete(z1, z2, eps)?.value),
    }
}

/// Orientation of a zipper edge, which selects the row of the product table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    R,
    L,
}

/// `K^-1(w1 b2) K^-1(w2 b1)` in the scaling limit for crossing edges near
/// `z1` (first zipper) and `z2` (second zipper), one case per pair of
/// orientations.
pub fn two_point_table(s1: Side, s2: Side, z1: Complex64, z2: Complex64, eps: f64) -> f64 {
    let p = 1.0 / (z2 - z1);
    let q = 1.0 / (z2 - z1.conj());
    let r = 1.0 / (z1 - z2);
    let s = 1.0 / (z1 - z2.conj());
    let k = eps * eps / (PI * PI);
    match (s1, s2) {
        (Side::R, Side::R) => k * (p + q).re * (r + s).re,
        (Side::R, Side::L) => -k * (p + q).im * (r - s).im,
        (Side::L, Side::R) => -k * (p - q).im * (r + s).im,
        (Side::L, Side::L) => k * (p - q).re * (r - s).re,
    }
}

/// Riemann sum of the four-case table over two vertical zippers.
///
/// The zipper of the lower point runs from the real axis up to it; the
/// zipper of the upper point runs from it upward, so the two never meet.
/// In each cell of height `eps` a zipper crosses one `R` edge at offset
/// `eps/4` and one `L` edge at `3 eps/4`. The upper zipper is summed up
/// to `window = 8 |z1 - conj(z2)|`, and the remainder of the integral is
/// added in closed form. Twice the sum is the expected loop count.
pub fn two_point_discrete(z1: Complex64, z2: Complex64, eps: f64) -> Result<TwoPointSum> {
    check_pair(z1, z2)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let (lo, hi) = if z1.im <= z2.im { (z1, z2) } else { (z2, z1) };
    let window = 8.0 * (z1 - z2.conj()).norm();
    let n_lo = (lo.im / eps).round() as usize;
    let n_hi = ((window - hi.im) / eps).round() as usize;
    if n_lo == 0 {
        return Err(Error::InvalidArgument("eps larger than the lower point's height".into()));
    }
    let edges = |base: f64, x: f64, count: usize| -> Vec<(Side, Complex64)> {
        (0..count)
            .flat_map(|j| {
                let y = base + j as f64 * eps;
                [(Side::R, Complex64::new(x, y + 0.25 * eps)), (Side::L, Complex64::new(x, y + 0.75 * eps))]
            })
            .collect()
    };
    let lower = edges(0.0, lo.re, n_lo);
    let upper = edges(hi.im, hi.re, n_hi);
    let rows: Vec<f64> = lower
        .par_iter()
        .map(|&(s1, p1)| upper.iter().map(|&(s2, p2)| two_point_table(s1, s2, p1, p2, eps)).sum())
        .collect();
    let sum: f64 = rows.iter().sum();
    let top = Complex64::new(hi.re, hi.im + n_hi as f64 * eps);
    let top_bar = top.conj();
    let tail = -4.0 / (PI * PI) * ((lo - top) / (lo - top_bar)).norm().ln();
    Ok(TwoPointSum { value: 2.0 * sum + tail, eps, tail, window, pairs: lower.len() * upper.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sums_to_the_kernel() {
        let (z1, z2) = (Complex64::new(0.3, 0.7), Complex64::new(-0.4, 1.9));
        let total: f64 = [Side::R, Side::L]
            .iter()
            .flat_map(|&a| [Side::R, Side::L].map(|b| two_point_table(a, b, z1, z2, 1.0)))
            .sum();
        let want = -2.0 / (PI * PI) * (1.0 / ((z1 - z2) * (z1 - z2)) + 1.0 / ((z1 - z2.conj()) * (z1 - z2.conj()))).re;
        assert!((total - want).abs() < 1e-14);
    }
}
