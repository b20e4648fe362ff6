use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Pfaffian by Parlett-Reid skew elimination with partial pivoting.
pub fn pfaffian(a: &CMatrix) -> Result<Complex64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Mismatch(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let dev = antisymmetry_defect(a);
    if dev > 1e-10 {
        return Err(Error::NotAntisymmetric(dev));
    }
    let mut a = a.clone();
    let mut pf = Complex64::new(1.0, 0.0);
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let mut kp = k + 1;
        for i in k + 2..n {
            if a[(i, k)].norm() > a[(kp, k)].norm() {
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)];
        if pivot.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<Complex64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<Complex64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    let upd = tau[ii] * col[jj] - col[ii] * tau[jj];
                    a[(i, j)] += upd;
                }
            }
        }
    }
    Ok(pf)
}

/// `max |A + A^T| / max(1, max |A|)`.
pub fn antisymmetry_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((a[(i, j)] + a[(j, i)]).norm());
        }
    }
    dev / scale
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    if a.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

/// `log det A` as a sum of logarithms of the LU pivots. The imaginary part
/// is defined only modulo `2 pi`.
pub fn log_determinant(a: &CMatrix) -> Result<Complex64> {
    if a.nrows() == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.nrows() {
        let p = u[(i, i)];
        if p.norm() == 0.0 {
            return Err(Error::Singular);
        }
        acc += p.ln();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        acc += Complex64::new(0.0, std::f64::consts::PI);
    }
    Ok(acc)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular)?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(inv)
}

/// Wraps the imaginary part into `(-pi, pi]`.
pub fn wrap_log(z: Complex64) -> Complex64 {
    let tau = std::f64::consts::TAU;
    let mut im = z.im % tau;
    if im > std::f64::consts::PI {
        im -= tau;
    } else if im <= -std::f64::consts::PI {
        im += tau;
    }
    Complex64::new(z.re, im)
}
