use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex 2x2 matrix `[[a, b], [c, d]]`.
///
/// Serialized as eight reals: `[re a, im a, re b, im b, re c, im c, re d, im d]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 8]", into = "[f64; 8]")]
pub struct Matrix2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl From<[f64; 8]> for Matrix2 {
    fn from(x: [f64; 8]) -> Self {
        Matrix2 {
            a: Complex64::new(x[0], x[1]),
            b: Complex64::new(x[2], x[3]),
            c: Complex64::new(x[4], x[5]),
            d: Complex64::new(x[6], x[7]),
        }
    }
}

impl From<Matrix2> for [f64; 8] {
    fn from(m: Matrix2) -> Self {
        [m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im]
    }
}

impl fmt::Debug for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Matrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Matrix2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Matrix2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn scalar(s: Complex64) -> Self {
        Matrix2::new(s, ZERO, ZERO, s)
    }

    /// `diag(l, 1/l)`.
    pub fn diag(l: Complex64) -> Self {
        Matrix2::new(l, ZERO, ZERO, l.inv())
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Matrix2::new(self.a, self.c, self.b, self.d)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Matrix2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// The quaternion conjugate: `[[d, -b], [-c, a]]`. Equals the inverse
    /// when the determinant is 1.
    pub fn qconj(&self) -> Self {
        Matrix2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn inv(&self) -> Result<Self> {
        let det = self.det();
        if det.norm() == 0.0 {
            return Err(Error::Singular);
        }
        Ok(self.qconj().scale(det.inv()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match (i, j) {
            (0, 0) => self.a,
            (0, 1) => self.b,
            (1, 0) => self.c,
            (1, 1) => self.d,
            _ => panic!("Matrix2 index ({i}, {j}) out of range"),
        }
    }

    pub fn check_unimodular(&self, tol: f64) -> Result<()> {
        let det = self.det();
        if (det - ONE).norm() > tol {
            return Err(Error::NotUnimodular(det.norm()));
        }
        Ok(())
    }

    pub fn exp(&self) -> Self {
        let s = self.trace() / 2.0;
        let n = *self - Matrix2::scalar(s);
        let delta2 = -n.det();
        let (ch, shc) = cosh_sinhc(delta2);
        (Matrix2::scalar(ch) + n.scale(shc)).scale(s.exp())
    }

    /// Principal logarithm of an `SL2` matrix; the result is traceless.
    ///
    /// Fails with [`Error::BranchCut`] when an eigenvalue lies on the
    /// negative real axis.
    pub fn log(&self) -> Result<Self> {
        self.check_unimodular(1e-10)?;
        let half = self.trace() / 2.0;
        // sinh(delta) for the eigenvalues exp(+-delta).
        let w = (half * half - ONE).sqrt();
        let mu = half + w;
        let mu = if mu.norm() < 1.0 { half - w } else { mu };
        let w = mu - half;
        if mu.im.abs() < 1e-14 && mu.re < 0.0 {
            return Err(Error::BranchCut);
        }
        let ratio = if w.norm() < 1e-4 && half.re > 0.0 {
            let w2 = w * w;
            ONE - w2 / 6.0 + w2 * w2 * 3.0 / 40.0
        } else if w.norm() < 1e-12 {
            return Err(Error::BranchCut);
        } else {
            mu.ln() / w
        };
        Ok((*self - Matrix2::scalar(half)).scale(ratio))
    }

    /// Uniform sample from `SU(2)` (Haar measure), via a uniform point on
    /// the 3-sphere read as a unit quaternion.
    pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 1e-12 {
                let [x0, x1, x2, x3] = q.map(|x| x / r);
                return Matrix2::new(
                    Complex64::new(x0, x1),
                    Complex64::new(x2, x3),
                    Complex64::new(-x2, x3),
                    Complex64::new(x0, -x1),
                );
            }
        }
    }

    /// Random `SL2(C)` matrix with entries of order one.
    pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut z = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 0.5;
            let m = Matrix2::new(ONE + z(), z(), z(), ONE + z());
            let det = m.det();
            if det.norm() > 0.1 {
                return m.scale(det.sqrt().inv());
            }
        }
    }

    /// Random traceless matrix, a tangent direction to `SL2(C)`.
    pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut z = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (a, b, c) = (z(), z(), z());
        Matrix2::new(a, b, c, -a)
    }
}

/// `(cosh x, sinh x / x)` as functions of `x^2`.
fn cosh_sinhc(x2: Complex64) -> (Complex64, Complex64) {
    if x2.norm() < 1e-8 {
        return (ONE + x2 / 2.0 + x2 * x2 / 24.0, ONE + x2 / 6.0 + x2 * x2 / 120.0);
    }
    let x = x2.sqrt();
    (x.cosh(), x.sinh() / x)
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, r: Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Mul<Complex64> for Matrix2 {
    type Output = Matrix2;
    fn mul(self, s: Complex64) -> Matrix2 {
        self.scale(s)
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, r: Matrix2) -> Matrix2 {
        Matrix2::new(self.a + r.a, self.b + r.b, self.c + r.c, self.d + r.d)
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, r: Matrix2) -> Matrix2 {
        Matrix2::new(self.a - r.a, self.b - r.b, self.c - r.c, self.d - r.d)
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        Matrix2::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl std::iter::Product for Matrix2 {
    fn product<I: Iterator<Item = Matrix2>>(iter: I) -> Matrix2 {
        iter.fold(Matrix2::identity(), |acc, m| acc * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qconj_is_inverse_on_sl2() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = Matrix2::random_sl2(&mut rng);
            assert!((m * m.qconj()).dist(&Matrix2::identity()) < 1e-12);
            let u = Matrix2::random_su2(&mut rng);
            assert!((u.det() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = Matrix2::random_sl2(&mut rng);
            let l = m.log().unwrap();
            assert!(l.trace().norm() < 1e-12);
            assert!(l.exp().dist(&m) < 1e-10, "{m:?}");
        }
        let n = Matrix2::real(1.0, 1e-3, 0.0, 1.0);
        assert!(n.log().unwrap().dist(&Matrix2::real(0.0, 1e-3, 0.0, 0.0)) < 1e-15);
        assert_eq!(Matrix2::zero().exp(), Matrix2::identity());
    }

    #[test]
    fn diagonal_half_power() {
        let a = Matrix2::diag(c(4.0, 0.0));
        let half = a.log().unwrap().scale(c(0.5, 0.0)).exp();
        assert!(half.dist(&Matrix2::diag(c(2.0, 0.0))) < 1e-14);
    }

    #[test]
    fn branch_cut_rejected() {
        assert_eq!(Matrix2::diag(c(-2.0, 0.0)).log(), Err(Error::BranchCut));
        assert_eq!(Matrix2::scalar(c(-1.0, 0.0)).log(), Err(Error::BranchCut));
        assert!(matches!(Matrix2::diag(c(2.0, 0.0)).scale(c(2.0, 0.0)).log(), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn serde_as_eight_reals() {
        let m = Matrix2::new(c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[1.0,2.0,3.0,4.0,5.0,6.0,7.0,8.0]");
        assert_eq!(serde_json::from_str::<Matrix2>(&s).unwrap(), m);
    }
}
