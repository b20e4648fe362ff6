use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::word::Lamination;
use crate::connection::Matrix2;
use crate::error::{Error, Result};

/// Samples per seeded stream in Monte Carlo mode.
pub const HAAR_CHUNK: usize = 4096;

pub const DEFAULT_HAAR_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarMode {
    /// Exact Weyl-measure quadrature for one generator. `degree` bounds the
    /// degree of the evaluator as a polynomial in `Tr U`.
    Quadrature { degree: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarCoefficient {
    pub lamination: String,
    pub value: Complex64,
    pub stderr: f64,
}

/// Nodes and weights for the class-function integral over `SU(2)`,
/// `(2/pi) int_0^pi f(theta) sin^2(theta) d theta`. The trapezoid rule is
/// exact for trigonometric polynomials of degree below `2 * nodes`.
pub fn weyl_nodes(degree: usize) -> Vec<(Matrix2, f64)> {
    let n = 4 * degree + 8;
    (1..n)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / n as f64;
            let u = Complex64::from_polar(1.0, t);
            (Matrix2::new(u, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), u.conj()), 2.0 / n as f64 * t.sin().powi(2))
        })
        .collect()
}

/// `int (Tr U)^k dU`; the even moments are the Catalan numbers.
pub fn su2_trace_moment(k: u32, mode: HaarMode) -> (f64, f64) {
    match mode {
        HaarMode::Quadrature { .. } => {
            let s = weyl_nodes(k as usize).iter().map(|(u, w)| w * u.trace().re.powi(k as i32)).sum();
            (s, 0.0)
        }
        HaarMode::MonteCarlo { samples, seed } => {
            let sums = chunked(
                samples,
                seed,
                1,
                (0.0, 0.0),
                |gens| {
                    let x = gens[0].trace().re.powi(k as i32);
                    (x, x * x)
                },
                |a, b| (a.0 + b.0, a.1 + b.1),
            );
            let n = samples as f64;
            let mean = sums.0 / n;
            let var = (sums.1 / n - mean * mean).max(0.0);
            (mean, (var / n).sqrt())
        }
    }
}

/// Runs `f` on Haar-random generator tuples over seeded streams and sums the
/// results chunk by chunk in stream order.
fn chunked<T, F, A>(samples: usize, seed: u64, n: usize, zero: T, f: F, add: A) -> T
where
    T: Send + Sync + Clone,
    F: Fn(&[Matrix2]) -> T + Sync,
    A: Fn(T, T) -> T + Sync,
{
    let chunks = samples.div_ceil(HAAR_CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = HAAR_CHUNK.min(samples - c * HAAR_CHUNK);
            let mut acc = zero.clone();
            let mut gens = vec![Matrix2::identity(); n];
            for _ in 0..len {
                for g in gens.iter_mut() {
                    *g = Matrix2::random_su2(&mut rng);
                }
                acc = add(acc, f(&gens));
            }
            acc
        })
        .collect();
    parts.into_iter().fold(zero, &add)
}

/// Accumulators for the normal equations `G c = b`.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    b: DVector<Complex64>,
    gram: DMatrix<Complex64>,
}

fn add(a: Moments, b: Moments) -> Moments {
    Moments { b: a.b + b.b, gram: a.gram + b.gram }
}

fn basis(laminations: &[Lamination], gens: &[Matrix2]) -> DVector<Complex64> {
    DVector::from_iterator(laminations.len(), laminations.iter().map(|l| l.trace_function(gens)))
}

fn sample_moments(z: Complex64, f: &DVector<Complex64>) -> Moments {
    let fc = f.map(|x| x.conj());
    Moments { b: &fc * z, gram: &fc * f.transpose() }
}

/// Coefficients `c_L` in `Z(U) = sum_L c_L prod_{gamma in L} Tr(w_gamma(U))`,
/// estimated by least squares in `L^2(SU(2)^n, Haar)`.
///
/// The trace functions of distinct laminations are linearly independent
/// but not orthonormal, so the Gram matrix of the requested basis is
/// estimated along with the projections and the normal equations are
/// solved. Terms of `Z` outside the span of the requested basis bias the
/// result unless they are orthogonal to it.
pub fn haar_extract<F>(eval: F, laminations: &[Lamination], n: usize, mode: HaarMode) -> Result<Vec<HaarCoefficient>>
where
    F: Fn(&[Matrix2]) -> Result<Complex64> + Sync,
{
    for l in laminations {
        if let Some(c) = l.loops.iter().find(|c| c.max_generator() > n) {
            return Err(Error::NotExpressible(format!("{c} uses a generator beyond g{n}")));
        }
    }
    let err: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let call = |gens: &[Matrix2]| match eval(gens) {
        Ok(z) => z,
        Err(e) => {
            err.lock().unwrap().get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let len = laminations.len();
    let (coef, stderr) = match mode {
        HaarMode::Quadrature { degree } => {
            if n != 1 {
                return Err(Error::InvalidArgument("quadrature mode needs exactly one generator".into()));
            }
            let max_len = laminations.iter().map(|l| l.len()).max().unwrap_or(0);
            let nodes = weyl_nodes(degree.max(max_len) + max_len);
            let mut m = Moments { b: DVector::zeros(len), gram: DMatrix::zeros(len, len) };
            for (u, w) in &nodes {
                let gens = [*u];
                let s = sample_moments(call(&gens), &basis(laminations, &gens));
                m.b += s.b * Complex64::from(*w);
                m.gram += s.gram * Complex64::from(*w);
            }
            (solve(&m)?, vec![0.0; len])
        }
        HaarMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("need at least two samples".into()));
            }
            let zero = Moments { b: DVector::zeros(len), gram: DMatrix::zeros(len, len) };
            let m = chunked(samples, seed, n, zero, |gens| sample_moments(call(gens), &basis(laminations, gens)), add);
            let coef = solve(&m)?;
            // Delta method: the influence of one sample on c is
            // G^-1 conj(f) (z - f.c). A second pass over the same streams
            // accumulates its second moment.
            let ginv = (m.gram.clone() / Complex64::from(samples as f64))
                .try_inverse()
                .ok_or(Error::Singular)?;
            let coef_v = DVector::from_column_slice(&coef);
            let second = chunked(
                samples,
                seed,
                n,
                DVector::<f64>::zeros(len),
                |gens| {
                    let f = basis(laminations, gens);
                    let r = call(gens) - f.dot(&coef_v);
                    (&ginv * f.map(|x| x.conj()) * r).map(|x| x.norm_sqr())
                },
                |a, b| a + b,
            );
            let stderr = second.iter().map(|v| (v / samples as f64).sqrt() / (samples as f64).sqrt()).collect();
            (coef, stderr)
        }
    };
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(laminations
        .iter()
        .zip(coef)
        .zip(stderr)
        .map(|((l, value), stderr)| HaarCoefficient { lamination: l.to_string(), value, stderr })
        .collect())
}

fn solve(m: &Moments) -> Result<Vec<Complex64>> {
    if m.b.is_empty() {
        return Ok(Vec::new());
    }
    let x = m.gram.clone().lu().solve(&m.b).ok_or(Error::Singular)?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::LoopClass;

    fn powers(k: usize) -> Vec<Lamination> {
        (0..=k).map(|j| Lamination::parallel(LoopClass::generator(0), j)).collect()
    }

    #[test]
    fn catalan_moments_by_quadrature() {
        for (k, c) in [(0, 1.0), (2, 1.0), (4, 2.0), (6, 5.0), (8, 14.0), (3, 0.0)] {
            let (v, _) = su2_trace_moment(k, HaarMode::Quadrature { degree: 0 });
            assert!((v - c).abs() < 1e-12, "{k}: {v}");
        }
    }

    #[test]
    fn polynomial_coefficients_by_quadrature() {
        let coeffs: Vec<f64> = (0..=10).map(|j| (j as f64 * 0.7).sin() + 0.1 * j as f64).collect();
        let eval = |g: &[Matrix2]| {
            let x = g[0].trace();
            Ok(coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c))
        };
        let out = haar_extract(eval, &powers(10), 1, HaarMode::Quadrature { degree: 10 }).unwrap();
        for (o, c) in out.iter().zip(&coeffs) {
            assert!((o.value - c).norm() < 1e-8, "{} {}", o.value, c);
        }
    }

    #[test]
    fn constant_evaluator() {
        let c = Complex64::new(3.5, -1.0);
        let lams = powers(3);
        let out = haar_extract(|_| Ok(c), &lams, 1, HaarMode::Quadrature { degree: 3 }).unwrap();
        assert!((out[0].value - c).norm() < 1e-12);
        assert!(out[1..].iter().all(|o| o.value.norm() < 1e-12));
        let out = haar_extract(|_| Ok(c), &lams, 1, HaarMode::MonteCarlo { samples: 20_000, seed: 3 }).unwrap();
        assert!((out[0].value - c).norm() < 1e-9);
        assert!(out[1..].iter().all(|o| o.value.norm() < 1e-9));
    }

    #[test]
    fn two_generator_monte_carlo() {
        let lams = vec![
            Lamination::empty(),
            Lamination::new(vec![LoopClass::generator(0)]),
            Lamination::new(vec![LoopClass::from_letters(&[1, 2])]),
        ];
        let eval = |g: &[Matrix2]| Ok(Complex64::new(1.0, 0.0) + g[0].trace() * 2.0 - (g[0] * g[1]).trace());
        let out = haar_extract(eval, &lams, 2, HaarMode::MonteCarlo { samples: 20_000, seed: 1 }).unwrap();
        for (o, want) in out.iter().zip([1.0, 2.0, -1.0]) {
            assert!((o.value - want).norm() < 1e-9, "{}", o.value);
        }
        let bad = vec![Lamination::new(vec![LoopClass::generator(2)])];
        assert!(matches!(
            haar_extract(eval, &bad, 2, HaarMode::MonteCarlo { samples: 10, seed: 1 }),
            Err(Error::NotExpressible(_))
        ));
    }
}
