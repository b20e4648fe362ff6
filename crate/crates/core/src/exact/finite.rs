use num_complex::Complex64;

use crate::connection::{edges_crossing_polyline, make_zipper, Connection, Matrix2, Zipper};
use crate::error::{Error, Result};
use crate::kasteleyn::{assemble, wrap_log, SignedWeights};
use crate::lattice::{FaceId, PlanarGraph};

/// Step of the mixed difference quotient in [`surrounding_both_expectation`].
const PHASE_STEP: f64 = 1e-3;

/// Zipper from bounded face `f` straight down to the outer face.
pub fn downward_zipper(g: &PlanarGraph, f: FaceId, matrix: Matrix2) -> Result<Zipper> {
    let face = g.faces().get(f).ok_or_else(|| Error::InvalidArgument(format!("no face {f}")))?;
    if face.boundary {
        return Err(Error::InvalidArgument(format!("face {f} is a boundary face")));
    }
    let c = g.face_centroid(f);
    let floor = g.vertices().iter().map(|v| v.pos.im).fold(f64::INFINITY, f64::min);
    let edges = edges_crossing_polyline(g, &[c, Complex64::new(c.re, floor - 1.0)]);
    make_zipper(g, &edges, matrix)
}

/// Expected number of loops surrounding both faces under the natural
/// double-dimer measure, on a finite planar graph.
///
/// With commuting transports `diag(e^{ia}, e^{-ia})` and `diag(e^{ib},
/// e^{-ib})` on the two downward zippers, a loop contributes
/// `cos(w1 a + w2 b)` to `Z(a, b) / Z(0, 0)`, where `w1, w2` are its
/// windings. The mixed second derivative of `log Z` at the origin is
/// therefore minus the expected number of loops with `w1 w2 = 1`.
pub fn surrounding_both_expectation(g: &PlanarGraph, sw: &SignedWeights, f1: FaceId, f2: FaceId) -> Result<f64> {
    if f1 == f2 {
        return Err(Error::InvalidArgument("the two faces must differ".into()));
    }
    let z1 = downward_zipper(g, f1, Matrix2::identity())?;
    let z2 = downward_zipper(g, f2, Matrix2::identity())?;
    let conn = Connection::from_zippers(g, vec![z1, z2])?;
    let log_det = |a: f64, b: f64| -> Result<Complex64> {
        let phase = |t: f64| Matrix2::diag(Complex64::from_polar(1.0, t));
        assemble(g, sw, &conn.with_matrices(&[phase(a), phase(b)])?)?.log_det_tilde()
    };
    let h = PHASE_STEP;
    let base = log_det(0.0, 0.0)?;
    let mut mixed = Complex64::new(0.0, 0.0);
    for (sa, sb, s) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
        mixed += wrap_log(log_det(sa * h, sb * h)? - base) * s;
    }
    // det K~ is the square of the partition function.
    Ok(-(mixed.re / (4.0 * h * h)) / 2.0)
}
