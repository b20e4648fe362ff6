use num_complex::Complex64;

use super::linalg::wrap_log;
use super::matrix::{assemble, KMatrix};
use super::signs::SignedWeights;
use crate::connection::{Connection, Matrix2};
use crate::error::{Error, Result};
use crate::lattice::{Dart, EdgeId, PlanarGraph};

/// Derivative `S~ = dK~/ds` when zipper `z` moves along `A exp(s B)`.
pub fn perturbation(
    g: &PlanarGraph,
    sw: &SignedWeights,
    conn: &Connection,
    z: usize,
    direction: &Matrix2,
) -> Result<KMatrix> {
    let zip = conn.zippers().get(z).ok_or_else(|| Error::InvalidArgument(format!("no zipper {z}")))?;
    let mut s = KMatrix::zeros(g.num_vertices());
    for &e in &zip.edges {
        let edge = &g.edges()[e];
        let w = sw.values[e];
        s.add_block(edge.u, edge.v, conn.transport_derivative(Dart::new(e, true), z, direction).scale(w));
        s.add_block(edge.v, edge.u, conn.transport_derivative(Dart::new(e, false), z, direction).scale(w));
    }
    Ok(s)
}

/// `d/ds log det K~ = Tr(S~ K~^-1)`.
pub fn logdet_derivative(k: &KMatrix, s: &KMatrix) -> Result<Complex64> {
    if s.tilde.iter().all(|z| z.norm() == 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let inv = k.inverse()?;
    Ok(trace_product(&s.tilde, &inv.tilde))
}

/// `Tr(A B)` without forming the product.
fn trace_product(a: &super::linalg::CMatrix, b: &super::linalg::CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            if x.norm() != 0.0 {
                acc += x * b[(j, i)];
            }
        }
    }
    acc
}

/// Centered difference `(log det K~(h) - log det K~(-h)) / 2h` along
/// `A_z exp(s B)`.
pub fn logdet_finite_difference(
    g: &PlanarGraph,
    sw: &SignedWeights,
    conn: &Connection,
    z: usize,
    direction: &Matrix2,
    h: f64,
) -> Result<Complex64> {
    let at = |s: f64| -> Result<Complex64> {
        let mut mats: Vec<Matrix2> = conn.zippers().iter().map(|zz| zz.matrix).collect();
        mats[z] = mats[z] * direction.scale(s.into()).exp();
        let c = conn.with_matrices(&mats)?;
        assemble(g, sw, &c)?.log_det_tilde()
    };
    Ok(wrap_log(at(h)? - at(-h)?) / (2.0 * h))
}

/// Per-edge 2x2 summand `S(u,v) K^-1(v,u) + S(v,u) K^-1(u,v)`; its trace
/// is the contribution of edge `e` to [`logdet_derivative`].
pub fn zipper_edge_contribution(
    g: &PlanarGraph,
    conn: &Connection,
    z: usize,
    s: &KMatrix,
    k_inv: &KMatrix,
    e: EdgeId,
) -> Result<Matrix2> {
    let zip = conn.zippers().get(z).ok_or_else(|| Error::InvalidArgument(format!("no zipper {z}")))?;
    if zip.position(e).is_none() {
        return Err(Error::NotOnZipper(e));
    }
    let edge = &g.edges()[e];
    let (u, v) = (edge.u, edge.v);
    Ok(s.block(u, v) * k_inv.block(v, u) + s.block(v, u) * k_inv.block(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::make_zipper;
    use crate::kasteleyn::kasteleyn_signs;
    use crate::lattice::{cylinder_axis_cut, cylinder_graph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = cylinder_graph(3, 2).unwrap();
        let sw = kasteleyn_signs(&g).unwrap();
        let z = make_zipper(&g, &cylinder_axis_cut(3, 2, 1), Matrix2::random_sl2(&mut rng)).unwrap();
        let conn = Connection::from_zippers(&g, vec![z]).unwrap();
        let k = assemble(&g, &sw, &conn).unwrap();
        let k_inv = k.inverse().unwrap();
        for _ in 0..3 {
            let b = Matrix2::random_traceless(&mut rng);
            let s = perturbation(&g, &sw, &conn, 0, &b).unwrap();
            let exact = logdet_derivative(&k, &s).unwrap();
            let fd = logdet_finite_difference(&g, &sw, &conn, 0, &b, 1e-4).unwrap();
            assert!((exact - fd).norm() <= 1e-6 * exact.norm(), "{exact} vs {fd}");
            let total: Complex64 = conn.zippers()[0]
                .edges
                .iter()
                .map(|&e| zipper_edge_contribution(&g, &conn, 0, &s, &k_inv, e).unwrap().trace())
                .sum();
            assert!((total - exact).norm() < 1e-9 * exact.norm().max(1.0));
        }
        let zero = perturbation(&g, &sw, &conn, 0, &Matrix2::zero()).unwrap();
        assert_eq!(logdet_derivative(&k, &zero).unwrap(), Complex64::new(0.0, 0.0));
        let off = g.edges().iter().find(|e| conn.zippers()[0].position(e.id).is_none()).unwrap().id;
        assert_eq!(
            zipper_edge_contribution(&g, &conn, 0, &zero, &k_inv, off),
            Err(Error::NotOnZipper(off))
        );
    }
}
