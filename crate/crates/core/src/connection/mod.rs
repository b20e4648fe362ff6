//! Flat `SL2(C)` connections supported on zippers.
//!
//! `transport(v, v')` is the matrix that multiplies `K(v, v')`; the
//! monodromy of a walk `v0 v1 ... vk` is the left-to-right product
//! `transport(v0, v1) transport(v1, v2) ... transport(v_{k-1}, vk)`.
//! A gauge `psi` acts by `transport'(v, v') = psi(v)^-1 transport(v, v') psi(v')`.

mod matrix;
mod zipper;

use std::collections::BTreeMap;

pub use matrix::Matrix2;
pub use zipper::{edges_crossing_polyline, make_zipper, make_zipper_from, segments_cross, Zipper, ZipperSpec};

use crate::error::{Error, Result};
use crate::lattice::{Dart, EdgeId, FaceId, PlanarGraph, VertexId};

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    ends: Vec<(VertexId, VertexId)>,
    zippers: Vec<Zipper>,
    gauge: Option<Vec<Matrix2>>,
    /// Forward transports that replace the zipper-derived value. Used for
    /// per-edge encodings of diagonal weights and for deliberately
    /// non-flat test connections.
    overrides: BTreeMap<EdgeId, Matrix2>,
}

/// A closed walk given as a dart sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub darts: Vec<Dart>,
}

impl Walk {
    pub fn new(darts: Vec<Dart>) -> Self {
        Walk { darts }
    }

    /// The walk through `vertices` (the first vertex is not repeated at the
    /// end); consecutive vertices are joined by their lowest-id edge.
    pub fn from_vertices(g: &PlanarGraph, vertices: &[VertexId]) -> Result<Self> {
        let k = vertices.len();
        if k < 2 {
            return Err(Error::OpenWalk);
        }
        let mut darts = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b) = (vertices[i], vertices[(i + 1) % k]);
            let e = g.edge_between(a, b).ok_or(Error::NotAdjacent(a, b))?;
            darts.push(g.dart_from(e, a));
        }
        Ok(Walk { darts })
    }

    pub fn face(g: &PlanarGraph, f: FaceId) -> Self {
        Walk { darts: g.faces()[f].darts.clone() }
    }

    pub fn reversed(&self) -> Self {
        Walk { darts: self.darts.iter().rev().map(|d| d.rev()).collect() }
    }

    pub fn vertices(&self, g: &PlanarGraph) -> Vec<VertexId> {
        self.darts.iter().map(|d| g.tail(*d)).collect()
    }

    pub fn check_closed(&self, g: &PlanarGraph) -> Result<()> {
        if self.darts.is_empty() {
            return Err(Error::OpenWalk);
        }
        if let Some(d) = self.darts.iter().find(|d| d.edge >= g.num_edges()) {
            return Err(Error::MissingEdge(d.edge));
        }
        let k = self.darts.len();
        for i in 0..k {
            if g.head(self.darts[i]) != g.tail(self.darts[(i + 1) % k]) {
                return Err(Error::OpenWalk);
            }
        }
        Ok(())
    }
}

/// Result of a flatness audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flatness {
    pub flat: bool,
    pub worst_face: Option<FaceId>,
    pub deviation: f64,
}

impl Connection {
    pub fn trivial(g: &PlanarGraph) -> Self {
        Connection {
            ends: g.edges().iter().map(|e| (e.u, e.v)).collect(),
            zippers: Vec::new(),
            gauge: None,
            overrides: BTreeMap::new(),
        }
    }

    pub fn from_zippers(g: &PlanarGraph, zippers: Vec<Zipper>) -> Result<Self> {
        for z in &zippers {
            if let Some(&e) = z.edges.iter().find(|&&e| e >= g.num_edges()) {
                return Err(Error::MissingEdge(e));
            }
        }
        Ok(Connection { zippers, ..Connection::trivial(g) })
    }

    pub fn from_specs(g: &PlanarGraph, specs: &[ZipperSpec]) -> Result<Self> {
        let zippers = specs.iter().map(|s| s.build(g)).collect::<Result<Vec<_>>>()?;
        Connection::from_zippers(g, zippers)
    }

    pub fn zippers(&self) -> &[Zipper] {
        &self.zippers
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn num_vertices_hint(&self) -> usize {
        self.ends.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0)
    }

    pub fn gauge(&self) -> Option<&[Matrix2]> {
        self.gauge.as_deref()
    }

    pub fn overrides(&self) -> &BTreeMap<EdgeId, Matrix2> {
        &self.overrides
    }

    /// Replaces the forward transport of `e` (before any gauge).
    pub fn with_override(mut self, e: EdgeId, m: Matrix2) -> Result<Self> {
        if e >= self.ends.len() {
            return Err(Error::MissingEdge(e));
        }
        if m.det().norm() == 0.0 {
            return Err(Error::Singular);
        }
        self.overrides.insert(e, m);
        Ok(self)
    }

    /// Same zippers with new matrices.
    pub fn with_matrices(&self, matrices: &[Matrix2]) -> Result<Self> {
        if matrices.len() != self.zippers.len() {
            return Err(Error::Mismatch(format!("{} matrices for {} zippers", matrices.len(), self.zippers.len())));
        }
        let mut out = self.clone();
        for (z, m) in out.zippers.iter_mut().zip(matrices) {
            m.check_unimodular(1e-10)?;
            z.matrix = *m;
        }
        Ok(out)
    }

    /// Forward transport `u -> v` of edge `e` before gauge.
    fn raw_forward(&self, e: EdgeId) -> Matrix2 {
        if let Some(m) = self.overrides.get(&e) {
            return *m;
        }
        let (u, _) = self.ends[e];
        let mut m = Matrix2::identity();
        for z in &self.zippers {
            if let Some(i) = z.position(e) {
                let step = if z.left[i] == u { z.matrix } else { z.matrix.qconj() };
                m = m * step;
            }
        }
        m
    }

    /// Parallel transport along dart `d` (from its tail to its head).
    pub fn transport(&self, d: Dart) -> Matrix2 {
        let (u, v) = self.ends[d.edge];
        let mut fwd = self.raw_forward(d.edge);
        if let Some(psi) = &self.gauge {
            fwd = psi[u].qconj() * fwd * psi[v];
        }
        if d.forward {
            fwd
        } else {
            inverse_transport(fwd)
        }
    }

    /// Transport from `a` to `b` along edge `e`.
    pub fn transport_between(&self, e: EdgeId, a: VertexId) -> Result<Matrix2> {
        let (u, v) = *self.ends.get(e).ok_or(Error::MissingEdge(e))?;
        if a == u {
            Ok(self.transport(Dart::new(e, true)))
        } else if a == v {
            Ok(self.transport(Dart::new(e, false)))
        } else {
            Err(Error::NotAdjacent(a, e))
        }
    }

    pub fn monodromy(&self, g: &PlanarGraph, walk: &Walk) -> Result<Matrix2> {
        if g.num_edges() != self.ends.len() {
            return Err(Error::Mismatch("connection built on another graph".into()));
        }
        walk.check_closed(g)?;
        Ok(walk.darts.iter().map(|d| self.transport(*d)).product())
    }

    /// Applies the gauge `psi`, one unimodular matrix per vertex.
    pub fn gauge_transform(&self, psi: &[Matrix2]) -> Result<Self> {
        let needed = self.num_vertices_hint();
        if psi.len() < needed {
            return Err(Error::Mismatch(format!("gauge has {} entries, graph needs {needed}", psi.len())));
        }
        for p in psi {
            p.check_unimodular(1e-10)?;
        }
        let composed = match &self.gauge {
            Some(old) => old.iter().zip(psi).map(|(a, b)| *a * *b).collect(),
            None => psi.to_vec(),
        };
        Ok(Connection { gauge: Some(composed), ..self.clone() })
    }

    /// Faces excluded from the flatness audit: boundary faces and the end
    /// faces of every zipper (the punctures carrying the monodromy).
    pub fn punctures(&self, g: &PlanarGraph) -> Vec<FaceId> {
        let mut out: Vec<FaceId> = g.faces().iter().enumerate().filter(|(_, f)| f.boundary).map(|(i, _)| i).collect();
        for z in &self.zippers {
            out.push(z.start_face());
            out.push(z.end_face());
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn check_flat(&self, g: &PlanarGraph) -> Flatness {
        let skip = self.punctures(g);
        let mut worst = (None, 0.0);
        for f in 0..g.faces().len() {
            if skip.binary_search(&f).is_ok() {
                continue;
            }
            let m = self.monodromy(g, &Walk::face(g, f)).expect("face cycles are closed");
            let dev = m.dist(&Matrix2::identity());
            if dev > worst.1 {
                worst = (Some(f), dev);
            }
        }
        Flatness { flat: worst.1 <= 1e-10, worst_face: worst.0, deviation: worst.1 }
    }

    /// Deviation of every non-puncture face, for localizing a defect.
    pub fn face_deviations(&self, g: &PlanarGraph) -> Vec<(FaceId, f64)> {
        let skip = self.punctures(g);
        (0..g.faces().len())
            .filter(|f| skip.binary_search(f).is_err())
            .map(|f| (f, self.monodromy(g, &Walk::face(g, f)).unwrap().dist(&Matrix2::identity())))
            .collect()
    }

    /// The connection whose zipper matrices are `exp(t log target)`.
    pub fn connection_path(&self, t: f64, targets: &[Matrix2]) -> Result<Self> {
        let logs = targets.iter().map(|m| m.log()).collect::<Result<Vec<_>>>()?;
        let mats: Vec<Matrix2> = logs.iter().map(|l| l.scale(t.into()).exp()).collect();
        let mut out = self.with_matrices(&mats)?;
        // Exact endpoints regardless of rounding in exp(log(.)).
        if t == 0.0 {
            out = self.with_matrices(&vec![Matrix2::identity(); targets.len()])?;
        } else if t == 1.0 {
            out = self.with_matrices(targets)?;
        }
        Ok(out)
    }

    /// Derivative of the transport along `d` when zipper `z` moves along
    /// `A exp(s B)` at `s = 0`. Zero off the zipper and on overridden edges.
    pub fn transport_derivative(&self, d: Dart, z: usize, direction: &Matrix2) -> Matrix2 {
        if self.overrides.contains_key(&d.edge) || self.zippers[z].position(d.edge).is_none() {
            return Matrix2::zero();
        }
        let (u, v) = self.ends[d.edge];
        // Factors of the forward transport with their derivatives.
        let steps: Vec<(Matrix2, Matrix2)> = self
            .zippers
            .iter()
            .enumerate()
            .filter_map(|(k, zz)| {
                let j = zz.position(d.edge)?;
                let (m, dm) = if zz.left[j] == u {
                    (zz.matrix, zz.matrix * *direction)
                } else {
                    (zz.matrix.qconj(), -(*direction * zz.matrix.qconj()))
                };
                Some((m, if k == z { dm } else { Matrix2::zero() }))
            })
            .collect();
        let mut fwd_dot = Matrix2::zero();
        for i in 0..steps.len() {
            let before: Matrix2 = steps[..i].iter().map(|s| s.0).product();
            let after: Matrix2 = steps[i + 1..].iter().map(|s| s.0).product();
            fwd_dot = fwd_dot + before * steps[i].1 * after;
        }
        if let Some(psi) = &self.gauge {
            fwd_dot = psi[u].qconj() * fwd_dot * psi[v];
        }
        if d.forward {
            fwd_dot
        } else {
            let finv = self.transport(d);
            -(finv * fwd_dot * finv)
        }
    }
}

fn inverse_transport(m: Matrix2) -> Matrix2 {
    let det = m.det();
    if (det - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12 {
        m.qconj()
    } else {
        m.inv().expect("transports are invertible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{cylinder_axis_cut, cylinder_graph};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn girth(g: &PlanarGraph, n: usize, y: usize) -> Walk {
        let verts: Vec<usize> = (0..2 * n).map(|x| (y - 1) * 2 * n + x).collect();
        let darts = verts
            .iter()
            .map(|&v| {
                let e = g.darts_at(v).iter().find(|d| d.forward && g.dart_disp(**d) == Complex64::new(1.0, 0.0));
                *e.unwrap()
            })
            .collect();
        Walk::new(darts)
    }

    #[test]
    fn cylinder_girth_trace() {
        let lambda = Complex64::new(1.7, 0.3);
        for (n, m) in [(1, 1), (3, 2), (5, 3)] {
            let g = cylinder_graph(n, m).unwrap();
            let z = make_zipper(&g, &cylinder_axis_cut(n, m, 0), Matrix2::diag(lambda)).unwrap();
            let conn = Connection::from_zippers(&g, vec![z]).unwrap();
            assert!(conn.check_flat(&g).flat);
            for y in 1..=m {
                let mono = conn.monodromy(&g, &girth(&g, n, y)).unwrap();
                assert!((mono.trace() - (lambda + lambda.inv())).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_zippers_compose() {
        // 4x3 grid; zippers from the bottom into the two central squares.
        let g = PlanarGraph::grid(4, 3).unwrap();
        let e1 = edges_crossing_polyline(&g, &[Complex64::new(0.5, -0.5), Complex64::new(0.5, 0.5)]);
        let e2 = edges_crossing_polyline(&g, &[Complex64::new(2.5, -0.5), Complex64::new(2.5, 0.5)]);
        let eps = 0.3;
        let a = Matrix2::real(1.0, eps, 0.0, 1.0);
        let b = Matrix2::real(1.0, 0.0, eps, 1.0);
        let conn =
            Connection::from_zippers(&g, vec![make_zipper(&g, &e1, a).unwrap(), make_zipper(&g, &e2, b).unwrap()])
                .unwrap();
        assert!(conn.check_flat(&g).flat);
        // The boundary of the block [0,3]x[0,1] crosses both zippers.
        let cycle = Walk::from_vertices(&g, &[0, 1, 2, 3, 7, 6, 5, 4]).unwrap();
        let t = conn.monodromy(&g, &cycle).unwrap().trace();
        assert!((t - Complex64::new(2.0 + eps * eps, 0.0)).norm() < 1e-12, "{t}");
    }

    #[test]
    fn perturbed_edge_breaks_two_faces() {
        let g = PlanarGraph::grid(3, 3).unwrap();
        let conn = Connection::trivial(&g);
        assert_eq!(conn.check_flat(&g).deviation, 0.0);
        // Edge (1,1)-(2,1) is interior and borders two squares.
        let e = g.edge_between(4, 5).unwrap();
        let bad = conn.with_override(e, Matrix2::diag(Complex64::new(2.0, 0.0))).unwrap();
        let fl = bad.check_flat(&g);
        assert!(!fl.flat);
        let broken: Vec<_> = bad.face_deviations(&g).into_iter().filter(|x| x.1 > 1e-10).collect();
        assert_eq!(broken.len(), 2);
    }

    #[test]
    fn gauge_preserves_traces_and_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = cylinder_graph(3, 2).unwrap();
        let z = make_zipper(&g, &cylinder_axis_cut(3, 2, 2), Matrix2::random_sl2(&mut rng)).unwrap();
        let conn = Connection::from_zippers(&g, vec![z]).unwrap();
        let psi: Vec<Matrix2> = (0..g.num_vertices()).map(|_| Matrix2::random_sl2(&mut rng)).collect();
        let gauged = conn.gauge_transform(&psi).unwrap();
        for y in 1..=2 {
            let w = girth(&g, 3, y);
            let before = conn.monodromy(&g, &w).unwrap().trace();
            let after = gauged.monodromy(&g, &w).unwrap().trace();
            assert!((before - after).norm() < 1e-9);
        }
        let mut single = vec![Matrix2::identity(); g.num_vertices()];
        single[4] = Matrix2::random_sl2(&mut rng);
        let local = conn.gauge_transform(&single).unwrap();
        for e in g.edges() {
            let d = Dart::new(e.id, true);
            let changed = local.transport(d).dist(&conn.transport(d)) > 1e-14;
            assert_eq!(changed, e.u == 4 || e.v == 4, "edge {}", e.id);
        }
    }

    #[test]
    fn path_endpoints_and_midpoint() {
        let g = cylinder_graph(1, 2).unwrap();
        let z = make_zipper(&g, &cylinder_axis_cut(1, 2, 0), Matrix2::identity()).unwrap();
        let conn = Connection::from_zippers(&g, vec![z]).unwrap();
        let target = [Matrix2::diag(Complex64::new(9.0, 0.0))];
        assert_eq!(conn.connection_path(0.0, &target).unwrap().zippers()[0].matrix, Matrix2::identity());
        assert_eq!(conn.connection_path(1.0, &target).unwrap().zippers()[0].matrix, target[0]);
        let half = conn.connection_path(0.5, &target).unwrap().zippers()[0].matrix;
        assert!(half.dist(&Matrix2::diag(Complex64::new(3.0, 0.0))) < 1e-13);
        let cut = [Matrix2::diag(Complex64::new(-3.0, 0.0))];
        assert_eq!(conn.connection_path(0.5, &cut), Err(Error::BranchCut));
    }

    #[test]
    fn open_walk_rejected() {
        let g = PlanarGraph::grid(2, 2).unwrap();
        let conn = Connection::trivial(&g);
        let w = Walk::new(vec![Dart::new(0, true)]);
        assert_eq!(conn.monodromy(&g, &w), Err(Error::OpenWalk));
    }
}
