use serde::{Deserialize, Serialize};

use super::matrix::Matrix2;
use crate::error::{Error, Result};
use crate::lattice::{Color, Dart, EdgeId, FaceId, PlanarGraph, VertexId};

/// A simple dual path carrying a constant transport.
///
/// The path visits faces `faces[0], ..., faces[k]`, crossing `edges[i]` from
/// `faces[i]` to `faces[i + 1]`. Parallel transport across a crossing edge
/// from the vertex on the left of the path to the vertex on the right is
/// `matrix`, and the reverse transport is its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Zipper {
    pub edges: Vec<EdgeId>,
    pub faces: Vec<FaceId>,
    /// Endpoint of each crossing edge on the left of the path direction.
    pub left: Vec<VertexId>,
    /// `+1` when the left endpoint is white, `-1` otherwise.
    pub signs: Vec<i8>,
    pub matrix: Matrix2,
}

/// Serialized zipper: the ordered crossed edges and the transport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipperSpec {
    pub edges: Vec<EdgeId>,
    /// Face the path starts from; only needed for one-edge paths, where it
    /// cannot be read off the edge sequence.
    #[serde(default)]
    pub start_face: Option<FaceId>,
    pub matrix: Matrix2,
}

impl ZipperSpec {
    pub fn build(&self, g: &PlanarGraph) -> Result<Zipper> {
        make_zipper_from(g, self.start_face, &self.edges, self.matrix)
    }
}

fn faces_of(g: &PlanarGraph, e: EdgeId) -> Result<(FaceId, FaceId)> {
    if e >= g.num_edges() {
        return Err(Error::MissingEdge(e));
    }
    let l = g.face_of(Dart::new(e, true)).ok_or(Error::MissingEdge(e))?;
    let r = g.face_of(Dart::new(e, false)).ok_or(Error::MissingEdge(e))?;
    Ok((l, r))
}

/// Builds a zipper along the dual path crossing `edges` in order.
///
/// The starting face is the face of the first edge not shared with the
/// second. For a single edge the path starts on the right of its forward
/// dart; use [`make_zipper_from`] to choose otherwise.
pub fn make_zipper(g: &PlanarGraph, edges: &[EdgeId], matrix: Matrix2) -> Result<Zipper> {
    make_zipper_from(g, None, edges, matrix)
}

pub fn make_zipper_from(
    g: &PlanarGraph,
    start_face: Option<FaceId>,
    edges: &[EdgeId],
    matrix: Matrix2,
) -> Result<Zipper> {
    matrix.check_unimodular(1e-12)?;
    let first = *edges.first().ok_or_else(|| Error::NonSimpleDualPath("empty path".into()))?;
    let (l0, r0) = faces_of(g, first)?;
    let start = match start_face {
        Some(f) if f == l0 || f == r0 => f,
        Some(f) => return Err(Error::NonSimpleDualPath(format!("face {f} is not adjacent to edge {first}"))),
        None if edges.len() == 1 => r0,
        None => {
            let (l1, r1) = faces_of(g, edges[1])?;
            match (l0 == l1 || l0 == r1, r0 == l1 || r0 == r1) {
                (true, false) => r0,
                (false, true) => l0,
                _ => {
                    return Err(Error::NonSimpleDualPath(format!(
                        "cannot orient the path at edges {first} and {}",
                        edges[1]
                    )))
                }
            }
        }
    };

    let mut faces = vec![start];
    let mut left = Vec::with_capacity(edges.len());
    let mut signs = Vec::with_capacity(edges.len());
    for &e in edges {
        let (l, r) = faces_of(g, e)?;
        let here = *faces.last().unwrap();
        if l == r {
            return Err(Error::NonSimpleDualPath(format!("edge {e} has the same face on both sides")));
        }
        // The dart with the current face on its left points to the left of
        // the path direction.
        let (dart, next) = if here == l {
            (Dart::new(e, true), r)
        } else if here == r {
            (Dart::new(e, false), l)
        } else {
            return Err(Error::NonSimpleDualPath(format!("edge {e} does not border face {here}")));
        };
        if faces.contains(&next) {
            return Err(Error::NonSimpleDualPath(format!("face {next} visited twice")));
        }
        let v = g.head(dart);
        left.push(v);
        signs.push(if g.color(v) == Some(Color::White) { 1 } else { -1 });
        faces.push(next);
    }
    Ok(Zipper { edges: edges.to_vec(), faces, left, signs, matrix })
}

impl Zipper {
    pub fn start_face(&self) -> FaceId {
        self.faces[0]
    }

    pub fn end_face(&self) -> FaceId {
        *self.faces.last().unwrap()
    }

    pub fn position(&self, e: EdgeId) -> Option<usize> {
        self.edges.iter().position(|&x| x == e)
    }

    pub fn spec(&self) -> ZipperSpec {
        ZipperSpec { edges: self.edges.clone(), start_face: Some(self.faces[0]), matrix: self.matrix }
    }

    /// `+1` if `tail -> head` of `d` crosses left to right, `-1` for right to
    /// left, `0` if `d` is not on the zipper.
    pub fn crossing(&self, g: &PlanarGraph, d: Dart) -> i32 {
        match self.position(d.edge) {
            Some(i) if g.tail(d) == self.left[i] => 1,
            Some(_) => -1,
            None => 0,
        }
    }
}

/// True when segment `p0 p1` properly crosses segment `q0 q1`.
pub fn segments_cross(
    p0: num_complex::Complex64,
    p1: num_complex::Complex64,
    q0: num_complex::Complex64,
    q1: num_complex::Complex64,
) -> bool {
    let orient = |a: num_complex::Complex64, b: num_complex::Complex64, c: num_complex::Complex64| {
        let v = (b - a).conj() * (c - a);
        v.im
    };
    let (d1, d2) = (orient(q0, q1, p0), orient(q0, q1, p1));
    let (d3, d4) = (orient(p0, p1, q0), orient(p0, p1, q1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Edges crossed by the polyline `points`, ordered along it. Intended for
/// straight zippers drawn between face centers on grid graphs; edges that
/// wrap around the cylinder are tested with their unwrapped displacement.
pub fn edges_crossing_polyline(g: &PlanarGraph, points: &[num_complex::Complex64]) -> Vec<EdgeId> {
    let mut hits: Vec<(usize, f64, EdgeId)> = Vec::new();
    for (s, seg) in points.windows(2).enumerate() {
        for e in g.edges() {
            let p = g.vertices()[e.u].pos;
            let q = p + e.disp;
            if segments_cross(seg[0], seg[1], p, q) {
                let mid = (p + q) / 2.0;
                let t = ((mid - seg[0]) * (seg[1] - seg[0]).conj()).re / (seg[1] - seg[0]).norm_sqr();
                hits.push((s, t, e.id));
            }
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    hits.into_iter().map(|h| h.2).collect()
}
