//! Combinatorial embedding of a finite planar (multi)graph.
//!
//! Every edge carries its own id and a displacement vector from its first to
//! its second endpoint. The displacement, not the endpoint positions, defines
//! the rotation system; this is what lets the cylinder graph wrap around
//! while still being traced with ordinary planar face walks.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexClass {
    Plain,
    Black,
    White,
    /// Temperleyan black vertex sitting on a region vertex.
    B0,
    /// Temperleyan black vertex sitting on a square face.
    B1,
    /// Temperleyan white vertex on a horizontal region edge.
    W0,
    /// Temperleyan white vertex on a vertical region edge.
    W1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    Black,
    White,
}

impl VertexClass {
    pub fn color(self) -> Option<Color> {
        match self {
            VertexClass::Plain => None,
            VertexClass::Black | VertexClass::B0 | VertexClass::B1 => Some(Color::Black),
            VertexClass::White | VertexClass::W0 | VertexClass::W1 => Some(Color::White),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    Disk,
    MultiplyConnected,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub pos: Complex64,
    pub class: VertexClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    /// Displacement from `u` to `v` in lattice units.
    pub disp: Complex64,
}

/// A directed edge. `forward` means `u -> v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dart {
    pub edge: EdgeId,
    pub forward: bool,
}

impl Dart {
    pub fn new(edge: EdgeId, forward: bool) -> Self {
        Dart { edge, forward }
    }

    pub fn rev(self) -> Self {
        Dart { edge: self.edge, forward: !self.forward }
    }

    fn index(self) -> usize {
        2 * self.edge + usize::from(!self.forward)
    }

    fn from_index(i: usize) -> Self {
        Dart { edge: i / 2, forward: i % 2 == 0 }
    }
}

/// A face cycle: the face lies to the left of every dart.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub darts: Vec<Dart>,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct PlanarGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    surface: Surface,
    /// Outgoing darts per vertex, counterclockwise.
    rotation: Vec<Vec<Dart>>,
    /// Face to the left of each dart, indexed by `Dart::index`.
    dart_face: Vec<Option<FaceId>>,
    by_position: HashMap<(i64, i64), VertexId>,
}

fn position_key(p: Complex64) -> (i64, i64) {
    ((2.0 * p.re).round() as i64, (2.0 * p.im).round() as i64)
}

impl PlanarGraph {
    /// Builds the embedding from vertex positions and edge displacements.
    ///
    /// A face is flagged as boundary when it is the outer face (negative
    /// signed area), when it wraps around the cylinder axis, or when it
    /// contains one of `hole_points`.
    pub fn from_embedding(
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        surface: Surface,
        hole_points: &[Complex64],
    ) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidGraph(format!("vertex {i} has id {}", v.id)));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(Error::InvalidGraph(format!("edge {i} has id {}", e.id)));
            }
            if e.u >= vertices.len() || e.v >= vertices.len() {
                return Err(Error::InvalidGraph(format!("edge {i} has a dangling endpoint")));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("edge {i} is a loop")));
            }
            if e.disp.norm() < 1e-12 {
                return Err(Error::InvalidGraph(format!("edge {i} has zero displacement")));
            }
        }

        let mut rotation: Vec<Vec<Dart>> = vec![Vec::new(); vertices.len()];
        for e in &edges {
            rotation[e.u].push(Dart::new(e.id, true));
            rotation[e.v].push(Dart::new(e.id, false));
        }
        let angle = |d: &Dart| {
            let e = &edges[d.edge];
            let w = if d.forward { e.disp } else { -e.disp };
            let a = w.im.atan2(w.re);
            if a < 0.0 {
                a + std::f64::consts::TAU
            } else {
                a
            }
        };
        for darts in rotation.iter_mut() {
            darts.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then(a.cmp(b)));
            for w in darts.windows(2) {
                if (angle(&w[0]) - angle(&w[1])).abs() < 1e-12 {
                    return Err(Error::InvalidGraph(format!(
                        "edges {} and {} leave a vertex in the same direction",
                        w[0].edge, w[1].edge
                    )));
                }
            }
        }

        let mut g = PlanarGraph {
            by_position: vertices.iter().map(|v| (position_key(v.pos), v.id)).collect(),
            vertices,
            edges,
            faces: Vec::new(),
            surface,
            rotation,
            dart_face: Vec::new(),
        };
        g.trace_faces(hole_points);
        Ok(g)
    }

    /// Rebuilds a graph from explicit face cycles (as read from a file).
    /// The rotation system is still derived from the displacements; the
    /// faces are taken as given so that `validate_embedding` can audit them.
    pub fn from_parts(
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        faces: Vec<Face>,
        surface: Surface,
    ) -> Result<Self> {
        let mut g = Self::from_embedding(vertices, edges, surface, &[])?;
        g.faces = faces;
        g.rebuild_dart_faces();
        Ok(g)
    }

    fn next_in_face(&self, d: Dart) -> Dart {
        let b = self.head(d);
        let rot = &self.rotation[b];
        let r = d.rev();
        let idx = rot.iter().position(|x| *x == r).expect("dart in rotation");
        rot[(idx + rot.len() - 1) % rot.len()]
    }

    fn trace_faces(&mut self, hole_points: &[Complex64]) {
        let n_darts = 2 * self.edges.len();
        let mut seen = vec![false; n_darts];
        let mut faces = Vec::new();
        for start in 0..n_darts {
            if seen[start] {
                continue;
            }
            let mut darts = Vec::new();
            let mut d = Dart::from_index(start);
            loop {
                seen[d.index()] = true;
                darts.push(d);
                d = self.next_in_face(d);
                if d.index() == start {
                    break;
                }
            }
            let boundary = self.classify_boundary(&darts, hole_points);
            faces.push(Face { darts, boundary });
        }
        self.faces = faces;
        self.rebuild_dart_faces();
    }

    fn rebuild_dart_faces(&mut self) {
        let mut dart_face = vec![None; 2 * self.edges.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for d in &face.darts {
                if d.edge < self.edges.len() {
                    dart_face[d.index()] = Some(f);
                }
            }
        }
        self.dart_face = dart_face;
    }

    fn classify_boundary(&self, darts: &[Dart], hole_points: &[Complex64]) -> bool {
        let mut p = self.vertices[self.tail(darts[0])].pos;
        let mut poly = vec![p];
        let mut wrap = Complex64::new(0.0, 0.0);
        for &d in darts {
            let w = self.dart_disp(d);
            wrap += w;
            p += w;
            poly.push(p);
        }
        if wrap.norm() > 1e-9 {
            return true;
        }
        let area: f64 = poly.windows(2).map(|s| s[0].re * s[1].im - s[1].re * s[0].im).sum::<f64>() / 2.0;
        if area < 1e-12 {
            return true;
        }
        hole_points.iter().any(|&h| winding_number(&poly, h) != 0)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Mutable access to the face list, used to audit corrupted embeddings.
    pub fn faces_mut(&mut self) -> &mut Vec<Face> {
        &mut self.faces
    }

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tail(&self, d: Dart) -> VertexId {
        let e = &self.edges[d.edge];
        if d.forward {
            e.u
        } else {
            e.v
        }
    }

    pub fn head(&self, d: Dart) -> VertexId {
        self.tail(d.rev())
    }

    pub fn dart_disp(&self, d: Dart) -> Complex64 {
        let e = &self.edges[d.edge];
        if d.forward {
            e.disp
        } else {
            -e.disp
        }
    }

    /// Face to the left of `d`.
    pub fn face_of(&self, d: Dart) -> Option<FaceId> {
        self.dart_face.get(d.index()).copied().flatten()
    }

    /// Outgoing darts at `v`, counterclockwise.
    pub fn darts_at(&self, v: VertexId) -> &[Dart] {
        &self.rotation[v]
    }

    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let edge = &self.edges[e];
        if edge.u == v {
            edge.v
        } else {
            edge.u
        }
    }

    /// The dart of `e` leaving `v`.
    pub fn dart_from(&self, e: EdgeId, v: VertexId) -> Dart {
        Dart::new(e, self.edges[e].u == v)
    }

    /// Lowest-id edge joining `a` and `b`.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.rotation
            .get(a)?
            .iter()
            .filter(|d| self.head(**d) == b)
            .map(|d| d.edge)
            .min()
    }

    pub fn color(&self, v: VertexId) -> Option<Color> {
        self.vertices[v].class.color()
    }

    pub fn is_bipartite(&self) -> bool {
        !self.vertices.is_empty()
            && self.vertices.iter().all(|v| v.class.color().is_some())
            && self.edges.iter().all(|e| self.color(e.u) != self.color(e.v))
    }

    pub fn whites(&self) -> Vec<VertexId> {
        self.vertices.iter().filter(|v| v.class.color() == Some(Color::White)).map(|v| v.id).collect()
    }

    pub fn blacks(&self) -> Vec<VertexId> {
        self.vertices.iter().filter(|v| v.class.color() == Some(Color::Black)).map(|v| v.id).collect()
    }

    /// Vertex at position `(x, y)` in lattice units (half-integers allowed).
    pub fn vertex_at(&self, x: f64, y: f64) -> Option<VertexId> {
        self.by_position.get(&position_key(Complex64::new(x, y))).copied()
    }

    /// Geometric centroid of a face's vertex positions, unwrapped along the walk.
    pub fn face_centroid(&self, f: FaceId) -> Complex64 {
        let face = &self.faces[f];
        let mut p = self.vertices[self.tail(face.darts[0])].pos;
        let mut sum = Complex64::new(0.0, 0.0);
        for &d in &face.darts {
            sum += p;
            p += self.dart_disp(d);
        }
        sum / face.darts.len() as f64
    }

    pub fn bounded_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.faces.iter().enumerate().filter(|(_, f)| !f.boundary).map(|(i, _)| i)
    }

    pub fn connected_components(&self) -> usize {
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = count;
            while let Some(v) = stack.pop() {
                for d in &self.rotation[v] {
                    let w = self.head(*d);
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        count
    }

    /// A single edge between a white and a black vertex.
    pub fn single_edge() -> Self {
        let vertices = vec![
            Vertex { id: 0, pos: Complex64::new(0.0, 0.0), class: VertexClass::White },
            Vertex { id: 1, pos: Complex64::new(1.0, 0.0), class: VertexClass::Black },
        ];
        let edges = vec![Edge { id: 0, u: 0, v: 1, disp: Complex64::new(1.0, 0.0) }];
        Self::from_embedding(vertices, edges, Surface::Disk, &[]).expect("single edge")
    }

    /// The `cols x rows` vertex grid graph, checkerboard colored with the
    /// origin black. Vertices are row-major; edges are row-major with the
    /// horizontal edge of a vertex listed before its vertical edge.
    pub fn grid(cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || rows == 0 || cols * rows < 2 {
            return Err(Error::NoEdges);
        }
        let id = |x: usize, y: usize| y * cols + x;
        let mut vertices = Vec::with_capacity(cols * rows);
        for y in 0..rows {
            for x in 0..cols {
                let class = if (x + y) % 2 == 0 { VertexClass::Black } else { VertexClass::White };
                vertices.push(Vertex { id: id(x, y), pos: Complex64::new(x as f64, y as f64), class });
            }
        }
        let mut edges = Vec::new();
        for y in 0..rows {
            for x in 0..cols {
                if x + 1 < cols {
                    let e = edges.len();
                    edges.push(Edge { id: e, u: id(x, y), v: id(x + 1, y), disp: Complex64::new(1.0, 0.0) });
                }
                if y + 1 < rows {
                    let e = edges.len();
                    edges.push(Edge { id: e, u: id(x, y), v: id(x, y + 1), disp: Complex64::new(0.0, 1.0) });
                }
            }
        }
        Self::from_embedding(vertices, edges, Surface::Disk, &[])
    }

    /// Reassigns vertex classes; used to recolor generic graphs.
    pub fn with_classes(mut self, classes: &[VertexClass]) -> Result<Self> {
        if classes.len() != self.vertices.len() {
            return Err(Error::Mismatch("one class per vertex".into()));
        }
        for (v, c) in self.vertices.iter_mut().zip(classes) {
            v.class = *c;
        }
        Ok(self)
    }
}

/// Winding number of a closed polygon around `p`.
fn winding_number(poly: &[Complex64], p: Complex64) -> i32 {
    let mut total = 0.0;
    for s in poly.windows(2) {
        let a = s[0] - p;
        let b = s[1] - p;
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i32
}
