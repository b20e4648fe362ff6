use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::graph::{Dart, Edge, Face, PlanarGraph, Surface, Vertex, VertexClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub class: VertexClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    /// Displacement from `u` to `v`; differs from the position difference
    /// only for edges that wrap around the cylinder.
    pub dx: f64,
    pub dy: f64,
}

/// On-disk form of a [`PlanarGraph`].
///
/// Faces are edge-id cycles. `face_starts[i]` is the vertex the walk of face
/// `i` starts from, which fixes the direction of each edge in the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub surface: Surface,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    pub faces: Vec<Vec<usize>>,
    pub face_starts: Vec<usize>,
    pub boundary_faces: Vec<usize>,
}

impl GraphDocument {
    pub fn from_graph(g: &PlanarGraph) -> Self {
        let vertices = g
            .vertices()
            .iter()
            .map(|v| VertexRecord { id: v.id, x: v.pos.re, y: v.pos.im, class: v.class })
            .collect();
        let edges = g
            .edges()
            .iter()
            .map(|e| EdgeRecord { id: e.id, u: e.u, v: e.v, dx: e.disp.re, dy: e.disp.im })
            .collect();
        let faces = g.faces().iter().map(|f| f.darts.iter().map(|d| d.edge).collect()).collect();
        let face_starts = g.faces().iter().map(|f| g.tail(f.darts[0])).collect();
        let boundary_faces = g.faces().iter().enumerate().filter(|(_, f)| f.boundary).map(|(i, _)| i).collect();
        GraphDocument { surface: g.surface(), vertices, edges, faces, face_starts, boundary_faces }
    }

    /// Rebuilds the graph with the stored faces. The faces are not
    /// re-derived, so a corrupted document is caught by `validate_embedding`
    /// rather than silently repaired.
    pub fn to_graph(&self) -> Result<PlanarGraph> {
        if self.face_starts.len() != self.faces.len() {
            return Err(Error::Mismatch("face_starts must have one entry per face".into()));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex { id: v.id, pos: Complex64::new(v.x, v.y), class: v.class })
            .collect();
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge { id: e.id, u: e.u, v: e.v, disp: Complex64::new(e.dx, e.dy) })
            .collect();
        let mut faces = Vec::with_capacity(self.faces.len());
        for (i, cycle) in self.faces.iter().enumerate() {
            let mut at = self.face_starts[i];
            let mut darts = Vec::with_capacity(cycle.len());
            for &e in cycle {
                let edge = edges.get(e).ok_or(Error::MissingEdge(e))?;
                let d = if edge.u == at { Dart::new(e, true) } else { Dart::new(e, false) };
                at = if d.forward { edge.v } else { edge.u };
                darts.push(d);
            }
            faces.push(Face { darts, boundary: self.boundary_faces.contains(&i) });
        }
        PlanarGraph::from_parts(vertices, edges, faces, self.surface)
    }
}

pub fn graph_to_json(g: &PlanarGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GraphDocument::from_graph(g))?)
}

pub fn graph_from_json(s: &str) -> Result<PlanarGraph> {
    serde_json::from_str::<GraphDocument>(s)?.to_graph()
}
