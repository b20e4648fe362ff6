//! Rectilinear grid regions and their Temperleyan derived graphs.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::graph::{Edge, PlanarGraph, Surface, Vertex, VertexClass};
use crate::error::{Error, Result};

/// A rectangular hole `[x0, x1] x [y0, y1]` in lattice units. Vertices and
/// edges strictly inside are removed; its boundary stays in the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
    /// Marked point on the hole boundary. Without it no edge is removed and
    /// the derived graph is unbalanced.
    #[serde(default)]
    pub mark: Option<(f64, f64)>,
}

/// Domain description: a `cols x rows` vertex rectangle with holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub cols: usize,
    pub rows: usize,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
    /// Marked point on the outer boundary; the nearest vertex is removed.
    #[serde(default)]
    pub root: (f64, f64),
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    1.0
}

impl RegionSpec {
    pub fn rectangle(cols: usize, rows: usize) -> Self {
        RegionSpec { cols, rows, holes: Vec::new(), root: (0.0, 0.0), spacing: 1.0 }
    }

    pub fn with_hole(mut self, hole: HoleSpec) -> Self {
        self.holes.push(hole);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionEdge {
    pub a: (i64, i64),
    pub b: (i64, i64),
    pub horizontal: bool,
}

#[derive(Debug, Clone)]
pub struct GridRegion {
    pub spacing: f64,
    pub cols: usize,
    pub rows: usize,
    pub holes: Vec<HoleSpec>,
    /// Row-major lattice points.
    pub vertices: Vec<(i64, i64)>,
    /// Row-major by lower-left endpoint, horizontal before vertical.
    pub edges: Vec<RegionEdge>,
    /// Lower-left corners of the bounded square faces, row-major.
    pub squares: Vec<(i64, i64)>,
    /// Index of the removed vertex `x_0`.
    pub root: usize,
    /// Removed edge `e_j` per hole, `None` when the hole carries no mark.
    pub removed_edges: Vec<Option<usize>>,
    vertex_index: HashMap<(i64, i64), usize>,
    edge_index: HashMap<((i64, i64), (i64, i64)), usize>,
    square_index: HashMap<(i64, i64), usize>,
}

impl HoleSpec {
    fn strictly_inside(&self, x: f64, y: f64) -> bool {
        x > self.x0 as f64 && x < self.x1 as f64 && y > self.y0 as f64 && y < self.y1 as f64
    }

    fn on_boundary(&self, x: f64, y: f64) -> bool {
        let tol = 1e-9;
        let within_x = x >= self.x0 as f64 - tol && x <= self.x1 as f64 + tol;
        let within_y = y >= self.y0 as f64 - tol && y <= self.y1 as f64 + tol;
        let on_vertical = ((x - self.x0 as f64).abs() < tol || (x - self.x1 as f64).abs() < tol) && within_y;
        let on_horizontal = ((y - self.y0 as f64).abs() < tol || (y - self.y1 as f64).abs() < tol) && within_x;
        on_vertical || on_horizontal
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new((self.x0 + self.x1) as f64 / 2.0, (self.y0 + self.y1) as f64 / 2.0)
    }
}

/// Validates a domain description and lays out its lattice.
pub fn build_grid_region(spec: &RegionSpec) -> Result<GridRegion> {
    let (cols, rows) = (spec.cols as i64, spec.rows as i64);
    if !(spec.spacing > 0.0) {
        return Err(Error::InvalidRegion("lattice spacing must be positive".into()));
    }
    for (i, h) in spec.holes.iter().enumerate() {
        if h.x1 <= h.x0 || h.y1 <= h.y0 {
            return Err(Error::InvalidRegion(format!("hole {i} is empty")));
        }
        if h.x0 < 1 || h.y0 < 1 || h.x1 > cols - 2 || h.y1 > rows - 2 {
            return Err(Error::InvalidRegion(format!("hole {i} is not strictly inside the outer rectangle")));
        }
        for (j, k) in spec.holes.iter().enumerate().skip(i + 1) {
            if h.x0 <= k.x1 && k.x0 <= h.x1 && h.y0 <= k.y1 && k.y0 <= h.y1 {
                return Err(Error::InvalidRegion(format!("holes {i} and {j} intersect")));
            }
        }
    }
    let in_hole = |x: f64, y: f64| spec.holes.iter().any(|h| h.strictly_inside(x, y));

    let mut vertices = Vec::new();
    for y in 0..rows {
        for x in 0..cols {
            if !in_hole(x as f64, y as f64) {
                vertices.push((x, y));
            }
        }
    }
    let vertex_index: HashMap<_, _> = vertices.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    let mut edges = Vec::new();
    for &(x, y) in &vertices {
        let right = (x + 1, y);
        if vertex_index.contains_key(&right) && !in_hole(x as f64 + 0.5, y as f64) {
            edges.push(RegionEdge { a: (x, y), b: right, horizontal: true });
        }
        let up = (x, y + 1);
        if vertex_index.contains_key(&up) && !in_hole(x as f64, y as f64 + 0.5) {
            edges.push(RegionEdge { a: (x, y), b: up, horizontal: false });
        }
    }
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    let edge_index: HashMap<_, _> = edges.iter().enumerate().map(|(i, e)| ((e.a, e.b), i)).collect();

    let mut squares = Vec::new();
    for y in 0..rows - 1 {
        for x in 0..cols - 1 {
            let sides = [
                ((x, y), (x + 1, y)),
                ((x, y), (x, y + 1)),
                ((x + 1, y), (x + 1, y + 1)),
                ((x, y + 1), (x + 1, y + 1)),
            ];
            if !in_hole(x as f64 + 0.5, y as f64 + 0.5) && sides.iter().all(|s| edge_index.contains_key(s)) {
                squares.push((x, y));
            }
        }
    }
    let square_index = squares.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    // connectivity of the region graph
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for e in &edges {
        let (a, b) = (find(&mut parent, vertex_index[&e.a]), find(&mut parent, vertex_index[&e.b]));
        parent[a] = b;
    }
    let components = (0..vertices.len()).filter(|&i| find(&mut parent, i) == i).count();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }

    let (rx, ry) = spec.root;
    let on_outer = (rx.abs() < 1e-9 || (rx - (cols - 1) as f64).abs() < 1e-9) && ry >= -1e-9 && ry <= (rows - 1) as f64 + 1e-9
        || (ry.abs() < 1e-9 || (ry - (rows - 1) as f64).abs() < 1e-9) && rx >= -1e-9 && rx <= (cols - 1) as f64 + 1e-9;
    if !on_outer {
        return Err(Error::MarkNotOnBoundary { x: rx, y: ry, component: 0 });
    }
    let root = vertex_index[&(rx.round() as i64, ry.round() as i64)];

    let mut removed_edges = Vec::with_capacity(spec.holes.len());
    for (j, h) in spec.holes.iter().enumerate() {
        let Some((mx, my)) = h.mark else {
            removed_edges.push(None);
            continue;
        };
        if !h.on_boundary(mx, my) {
            return Err(Error::MarkNotOnBoundary { x: mx, y: my, component: j + 1 });
        }
        // e_j is taken on the top side of the hole, under the mark's column.
        let x = (mx.floor() as i64).clamp(h.x0, h.x1 - 1);
        let e = edge_index[&((x, h.y1), (x + 1, h.y1))];
        removed_edges.push(Some(e));
    }

    Ok(GridRegion {
        spacing: spec.spacing,
        cols: spec.cols,
        rows: spec.rows,
        holes: spec.holes.clone(),
        vertices,
        edges,
        squares,
        root,
        removed_edges,
        vertex_index,
        edge_index,
        square_index,
    })
}

impl GridRegion {
    pub fn vertex_id(&self, x: i64, y: i64) -> Option<usize> {
        self.vertex_index.get(&(x, y)).copied()
    }

    pub fn edge_id(&self, a: (i64, i64), b: (i64, i64)) -> Option<usize> {
        self.edge_index.get(&(a, b)).or_else(|| self.edge_index.get(&(b, a))).copied()
    }

    pub fn square_id(&self, x: i64, y: i64) -> Option<usize> {
        self.square_index.get(&(x, y)).copied()
    }

    pub fn is_removed_edge(&self, e: usize) -> bool {
        self.removed_edges.contains(&Some(e))
    }

    pub fn root_point(&self) -> (i64, i64) {
        self.vertices[self.root]
    }

    /// The region graph `U_eps` itself as a planar graph (no removals).
    pub fn lattice_graph(&self) -> Result<PlanarGraph> {
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Vertex { id: i, pos: Complex64::new(x as f64, y as f64), class: VertexClass::Plain })
            .collect();
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| Edge {
                id: i,
                u: self.vertex_index[&e.a],
                v: self.vertex_index[&e.b],
                disp: if e.horizontal { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) },
            })
            .collect();
        let holes: Vec<_> = self.holes.iter().map(HoleSpec::center).collect();
        let surface = if self.holes.is_empty() { Surface::Disk } else { Surface::MultiplyConnected };
        PlanarGraph::from_embedding(vertices, edges, surface, &holes)
    }
}

/// The Temperleyan bipartite graph of a region: black vertices on region
/// vertices (minus `x_0`) and square faces, white vertices on region edges
/// (minus the `e_j`). White vertices come first; within a color vertices
/// are ordered row-major on the half-integer lattice.
pub fn temperleyan_graph(region: &GridRegion) -> Result<PlanarGraph> {
    struct Proto {
        pos: Complex64,
        class: VertexClass,
    }
    let mut whites = Vec::new();
    for (i, e) in region.edges.iter().enumerate() {
        if region.is_removed_edge(i) {
            continue;
        }
        let (x, y) = (e.a.0 as f64, e.a.1 as f64);
        if e.horizontal {
            whites.push(Proto { pos: Complex64::new(x + 0.5, y), class: VertexClass::W0 });
        } else {
            whites.push(Proto { pos: Complex64::new(x, y + 0.5), class: VertexClass::W1 });
        }
    }
    let mut blacks = Vec::new();
    for (i, &(x, y)) in region.vertices.iter().enumerate() {
        if i != region.root {
            blacks.push(Proto { pos: Complex64::new(x as f64, y as f64), class: VertexClass::B0 });
        }
    }
    for &(x, y) in &region.squares {
        blacks.push(Proto { pos: Complex64::new(x as f64 + 0.5, y as f64 + 0.5), class: VertexClass::B1 });
    }
    if whites.len() != blacks.len() {
        return Err(Error::Unbalanced { black: blacks.len(), white: whites.len() });
    }
    let row_major = |a: &Proto, b: &Proto| a.pos.im.total_cmp(&b.pos.im).then(a.pos.re.total_cmp(&b.pos.re));
    whites.sort_by(row_major);
    blacks.sort_by(row_major);

    let vertices: Vec<Vertex> = whites
        .iter()
        .chain(blacks.iter())
        .enumerate()
        .map(|(id, p)| Vertex { id, pos: p.pos, class: p.class })
        .collect();
    let key = |p: Complex64| ((2.0 * p.re).round() as i64, (2.0 * p.im).round() as i64);
    let black_at: HashMap<(i64, i64), usize> =
        vertices[whites.len()..].iter().map(|v| (key(v.pos), v.id)).collect();

    let half = [
        Complex64::new(0.5, 0.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(-0.5, 0.0),
        Complex64::new(0.0, -0.5),
    ];
    let mut edges = Vec::new();
    for w in &vertices[..whites.len()] {
        for d in half {
            if let Some(&b) = black_at.get(&key(w.pos + d)) {
                let id = edges.len();
                edges.push(Edge { id, u: w.id, v: b, disp: d });
            }
        }
    }
    let holes: Vec<_> = region.holes.iter().map(HoleSpec::center).collect();
    let surface = if region.holes.is_empty() { Surface::Disk } else { Surface::MultiplyConnected };
    PlanarGraph::from_embedding(vertices, edges, surface, &holes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_with_hole() -> RegionSpec {
        RegionSpec::rectangle(5, 5).with_hole(HoleSpec { x0: 2, y0: 2, x1: 3, y1: 3, mark: Some((2.5, 3.0)) })
    }

    #[test]
    fn three_by_three_counts() {
        let r = build_grid_region(&RegionSpec::rectangle(3, 3)).unwrap();
        assert_eq!(r.vertices.len(), 9);
        assert_eq!(r.edges.len(), 12);
        assert_eq!(r.squares.len(), 4);
        assert_eq!(r.root_point(), (0, 0));
    }

    #[test]
    fn hole_records_removals() {
        let r = build_grid_region(&five_with_hole()).unwrap();
        assert_eq!(r.vertices.len(), 25);
        assert_eq!(r.edges.len(), 40);
        assert_eq!(r.squares.len(), 15);
        assert_eq!(r.removed_edges.len(), 1);
        let e = r.edges[r.removed_edges[0].unwrap()];
        assert_eq!((e.a, e.b), ((2, 3), (3, 3)));
    }

    #[test]
    fn degenerate_region() {
        assert_eq!(build_grid_region(&RegionSpec::rectangle(1, 1)).unwrap_err(), Error::NoEdges);
    }

    #[test]
    fn marks_must_sit_on_their_boundary() {
        let mut spec = RegionSpec::rectangle(3, 3);
        spec.root = (1.0, 1.0);
        assert!(matches!(build_grid_region(&spec), Err(Error::MarkNotOnBoundary { component: 0, .. })));
        let spec = RegionSpec::rectangle(5, 5).with_hole(HoleSpec { x0: 2, y0: 2, x1: 3, y1: 3, mark: Some((0.0, 0.0)) });
        assert!(matches!(build_grid_region(&spec), Err(Error::MarkNotOnBoundary { component: 1, .. })));
    }

    #[test]
    fn holes_must_be_interior_and_disjoint() {
        let spec = RegionSpec::rectangle(4, 4).with_hole(HoleSpec { x0: 0, y0: 1, x1: 1, y1: 2, mark: None });
        assert!(matches!(build_grid_region(&spec), Err(Error::InvalidRegion(_))));
        let spec = RegionSpec::rectangle(8, 8)
            .with_hole(HoleSpec { x0: 1, y0: 1, x1: 3, y1: 3, mark: None })
            .with_hole(HoleSpec { x0: 3, y0: 3, x1: 5, y1: 5, mark: None });
        assert!(matches!(build_grid_region(&spec), Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn temperleyan_balance() {
        let r = build_grid_region(&RegionSpec::rectangle(3, 3)).unwrap();
        let g = temperleyan_graph(&r).unwrap();
        assert_eq!(g.whites().len(), 12);
        assert_eq!(g.blacks().len(), 12);
        let count = |c| g.vertices().iter().filter(|v| v.class == c).count();
        assert_eq!(count(VertexClass::B0), 8);
        assert_eq!(count(VertexClass::B1), 4);
        assert_eq!(count(VertexClass::W0), 6);
        assert_eq!(count(VertexClass::W1), 6);
        assert!(g.is_bipartite());

        let r = build_grid_region(&RegionSpec::rectangle(2, 2)).unwrap();
        let g = temperleyan_graph(&r).unwrap();
        assert_eq!(g.blacks().len(), 4);
        assert_eq!(g.whites().len(), 4);
    }

    #[test]
    fn temperleyan_with_hole() {
        let r = build_grid_region(&five_with_hole()).unwrap();
        let g = temperleyan_graph(&r).unwrap();
        assert_eq!(g.whites().len(), 39);
        assert_eq!(g.blacks().len(), 39);
        // outer face plus the hole face (merged with the square above e_1)
        assert_eq!(g.faces().iter().filter(|f| f.boundary).count(), 2);
        assert!(g.bounded_faces().all(|f| g.faces()[f].darts.len() == 4));
    }

    #[test]
    fn unmarked_hole_is_unbalanced() {
        let spec = RegionSpec::rectangle(5, 5).with_hole(HoleSpec { x0: 2, y0: 2, x1: 3, y1: 3, mark: None });
        let r = build_grid_region(&spec).unwrap();
        assert_eq!(temperleyan_graph(&r).unwrap_err(), Error::Unbalanced { black: 39, white: 40 });
    }
}
