use num_complex::Complex64;

use super::graph::{Edge, PlanarGraph, Surface, Vertex, VertexClass};
use crate::error::{Error, Result};

/// The `2n x m` grid with columns `0` and `2n` identified.
///
/// Vertex `(x, y)`, `0 <= x < 2n`, `1 <= y <= m`, has id `(y - 1) * 2n + x`
/// and is white when `x + y` is odd. Each vertex contributes its eastward
/// edge (wrapping at `x = 2n - 1`) followed by its northward edge.
pub fn cylinder_graph(n: usize, m: usize) -> Result<PlanarGraph> {
    if n % 2 == 0 {
        return Err(Error::EvenCylinder(n));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("cylinder height must be positive".into()));
    }
    let width = 2 * n;
    let id = |x: usize, y: usize| (y - 1) * width + x;
    let mut vertices = Vec::with_capacity(width * m);
    for y in 1..=m {
        for x in 0..width {
            let class = if (x + y) % 2 == 1 { VertexClass::White } else { VertexClass::Black };
            vertices.push(Vertex { id: id(x, y), pos: Complex64::new(x as f64, y as f64), class });
        }
    }
    let mut edges = Vec::with_capacity(width * m + width * (m - 1));
    for y in 1..=m {
        for x in 0..width {
            let e = edges.len();
            edges.push(Edge { id: e, u: id(x, y), v: id((x + 1) % width, y), disp: Complex64::new(1.0, 0.0) });
            if y < m {
                let e = edges.len();
                edges.push(Edge { id: e, u: id(x, y), v: id(x, y + 1), disp: Complex64::new(0.0, 1.0) });
            }
        }
    }
    PlanarGraph::from_embedding(vertices, edges, Surface::Cylinder, &[])
}

/// Edges of row `y` crossing the vertical line between columns `x` and `x + 1`.
pub fn cylinder_axis_cut(n: usize, m: usize, x: usize) -> Vec<usize> {
    let width = 2 * n;
    let per_row = |y: usize| if y < m { 2 * width } else { width };
    let mut out = Vec::with_capacity(m);
    let mut base = 0;
    for y in 1..=m {
        let stride = if y < m { 2 } else { 1 };
        out.push(base + stride * (x % width));
        base += per_row(y);
    }
    out
}
