use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kasteleyn::{dense_inverse, kasteleyn_signs, scalar_kasteleyn, CMatrix};
use crate::lattice::{temperleyan_graph, GridRegion, PlanarGraph, VertexClass, VertexId};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which Laplacian a [`GreenOperator`] inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenKind {
    /// Region vertices, free boundary, pinned to zero at the root `x_0`.
    Neumann,
    /// Bounded square faces, zero on the outer face and on hole faces.
    Dirichlet,
}

/// Inverse of the positive combinatorial Laplacian `deg f(a) - sum f(b)`
/// on the free nodes; fixed nodes carry the value zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenOperator {
    pub kind: Option<GreenKind>,
    /// Dense index of each node, `None` for fixed nodes.
    pub index: Vec<Option<usize>>,
    pub values: DMatrix<f64>,
    adjacency: Vec<Vec<usize>>,
}

impl GreenOperator {
    /// `G(a, b)`, zero when either node is fixed.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        match (self.index[a], self.index[b]) {
            (Some(i), Some(j)) => self.values[(i, j)],
            _ => 0.0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.index.len()
    }

    /// `max |L G(., b) - delta_b|` over free nodes and sources.
    pub fn laplacian_residual(&self) -> f64 {
        let n = self.num_nodes();
        let mut worst: f64 = 0.0;
        for b in (0..n).filter(|&b| self.index[b].is_some()) {
            for a in (0..n).filter(|&a| self.index[a].is_some()) {
                let lg = self.adjacency[a].len() as f64 * self.get(a, b)
                    - self.adjacency[a].iter().map(|&c| self.get(c, b)).sum::<f64>();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((lg - want).abs());
            }
        }
        worst
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.values - self.values.transpose()).abs().max()
    }
}

/// Green's function of a multigraph given by its edge list.
pub fn green_from_edges(nodes: usize, edges: &[(usize, usize)], fixed: &[usize]) -> Result<GreenOperator> {
    let mut adjacency = vec![Vec::new(); nodes];
    for &(a, b) in edges {
        if a >= nodes || b >= nodes {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range")));
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut index = vec![None; nodes];
    let mut free = 0;
    for (v, slot) in index.iter_mut().enumerate() {
        if !fixed.contains(&v) {
            *slot = Some(free);
            free += 1;
        }
    }
    let mut lap = DMatrix::<f64>::zeros(free, free);
    for a in 0..nodes {
        let Some(i) = index[a] else { continue };
        lap[(i, i)] = adjacency[a].len() as f64;
        for &b in &adjacency[a] {
            if let Some(j) = index[b] {
                lap[(i, j)] -= 1.0;
            }
        }
    }
    let values = lap.cholesky().ok_or(Error::Singular)?.inverse();
    Ok(GreenOperator { kind: None, index, values, adjacency })
}

/// Green's function on a planar graph with the given vertices fixed.
pub fn green_on_graph(g: &PlanarGraph, fixed: &[VertexId]) -> Result<GreenOperator> {
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    green_from_edges(g.num_vertices(), &edges, fixed)
}

/// Faces on either side of a region edge: `(left, right)` for the edge
/// traversed east or north. `None` is the outer face or a hole.
fn edge_faces(region: &GridRegion, e: usize) -> (Option<usize>, Option<usize>) {
    let ed = region.edges[e];
    let (x, y) = ed.a;
    if ed.horizontal {
        (region.square_id(x, y), region.square_id(x, y - 1))
    } else {
        (region.square_id(x - 1, y), region.square_id(x, y))
    }
}

/// Node id of the single fixed dual node standing for the outer and hole faces.
pub fn dual_boundary_node(region: &GridRegion) -> usize {
    region.squares.len()
}

pub fn discrete_green(region: &GridRegion, kind: GreenKind) -> Result<GreenOperator> {
    let mut op = match kind {
        GreenKind::Neumann => {
            let edges: Vec<(usize, usize)> = region
                .edges
                .iter()
                .map(|e| (region.vertex_id(e.a.0, e.a.1).unwrap(), region.vertex_id(e.b.0, e.b.1).unwrap()))
                .collect();
            green_from_edges(region.vertices.len(), &edges, &[region.root])?
        }
        GreenKind::Dirichlet => {
            let outer = dual_boundary_node(region);
            let edges: Vec<(usize, usize)> = (0..region.edges.len())
                .map(|e| {
                    let (l, r) = edge_faces(region, e);
                    (l.unwrap_or(outer), r.unwrap_or(outer))
                })
                .collect();
            green_from_edges(outer + 1, &edges, &[outer])?
        }
    };
    op.kind = Some(kind);
    Ok(op)
}

/// Where a Temperleyan vertex sits in the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    /// Region vertex.
    Vertex(usize),
    /// Bounded square.
    Square(usize),
    /// Region edge.
    Edge(usize),
}

pub fn temperleyan_site(region: &GridRegion, g: &PlanarGraph, v: VertexId) -> Site {
    let vx = &g.vertices()[v];
    let (x2, y2) = ((2.0 * vx.pos.re).round() as i64, (2.0 * vx.pos.im).round() as i64);
    match vx.class {
        VertexClass::B0 => Site::Vertex(region.vertex_id(x2 / 2, y2 / 2).unwrap()),
        VertexClass::B1 => Site::Square(region.square_id((x2 - 1) / 2, (y2 - 1) / 2).unwrap()),
        VertexClass::W0 => Site::Edge(region.edge_id(((x2 - 1) / 2, y2 / 2), ((x2 + 1) / 2, y2 / 2)).unwrap()),
        _ => Site::Edge(region.edge_id((x2 / 2, (y2 - 1) / 2), (x2 / 2, (y2 + 1) / 2)).unwrap()),
    }
}

/// `K^-1` of the Temperleyan graph assembled from the two Green's functions,
/// as a `blacks x whites` matrix in the order of
/// [`scalar_kasteleyn`](crate::kasteleyn::scalar_kasteleyn).
///
/// For a white vertex on a horizontal edge with endpoints `p_W`, `p_E` and
/// faces `f_S`, `f_N`, the column is `G(p_E, b) - G(p_W, b)` on region
/// vertices and `-i (G*(f_N, b) - G*(f_S, b))` on squares. On a vertical
/// edge, `G*(f_E, b) - G*(f_W, b)` on squares and `-i (G(p_N, b) - G(p_S, b))`
/// on vertices.
pub fn kinv_via_green(region: &GridRegion) -> Result<CMatrix> {
    if !region.holes.is_empty() {
        return Err(Error::InvalidArgument("Green's function route needs a region without holes".into()));
    }
    let g = temperleyan_graph(region)?;
    let sw = kasteleyn_signs(&g)?;
    let (_, whites, blacks) = scalar_kasteleyn(&g, &sw);
    let gn = discrete_green(region, GreenKind::Neumann)?;
    let gd = discrete_green(region, GreenKind::Dirichlet)?;
    let outer = dual_boundary_node(region);
    let mut out = CMatrix::zeros(blacks.len(), whites.len());
    for (j, &w) in whites.iter().enumerate() {
        let Site::Edge(e) = temperleyan_site(region, &g, w) else { unreachable!() };
        let ed = region.edges[e];
        let lo = region.vertex_id(ed.a.0, ed.a.1).unwrap();
        let hi = region.vertex_id(ed.b.0, ed.b.1).unwrap();
        let (left, right) = edge_faces(region, e);
        let (left, right) = (left.unwrap_or(outer), right.unwrap_or(outer));
        for (i, &b) in blacks.iter().enumerate() {
            out[(i, j)] = match (ed.horizontal, temperleyan_site(region, &g, b)) {
                (true, Site::Vertex(p)) => (gn.get(hi, p) - gn.get(lo, p)).into(),
                (true, Site::Square(f)) => -I * (gd.get(left, f) - gd.get(right, f)),
                (false, Site::Square(f)) => (gd.get(right, f) - gd.get(left, f)).into(),
                (false, Site::Vertex(p)) => -I * (gn.get(hi, p) - gn.get(lo, p)),
                (_, Site::Edge(_)) => unreachable!(),
            };
        }
    }
    Ok(out)
}

/// A function `u + i v` with `u` on region vertices and `v` on squares.
/// Values at the root and on the outer and hole faces are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSection {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl DiscreteSection {
    pub fn zeros(region: &GridRegion) -> Self {
        DiscreteSection {
            u: vec![Complex64::new(0.0, 0.0); region.vertices.len()],
            v: vec![Complex64::new(0.0, 0.0); region.squares.len()],
        }
    }

    fn v_at(&self, f: Option<usize>) -> Complex64 {
        f.map(|f| self.v[f]).unwrap_or_default()
    }
}

/// Column `w` of a `blacks x whites` inverse, read as a section: `u` is the
/// value on region vertices and `i v` the value on squares.
pub fn section_from_column(region: &GridRegion, g: &PlanarGraph, blacks: &[VertexId], kinv: &CMatrix, col: usize) -> DiscreteSection {
    let mut s = DiscreteSection::zeros(region);
    for (i, &b) in blacks.iter().enumerate() {
        match temperleyan_site(region, g, b) {
            Site::Vertex(p) => s.u[p] = kinv[(i, col)],
            Site::Square(f) => s.v[f] = kinv[(i, col)] / I,
            Site::Edge(_) => {}
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrReport {
    /// Residue per region edge: `u(x2) - u(x1) - v(f1) + v(f2)` on
    /// horizontal edges and `i` times the same on vertical edges, for
    /// `x1 -> x2` pointing east or north and `f1` the face on its left.
    pub residues: Vec<Complex64>,
}

impl CrReport {
    /// Edges with a residue above `tol`.
    pub fn poles(&self, tol: f64) -> Vec<usize> {
        (0..self.residues.len()).filter(|&e| self.residues[e].norm() > tol).collect()
    }

    /// Largest residue away from `poles`.
    pub fn max_defect_excluding(&self, poles: &[usize]) -> f64 {
        (0..self.residues.len()).filter(|e| !poles.contains(e)).map(|e| self.residues[e].norm()).fold(0.0, f64::max)
    }
}

pub fn check_discrete_cr(section: &DiscreteSection, region: &GridRegion) -> CrReport {
    let residues = (0..region.edges.len())
        .map(|e| {
            let ed = region.edges[e];
            let x1 = region.vertex_id(ed.a.0, ed.a.1).unwrap();
            let x2 = region.vertex_id(ed.b.0, ed.b.1).unwrap();
            let (f1, f2) = edge_faces(region, e);
            let d = section.u[x2] - section.u[x1] - section.v_at(f1) + section.v_at(f2);
            if ed.horizontal {
                d
            } else {
                I * d
            }
        })
        .collect();
    CrReport { residues }
}

/// `4 u(p) - sum of the four neighbours` at every region vertex with four
/// neighbours; `None` elsewhere.
pub fn vertex_laplacian(section: &DiscreteSection, region: &GridRegion) -> Vec<Option<Complex64>> {
    region
        .vertices
        .iter()
        .map(|&(x, y)| {
            let nb: Option<Vec<usize>> = [(1, 0), (0, 1), (-1, 0), (0, -1)]
                .iter()
                .map(|(dx, dy)| region.edge_id((x, y), (x + dx, y + dy)).and(region.vertex_id(x + dx, y + dy)))
                .collect();
            let nb = nb?;
            let p = region.vertex_id(x, y).unwrap();
            Some(section.u[p] * 4.0 - nb.iter().map(|&q| section.u[q]).sum::<Complex64>())
        })
        .collect()
}

/// `K^-1(b, w)` for the four neighbours `b` of one white vertex, next to
/// the whole-plane leading values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdaEntry {
    /// `b - w` in lattice units.
    pub offset: Complex64,
    pub value: Complex64,
    pub leading: Complex64,
}

/// Leading constants: `+-1/4` for `b = w +- 1/2` and `-+i/4` for
/// `b = w +- i/2`, for either white class.
pub fn kda_leading(offset: Complex64) -> Complex64 {
    if offset.im.abs() < 1e-9 {
        Complex64::new(0.25 * offset.re.signum(), 0.0)
    } else {
        Complex64::new(0.0, -0.25 * offset.im.signum())
    }
}

/// Diagnostic comparison of `K^-1` near the white vertex closest to `at`
/// with the leading constants, for the trivial connection.
pub fn kda_diagnostic(region: &GridRegion, at: Complex64) -> Result<Vec<KdaEntry>> {
    let g = temperleyan_graph(region)?;
    let sw = kasteleyn_signs(&g)?;
    let (m, whites, blacks) = scalar_kasteleyn(&g, &sw);
    let inv = dense_inverse(&m)?;
    let (col, &w) = whites
        .iter()
        .enumerate()
        .min_by(|a, b| (g.vertices()[*a.1].pos - at).norm().total_cmp(&(g.vertices()[*b.1].pos - at).norm()))
        .ok_or_else(|| Error::InvalidArgument("no white vertex".into()))?;
    let mut out = Vec::new();
    for d in g.darts_at(w) {
        let b = g.head(*d);
        let row = blacks.iter().position(|&x| x == b).unwrap();
        let offset = g.vertices()[b].pos - g.vertices()[w].pos;
        out.push(KdaEntry { offset, value: inv[(row, col)], leading: kda_leading(offset) });
    }
    Ok(out)
}
