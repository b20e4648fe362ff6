use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Color, Dart, PlanarGraph, Surface, VertexClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignMode {
    /// `K(w, b) = 1, i, -1, -i` for `b` east, north, west, south of `w`.
    Temperleyan,
    /// Horizontal edges `1`, vertical edges `i`.
    Cylinder,
    /// Real signs propagated along a dual spanning tree.
    SpanningTree,
}

/// Kasteleyn-signed edge weights, one complex scalar per edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedWeights {
    pub values: Vec<Complex64>,
    pub mode: SignMode,
}

impl SignedWeights {
    /// Multiplies each signed weight by a positive edge weight.
    pub fn with_weights(&self, nu: &[f64]) -> Result<Self> {
        if nu.len() != self.values.len() {
            return Err(Error::Mismatch(format!("{} weights for {} edges", nu.len(), self.values.len())));
        }
        let values = self.values.iter().zip(nu).map(|(s, w)| s * w).collect();
        Ok(SignedWeights { values, mode: self.mode })
    }

    /// The unit-modulus part of each weight.
    pub fn phases(&self) -> Vec<Complex64> {
        self.values.iter().map(|v| v / v.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Chooses Kasteleyn phases for a bipartite planar graph.
pub fn kasteleyn_signs(g: &PlanarGraph) -> Result<SignedWeights> {
    if !g.is_bipartite() {
        return Err(Error::NotBipartite("every edge must join a black and a white vertex".into()));
    }
    let temperleyan = g
        .vertices()
        .iter()
        .any(|v| matches!(v.class, VertexClass::B0 | VertexClass::B1 | VertexClass::W0 | VertexClass::W1));
    if temperleyan {
        return Ok(temperleyan_signs(g));
    }
    if g.surface() == Surface::Cylinder {
        let values = g
            .edges()
            .iter()
            .map(|e| if e.disp.im.abs() > e.disp.re.abs() { Complex64::i() } else { Complex64::new(1.0, 0.0) })
            .collect();
        return Ok(SignedWeights { values, mode: SignMode::Cylinder });
    }
    spanning_tree_signs(g)
}

fn temperleyan_signs(g: &PlanarGraph) -> SignedWeights {
    let values = g
        .edges()
        .iter()
        .map(|e| {
            // Displacement from the white endpoint to the black one.
            let d = if g.color(e.u) == Some(Color::White) { e.disp } else { -e.disp };
            let unit = d / d.norm();
            Complex64::new(unit.re.round(), unit.im.round())
        })
        .collect();
    SignedWeights { values, mode: SignMode::Temperleyan }
}

fn spanning_tree_signs(g: &PlanarGraph) -> Result<SignedWeights> {
    let n = g.num_vertices();
    let mut in_tree = vec![false; g.num_edges()];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for d in g.darts_at(v) {
            let w = g.head(*d);
            if !seen[w] {
                seen[w] = true;
                in_tree[d.edge] = true;
                queue.push_back(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Disconnected { components: g.connected_components() });
    }

    // Non-tree edges form a spanning tree of the dual graph.
    let nf = g.faces().len();
    let root = g.faces().iter().position(|f| f.boundary).unwrap_or(0);
    let mut parent_edge = vec![None; nf];
    let mut visited = vec![false; nf];
    let mut order = Vec::with_capacity(nf);
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(f) = queue.pop_front() {
        order.push(f);
        for d in &g.faces()[f].darts {
            if in_tree[d.edge] {
                continue;
            }
            let other = g.face_of(d.rev()).expect("every dart has a face");
            if !visited[other] {
                visited[other] = true;
                parent_edge[other] = Some(d.edge);
                queue.push_back(other);
            }
        }
    }
    if order.len() != nf {
        return Err(Error::InvalidGraph("dual of the cotree is not connected; embedding is not planar".into()));
    }

    let mut values = vec![Complex64::new(1.0, 0.0); g.num_edges()];
    for &f in order.iter().rev() {
        let Some(p) = parent_edge[f] else { continue };
        let face = &g.faces()[f];
        if face.boundary {
            continue;
        }
        let target = face_target(face.darts.len());
        let product: f64 = face.darts.iter().map(|d| values[d.edge].re).product();
        if product != target {
            values[p] = -values[p];
        }
    }
    Ok(SignedWeights { values, mode: SignMode::SpanningTree })
}

/// Required alternating product around a face with `len` darts.
fn face_target(len: usize) -> f64 {
    if (len / 2 + 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Alternating product `prod(white -> black) / prod(black -> white)` of the
/// weights around a face cycle.
pub fn alternating_ratio(g: &PlanarGraph, sw: &SignedWeights, darts: &[Dart]) -> Complex64 {
    let mut ratio = Complex64::new(1.0, 0.0);
    for d in darts {
        let w = sw.values[d.edge];
        if g.color(g.tail(*d)) == Some(Color::White) {
            ratio *= w;
        } else {
            ratio /= w;
        }
    }
    ratio
}

/// Largest deviation of `ratio / |ratio|` from `(-1)^(l/2 + 1)` over bounded
/// faces, together with the worst face.
pub fn check_kasteleyn_condition(g: &PlanarGraph, sw: &SignedWeights) -> (f64, Option<usize>) {
    let mut worst = (0.0, None);
    for f in g.bounded_faces() {
        let darts = &g.faces()[f].darts;
        let r = alternating_ratio(g, sw, darts);
        let dev = (r / r.norm() - face_target(darts.len())).norm();
        if dev > worst.0 {
            worst = (dev, Some(f));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid_region, cylinder_graph, temperleyan_graph, HoleSpec, RegionSpec};

    #[test]
    fn square_face_has_one_flip() {
        let g = PlanarGraph::grid(2, 2).unwrap();
        let sw = kasteleyn_signs(&g).unwrap();
        assert_eq!(sw.mode, SignMode::SpanningTree);
        assert_eq!(sw.values.iter().filter(|v| v.re < 0.0).count(), 1);
        let f = g.bounded_faces().next().unwrap();
        let r = alternating_ratio(&g, &sw, &g.faces()[f].darts);
        assert!((r + 1.0).norm() < 1e-15);
    }

    #[test]
    fn every_family_satisfies_the_condition() {
        let spec = RegionSpec::rectangle(5, 5).with_hole(HoleSpec { x0: 2, y0: 2, x1: 3, y1: 3, mark: Some((2.5, 3.0)) });
        let graphs = vec![
            PlanarGraph::grid(4, 5).unwrap(),
            temperleyan_graph(&build_grid_region(&RegionSpec::rectangle(3, 3)).unwrap()).unwrap(),
            temperleyan_graph(&build_grid_region(&spec).unwrap()).unwrap(),
            cylinder_graph(3, 3).unwrap(),
        ];
        for g in &graphs {
            let sw = kasteleyn_signs(g).unwrap();
            let (dev, face) = check_kasteleyn_condition(g, &sw);
            assert!(dev < 1e-12, "face {face:?}");
        }
    }

    #[test]
    fn temperleyan_rule() {
        let g = temperleyan_graph(&build_grid_region(&RegionSpec::rectangle(2, 2)).unwrap()).unwrap();
        let sw = kasteleyn_signs(&g).unwrap();
        for e in g.edges() {
            let d = if g.color(e.u) == Some(Color::White) { e.disp } else { -e.disp };
            let expected = Complex64::new(d.re.signum() * (d.re != 0.0) as i32 as f64, d.im.signum() * (d.im != 0.0) as i32 as f64);
            assert_eq!(sw.values[e.id], expected);
        }
    }

    #[test]
    fn non_bipartite_rejected() {
        let g = PlanarGraph::grid(2, 2).unwrap();
        let g = g.with_classes(&[VertexClass::Plain; 4]).unwrap();
        assert!(matches!(kasteleyn_signs(&g), Err(Error::NotBipartite(_))));
    }
}
