use serde::Serialize;

use super::graph::{Dart, PlanarGraph, Surface};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub passed: bool,
    /// First violated invariant.
    pub failure: Option<String>,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_faces: usize,
    /// `V - E + F` counting every face, boundary faces included.
    pub euler_characteristic: i64,
}

/// Audits face cycles, the Euler relation and the declared bipartition.
///
/// Every face, boundary faces included, is capped by a disk, so a connected
/// graph must satisfy `V - E + F = 2` whatever its surface tag. For the
/// cylinder this is the same statement as `V - E + F_inner = 0`.
pub fn validate_embedding(g: &PlanarGraph) -> Diagnostics {
    let faces = g.faces();
    let mut diag = Diagnostics {
        passed: true,
        failure: None,
        vertices: g.num_vertices(),
        edges: g.num_edges(),
        faces: faces.len(),
        boundary_faces: faces.iter().filter(|f| f.boundary).count(),
        euler_characteristic: g.num_vertices() as i64 - g.num_edges() as i64 + faces.len() as i64,
    };
    let mut fail = |msg: String| {
        if diag.passed {
            diag.passed = false;
            diag.failure = Some(msg);
        }
    };

    let mut uses = vec![0usize; 2 * g.num_edges()];
    for (f, face) in faces.iter().enumerate() {
        if face.darts.is_empty() {
            fail(format!("face {f} is empty"));
            continue;
        }
        if let Some(d) = face.darts.iter().find(|d| d.edge >= g.num_edges()) {
            fail(format!("face {f} references missing edge {}", d.edge));
            continue;
        }
        let k = face.darts.len();
        for i in 0..k {
            let (a, b) = (face.darts[i], face.darts[(i + 1) % k]);
            if g.head(a) != g.tail(b) {
                fail(format!("face {f} is not a closed walk at position {i}"));
                break;
            }
        }
        for d in &face.darts {
            uses[dart_slot(*d)] += 1;
        }
    }
    for (slot, &n) in uses.iter().enumerate() {
        if n != 1 {
            let d = Dart::new(slot / 2, slot % 2 == 0);
            fail(format!("dart {:?} of edge {} appears in {n} face cycles", d.forward, d.edge));
            break;
        }
    }

    let components = g.connected_components() as i64;
    if diag.euler_characteristic != 2 * components {
        fail(format!(
            "Euler relation: V - E + F = {} but {} expected for {} component(s)",
            diag.euler_characteristic,
            2 * components,
            components
        ));
    }
    if g.surface() == Surface::Cylinder && diag.boundary_faces != 2 {
        fail(format!("cylinder has {} boundary faces instead of 2", diag.boundary_faces));
    }
    if diag.boundary_faces == 0 {
        fail("no boundary face".into());
    }

    let declared = g.vertices().iter().any(|v| v.class.color().is_some());
    if declared {
        if let Some(v) = g.vertices().iter().find(|v| v.class.color().is_none()) {
            fail(format!("vertex {} has no color in a bipartite graph", v.id));
        } else if let Some(e) = g.edges().iter().find(|e| g.color(e.u) == g.color(e.v)) {
            fail(format!("edge {} joins two vertices of the same color", e.id));
        }
    }
    diag
}

fn dart_slot(d: Dart) -> usize {
    2 * d.edge + usize::from(!d.forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid_region, cylinder_graph, temperleyan_graph, HoleSpec, RegionSpec};

    #[test]
    fn constructors_pass() {
        let grids = [PlanarGraph::grid(2, 2).unwrap(), PlanarGraph::grid(4, 3).unwrap(), PlanarGraph::single_edge()];
        for g in &grids {
            let d = validate_embedding(g);
            assert!(d.passed, "{:?}", d.failure);
        }
        let spec = RegionSpec::rectangle(6, 5).with_hole(HoleSpec { x0: 2, y0: 1, x1: 4, y1: 3, mark: Some((3.0, 3.0)) });
        let r = build_grid_region(&spec).unwrap();
        for g in [r.lattice_graph().unwrap(), temperleyan_graph(&r).unwrap()] {
            let d = validate_embedding(&g);
            assert!(d.passed, "{:?}", d.failure);
        }
    }

    #[test]
    fn cylinder_euler() {
        for (n, m) in [(1, 1), (3, 2), (5, 3)] {
            let g = cylinder_graph(n, m).unwrap();
            let d = validate_embedding(&g);
            assert!(d.passed, "{:?}", d.failure);
            assert_eq!(d.euler_characteristic - d.boundary_faces as i64, 0);
        }
    }

    #[test]
    fn corrupted_face_is_named() {
        let mut g = PlanarGraph::grid(3, 3).unwrap();
        let f = g.bounded_faces().nth(2).unwrap();
        let faces = g.faces_mut();
        let d = faces[f].darts[1];
        faces[f].darts[1] = d.rev();
        let diag = validate_embedding(&g);
        assert!(!diag.passed);
        assert!(diag.failure.unwrap().starts_with(&format!("face {f} ")));
    }

    #[test]
    fn bipartite_violation() {
        use crate::lattice::VertexClass;
        let g = PlanarGraph::grid(2, 2).unwrap();
        let classes = [VertexClass::Black, VertexClass::Black, VertexClass::White, VertexClass::Black];
        let g = g.with_classes(&classes).unwrap();
        let diag = validate_embedding(&g);
        assert!(diag.failure.unwrap().contains("same color"));
    }
}
