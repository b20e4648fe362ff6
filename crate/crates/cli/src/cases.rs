//! Graph families and connections shared by the verification suites.

use anyhow::{Context, Result};
use num_complex::Complex64;
use qdimer_core::connection::{make_zipper, Connection, Matrix2, Zipper};
use qdimer_core::exact::downward_zipper;
use qdimer_core::kasteleyn::{kasteleyn_signs, SignedWeights};
use qdimer_core::lattice::{build_grid_region, cylinder_axis_cut, cylinder_graph, temperleyan_graph, FaceId, PlanarGraph, RegionSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Diagonal test connection used throughout the suites.
pub const TEST_LAMBDA: Complex64 = Complex64::new(0.7, 0.45);

/// A graph with Kasteleyn weights and one zipper that carries all
/// nontrivial transport.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub graph: PlanarGraph,
    pub sw: SignedWeights,
    pub zipper: Zipper,
}

impl Case {
    fn new(name: &str, graph: PlanarGraph, zipper: impl FnOnce(&PlanarGraph) -> Result<Zipper>) -> Result<Self> {
        let sw = kasteleyn_signs(&graph)?;
        let zipper = zipper(&graph).with_context(|| format!("zipper for {name}"))?;
        Ok(Case { name: name.to_string(), graph, sw, zipper })
    }

    pub fn with_matrix(&self, a: Matrix2) -> Result<Connection> {
        let mut z = self.zipper.clone();
        z.matrix = a;
        Ok(Connection::from_zippers(&self.graph, vec![z])?)
    }

    pub fn unit_weights(&self) -> Vec<f64> {
        vec![1.0; self.graph.num_edges()]
    }
}

/// The bounded face whose centroid is closest to the vertex centroid.
pub fn central_face(g: &PlanarGraph) -> FaceId {
    let c: Complex64 = g.vertices().iter().map(|v| v.pos).sum::<Complex64>() / g.num_vertices() as f64;
    g.bounded_faces()
        .min_by(|&a, &b| (g.face_centroid(a) - c).norm().total_cmp(&(g.face_centroid(b) - c).norm()))
        .expect("graph has a bounded face")
}

fn planar(name: &str, g: PlanarGraph) -> Result<Case> {
    Case::new(name, g, |g| Ok(downward_zipper(g, central_face(g), Matrix2::identity())?))
}

fn cylinder(n: usize, m: usize) -> Result<Case> {
    Case::new(&format!("cylinder({n},{m})"), cylinder_graph(n, m)?, |g| {
        Ok(make_zipper(g, &cylinder_axis_cut(n, m, 0), Matrix2::identity())?)
    })
}

fn temperleyan(cols: usize, rows: usize) -> Result<Case> {
    let g = temperleyan_graph(&build_grid_region(&RegionSpec::rectangle(cols, rows))?)?;
    planar(&format!("temperleyan {cols}x{rows}"), g)
}

/// C4, the 2x3 and 3x4 grids, Temperleyan 2x2 and 3x3 regions and the
/// cylinders (1,1), (3,1), (3,2).
pub fn oracle_family() -> Result<Vec<Case>> {
    Ok(vec![
        planar("C4", PlanarGraph::grid(2, 2)?)?,
        planar("grid 2x3", PlanarGraph::grid(2, 3)?)?,
        planar("grid 3x4", PlanarGraph::grid(3, 4)?)?,
        temperleyan(2, 2)?,
        temperleyan(3, 3)?,
        cylinder(1, 1)?,
        cylinder(3, 1)?,
        cylinder(3, 2)?,
    ])
}

/// Five graphs of different kinds for the gauge and derivative suites.
pub fn small_family() -> Result<Vec<Case>> {
    Ok(vec![
        planar("C4", PlanarGraph::grid(2, 2)?)?,
        planar("grid 2x3", PlanarGraph::grid(2, 3)?)?,
        temperleyan(2, 2)?,
        cylinder(3, 1)?,
        cylinder(3, 2)?,
    ])
}

/// Trivial, diagonal and five random SU(2) zipper matrices.
pub fn connection_variants(seed: u64) -> Vec<(String, Matrix2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![("trivial".to_string(), Matrix2::identity()), ("diagonal".to_string(), Matrix2::diag(TEST_LAMBDA))];
    for i in 0..5 {
        out.push((format!("su2 #{i}"), Matrix2::random_su2(&mut rng)));
    }
    out
}
