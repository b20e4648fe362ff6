//! Planar graphs: grid regions, Temperleyan derived graphs and the cylinder.

mod cylinder;
mod graph;
mod io;
mod region;
mod validate;

pub use cylinder::{cylinder_axis_cut, cylinder_graph};
pub use graph::{Color, Dart, Edge, EdgeId, Face, FaceId, PlanarGraph, Surface, Vertex, VertexClass, VertexId};
pub use io::{graph_from_json, graph_to_json, EdgeRecord, GraphDocument, VertexRecord};
pub use region::{build_grid_region, temperleyan_graph, GridRegion, HoleSpec, RegionEdge, RegionSpec};
pub use validate::{validate_embedding, Diagnostics};
