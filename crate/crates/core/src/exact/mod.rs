//! Closed-form targets: the cylinder spectrum and loop-count generating
//! functions, continuum and discrete Green's functions, and the two-point
//! and chordal observables on the upper half plane.

mod continuum;
mod cylinder;
mod discrete;
mod finite;
mod poly;

pub use continuum::{
    chordal_left_probability, f_minus, f_plus, f_plus_dagger, halfplane_greens, two_point_discrete,
    two_point_loop_expectation, two_point_table, BoundaryKind, Side, TwoPointMode, TwoPointSum,
};
pub use cylinder::{
    chebyshev_nodes, cylinder_detK, cylinder_eigen_residual, cylinder_inverse_constants, cylinder_line_operator,
    cylinder_loop_poly, cylinder_loop_poly_interpolated, cylinder_pgf, cylinder_pgf_asymptotic, cylinder_roots,
    lambda_for, AsymptoticPgf, PgfConvention,
};
pub use discrete::{
    check_discrete_cr, discrete_green, dual_boundary_node, green_from_edges, green_on_graph, kda_diagnostic,
    kda_leading, kinv_via_green, section_from_column, temperleyan_site, vertex_laplacian, CrReport, DiscreteSection,
    GreenKind, GreenOperator, KdaEntry, Site,
};
pub use finite::{downward_zipper, surrounding_both_expectation};
pub use poly::Poly;
