//! Invariant suites behind `qdimer verify`.

use anyhow::{bail, Result};
use num_complex::Complex64;
use qdimer_core::connection::Matrix2;
use qdimer_core::enumeration::{partition_oracle, DEFAULT_CAP};
use qdimer_core::exact::{check_discrete_cr, kinv_via_green, section_from_column, temperleyan_site, Site};
use qdimer_core::kasteleyn::{
    assemble, dense_inverse, determinant, logdet_derivative, logdet_finite_difference, perturbation, pfaffian,
    scalar_kasteleyn, zipper_edge_contribution, KMatrix, Route, DEFINITION_CAP,
};
use qdimer_core::lattice::{build_grid_region, temperleyan_graph, HoleSpec, RegionSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cases::{connection_variants, oracle_family, small_family, Case};
use crate::config::ExperimentConfig;
use crate::report::Report;

pub const SUITES: [&str; 5] = ["qdet-oracle", "gauge", "cr-greens", "pfaffian", "logdet"];

/// Graph-built matrices up to this many vertices also go through the
/// cycle expansion, which only follows nonzero blocks.
pub const GRAPH_DEFINITION_CAP: usize = 14;

/// Finite-difference step of the logdet suite.
pub const FD_STEP: f64 = 1e-4;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn run_verify(suite: &str, cfg: &ExperimentConfig) -> Result<Report> {
    let inputs = serde_json::json!({ "suite": suite, "verify": cfg.verify });
    let mut report = Report::new(&cfg.name_or(&format!("verify {suite}")), cfg.seed, inputs, cfg.effective_tolerances());
    match suite {
        "qdet-oracle" => qdet_oracle(cfg, &mut report)?,
        "gauge" => gauge(cfg, &mut report)?,
        "cr-greens" => cr_greens(cfg, &mut report)?,
        "pfaffian" => pfaffian_routes(cfg, &mut report)?,
        "logdet" => logdet(cfg, &mut report)?,
        other => bail!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")),
    }
    Ok(report)
}

struct OracleRow {
    doubled: f64,
    pfaffian: f64,
    definition: Option<f64>,
}

fn qdet_oracle(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let family = oracle_family()?;
    let variants = connection_variants(cfg.seed);
    let jobs: Vec<(&Case, &(String, Matrix2))> = family.iter().flat_map(|c| variants.iter().map(move |v| (c, v))).collect();
    let rows: Vec<Result<OracleRow>> = jobs
        .par_iter()
        .map(|(case, (_, a))| {
            let conn = case.with_matrix(*a)?;
            let oracle = partition_oracle(&case.graph, &case.unit_weights(), &conn, DEFAULT_CAP)?.z;
            let k = assemble(&case.graph, &case.sw, &conn)?;
            let definition = if case.graph.num_vertices() <= GRAPH_DEFINITION_CAP {
                Some(rel(k.qdet_definition_capped(GRAPH_DEFINITION_CAP)?.value, oracle))
            } else {
                None
            };
            Ok(OracleRow {
                doubled: rel(k.qdet(Route::DoubledDet)?.value, oracle),
                pfaffian: rel(k.qdet(Route::Pfaffian)?.value, oracle),
                definition,
            })
        })
        .collect();
    let rows: Vec<OracleRow> = rows.into_iter().collect::<Result<_>>()?;
    let worst = |f: &dyn Fn(&OracleRow) -> Option<f64>| rows.iter().filter_map(f).fold(0.0, f64::max);
    let doubled = worst(&|r| Some(r.doubled));
    let pf = worst(&|r| Some(r.pfaffian));
    let def = worst(&|r| r.definition);
    let oracle = "exhaustive double-dimer enumeration";
    report.metric("cases", rows.len() as f64, None, "graph family x connection variants");
    report.metric("max rel err doubled-det", doubled, None, oracle);
    report.metric("max rel err pfaffian", pf, None, oracle);
    report.metric("max rel err definition", def, None, oracle);
    let tol = cfg.tolerance("qdet");
    report.check_true("at least 50 cases", rows.len() >= 50, format!("{} cases", rows.len()));
    report.check_le("qdet doubled-det vs enumeration", doubled, tol, "");
    report.check_le("qdet pfaffian vs enumeration", pf, tol, "");
    report.check_le("qdet definition vs enumeration", def, tol, format!("graphs with at most {GRAPH_DEFINITION_CAP} vertices"));
    Ok(())
}

fn gauge(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let family = small_family()?;
    let drifts: Vec<Result<f64>> = family
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let conn = case.with_matrix(Matrix2::random_su2(&mut rng))?;
            let base = assemble(&case.graph, &case.sw, &conn)?.qdet(Route::DoubledDet)?.value;
            let mut worst: f64 = 0.0;
            for _ in 0..cfg.verify.gauges {
                let psi: Vec<Matrix2> = (0..case.graph.num_vertices()).map(|_| Matrix2::random_sl2(&mut rng)).collect();
                let z = assemble(&case.graph, &case.sw, &conn.gauge_transform(&psi)?)?.qdet(Route::DoubledDet)?.value;
                worst = worst.max(rel(z, base));
            }
            Ok(worst)
        })
        .collect();
    let drifts: Vec<f64> = drifts.into_iter().collect::<Result<_>>()?;
    for (case, d) in family.iter().zip(&drifts) {
        report.metric(format!("max drift {}", case.name), *d, None, "gauge invariance: zero drift");
    }
    let worst = drifts.iter().copied().fold(0.0, f64::max);
    report.check_le(
        "Z_dd gauge drift",
        worst,
        cfg.tolerance("gauge"),
        format!("{} gauges on {} graphs", cfg.verify.gauges, family.len()),
    );
    Ok(())
}

fn cr_greens(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let mut green_err: f64 = 0.0;
    let mut cr_defect: f64 = 0.0;
    let mut residue_err: f64 = 0.0;
    for (c, r) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)] {
        let region = build_grid_region(&RegionSpec::rectangle(c, r))?;
        let g = temperleyan_graph(&region)?;
        let sw = qdimer_core::kasteleyn::kasteleyn_signs(&g)?;
        let (m, whites, blacks) = scalar_kasteleyn(&g, &sw);
        let direct = dense_inverse(&m)?;
        let green = kinv_via_green(&region)?;
        green_err = green_err.max((&direct - &green).map(|z| z.norm()).max());
        for (col, &w) in whites.iter().enumerate() {
            let Site::Edge(e) = temperleyan_site(&region, &g, w) else {
                bail!("white vertex {w} is not an edge midpoint");
            };
            let rep = check_discrete_cr(&section_from_column(&region, &g, &blacks, &green, col), &region);
            residue_err = residue_err.max((rep.residues[e] - 1.0).norm());
            cr_defect = cr_defect.max(rep.max_defect_excluding(&[e]));
        }
    }
    // With a hole the removed edge on its boundary is a second pole.
    let hole = HoleSpec { x0: 2, y0: 2, x1: 3, y1: 3, mark: Some((2.5, 3.0)) };
    let region = build_grid_region(&RegionSpec::rectangle(5, 5).with_hole(hole))?;
    let removed: Vec<usize> = region.removed_edges.iter().flatten().copied().collect();
    let g = temperleyan_graph(&region)?;
    let sw = qdimer_core::kasteleyn::kasteleyn_signs(&g)?;
    let (m, whites, blacks) = scalar_kasteleyn(&g, &sw);
    let inv = dense_inverse(&m)?;
    let mut holed_defect: f64 = 0.0;
    for (col, &w) in whites.iter().enumerate() {
        let Site::Edge(e) = temperleyan_site(&region, &g, w) else {
            bail!("white vertex {w} is not an edge midpoint");
        };
        let rep = check_discrete_cr(&section_from_column(&region, &g, &blacks, &inv, col), &region);
        residue_err = residue_err.max((rep.residues[e] - 1.0).norm());
        let mut poles = removed.clone();
        poles.push(e);
        holed_defect = holed_defect.max(rep.max_defect_excluding(&poles));
    }
    report.metric("max |K^-1 green - K^-1 direct|", green_err, None, "dense inverse of the Kasteleyn matrix");
    report.metric("max CR defect off poles", cr_defect, None, "discrete analyticity: zero");
    report.metric("max CR defect off poles (holed)", holed_defect, None, "discrete analyticity: zero");
    report.metric("max |residue - 1|", residue_err, None, "K K^-1 = identity");
    report.check_le("green-function inverse", green_err, cfg.tolerance("green"), "regions up to 4x4");
    report.check_le("CR defect", cr_defect.max(holed_defect), cfg.tolerance("cr"), "");
    report.check_le("residue at w", residue_err, cfg.tolerance("cr"), "");
    Ok(())
}

fn pfaffian_routes(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut routes: f64 = 0.0;
    let mut squares: f64 = 0.0;
    for i in 0..cfg.verify.matrices {
        let generic = KMatrix::random_self_dual(2 + i % (DEFINITION_CAP - 1), &mut rng);
        let bip = KMatrix::random_bipartite(1 + i % (DEFINITION_CAP / 2), &mut rng);
        let d = generic.qdet(Route::Definition)?.value;
        routes = routes.max(rel(generic.qdet(Route::Pfaffian)?.value, d));
        let d = bip.qdet(Route::Definition)?.value;
        routes = routes.max(rel(bip.qdet(Route::Pfaffian)?.value, d));
        routes = routes.max(rel(bip.qdet(Route::DoubledDet)?.value, d));
        for k in [&generic, &bip] {
            let z = k.z_tilde();
            let pf = pfaffian(&z)?;
            squares = squares.max(rel(pf * pf, determinant(&z)));
        }
    }
    report.metric("max route disagreement", routes, None, "cycle expansion");
    report.metric("max |Pf^2 - det| / |det|", squares, None, "Pf(A)^2 = det A");
    let tol = cfg.tolerance("routes");
    report.check_le("qdet routes agree", routes, tol, format!("{} random pairs", cfg.verify.matrices));
    report.check_le("pfaffian squares to determinant", squares, tol, "");
    Ok(())
}

fn logdet(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let family = small_family()?;
    let results: Vec<Result<(f64, f64)>> = family
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let conn = case.with_matrix(Matrix2::random_su2(&mut rng))?;
            let k = assemble(&case.graph, &case.sw, &conn)?;
            let k_inv = k.inverse()?;
            let (mut fd_err, mut sum_err) = (0.0f64, 0.0f64);
            for _ in 0..cfg.verify.directions {
                let b = Matrix2::random_traceless(&mut rng);
                let s = perturbation(&case.graph, &case.sw, &conn, 0, &b)?;
                let exact = logdet_derivative(&k, &s)?;
                let fd = logdet_finite_difference(&case.graph, &case.sw, &conn, 0, &b, FD_STEP)?;
                fd_err = fd_err.max(rel(fd, exact));
                let mut sum = Complex64::new(0.0, 0.0);
                for &e in &conn.zippers()[0].edges {
                    sum += zipper_edge_contribution(&case.graph, &conn, 0, &s, &k_inv, e)?.trace();
                }
                sum_err = sum_err.max(rel(sum, exact));
            }
            Ok((fd_err, sum_err))
        })
        .collect();
    let results: Vec<(f64, f64)> = results.into_iter().collect::<Result<_>>()?;
    let fd = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let sum = results.iter().map(|r| r.1).fold(0.0, f64::max);
    report.metric("max rel err vs finite difference", fd, None, "centered finite difference");
    report.metric("max rel err of edge sum", sum, None, "Tr(S K^-1)");
    let detail = format!("{} directions on {} graphs", cfg.verify.directions, family.len());
    report.check_le("logdet derivative vs finite difference", fd, cfg.tolerance("logdet-fd"), detail.clone());
    report.check_le("zipper edge contributions sum", sum, cfg.tolerance("logdet-sum"), detail);
    Ok(())
}
