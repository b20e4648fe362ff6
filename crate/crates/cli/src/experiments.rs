//! Runners for the `graph`, `sample`, `cylinder`, `twopoint` and `haar`
//! subcommands.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use qdimer_core::connection::{make_zipper, Connection, Matrix2, Zipper};
use qdimer_core::enumeration::{
    enumerate_dimer_covers, enumerate_double_dimer, sample_double_dimers, write_jsonl, DEFAULT_CAP,
};
use qdimer_core::exact::{
    cylinder_loop_poly, cylinder_pgf, cylinder_pgf_asymptotic, downward_zipper, surrounding_both_expectation,
    two_point_discrete, two_point_loop_expectation, PgfConvention, TwoPointMode,
};
use qdimer_core::kasteleyn::{assemble, check_kasteleyn_condition, determinant, kasteleyn_signs, scalar_kasteleyn, Route};
use qdimer_core::lattice::{cylinder_axis_cut, cylinder_graph, graph_to_json, validate_embedding, FaceId, PlanarGraph};
use qdimer_core::topology::{
    haar_extract, lamination_distribution_from_samples, loop_classes, mu0_lamination_distribution_exact,
    su2_trace_moment, HaarMode, Lamination, LoopClass,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GraphSpec, HaarModeSpec};
use crate::report::Report;

/// Double-dimer samples drawn by `qdimer sample` unless configured.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Factors of the q-product kept before the tail estimate takes over.
const Q_PRODUCT_TERMS: usize = 61;
/// Largest graph on which the per-configuration z-score is asserted. On
/// larger graphs most configurations are too rare for the binomial error
/// to be a usable scale, so the score is only reported.
const SAMPLER_CHECK_VERTICES: usize = 10;

const C4: GraphSpec = GraphSpec::Grid { cols: 2, rows: 2 };

/// Where a subcommand writes its data file: the configured path, or the
/// report path with another extension.
pub fn data_path(cfg: &ExperimentConfig, report_path: Option<&Path>, ext: &str) -> Option<PathBuf> {
    cfg.output.data.clone().or_else(|| report_path.map(|p| p.with_extension(ext)))
}

fn write_artifact(report: &mut Report, path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    report.artifacts.push(path.display().to_string());
    Ok(())
}

fn graph_spec(cfg: &ExperimentConfig) -> GraphSpec {
    cfg.graph.clone().unwrap_or(C4)
}

/// Zippers used to classify loops: those of the configured connection, or
/// the axis cut on a cylinder.
fn classification_zippers(cfg: &ExperimentConfig, g: &PlanarGraph, spec: &GraphSpec) -> Result<Vec<Zipper>> {
    if let Some(c) = &cfg.connection {
        return Ok(c.build(g, spec)?.zippers().to_vec());
    }
    if let GraphSpec::Cylinder { n, m } = spec {
        return Ok(vec![make_zipper(g, &cylinder_axis_cut(*n, *m, 0), Matrix2::identity())?]);
    }
    Ok(Vec::new())
}

pub fn run_graph(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    let spec = graph_spec(cfg);
    let g = spec.build()?;
    let inputs = serde_json::json!({ "graph": spec });
    let mut report = Report::new(&cfg.name_or("graph"), cfg.seed, inputs, cfg.effective_tolerances());
    let diag = validate_embedding(&g);
    report.metric("vertices", diag.vertices as f64, None, "construction");
    report.metric("edges", diag.edges as f64, None, "construction");
    report.metric("faces", diag.faces as f64, None, "construction");
    report.metric("euler characteristic", diag.euler_characteristic as f64, None, "V - E + F = 2");
    report.check_true("embedding is valid", diag.passed, diag.failure.unwrap_or_default());
    if g.is_bipartite() {
        let sw = kasteleyn_signs(&g)?;
        let (dev, face) = check_kasteleyn_condition(&g, &sw);
        report.check_le("Kasteleyn condition", dev, cfg.tolerance("enumeration"), format!("worst face {face:?}"));
        let (m, _, _) = scalar_kasteleyn(&g, &sw);
        if m.nrows() == m.ncols() {
            let det = determinant(&m).norm();
            report.metric("|det K0|", det, None, "number of dimer covers");
            if g.num_vertices() <= DEFAULT_CAP {
                let covers = enumerate_dimer_covers(&g, DEFAULT_CAP)?.len() as f64;
                report.metric("dimer covers", covers, None, "enumeration");
                report.check_le("|det K0| counts covers", (det - covers).abs() / covers.max(1.0), cfg.tolerance("qdet"), "");
            }
        }
    }
    if let Some(p) = data_path(cfg, out, "graph.json") {
        write_artifact(&mut report, &p, graph_to_json(&g)?.as_bytes())?;
    }
    Ok(report)
}

pub fn run_sample(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    let spec = graph_spec(cfg);
    let g = spec.build()?;
    let count = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let inputs = serde_json::json!({ "graph": spec, "samples": count });
    let mut report = Report::new(&cfg.name_or("sample"), cfg.seed, inputs, cfg.effective_tolerances());
    let nu = vec![1.0; g.num_edges()];
    let samples = sample_double_dimers(&g, &nu, count, cfg.seed)?;
    let again = sample_double_dimers(&g, &nu, count, cfg.seed)?;
    report.check_true("bit-reproducible under fixed seed", samples == again, "");
    let mean_loops = samples.iter().map(|s| s.num_loops() as f64).sum::<f64>() / count as f64;
    report.metric("mean loops per sample", mean_loops, None, "sample average");

    if g.num_vertices() <= DEFAULT_CAP {
        let exact = enumerate_double_dimer(&g, DEFAULT_CAP)?;
        let total: u64 = exact.iter().map(|c| c.1).sum();
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in &samples {
            *seen.entry(s.key()).or_default() += 1;
        }
        let n = count as f64;
        let mut worst: f64 = 0.0;
        let mut covered = 0;
        for (c, mult) in &exact {
            let p = *mult as f64 / total as f64;
            let f = seen.get(&c.key()).copied().unwrap_or(0);
            covered += f;
            if p < 1.0 {
                worst = worst.max((f as f64 / n - p).abs() / (p * (1.0 - p) / n).sqrt());
            }
        }
        report.metric("configurations", exact.len() as f64, None, "enumeration");
        report.metric("max |z| over configurations", worst, None, "enumeration probabilities");
        report.check_true("samples are valid configurations", covered == count, format!("{covered} of {count}"));
        if g.num_vertices() <= SAMPLER_CHECK_VERTICES {
            report.check_le("empirical vs exact configuration law", worst, cfg.tolerance("sampler-sigma"), "standard errors");
        } else {
            log::info!("{} vertices: configuration z-scores reported, not asserted", g.num_vertices());
        }

        let zippers = classification_zippers(cfg, &g, &spec)?;
        if !zippers.is_empty() {
            let exact = mu0_lamination_distribution_exact(&g, &zippers, DEFAULT_CAP)?;
            let emp = lamination_distribution_from_samples(&g, &samples, &zippers);
            for row in exact.rows() {
                let lam = emp.rows().into_iter().find(|r| r.lamination == row.lamination);
                let (p, e) = lam.map(|r| (r.probability, r.stderr)).unwrap_or((0.0, 0.0));
                report.metric(format!("P({})", row.lamination), p, Some(e), format!("enumeration {:.6}", row.probability));
            }
        }
    }
    if let Some(p) = data_path(cfg, out, "jsonl") {
        let mut buf = Vec::new();
        write_jsonl(&samples, &mut buf)?;
        write_artifact(&mut report, &p, &buf)?;
    }
    Ok(report)
}

fn conventions() -> [(PgfConvention, &'static str); 2] {
    [(PgfConvention::PairMeasure, "pair-measure"), (PgfConvention::TraceMarking, "trace-marking")]
}

/// Largest `|P_finite(k) - P_asymptotic(k)|` for `k <= k_max` with the
/// asymptotic product evaluated at `tau`.
fn asymptotic_gap(n: usize, m: usize, tau: f64, conv: PgfConvention, k_max: usize) -> Result<f64> {
    let finite = cylinder_pgf(n, m, conv)?;
    let asym = cylinder_pgf_asymptotic(conv, tau, m % 2 == 0, k_max, Q_PRODUCT_TERMS)?;
    Ok((0..=k_max).map(|k| (finite.coeff(k) - asym.poly.coeff(k)).norm()).fold(0.0, f64::max))
}

pub fn run_cylinder(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    let p = &cfg.cylinder;
    if p.n % 2 == 0 {
        bail!("cylinder n = {} must be odd", p.n);
    }
    if !(p.inv_tau_step > 0.0) || !(p.inv_tau_min > 0.0) || p.inv_tau_max < p.inv_tau_min {
        bail!("invalid 1/tau grid");
    }
    let steps = ((p.inv_tau_max - p.inv_tau_min) / p.inv_tau_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| p.inv_tau_min + i as f64 * p.inv_tau_step).collect();
    let inputs = serde_json::json!({ "cylinder": p });
    let mut report = Report::new(&cfg.name_or("cylinder"), cfg.seed, inputs, cfg.effective_tolerances());

    struct Row {
        inv_tau: f64,
        m: usize,
        conv: &'static str,
        finite: Vec<f64>,
        asym: Vec<f64>,
        finite_sum_err: f64,
        min_coeff: f64,
        asym_sum_err: f64,
    }
    let rows: Vec<Result<Row>> = grid
        .par_iter()
        .flat_map(|&inv_tau| conventions().into_par_iter().map(move |c| (inv_tau, c)))
        .map(|(inv_tau, (conv, label))| {
            let m = ((p.n as f64 * inv_tau).round() as usize).max(1);
            let finite = cylinder_pgf(p.n, m, conv)?;
            let tau = p.n as f64 / m as f64;
            let asym = cylinder_pgf_asymptotic(conv, tau, m % 2 == 0, p.k_max, Q_PRODUCT_TERMS)?;
            Ok(Row {
                inv_tau,
                m,
                conv: label,
                finite: (0..=p.k_max).map(|k| finite.coeff(k).re).collect(),
                asym: (0..=p.k_max).map(|k| asym.poly.coeff(k).re).collect(),
                finite_sum_err: (finite.sum() - 1.0).norm(),
                min_coeff: finite.real_coeffs().into_iter().fold(f64::INFINITY, f64::min),
                asym_sum_err: (asym.poly.sum().re + asym.dropped - 1.0).abs(),
            })
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;

    let mut csv = String::from("inv_tau,n,m,convention,k,P_finite,P_asymptotic,abs_diff\n");
    for r in &rows {
        for k in 0..=p.k_max {
            let _ = writeln!(
                csv,
                "{:.4},{},{},{},{},{:.12e},{:.12e},{:.3e}",
                r.inv_tau,
                p.n,
                r.m,
                r.conv,
                k,
                r.finite[k],
                r.asym[k],
                (r.finite[k] - r.asym[k]).abs()
            );
        }
    }
    for (_, label) in conventions() {
        let sel: Vec<&Row> = rows.iter().filter(|r| r.conv == label).collect();
        let gap = sel
            .iter()
            .flat_map(|r| r.finite.iter().zip(&r.asym).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        report.metric(format!("max |finite - asymptotic| {label}"), gap, None, "q-product at tau = n/m");
        // The two parities of m have different limits, so each is its own curve.
        for (parity, name) in [(0, "even"), (1, "odd")] {
            let p0: Vec<f64> = sel.iter().filter(|r| r.m % 2 == parity).map(|r| r.finite[0]).collect();
            let monotone =
                p0.windows(2).all(|w| w[1] <= w[0] + 1e-15) || p0.windows(2).all(|w| w[1] >= w[0] - 1e-15);
            let value = if monotone { 1.0 } else { 0.0 };
            report.metric(format!("P(0) monotone in tau {label}, m {name}"), value, None, "observed, not asserted");
        }
    }
    let sum_err = rows.iter().map(|r| r.finite_sum_err.max(r.asym_sum_err)).fold(0.0, f64::max);
    let min_coeff = rows.iter().map(|r| r.min_coeff).fold(f64::INFINITY, f64::min);
    let tol = cfg.tolerance("pgf-sum");
    report.check_le("coefficients sum to 1", sum_err, tol, format!("{} rows", rows.len()));
    report.check_le("coefficients nonnegative", (-min_coeff).max(0.0), tol, "");

    // The (1,1) cylinder against enumeration of the natural measure.
    let g = cylinder_graph(1, 1)?;
    let z = make_zipper(&g, &cylinder_axis_cut(1, 1, 0), Matrix2::identity())?;
    let exact = mu0_lamination_distribution_exact(&g, &[z], DEFAULT_CAP)?;
    let pgf = cylinder_pgf(1, 1, PgfConvention::PairMeasure)?;
    let g1 = LoopClass::generator(0);
    let diff = (0..=1)
        .map(|k| (pgf.coeff(k).re - exact.probability(&Lamination::parallel(g1.clone(), k))).abs())
        .fold(0.0, f64::max);
    report.metric("P(1 loop) at (1,1)", pgf.coeff(1).re, None, "enumeration 1/2");
    report.check_le("(1,1) row matches enumeration", diff, cfg.tolerance("enumeration"), "pair measure");

    // Finite-size comparison at aspect ratio close to 1.
    let (n, m) = (51, 50);
    for (tau, label) in [(n as f64 / m as f64, "n/m"), (n as f64 / (m + 1) as f64, "n/(m+1)")] {
        let gap = asymptotic_gap(n, m, tau, PgfConvention::TraceMarking, 5)?;
        report.metric(format!("(51,50) trace-marking gap, tau = {label}"), gap, None, "q-product, k <= 5");
    }

    if let Some(path) = data_path(cfg, out, "csv") {
        write_artifact(&mut report, &path, csv.as_bytes())?;
    }
    Ok(report)
}

/// Bounded face of `g` whose centroid is nearest to `p`.
fn face_near(g: &PlanarGraph, p: Complex64) -> FaceId {
    g.bounded_faces()
        .min_by(|&a, &b| (g.face_centroid(a) - p).norm().total_cmp(&(g.face_centroid(b) - p).norm()))
        .expect("grid has bounded faces")
}

pub fn run_twopoint(cfg: &ExperimentConfig, _out: Option<&Path>) -> Result<Report> {
    let p = &cfg.twopoint;
    let z1 = Complex64::new(p.z1[0], p.z1[1]);
    let z2 = Complex64::new(p.z2[0], p.z2[1]);
    let inputs = serde_json::json!({ "twopoint": p });
    let mut report = Report::new(&cfg.name_or("twopoint"), cfg.seed, inputs, cfg.effective_tolerances());
    let continuum = two_point_loop_expectation(z1, z2, TwoPointMode::Continuum)?;
    report.metric("continuum", continuum, None, "-(4/pi^2) log|(z1 - z2)/(z1 - conj z2)|");
    let sums: Vec<Result<f64>> = p.eps.par_iter().map(|&e| Ok(two_point_discrete(z1, z2, e)?.value)).collect();
    let mut errors = Vec::new();
    for (e, v) in p.eps.iter().zip(sums) {
        let v = v?;
        errors.push((v - continuum).abs());
        report.metric(format!("discrete eps = {e}"), v, None, format!("continuum, |error| = {:.3e}", (v - continuum).abs()));
    }
    if errors.len() >= 2 {
        let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
        report.check_true("error decreases with eps", decreasing, errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" > "));
    }
    if let Some(last) = errors.last() {
        report.check_le("relative error at finest eps", last / continuum, cfg.tolerance("twopoint-rel"), "");
    }

    if p.mc {
        let (cols, rows) = (p.mc_cols, p.mc_rows);
        let g = PlanarGraph::grid(cols, rows)?;
        let to_lattice = |z: Complex64| Complex64::new(z.re / p.mc_eps + (cols - 1) as f64 / 2.0, z.im / p.mc_eps);
        let (f1, f2) = (face_near(&g, to_lattice(z1)), face_near(&g, to_lattice(z2)));
        if f1 == f2 {
            bail!("both points fall in the same face; decrease mc_eps");
        }
        let sw = kasteleyn_signs(&g)?;
        let exact = surrounding_both_expectation(&g, &sw, f1, f2)?;
        let zippers = [downward_zipper(&g, f1, Matrix2::identity())?, downward_zipper(&g, f2, Matrix2::identity())?];
        let samples = sample_double_dimers(&g, &vec![1.0; g.num_edges()], p.mc_samples, cfg.seed)?;
        let counts: Vec<f64> = samples
            .par_iter()
            .map(|s| {
                loop_classes(&g, s, &zippers)
                    .iter()
                    .filter(|c| {
                        let w = c.winding(2);
                        w[0] != 0 && w[0] == w[1]
                    })
                    .count() as f64
            })
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let stderr = (var / n).sqrt();
        report.metric("finite grid, exact", exact, None, "-d^2 log Z / da db");
        report.metric("finite grid, Monte Carlo", mean, Some(stderr), format!("exact {exact:.6}"));
        let sigma = cfg.tolerance("sigma");
        let z = if stderr > 0.0 { (mean - exact).abs() / stderr } else if mean == exact { 0.0 } else { f64::INFINITY };
        report.check_le("Monte Carlo within sigma of exact", z, sigma, format!("{cols}x{rows} grid, {} samples", p.mc_samples));
    }
    Ok(report)
}

pub fn run_haar(cfg: &ExperimentConfig, _out: Option<&Path>) -> Result<Report> {
    let p = &cfg.haar;
    let inputs = serde_json::json!({ "haar": p });
    let mut report = Report::new(&cfg.name_or("haar"), cfg.seed, inputs, cfg.effective_tolerances());
    let mode = match p.mode {
        HaarModeSpec::Quadrature => HaarMode::Quadrature { degree: p.degree },
        HaarModeSpec::MonteCarlo => HaarMode::MonteCarlo { samples: p.samples, seed: cfg.seed },
    };
    let sigma = cfg.tolerance("sigma");
    let quad_tol = cfg.tolerance("quadrature");
    let within = |diff: f64, stderr: f64, scale: f64| match mode {
        HaarMode::Quadrature { .. } => diff <= quad_tol * scale.max(1.0),
        // Polynomial evaluators are integrated exactly by the Gram solve,
        // so the estimate may sit far inside its own error bar.
        HaarMode::MonteCarlo { .. } => diff <= sigma * stderr + quad_tol * scale.max(1.0),
    };

    let catalan = [1.0, 1.0, 2.0, 5.0];
    let mut moments_ok = true;
    for k in 0..=6u32 {
        let want = if k % 2 == 0 { catalan[k as usize / 2] } else { 0.0 };
        let (v, e) = su2_trace_moment(k, mode);
        moments_ok &= within((v - want).abs(), e, want);
        report.metric(format!("E[(Tr U)^{k}]"), v, Some(e), format!("Catalan {want}"));
    }
    report.check_true("trace moments", moments_ok, "");

    let g = cylinder_graph(p.n, p.m)?;
    let sw = kasteleyn_signs(&g)?;
    let zip = make_zipper(&g, &cylinder_axis_cut(p.n, p.m, 0), Matrix2::identity())?;
    let eval = |u: &[Matrix2]| {
        let mut z = zip.clone();
        z.matrix = u[0];
        let conn = Connection::from_zippers(&g, vec![z])?;
        Ok(assemble(&g, &sw, &conn)?.qdet(Route::DoubledDet)?.value)
    };
    let lams: Vec<Lamination> = (0..=p.m).map(|k| Lamination::parallel(LoopClass::generator(0), k)).collect();
    let coeffs = haar_extract(eval, &lams, 1, mode)?;
    let oracle = cylinder_loop_poly(p.n, p.m)?;
    let enumerated = if g.num_vertices() <= DEFAULT_CAP {
        let covers = enumerate_dimer_covers(&g, DEFAULT_CAP)?.len() as f64;
        let d = mu0_lamination_distribution_exact(&g, std::slice::from_ref(&zip), DEFAULT_CAP)?;
        Some((d, covers * covers))
    } else {
        None
    };
    let mut ok = true;
    for (k, (c, lam)) in coeffs.iter().zip(&lams).enumerate() {
        let want = oracle.coeff(k).re;
        if let Some((d, z)) = &enumerated {
            let from_enum = d.probability(lam) * z / 2f64.powi(k as i32);
            ok &= (from_enum - want).abs() <= quad_tol * want.max(1.0);
        }
        ok &= within((c.value - want).norm(), c.stderr, want);
        report.metric(format!("coefficient of {}", c.lamination), c.value.re, Some(c.stderr), format!("product formula {want}"));
    }
    report.check_true("lamination coefficients", ok, format!("cylinder({},{})", p.n, p.m));
    Ok(report)
}
