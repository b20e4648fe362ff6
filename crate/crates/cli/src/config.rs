use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use qdimer_core::connection::{Connection, Matrix2, ZipperSpec};
use qdimer_core::lattice::{
    build_grid_region, cylinder_axis_cut, cylinder_graph, graph_from_json, temperleyan_graph, PlanarGraph, RegionSpec,
};
use serde::{Deserialize, Serialize};

/// Tolerances used when a config does not override them.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("qdet", 1e-9),
    ("routes", 1e-9),
    ("gauge", 1e-9),
    ("green", 1e-8),
    ("cr", 1e-10),
    ("logdet-fd", 1e-6),
    ("logdet-sum", 1e-9),
    ("pgf-sum", 1e-10),
    ("enumeration", 1e-12),
    ("twopoint-rel", 0.05),
    ("sigma", 3.0),
    ("sampler-sigma", 4.0),
    ("quadrature", 1e-8),
];

/// One experiment, read from a TOML file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub graph: Option<GraphSpec>,
    pub connection: Option<ConnectionSpec>,
    pub tolerances: BTreeMap<String, f64>,
    pub output: OutputSpec,
    pub verify: VerifyParams,
    pub cylinder: CylinderParams,
    pub twopoint: TwoPointParams,
    pub haar: HaarParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Grid { cols: usize, rows: usize },
    Cylinder { n: usize, m: usize },
    /// The lattice graph of a grid region.
    Region { region: RegionSpec },
    /// The Temperleyan graph of a grid region.
    Temperleyan { region: RegionSpec },
    /// A graph document written by `qdimer graph`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Trivial,
    /// `diag(lambda, 1/lambda)` across the axis cut of a cylinder.
    Axis { lambda: [f64; 2] },
    Zippers { zippers: Vec<ZipperSpec> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    /// CSV or JSONL artifact, depending on the subcommand.
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub suite: Option<String>,
    pub gauges: usize,
    pub directions: usize,
    pub matrices: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { suite: None, gauges: 100, directions: 10, matrices: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylinderParams {
    /// Circumference parameter of the finite cylinders; must be odd.
    pub n: usize,
    pub inv_tau_min: f64,
    pub inv_tau_max: f64,
    pub inv_tau_step: f64,
    pub k_max: usize,
}

impl Default for CylinderParams {
    fn default() -> Self {
        CylinderParams { n: 51, inv_tau_min: 0.1, inv_tau_max: 3.0, inv_tau_step: 0.1, k_max: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPointParams {
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    pub eps: Vec<f64>,
    pub mc: bool,
    /// Mesh of the finite grid used by the Monte Carlo cross-check.
    pub mc_eps: f64,
    pub mc_cols: usize,
    pub mc_rows: usize,
    pub mc_samples: usize,
}

impl Default for TwoPointParams {
    fn default() -> Self {
        TwoPointParams {
            z1: [0.0, 1.0],
            z2: [0.0, 2.0],
            eps: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            mc: false,
            mc_eps: 0.25,
            mc_cols: 12,
            mc_rows: 12,
            mc_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaarModeSpec {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HaarParams {
    pub n: usize,
    pub m: usize,
    pub mode: HaarModeSpec,
    pub degree: usize,
    pub samples: usize,
}

impl Default for HaarParams {
    fn default() -> Self {
        HaarParams { n: 3, m: 2, mode: HaarModeSpec::Quadrature, degree: 8, samples: 100_000 }
    }
}

impl ExperimentConfig {
    /// Reads a config and checks that every file it references exists.
    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(GraphSpec::File { path: p }) = &mut cfg.graph {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(GraphSpec::File { path }) = &self.graph {
            if !path.exists() {
                bail!("graph file {} does not exist", path.display());
            }
        }
        for (k, v) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(name, _)| name == k) {
                bail!("unknown tolerance {k:?}");
            }
            if !(*v > 0.0) {
                bail!("tolerance {k:?} must be positive");
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        if let Some(v) = self.tolerances.get(key) {
            return *v;
        }
        DEFAULT_TOLERANCES
            .iter()
            .find(|(name, _)| *name == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("no default tolerance named {key}"))
    }

    /// All tolerances in effect, for echoing in reports.
    pub fn effective_tolerances(&self) -> BTreeMap<String, f64> {
        DEFAULT_TOLERANCES.iter().map(|(k, _)| (k.to_string(), self.tolerance(k))).collect()
    }

    pub fn name_or(&self, fallback: &str) -> String {
        self.name.clone().unwrap_or_else(|| fallback.to_string())
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<PlanarGraph> {
        Ok(match self {
            GraphSpec::Grid { cols, rows } => PlanarGraph::grid(*cols, *rows)?,
            GraphSpec::Cylinder { n, m } => cylinder_graph(*n, *m)?,
            GraphSpec::Region { region } => build_grid_region(region)?.lattice_graph()?,
            GraphSpec::Temperleyan { region } => temperleyan_graph(&build_grid_region(region)?)?,
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                graph_from_json(&text)?
            }
        })
    }
}

impl ConnectionSpec {
    pub fn build(&self, g: &PlanarGraph, graph: &GraphSpec) -> Result<Connection> {
        Ok(match self {
            ConnectionSpec::Trivial => Connection::trivial(g),
            ConnectionSpec::Axis { lambda } => {
                let GraphSpec::Cylinder { n, m } = graph else {
                    bail!("an axis connection needs a cylinder graph");
                };
                let z = ZipperSpec {
                    edges: cylinder_axis_cut(*n, *m, 0),
                    start_face: None,
                    matrix: Matrix2::diag(Complex64::new(lambda[0], lambda[1])),
                };
                Connection::from_specs(g, &[z])?
            }
            ConnectionSpec::Zippers { zippers } => Connection::from_specs(g, zippers)?,
        })
    }
}
