use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::word::{lamination_of, Lamination};
use crate::connection::{Matrix2, Zipper};
use crate::enumeration::{enumerate_double_dimer, DoubleDimerConfig};
use crate::error::{Error, Result};
use crate::lattice::PlanarGraph;

/// Lamination probabilities under the natural double-dimer measure.
#[derive(Debug, Clone, PartialEq)]
pub struct LamDistribution {
    pub probabilities: BTreeMap<Lamination, f64>,
    /// Standard errors; zero in exact mode.
    pub stderr: BTreeMap<Lamination, f64>,
    /// `None` for an exact distribution.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LamRow {
    pub lamination: String,
    pub probability: f64,
    pub stderr: f64,
}

#[derive(Serialize)]
struct LamDocument<'a> {
    samples: Option<usize>,
    total_mass: f64,
    rows: &'a [LamRow],
}

impl LamDistribution {
    pub fn total_mass(&self) -> f64 {
        self.probabilities.values().sum()
    }

    pub fn probability(&self, lam: &Lamination) -> f64 {
        self.probabilities.get(lam).copied().unwrap_or(0.0)
    }

    pub fn rows(&self) -> Vec<LamRow> {
        self.probabilities
            .iter()
            .map(|(l, &p)| LamRow {
                lamination: l.to_string(),
                probability: p,
                stderr: self.stderr.get(l).copied().unwrap_or(0.0),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Serde(e.to_string());
        writeln!(out, "lamination,probability,stderr").map_err(io)?;
        for r in self.rows() {
            writeln!(out, "\"{}\",{:.15e},{:.6e}", r.lamination, r.probability, r.stderr).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let rows = self.rows();
        let doc = LamDocument { samples: self.samples, total_mass: self.total_mass(), rows: &rows };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// `sum_L P(L) prod_{gamma in L} Tr(w_gamma(gens)) / 2`, which equals
    /// `Z_dd(gens) / Z_dd(identity)` for a flat connection with these
    /// zipper matrices.
    pub fn reweighted(&self, gens: &[Matrix2]) -> Complex64 {
        self.probabilities.iter().map(|(l, &p)| l.trace_function(gens) * p / 2f64.powi(l.len() as i32)).sum()
    }
}

/// Exact distribution by enumeration with unit edge weights; a
/// configuration has weight `2^(number of loops)`.
pub fn mu0_lamination_distribution_exact(g: &PlanarGraph, zippers: &[Zipper], cap: usize) -> Result<LamDistribution> {
    let configs = enumerate_double_dimer(g, cap)?;
    if configs.is_empty() {
        return Err(Error::InvalidArgument("graph has no dimer cover".into()));
    }
    // The pair multiplicity of a configuration is exactly 2^loops.
    let total: u64 = configs.iter().map(|c| c.1).sum();
    let mut probabilities = BTreeMap::new();
    for (cfg, mult) in &configs {
        *probabilities.entry(lamination_of(g, cfg, zippers)).or_insert(0.0) += *mult as f64 / total as f64;
    }
    let stderr = probabilities.keys().map(|l| (l.clone(), 0.0)).collect();
    Ok(LamDistribution { probabilities, stderr, samples: None })
}

/// Empirical distribution of sampled configurations.
pub fn lamination_distribution_from_samples(
    g: &PlanarGraph,
    samples: &[DoubleDimerConfig],
    zippers: &[Zipper],
) -> LamDistribution {
    let n = samples.len();
    let mut counts: BTreeMap<Lamination, usize> = BTreeMap::new();
    for cfg in samples {
        *counts.entry(lamination_of(g, cfg, zippers)).or_default() += 1;
    }
    let mut probabilities = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    for (l, c) in counts {
        let p = c as f64 / n as f64;
        stderr.insert(l.clone(), (p * (1.0 - p) / n as f64).sqrt());
        probabilities.insert(l, p);
    }
    LamDistribution { probabilities, stderr, samples: Some(n) }
}
