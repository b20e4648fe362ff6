use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{Connection, Walk};
use crate::error::{Error, Result};
use crate::lattice::{Dart, EdgeId, PlanarGraph, VertexId};

/// Default vertex cap for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 36;

/// A perfect matching, as a sorted list of edge ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DimerCover {
    pub edges: Vec<EdgeId>,
}

/// A simple even cycle of a double-dimer configuration.
///
/// Canonical form: the walk starts at its lowest vertex and leaves it along
/// the lower-id edge of the two available.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Loop {
    pub vertices: Vec<VertexId>,
    #[serde(skip)]
    pub darts: Vec<Dart>,
    pub edges: Vec<EdgeId>,
}

impl Loop {
    pub fn walk(&self) -> Walk {
        Walk::new(self.darts.clone())
    }

    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DoubleDimerConfig {
    pub doubled: Vec<EdgeId>,
    pub loops: Vec<Loop>,
}

impl DoubleDimerConfig {
    pub fn num_loops(&self) -> usize {
        self.loops.len()
    }

    /// Sorted edge multiset; doubled edges appear twice.
    pub fn key(&self) -> Vec<EdgeId> {
        let mut k: Vec<EdgeId> = self.doubled.iter().flat_map(|&e| [e, e]).collect();
        k.extend(self.loops.iter().flat_map(|l| l.edges.iter().copied()));
        k.sort_unstable();
        k
    }
}

/// Sum of configuration weights with a breakdown by number of loops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedZ {
    pub z: Complex64,
    pub by_loops: BTreeMap<usize, Complex64>,
}

fn check_cap(g: &PlanarGraph, cap: usize) -> Result<()> {
    if g.num_vertices() > cap {
        return Err(Error::CapExceeded { size: g.num_vertices(), cap });
    }
    Ok(())
}

/// All perfect matchings, by backtracking on the lowest uncovered vertex.
pub fn enumerate_dimer_covers(g: &PlanarGraph, cap: usize) -> Result<Vec<DimerCover>> {
    check_cap(g, cap)?;
    let n = g.num_vertices();
    if n == 0 || n % 2 == 1 {
        return Ok(Vec::new());
    }
    // Branch on the first vertex in parallel; concatenating in branch order
    // keeps the output independent of the thread count.
    let first: Vec<Dart> = sorted_darts(g, 0);
    let branches: Vec<Vec<DimerCover>> = first
        .par_iter()
        .map(|d| {
            let mut covered = vec![false; n];
            let v = g.head(*d);
            if v == 0 {
                return Vec::new();
            }
            covered[0] = true;
            covered[v] = true;
            let mut chosen = vec![d.edge];
            let mut out = Vec::new();
            backtrack(g, &mut covered, &mut chosen, &mut out);
            out
        })
        .collect();
    let mut covers: Vec<DimerCover> = branches.into_iter().flatten().collect();
    covers.sort();
    Ok(covers)
}

fn sorted_darts(g: &PlanarGraph, v: VertexId) -> Vec<Dart> {
    let mut ds = g.darts_at(v).to_vec();
    ds.sort_by_key(|d| d.edge);
    ds
}

fn backtrack(g: &PlanarGraph, covered: &mut [bool], chosen: &mut Vec<EdgeId>, out: &mut Vec<DimerCover>) {
    let Some(v) = covered.iter().position(|c| !c) else {
        let mut edges = chosen.clone();
        edges.sort_unstable();
        out.push(DimerCover { edges });
        return;
    };
    covered[v] = true;
    for d in sorted_darts(g, v) {
        let w = g.head(d);
        if !covered[w] {
            covered[w] = true;
            chosen.push(d.edge);
            backtrack(g, covered, chosen, out);
            chosen.pop();
            covered[w] = false;
        }
    }
    covered[v] = false;
}

/// Superposes two matchings: common edges are doubled, the symmetric
/// difference splits into even cycles.
pub fn pair_to_config(g: &PlanarGraph, m1: &DimerCover, m2: &DimerCover) -> DoubleDimerConfig {
    let mut doubled = Vec::new();
    let mut incident: Vec<Vec<EdgeId>> = vec![Vec::new(); g.num_vertices()];
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&m1.edges, &m2.edges);
    let push = |e: EdgeId, incident: &mut Vec<Vec<EdgeId>>| {
        let edge = &g.edges()[e];
        incident[edge.u].push(e);
        incident[edge.v].push(e);
    };
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            push(a[i], &mut incident);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            push(b[j], &mut incident);
            j += 1;
        } else {
            doubled.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    let mut visited = vec![false; g.num_vertices()];
    let mut loops = Vec::new();
    for s in 0..g.num_vertices() {
        if visited[s] || incident[s].is_empty() {
            continue;
        }
        let mut darts = Vec::new();
        let mut vertices = Vec::new();
        let mut v = s;
        let mut e = *incident[s].iter().min().unwrap();
        loop {
            visited[v] = true;
            vertices.push(v);
            let d = g.dart_from(e, v);
            darts.push(d);
            v = g.head(d);
            if v == s {
                break;
            }
            e = *incident[v].iter().find(|&&x| x != e).expect("degree two");
        }
        let mut edges: Vec<EdgeId> = darts.iter().map(|d| d.edge).collect();
        edges.sort_unstable();
        loops.push(Loop { vertices, darts, edges });
    }
    DoubleDimerConfig { doubled, loops }
}

/// Distinct double-dimer configurations with their pair multiplicities.
pub fn enumerate_double_dimer(g: &PlanarGraph, cap: usize) -> Result<Vec<(DoubleDimerConfig, u64)>> {
    let covers = enumerate_dimer_covers(g, cap)?;
    Ok(pair_all(g, &covers))
}

pub fn pair_all(g: &PlanarGraph, covers: &[DimerCover]) -> Vec<(DoubleDimerConfig, u64)> {
    let partial: Vec<BTreeMap<Vec<EdgeId>, (DoubleDimerConfig, u64)>> = covers
        .par_iter()
        .map(|m1| {
            let mut acc = BTreeMap::new();
            for m2 in covers {
                let c = pair_to_config(g, m1, m2);
                acc.entry(c.key()).or_insert((c, 0)).1 += 1;
            }
            acc
        })
        .collect();
    let mut all: BTreeMap<Vec<EdgeId>, (DoubleDimerConfig, u64)> = BTreeMap::new();
    for part in partial {
        for (k, (c, m)) in part {
            all.entry(k).or_insert((c, 0)).1 += m;
        }
    }
    all.into_values().collect()
}

/// `prod_e nu(e)` (doubled edges twice) times `prod_loops Tr(monodromy)`.
pub fn config_weight(g: &PlanarGraph, cfg: &DoubleDimerConfig, nu: &[f64], conn: &Connection) -> Result<Complex64> {
    if nu.len() != g.num_edges() {
        return Err(Error::Mismatch(format!("{} weights for {} edges", nu.len(), g.num_edges())));
    }
    let mut w = Complex64::new(1.0, 0.0);
    for &e in &cfg.doubled {
        w *= nu[e] * nu[e];
    }
    for l in &cfg.loops {
        let edge_weight: f64 = l.edges.iter().map(|&e| nu[e]).product();
        w *= conn.monodromy(g, &l.walk())?.trace() * edge_weight;
    }
    Ok(w)
}

/// `Z_dd = sum over configurations of their weights`.
pub fn partition_oracle(g: &PlanarGraph, nu: &[f64], conn: &Connection, cap: usize) -> Result<WeightedZ> {
    let configs = enumerate_double_dimer(g, cap)?;
    partition_from_configs(g, &configs, nu, conn)
}

pub fn partition_from_configs(
    g: &PlanarGraph,
    configs: &[(DoubleDimerConfig, u64)],
    nu: &[f64],
    conn: &Connection,
) -> Result<WeightedZ> {
    let mut by_loops = BTreeMap::new();
    let mut z = Complex64::new(0.0, 0.0);
    for (c, _) in configs {
        let w = config_weight(g, c, nu, conn)?;
        z += w;
        *by_loops.entry(c.num_loops()).or_insert(Complex64::new(0.0, 0.0)) += w;
    }
    Ok(WeightedZ { z, by_loops })
}

/// Weighted sum over matchings, `Z(nu)`.
pub fn dimer_partition(covers: &[DimerCover], nu: &[f64]) -> f64 {
    covers.iter().map(|c| c.edges.iter().map(|&e| nu[e]).product::<f64>()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::cylinder_graph;

    #[test]
    fn grid_cover_counts() {
        for ((c, r), n) in [((2, 2), 2), ((2, 3), 3), ((4, 4), 36)] {
            let g = PlanarGraph::grid(c, r).unwrap();
            assert_eq!(enumerate_dimer_covers(&g, DEFAULT_CAP).unwrap().len(), n);
        }
    }

    #[test]
    fn cap_enforced() {
        let g = PlanarGraph::grid(4, 4).unwrap();
        assert_eq!(enumerate_dimer_covers(&g, 10), Err(Error::CapExceeded { size: 16, cap: 10 }));
    }

    #[test]
    fn four_cycle_configs() {
        let g = PlanarGraph::grid(2, 2).unwrap();
        let configs = enumerate_double_dimer(&g, DEFAULT_CAP).unwrap();
        assert_eq!(configs.len(), 3);
        let total: u64 = configs.iter().map(|c| c.1).sum();
        assert_eq!(total, 4);
        for (c, m) in &configs {
            assert_eq!(*m, 1 << c.num_loops());
        }
    }

    #[test]
    fn parallel_edges_form_a_loop() {
        let g = cylinder_graph(1, 1).unwrap();
        let covers = enumerate_dimer_covers(&g, DEFAULT_CAP).unwrap();
        assert_eq!(covers.len(), 2);
        let c = pair_to_config(&g, &covers[0], &covers[1]);
        assert_eq!(c.num_loops(), 1);
        assert_eq!(c.loops[0].len(), 2);
        assert_eq!(pair_to_config(&g, &covers[0], &covers[0]).num_loops(), 0);
        let configs = enumerate_double_dimer(&g, DEFAULT_CAP).unwrap();
        assert_eq!(configs.len(), 3);
    }

    #[test]
    fn cylinder_three_one_loop() {
        let g = cylinder_graph(3, 1).unwrap();
        let covers = enumerate_dimer_covers(&g, DEFAULT_CAP).unwrap();
        assert_eq!(covers.len(), 2);
        let c = pair_to_config(&g, &covers[0], &covers[1]);
        assert_eq!(c.loops.len(), 1);
        assert_eq!(c.loops[0].len(), 6);
        assert_eq!(c.loops[0].vertices[0], 0);
    }

    #[test]
    fn one_edge() {
        let g = PlanarGraph::single_edge();
        let configs = enumerate_double_dimer(&g, DEFAULT_CAP).unwrap();
        assert_eq!(configs, vec![(DoubleDimerConfig { doubled: vec![0], loops: vec![] }, 1)]);
    }
}
