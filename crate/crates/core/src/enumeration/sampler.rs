use std::io::Write;

use log::debug;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::covers::{pair_to_config, DimerCover, DoubleDimerConfig};
use crate::error::{Error, Result};
use crate::kasteleyn::{dense_inverse, kasteleyn_signs, scalar_kasteleyn, CMatrix};
use crate::lattice::{Color, EdgeId, PlanarGraph};

/// Probabilities closer than this to 0 or 1 are clamped.
const CLAMP: f64 = 1e-12;

/// Samples per seeded stream; fixing it makes results independent of the
/// number of worker threads.
pub const CHUNK: usize = 1024;

/// Exact sampler for the weighted dimer measure on a planar bipartite graph.
///
/// White vertices are matched in canonical order. The probability of edge
/// `wb` given the choices so far is `K(w,b) K^-1(b,w)` for the Kasteleyn
/// matrix of the remaining graph, and the inverse is updated by a rank-one
/// Schur complement after each choice.
#[derive(Debug, Clone)]
pub struct DimerSampler {
    m: CMatrix,
    n_inv: CMatrix,
    white_index: Vec<usize>,
    black_index: Vec<usize>,
    /// Per white row: `(edge, black column, signed weight)`.
    options: Vec<Vec<(EdgeId, usize, Complex64)>>,
}

impl DimerSampler {
    pub fn new(g: &PlanarGraph, nu: &[f64]) -> Result<Self> {
        if nu.len() != g.num_edges() {
            return Err(Error::Mismatch(format!("{} weights for {} edges", nu.len(), g.num_edges())));
        }
        if nu.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("sampler weights must be positive".into()));
        }
        let sw = kasteleyn_signs(g)?.with_weights(nu)?;
        let (m, whites, blacks) = scalar_kasteleyn(g, &sw);
        if whites.len() != blacks.len() {
            return Err(Error::Unbalanced { black: blacks.len(), white: whites.len() });
        }
        let n_inv = dense_inverse(&m)?;
        let mut white_index = vec![usize::MAX; g.num_vertices()];
        let mut black_index = vec![usize::MAX; g.num_vertices()];
        for (i, &w) in whites.iter().enumerate() {
            white_index[w] = i;
        }
        for (i, &b) in blacks.iter().enumerate() {
            black_index[b] = i;
        }
        let mut options = vec![Vec::new(); whites.len()];
        for e in g.edges() {
            let (w, b) = if g.color(e.u) == Some(Color::White) { (e.u, e.v) } else { (e.v, e.u) };
            options[white_index[w]].push((e.id, black_index[b], sw.values[e.id]));
        }
        Ok(DimerSampler { m, n_inv, white_index, black_index, options })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DimerCover {
        let n = self.m.nrows();
        let mut inv = self.n_inv.clone();
        let mut taken = vec![false; n];
        let mut edges = Vec::with_capacity(n);
        for w in 0..n {
            let avail: Vec<(EdgeId, usize, f64)> = self.options[w]
                .iter()
                .filter(|(_, b, _)| !taken[*b])
                .map(|&(e, b, k)| {
                    let p = (k * inv[(b, w)]).re;
                    let q = if p < CLAMP {
                        0.0
                    } else if p > 1.0 - CLAMP {
                        1.0
                    } else {
                        p
                    };
                    if q != p {
                        debug!("clamped conditional probability {p:e} on edge {e}");
                    }
                    (e, b, q)
                })
                .collect();
            let total: f64 = avail.iter().map(|x| x.2).sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = avail.len() - 1;
            for (i, x) in avail.iter().enumerate() {
                if u < x.2 {
                    pick = i;
                    break;
                }
                u -= x.2;
            }
            let (e, b, _) = avail[pick];
            edges.push(e);
            taken[b] = true;
            // Remove row w and column b: N' = N - N[:, w] N[b, :] / N[b, w].
            let pivot = inv[(b, w)];
            let col: Vec<Complex64> = (0..n).map(|i| inv[(i, w)]).collect();
            let row: Vec<Complex64> = (0..n).map(|j| inv[(b, j)]).collect();
            for i in 0..n {
                if col[i].norm() == 0.0 {
                    continue;
                }
                let f = col[i] / pivot;
                for j in w + 1..n {
                    inv[(i, j)] -= f * row[j];
                }
            }
        }
        edges.sort_unstable();
        DimerCover { edges }
    }

    pub fn white_row(&self, v: usize) -> Option<usize> {
        self.white_index.get(v).copied().filter(|&i| i != usize::MAX)
    }

    pub fn black_column(&self, v: usize) -> Option<usize> {
        self.black_index.get(v).copied().filter(|&i| i != usize::MAX)
    }
}

/// One exact sample, deterministic in `seed`.
pub fn sample_dimer_cover(g: &PlanarGraph, nu: &[f64], seed: u64) -> Result<DimerCover> {
    let sampler = DimerSampler::new(g, nu)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// `count` independent covers. Chunk `c` uses stream `c` of the seeded
/// generator, so the output only depends on `(seed, count)`.
pub fn sample_dimer_covers(g: &PlanarGraph, nu: &[f64], count: usize, seed: u64) -> Result<Vec<DimerCover>> {
    let sampler = DimerSampler::new(g, nu)?;
    let chunks = count.div_ceil(CHUNK);
    let out: Vec<Vec<DimerCover>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(count - c * CHUNK);
            (0..n).map(|_| sampler.sample(&mut rng)).collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Double-dimer configurations from pairs of independent covers, which
/// makes them distributed as the natural measure (weight `2^loops`).
pub fn sample_double_dimers(g: &PlanarGraph, nu: &[f64], count: usize, seed: u64) -> Result<Vec<DoubleDimerConfig>> {
    let covers = sample_dimer_covers(g, nu, 2 * count, seed)?;
    Ok(covers.par_chunks(2).map(|p| pair_to_config(g, &p[0], &p[1])).collect())
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: serde::Serialize, W: Write>(items: &[T], mut out: W) -> Result<()> {
    for it in items {
        let line = serde_json::to_string(it)?;
        writeln!(out, "{line}").map_err(|e| Error::Serde(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{enumerate_dimer_covers, DEFAULT_CAP};
    use std::collections::HashMap;

    #[test]
    fn weighted_two_by_three() {
        let g = PlanarGraph::grid(2, 3).unwrap();
        let nu: Vec<f64> = (0..g.num_edges()).map(|e| 1.0 + 0.5 * e as f64).collect();
        let covers = enumerate_dimer_covers(&g, DEFAULT_CAP).unwrap();
        let weight = |c: &DimerCover| c.edges.iter().map(|&e| nu[e]).product::<f64>();
        let z: f64 = covers.iter().map(weight).sum();
        let n = 20_000;
        let samples = sample_dimer_covers(&g, &nu, n, 42).unwrap();
        let mut counts: HashMap<&DimerCover, usize> = HashMap::new();
        for s in &samples {
            *counts.entry(s).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for c in &covers {
            let p = weight(c) / z;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let f = counts[c] as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * sigma, "{f} vs {p}");
        }
    }

    #[test]
    fn reproducible() {
        let g = PlanarGraph::grid(4, 4).unwrap();
        let nu = vec![1.0; g.num_edges()];
        let a = sample_dimer_covers(&g, &nu, 3000, 7).unwrap();
        let b = sample_dimer_covers(&g, &nu, 3000, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_dimer_covers(&g, &nu, 3000, 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(sample_dimer_cover(&g, &nu, 5).unwrap(), sample_dimer_cover(&g, &nu, 5).unwrap());
    }
}
