use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linalg::{self, CMatrix};
use super::signs::SignedWeights;
use crate::connection::{Connection, Matrix2};
use crate::error::{Error, Result};
use crate::lattice::{Color, Dart, PlanarGraph, VertexId};

/// Self-dual matrix with 2x2 blocks, stored in its doubled complex form.
///
/// Row and column `2v + p` of `tilde` belong to vertex `v` and basis vector
/// `p`. Qdet values are multiplied by `normalization`, which is 1 for
/// matrices built from raw blocks and, for graph-built matrices, the
/// constant that turns the quaternion determinant into the (positive)
/// double-dimer partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix {
    pub tilde: CMatrix,
    pub whites: Vec<VertexId>,
    pub blacks: Vec<VertexId>,
    pub normalization: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Definition,
    DoubledDet,
    Pfaffian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QValue {
    pub value: Complex64,
    pub route: Route,
}

/// Largest size accepted by the cycle-expansion route by default.
pub const DEFINITION_CAP: usize = 8;

impl KMatrix {
    pub fn zeros(n: usize) -> Self {
        KMatrix { tilde: CMatrix::zeros(2 * n, 2 * n), whites: Vec::new(), blacks: Vec::new(), normalization: 1.0.into() }
    }

    /// Number of block rows.
    pub fn size(&self) -> usize {
        self.tilde.nrows() / 2
    }

    pub fn is_bipartite(&self) -> bool {
        !self.whites.is_empty() && self.whites.len() + self.blacks.len() == self.size()
    }

    pub fn block(&self, v: usize, w: usize) -> Matrix2 {
        let t = &self.tilde;
        Matrix2::new(t[(2 * v, 2 * w)], t[(2 * v, 2 * w + 1)], t[(2 * v + 1, 2 * w)], t[(2 * v + 1, 2 * w + 1)])
    }

    pub fn set_block(&mut self, v: usize, w: usize, m: Matrix2) {
        self.tilde[(2 * v, 2 * w)] = m.a;
        self.tilde[(2 * v, 2 * w + 1)] = m.b;
        self.tilde[(2 * v + 1, 2 * w)] = m.c;
        self.tilde[(2 * v + 1, 2 * w + 1)] = m.d;
    }

    pub fn add_block(&mut self, v: usize, w: usize, m: Matrix2) {
        let cur = self.block(v, w);
        self.set_block(v, w, cur + m);
    }

    /// `max_{v,w} |K(v,w) - K(w,v)*|`, relative to the largest entry.
    pub fn self_duality_defect(&self) -> f64 {
        let n = self.size();
        let scale = self.tilde.iter().map(|z| z.norm()).fold(1e-300_f64, f64::max);
        let mut dev = 0.0_f64;
        for v in 0..n {
            for w in v..n {
                dev = dev.max(self.block(v, w).dist(&self.block(w, v).qconj()));
            }
        }
        dev / scale
    }

    /// The antisymmetric matrix `Z K~`, `Z = diag([[0, 1], [-1, 0]], ...)`.
    pub fn z_tilde(&self) -> CMatrix {
        let mut out = self.tilde.clone();
        for v in 0..self.size() {
            let (r0, r1) = (2 * v, 2 * v + 1);
            for j in 0..out.ncols() {
                let (x, y) = (self.tilde[(r0, j)], self.tilde[(r1, j)]);
                out[(r0, j)] = y;
                out[(r1, j)] = -x;
            }
        }
        out
    }

    /// The doubled white-by-black block `M~`.
    pub fn m_tilde(&self) -> Result<CMatrix> {
        if !self.is_bipartite() {
            return Err(Error::RouteUnavailable("matrix has no white/black block structure".into()));
        }
        let (nw, nb) = (self.whites.len(), self.blacks.len());
        Ok(CMatrix::from_fn(2 * nw, 2 * nb, |i, j| {
            self.tilde[(2 * self.whites[i / 2] + i % 2, 2 * self.blacks[j / 2] + j % 2)]
        }))
    }

    pub fn qdet(&self, route: Route) -> Result<QValue> {
        let raw = match route {
            Route::Definition => qdet_definition(self, DEFINITION_CAP)?,
            Route::DoubledDet => self.raw_doubled_det()?,
            Route::Pfaffian => linalg::pfaffian(&self.z_tilde())?,
        };
        Ok(QValue { value: raw * self.normalization, route })
    }

    /// The cycle expansion with a custom size cap. Nonzero blocks are
    /// followed, so sparse matrices well beyond eight rows are cheap.
    pub fn qdet_definition_capped(&self, cap: usize) -> Result<QValue> {
        Ok(QValue { value: qdet_definition(self, cap)? * self.normalization, route: Route::Definition })
    }

    fn raw_doubled_det(&self) -> Result<Complex64> {
        let m = self.m_tilde()?;
        if m.nrows() != m.ncols() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let sign = if self.whites.len() % 2 == 0 { 1.0 } else { -1.0 };
        Ok(linalg::determinant(&m) * sign)
    }

    /// `log det K~`, computed through `M~` for bipartite matrices.
    pub fn log_det_tilde(&self) -> Result<Complex64> {
        if self.is_bipartite() {
            let m = self.m_tilde()?;
            if m.nrows() != m.ncols() {
                return Err(Error::Singular);
            }
            // det K~ = det [[0, M~], [M~*, 0]] = (-1)^(2 nw) det(M~) det(M~*),
            // and det M~* = det M~ because q-conjugation preserves it.
            let l = linalg::log_determinant(&m)?;
            Ok(l + l)
        } else {
            linalg::log_determinant(&self.tilde)
        }
    }

    /// The self-dual inverse.
    pub fn inverse(&self) -> Result<KMatrix> {
        let n = self.size();
        let mut inv = KMatrix { tilde: CMatrix::zeros(2 * n, 2 * n), ..self.clone() };
        if self.is_bipartite() {
            // K = [[0, M], [M', 0]] gives K^-1 = [[0, M'^-1], [M^-1, 0]].
            let m = self.m_tilde()?;
            if m.nrows() != m.ncols() {
                return Err(Error::Singular);
            }
            let m_inv = linalg::inverse(&m)?;
            let (nw, nb) = (self.whites.len(), self.blacks.len());
            let mp = CMatrix::from_fn(2 * nb, 2 * nw, |i, j| {
                self.tilde[(2 * self.blacks[i / 2] + i % 2, 2 * self.whites[j / 2] + j % 2)]
            });
            let mp_inv = linalg::inverse(&mp)?;
            for i in 0..2 * nb {
                for j in 0..2 * nw {
                    let b = 2 * self.blacks[i / 2] + i % 2;
                    let w = 2 * self.whites[j / 2] + j % 2;
                    inv.tilde[(b, w)] = m_inv[(i, j)];
                }
            }
            for i in 0..2 * nw {
                for j in 0..2 * nb {
                    let w = 2 * self.whites[i / 2] + i % 2;
                    let b = 2 * self.blacks[j / 2] + j % 2;
                    inv.tilde[(w, b)] = mp_inv[(i, j)];
                }
            }
        } else {
            inv.tilde = linalg::inverse(&self.tilde)?;
        }
        inv.normalization = 1.0.into();
        let dev = inv.self_duality_defect();
        if dev > 1e-8 {
            return Err(Error::NotSelfDual(dev));
        }
        Ok(inv)
    }

    /// Dense JSON export: row-major `[re, im]` pairs of `K~`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc {
            rows: usize,
            cols: usize,
            vertex_order: Vec<usize>,
            whites: Vec<usize>,
            blacks: Vec<usize>,
            normalization: [f64; 2],
            data: Vec<[f64; 2]>,
        }
        let n = self.tilde.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.tilde[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        let doc = Doc {
            rows: n,
            cols: n,
            vertex_order: (0..self.size()).collect(),
            whites: self.whites.clone(),
            blacks: self.blacks.clone(),
            normalization: [self.normalization.re, self.normalization.im],
            data,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Random bipartite self-dual matrix with `n` white and `n` black rows
    /// and generic complex blocks.
    pub fn random_bipartite<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut k = KMatrix::zeros(2 * n);
        k.whites = (0..n).collect();
        k.blacks = (n..2 * n).collect();
        for w in 0..n {
            for b in n..2 * n {
                let m = random_block(rng);
                k.set_block(w, b, m);
                k.set_block(b, w, m.qconj());
            }
        }
        k
    }

    /// Random self-dual matrix without block structure.
    pub fn random_self_dual<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut k = KMatrix::zeros(n);
        for v in 0..n {
            let s = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            k.set_block(v, v, Matrix2::scalar(s));
            for w in v + 1..n {
                let m = random_block(rng);
                k.set_block(v, w, m);
                k.set_block(w, v, m.qconj());
            }
        }
        k
    }
}

fn random_block<R: Rng + ?Sized>(rng: &mut R) -> Matrix2 {
    let mut z = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    Matrix2::new(z(), z(), z(), z())
}

/// Cycle expansion: sum over permutations of `sgn * prod (1/2) Tr K_C`.
fn qdet_definition(k: &KMatrix, cap: usize) -> Result<Complex64> {
    let n = k.size();
    if n > cap {
        return Err(Error::RouteUnavailable(format!("definition route limited to {cap} rows, got {n}")));
    }
    let nbrs: Vec<Vec<usize>> =
        (0..n).map(|v| (0..n).filter(|&w| k.block(v, w).norm() != 0.0).collect()).collect();
    let mut sigma = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    expand(k, &nbrs, 0, &mut sigma, &mut used, &mut total);
    Ok(total)
}

fn expand(k: &KMatrix, nbrs: &[Vec<usize>], v: usize, sigma: &mut [usize], used: &mut [bool], total: &mut Complex64) {
    let n = sigma.len();
    if v == n {
        *total += permutation_term(k, sigma);
        return;
    }
    for &w in &nbrs[v] {
        if !used[w] {
            used[w] = true;
            sigma[v] = w;
            expand(k, nbrs, v + 1, sigma, used, total);
            used[w] = false;
        }
    }
}

fn permutation_term(k: &KMatrix, sigma: &[usize]) -> Complex64 {
    let n = sigma.len();
    let mut seen = vec![false; n];
    let mut term = Complex64::new(1.0, 0.0);
    let mut cycles = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        cycles += 1;
        let mut prod = Matrix2::identity();
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            prod = prod * k.block(v, sigma[v]);
            v = sigma[v];
        }
        term *= prod.trace() / 2.0;
    }
    if (n - cycles) % 2 == 1 {
        -term
    } else {
        term
    }
}

/// Assembles `K(v, v') = sw(vv') transport(v -> v')`.
pub fn assemble(g: &PlanarGraph, sw: &SignedWeights, conn: &Connection) -> Result<KMatrix> {
    if sw.len() != g.num_edges() || conn.num_edges() != g.num_edges() {
        return Err(Error::Mismatch("signed weights or connection defined on another graph".into()));
    }
    let mut k = KMatrix::zeros(g.num_vertices());
    for e in g.edges() {
        let s = sw.values[e.id];
        k.add_block(e.u, e.v, conn.transport(Dart::new(e.id, true)).scale(s));
        k.add_block(e.v, e.u, conn.transport(Dart::new(e.id, false)).scale(s));
    }
    if g.is_bipartite() {
        k.whites = g.whites();
        k.blacks = g.blacks();
        k.normalization = graph_normalization(g, sw);
    }
    Ok(k)
}

/// Scalar white-by-black Kasteleyn matrix `K_0` with the graph's white and
/// black vertex lists.
pub fn scalar_kasteleyn(g: &PlanarGraph, sw: &SignedWeights) -> (CMatrix, Vec<VertexId>, Vec<VertexId>) {
    let whites = g.whites();
    let blacks = g.blacks();
    let mut wi = vec![usize::MAX; g.num_vertices()];
    let mut bi = vec![usize::MAX; g.num_vertices()];
    for (i, &w) in whites.iter().enumerate() {
        wi[w] = i;
    }
    for (i, &b) in blacks.iter().enumerate() {
        bi[b] = i;
    }
    let mut m = CMatrix::zeros(whites.len(), blacks.len());
    for e in g.edges() {
        let (w, b) = if g.color(e.u) == Some(Color::White) { (e.u, e.v) } else { (e.v, e.u) };
        m[(wi[w], bi[b])] += sw.values[e.id];
    }
    (m, whites, blacks)
}

/// `(-1)^{#white} / phase^2`, where `phase` is the signed product of unit
/// weights along one perfect matching (in the `M` ordering). With the
/// Kasteleyn condition every matching has the same phase, so this makes
/// the quaternion determinant equal to the positive partition function.
fn graph_normalization(g: &PlanarGraph, sw: &SignedWeights) -> Complex64 {
    let (m, whites, blacks) = scalar_kasteleyn(g, sw);
    let sign = if whites.len() % 2 == 0 { 1.0 } else { -1.0 };
    if whites.len() != blacks.len() {
        return sign.into();
    }
    let Some(matching) = perfect_matching(&m) else {
        return sign.into();
    };
    let mut phase = Complex64::new(1.0, 0.0);
    for (w, &b) in matching.iter().enumerate() {
        let z = m[(w, b)];
        phase *= z / z.norm();
    }
    if permutation_parity(&matching) {
        phase = -phase;
    }
    Complex64::new(sign, 0.0) / (phase * phase)
}

/// Kuhn's augmenting-path matching on the nonzero pattern of `m`.
pub fn perfect_matching(m: &CMatrix) -> Option<Vec<usize>> {
    let (nw, nb) = (m.nrows(), m.ncols());
    let mut owner = vec![usize::MAX; nb];
    fn augment(m: &CMatrix, w: usize, seen: &mut [bool], owner: &mut [usize]) -> bool {
        for b in 0..m.ncols() {
            if m[(w, b)].norm() != 0.0 && !seen[b] {
                seen[b] = true;
                if owner[b] == usize::MAX || augment(m, owner[b], seen, owner) {
                    owner[b] = w;
                    return true;
                }
            }
        }
        false
    }
    for w in 0..nw {
        let mut seen = vec![false; nb];
        if !augment(m, w, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut matching = vec![usize::MAX; nw];
    for (b, &w) in owner.iter().enumerate() {
        if w != usize::MAX {
            matching[w] = b;
        }
    }
    Some(matching)
}

/// True for odd permutations.
pub fn permutation_parity(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut odd = false;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            v = p[v];
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}
