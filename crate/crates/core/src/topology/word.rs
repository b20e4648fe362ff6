use std::fmt;

use serde::{Deserialize, Serialize};

use crate::connection::{Matrix2, Walk, Zipper};
use crate::enumeration::DoubleDimerConfig;
use crate::lattice::PlanarGraph;

/// Free homotopy class of an unoriented loop, as a word in the zipper
/// generators.
///
/// Letter `k > 0` is generator `g_k` (a left-to-right crossing of zipper
/// `k - 1`), and `-k` is its inverse. The stored word is freely and
/// cyclically reduced and is the least among all its rotations and the
/// rotations of its inverse, for the letter order `g1 < g1^-1 < g2 < ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopClass {
    pub word: Vec<i32>,
}

impl LoopClass {
    pub fn from_letters(letters: &[i32]) -> Self {
        LoopClass { word: canonical(letters) }
    }

    pub fn generator(k: usize) -> Self {
        LoopClass { word: vec![k as i32 + 1] }
    }

    pub fn is_contractible(&self) -> bool {
        self.word.is_empty()
    }

    /// Sum of exponents per generator.
    pub fn winding(&self, n: usize) -> Vec<i32> {
        let mut w = vec![0; n];
        for &l in &self.word {
            let i = l.unsigned_abs() as usize - 1;
            if i < n {
                w[i] += l.signum();
            }
        }
        w
    }

    pub fn max_generator(&self) -> usize {
        self.word.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// The word evaluated on unimodular generator matrices.
    pub fn evaluate(&self, gens: &[Matrix2]) -> Matrix2 {
        self.word
            .iter()
            .map(|&l| {
                let m = gens[l.unsigned_abs() as usize - 1];
                if l > 0 {
                    m
                } else {
                    m.qconj()
                }
            })
            .product()
    }
}

impl fmt::Display for LoopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.word.len() {
            let l = self.word[i];
            let mut run = 1;
            while i + run < self.word.len() && self.word[i + run] == l {
                run += 1;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let exp = l.signum() * run as i32;
            if exp == 1 {
                write!(f, "g{}", l.abs())?;
            } else {
                write!(f, "g{}^{}", l.abs(), exp)?;
            }
            i += run;
        }
        Ok(())
    }
}

fn free_reduce(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn cyclic_reduce(mut w: Vec<i32>) -> Vec<i32> {
    let mut start = 0;
    while w.len() - start >= 2 && w[start] == -w[w.len() - 1] {
        start += 1;
        w.pop();
    }
    w.drain(..start);
    w
}

/// Letter order `g1 < g1^-1 < g2 < g2^-1 < ...`.
fn letter_key(w: &[i32]) -> Vec<(u32, bool)> {
    w.iter().map(|l| (l.unsigned_abs(), *l < 0)).collect()
}

fn least_rotation(w: &[i32]) -> Vec<i32> {
    (0..w.len())
        .map(|r| w[r..].iter().chain(&w[..r]).copied().collect::<Vec<_>>())
        .min_by_key(|r| letter_key(r))
        .unwrap_or_default()
}

fn canonical(letters: &[i32]) -> Vec<i32> {
    let w = cyclic_reduce(free_reduce(letters));
    let inv: Vec<i32> = w.iter().rev().map(|l| -l).collect();
    let (a, b) = (least_rotation(&w), least_rotation(&inv));
    if letter_key(&a) <= letter_key(&b) {
        a
    } else {
        b
    }
}

/// Reads the signed zipper crossings along a closed walk.
pub fn classify_walk(g: &PlanarGraph, walk: &Walk, zippers: &[Zipper]) -> LoopClass {
    let mut letters = Vec::new();
    for &d in &walk.darts {
        for (k, z) in zippers.iter().enumerate() {
            let c = z.crossing(g, d);
            if c != 0 {
                letters.push(c * (k as i32 + 1));
            }
        }
    }
    LoopClass::from_letters(&letters)
}

pub fn classify_loop(g: &PlanarGraph, l: &crate::enumeration::Loop, zippers: &[Zipper]) -> LoopClass {
    classify_walk(g, &l.walk(), zippers)
}

/// Multiset of noncontractible loop classes, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lamination {
    pub loops: Vec<LoopClass>,
}

impl Lamination {
    pub fn empty() -> Self {
        Lamination::default()
    }

    pub fn new(mut loops: Vec<LoopClass>) -> Self {
        loops.retain(|c| !c.is_contractible());
        loops.sort();
        Lamination { loops }
    }

    /// `k` parallel copies of one class.
    pub fn parallel(class: LoopClass, k: usize) -> Self {
        Lamination::new(vec![class; k])
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// `prod Tr(w_gamma(gens))`.
    pub fn trace_function(&self, gens: &[Matrix2]) -> num_complex::Complex64 {
        self.loops.iter().map(|c| c.evaluate(gens).trace()).product()
    }
}

impl fmt::Display for Lamination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.loops.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Classes of all loops of a configuration, in loop order.
pub fn loop_classes(g: &PlanarGraph, cfg: &DoubleDimerConfig, zippers: &[Zipper]) -> Vec<LoopClass> {
    cfg.loops.iter().map(|l| classify_loop(g, l, zippers)).collect()
}

pub fn lamination_of(g: &PlanarGraph, cfg: &DoubleDimerConfig, zippers: &[Zipper]) -> Lamination {
    Lamination::new(loop_classes(g, cfg, zippers))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reductions() {
        assert!(LoopClass::from_letters(&[1, -1]).is_contractible());
        assert!(LoopClass::from_letters(&[2, 1, -1, -2]).is_contractible());
        assert_eq!(LoopClass::from_letters(&[2, 1, 3, -2]).word, vec![1, 3]);
        assert_eq!(LoopClass::from_letters(&[-1, -1]).word, vec![1, 1]);
        assert_eq!(LoopClass::from_letters(&[2, 1]), LoopClass::from_letters(&[1, 2]));
        assert_eq!(LoopClass::from_letters(&[2, 1]), LoopClass::from_letters(&[-1, -2]));
        assert_ne!(LoopClass::from_letters(&[1, 2]), LoopClass::from_letters(&[1, -2]));
    }

    #[test]
    fn display() {
        assert_eq!(LoopClass::from_letters(&[]).to_string(), "1");
        assert_eq!(LoopClass::from_letters(&[1, 1, -2]).to_string(), "g1^2 g2^-1");
        let lam = Lamination::new(vec![LoopClass::generator(0), LoopClass::from_letters(&[]), LoopClass::generator(0)]);
        assert_eq!(lam.to_string(), "{g1; g1}");
    }

    #[test]
    fn evaluation_respects_inverse() {
        let a = Matrix2::real(2.0, 1.0, 1.0, 1.0);
        let c = LoopClass::from_letters(&[1, 1]);
        assert!((c.evaluate(&[a]).trace() - (a * a).trace()).norm() < 1e-12);
        assert_eq!(LoopClass::from_letters(&[1, -1, 1]).winding(1), vec![1]);
    }
}
