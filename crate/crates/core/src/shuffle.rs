//! Random row and column permutations applied before sharing.
//!
//! `A' = P1 A P2` and `B' = P2^T B P3`, so `A' B' = P1 (A B) P3` and the
//! product is recovered by undoing `P1` and `P3`. Permutations are index
//! arrays; `perm[i]` is the source index placed at position `i`.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermTriple {
    pub perm1: Vec<usize>,
    pub perm2: Vec<usize>,
    pub perm3: Vec<usize>,
}

fn random_perm(n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng::stream(seed, rng::domain::PERMUTE, index));
    p
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    true
}

pub fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

impl PermTriple {
    pub fn random(rows_a: usize, inner: usize, cols_b: usize, seed: u64) -> Self {
        Self {
            perm1: random_perm(rows_a, seed, 1),
            perm2: random_perm(inner, seed, 2),
            perm3: random_perm(cols_b, seed, 3),
        }
    }

    pub fn identity(rows_a: usize, inner: usize, cols_b: usize) -> Self {
        Self { perm1: (0..rows_a).collect(), perm2: (0..inner).collect(), perm3: (0..cols_b).collect() }
    }

    pub fn new(perm1: Vec<usize>, perm2: Vec<usize>, perm3: Vec<usize>) -> Result<Self> {
        for (name, p) in [("perm1", &perm1), ("perm2", &perm2), ("perm3", &perm3)] {
            if !is_permutation(p) {
                return Err(Error::InvalidParams(format!("{name} is not a permutation")));
            }
        }
        Ok(Self { perm1, perm2, perm3 })
    }

    /// One line per permutation, space-separated 0-based indices.
    pub fn to_text(&self) -> String {
        let line = |p: &[usize]| p.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        format!("{}\n{}\n{}\n", line(&self.perm1), line(&self.perm2), line(&self.perm3))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |ln: usize| -> Result<Vec<usize>> {
            let l = lines.next().ok_or(Error::Parse { line: ln, msg: "missing permutation line".into() })?;
            l.split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad index `{t}`") }))
                .collect()
        };
        let (a, b, c) = (next(1)?, next(2)?, next(3)?);
        Self::new(a, b, c)
    }
}

/// `out[i][j] = m[rows[i]][cols[j]]`.
fn gather(m: &FieldMatrix, rows: &[usize], cols: &[usize]) -> FieldMatrix {
    let data = rows.iter().flat_map(|&r| cols.iter().map(move |&c| m.get(r, c))).collect();
    FieldMatrix::from_parts_unchecked(m.field().clone(), rows.len(), cols.len(), data)
}

/// Apply a given permutation triple.
pub fn apply(a: &FieldMatrix, b: &FieldMatrix, perms: &PermTriple) -> Result<(FieldMatrix, FieldMatrix)> {
    a.field().ensure_same(b.field())?;
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!("inner dimensions {} and {}", a.cols(), b.rows())));
    }
    if perms.perm1.len() != a.rows() || perms.perm2.len() != a.cols() || perms.perm3.len() != b.cols() {
        return Err(Error::DimensionMismatch("permutation lengths do not match the matrices".into()));
    }
    Ok((gather(a, &perms.perm1, &perms.perm2), gather(b, &perms.perm2, &perms.perm3)))
}

/// Permute rows and columns of `A` and `B` with fresh random permutations.
pub fn shuffle_pair(a: &FieldMatrix, b: &FieldMatrix, seed: u64) -> Result<(FieldMatrix, FieldMatrix, PermTriple)> {
    let perms = PermTriple::random(a.rows(), a.cols(), b.cols(), seed);
    let (ap, bp) = apply(a, b, &perms)?;
    Ok((ap, bp, perms))
}

/// Undo the outer permutations on a product of shuffled matrices.
pub fn unshuffle_product(c_prime: &FieldMatrix, perms: &PermTriple) -> Result<FieldMatrix> {
    if c_prime.rows() != perms.perm1.len() || c_prime.cols() != perms.perm3.len() {
        return Err(Error::DimensionMismatch(format!(
            "product is {:?}, permutations expect ({}, {})",
            c_prime.dims(),
            perms.perm1.len(),
            perms.perm3.len()
        )));
    }
    Ok(gather(c_prime, &invert(&perms.perm1), &invert(&perms.perm3)))
}
