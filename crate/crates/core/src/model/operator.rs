//! Sparse complex operators on the truncated space.
//!
//! Triplet storage is plenty at dimension 26; entries are kept sorted by
//! (row, col) with exact-zero values dropped, so equality of operators is
//! entrywise equality of the triplet lists.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    /// Build from unordered triplets; duplicates are summed, zeros dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r},{c}) out of range for dim {dim}");
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let entries = map
            .into_iter()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries
            .iter()
            .find(|(r, c, _)| *r == row && *c == col)
            .map(|(_, _, v)| *v)
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn dagger(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|(r, c, v)| (*c, *r, v.conj())))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|(r, c, v)| (*r, *c, factor * v)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for &(r, k, v) in &self.entries {
            for &(k2, c, w) in &other.entries {
                if k == k2 {
                    triplets.push((r, c, v * w));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// `out = self * x`. Panics on dimension mismatch.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.fill(C64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// ⟨x|A|x⟩ for this operator A.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = C64::new(0.0, 0.0);
        for &(r, c, v) in &self.entries {
            acc += x[r].conj() * v * x[c];
        }
        acc
    }

    /// Largest entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.sub(other)
            .entries
            .iter()
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            m[r * self.dim + c] += v;
        }
        m
    }

    /// JSON export as `{dim, entries: [[row, col, re, im], ...]}` for
    /// cross-implementation diffing. Entries are (row, col)-sorted.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Export {
            dim: usize,
            entries: Vec<(usize, usize, f64, f64)>,
        }
        let export = Export {
            dim: self.dim,
            entries: self.entries.iter().map(|(r, c, v)| (*r, *c, v.re, v.im)).collect(),
        };
        serde_json::to_value(export).expect("operator serialization cannot fail")
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            return Err(Error::DimensionMismatch { expected, got: self.dim });
        }
        Ok(())
    }

    /// Keep only entries whose row and column both lie in `range` (the
    /// block of one excitation sector). The dimension is unchanged, so the
    /// result applies to full-length vectors supported on that sector.
    pub fn restrict_to(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .filter(|(r, c, _)| range.contains(r) && range.contains(c))
                .copied()
                .collect(),
        }
    }
}
