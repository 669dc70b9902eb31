//! Symmetric sparse matrices stored as weighted neighbourhood lists.
//!
//! Entry `{j, k}` with `j >= k` lives in row `j` only (lower triangle), so a
//! single scan of row `i` yields every entry `{k, i}` with `k <= i`. Rows are
//! kept sorted by neighbour and updated by binary search.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub(crate) col: u32,
    pub(crate) weight: f64,
}

pub(crate) type Row = Vec<Entry>;

/// Symmetric sparse matrix over the logical index range `lo..lo + dim`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymSparseMat {
    lo: isize,
    rows: Vec<Row>,
}

/// A broken storage invariant found by [`SymSparseMat::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageViolation {
    /// A row holds a neighbour larger than itself.
    UpperEntry { row: isize, col: isize },
    /// A row is not strictly increasing.
    Unsorted { row: isize },
}

impl SymSparseMat {
    /// Empty matrix over logical indices `lo..=hi`.
    pub fn new(lo: isize, hi: isize) -> Self {
        let dim = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
        Self {
            lo,
            rows: vec![Vec::new(); dim],
        }
    }

    /// Empty matrix over a tape's full range `1-n..=ℓ`.
    pub fn for_tape(n: usize, len: usize) -> Self {
        Self::new(1 - n as isize, len as isize)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Smallest logical index.
    pub fn lo(&self) -> isize {
        self.lo
    }

    fn pos(&self, i: isize) -> Result<usize> {
        let p = i - self.lo;
        if p < 0 || p as usize >= self.rows.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                lo: self.lo,
                hi: self.lo + self.rows.len() as isize - 1,
            });
        }
        Ok(p as usize)
    }

    /// Adds `delta` to entry `{j, k}`, creating it if absent.
    pub fn increment(&mut self, j: isize, k: isize, delta: f64) -> Result<()> {
        let (a, b) = (self.pos(j)?, self.pos(k)?);
        self.add_at(a, b, delta);
        Ok(())
    }

    /// Same as [`Self::increment`] on storage positions.
    #[inline]
    pub(crate) fn add_at(&mut self, a: usize, b: usize, delta: f64) {
        let (row, col) = if a >= b { (a, b) } else { (b, a) };
        let row = &mut self.rows[row];
        let col = col as u32;
        match row.binary_search_by(|e| e.col.cmp(&col)) {
            Ok(at) => row[at].weight += delta,
            Err(at) => row.insert(at, Entry { col, weight: delta }),
        }
    }

    /// Weight of `{j, k}`; zero when absent or out of range.
    pub fn get(&self, j: isize, k: isize) -> f64 {
        match (self.pos(j), self.pos(k)) {
            (Ok(a), Ok(b)) => self.get_at(a, b),
            _ => 0.0,
        }
    }

    pub(crate) fn get_at(&self, a: usize, b: usize) -> f64 {
        let (row, col) = if a >= b { (a, b) } else { (b, a) };
        let row = &self.rows[row];
        row.binary_search_by(|e| e.col.cmp(&(col as u32)))
            .map_or(0.0, |at| row[at].weight)
    }

    /// True if `{j, k}` has a stored entry (possibly an exact zero).
    pub fn contains(&self, j: isize, k: isize) -> bool {
        match (self.pos(j), self.pos(k)) {
            (Ok(a), Ok(b)) => {
                let (row, col) = if a >= b { (a, b) } else { (b, a) };
                self.rows[row]
                    .binary_search_by(|e| e.col.cmp(&(col as u32)))
                    .is_ok()
            }
            _ => false,
        }
    }

    /// Stored neighbours `k <= i` of `i`, ascending.
    pub fn iterate_row(&self, i: isize) -> impl Iterator<Item = (isize, f64)> + '_ {
        let lo = self.lo;
        let row: &[Entry] = match self.pos(i) {
            Ok(p) => &self.rows[p],
            Err(_) => &[],
        };
        row.iter().map(move |e| (e.col as isize + lo, e.weight))
    }

    /// Removes and returns a row; sweeps use this once they are done with it.
    #[inline]
    pub(crate) fn take_row(&mut self, pos: usize) -> Row {
        core::mem::take(&mut self.rows[pos])
    }

    /// Submatrix over `1-n..=0`, relabelled `1..=n`.
    pub fn restrict_to_independents(&self, n: usize) -> SymSparseMat {
        let first = 1 - n as isize - self.lo;
        let mut out = SymSparseMat::new(1, n as isize);
        for (r, dst) in out.rows.iter_mut().enumerate() {
            let src = first + r as isize;
            if src < 0 || src as usize >= self.rows.len() {
                continue;
            }
            *dst = self.rows[src as usize]
                .iter()
                .filter(|e| e.col as isize >= first)
                .map(|e| Entry {
                    col: (e.col as isize - first) as u32,
                    weight: e.weight,
                })
                .collect();
        }
        out
    }

    /// Consuming variant of [`Self::restrict_to_independents`] for a matrix
    /// whose range starts at `1-n`; reuses the independent rows in place.
    pub fn into_independents(mut self, n: usize) -> SymSparseMat {
        if self.lo != 1 - n as isize {
            return self.restrict_to_independents(n);
        }
        self.rows.truncate(n);
        self.rows.resize(n, Vec::new());
        self.rows.shrink_to_fit();
        for row in &mut self.rows {
            row.shrink_to_fit();
        }
        self.lo = 1;
        self
    }

    /// Logical nonzeros of the full symmetric matrix: off-diagonal entries
    /// count twice, the diagonal once, stored exact zeros not at all.
    pub fn nnz(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |e| (r, e)))
            .filter(|(_, e)| e.weight != 0.0)
            .map(|(r, e)| if e.col as usize == r { 1 } else { 2 })
            .sum()
    }

    /// Number of stored (lower-triangle) entries, zeros included.
    pub fn stored_len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Lower-triangle entries `(j, k, w)` with `j >= k`, ascending in `(j, k)`.
    pub fn triples(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let lo = self.lo;
        self.rows.iter().enumerate().flat_map(move |(r, row)| {
            row.iter()
                .map(move |e| (r as isize + lo, e.col as isize + lo, e.weight))
        })
    }

    /// Every stored entry of `self` is also stored in `other`.
    pub fn structure_contained_in(&self, other: &SymSparseMat) -> bool {
        self.lo == other.lo
            && self.triples().all(|(j, k, _)| other.contains(j, k))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            for e in row {
                m.set(r, e.col as usize, e.weight);
                m.set(e.col as usize, r, e.weight);
            }
        }
        m
    }

    /// Checks rows `from..` hold no nonzero weight.
    pub(crate) fn rows_zero_from(&self, from: usize) -> bool {
        self.rows[from.min(self.rows.len())..]
            .iter()
            .all(|row| row.iter().all(|e| e.weight == 0.0))
    }

    /// Verifies the canonical lower-triangular layout that makes the stored
    /// matrix symmetric.
    pub fn check_invariants(&self) -> core::result::Result<(), StorageViolation> {
        for (r, row) in self.rows.iter().enumerate() {
            self.check_row(r, row)?;
        }
        Ok(())
    }

    fn check_row(&self, r: usize, row: &[Entry]) -> core::result::Result<(), StorageViolation> {
        if let Some(e) = row.iter().find(|e| e.col as usize > r) {
            return Err(StorageViolation::UpperEntry {
                row: r as isize + self.lo,
                col: e.col as isize + self.lo,
            });
        }
        if row.windows(2).any(|w| w[0].col >= w[1].col) {
            return Err(StorageViolation::Unsorted {
                row: r as isize + self.lo,
            });
        }
        Ok(())
    }
}
