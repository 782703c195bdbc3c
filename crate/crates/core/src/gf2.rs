//! Dense linear algebra over GF(2): bit-packed matrices, rank, and an
//! incremental elimination solver.
//!
//! Matrices use 1-based `(row, col)` indexing in the public API, matching the
//! convention `[n] = {1..n}` used everywhere else in this crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

pub(crate) fn bit_get(words: &[u64], i: usize) -> u8 {
    ((words[i / WORD_BITS] >> (i % WORD_BITS)) & 1) as u8
}

pub(crate) fn bit_set(words: &mut [u64], i: usize, v: u8) {
    let (w, s) = (i / WORD_BITS, i % WORD_BITS);
    if v & 1 == 1 {
        words[w] |= 1u64 << s;
    } else {
        words[w] &= !(1u64 << s);
    }
}

pub(crate) fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

pub(crate) fn first_set(words: &[u64]) -> Option<usize> {
    for (wi, &w) in words.iter().enumerate() {
        if w != 0 {
            return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
        }
    }
    None
}

pub(crate) fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// A dense binary matrix with bit-packed rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BinMatrixRepr", into = "BinMatrixRepr")]
pub struct BinMatrix {
    rows: usize,
    cols: usize,
    wpr: usize,
    data: Vec<u64>,
}

impl BinMatrix {
    /// All-zero `rows x cols` matrix. Both dimensions must be positive.
    pub fn zero(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        let wpr = words_for(cols);
        BinMatrix {
            rows,
            cols,
            wpr,
            data: vec![0; rows * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 1..=n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 1-based `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> u8 {
        assert!(r >= 1 && r <= self.rows && c >= 1 && c <= self.cols);
        bit_get(self.row_words(r), c - 1)
    }

    /// Set entry at 1-based `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        assert!(r >= 1 && r <= self.rows && c >= 1 && c <= self.cols);
        let wpr = self.wpr;
        bit_set(&mut self.data[(r - 1) * wpr..r * wpr], c - 1, v);
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[(r - 1) * self.wpr..r * self.wpr]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Copy `other` into this matrix with its top-left corner at 1-based `(r, c)`.
    pub fn paste(&mut self, r: usize, c: usize, other: &BinMatrix) {
        assert!(r + other.rows - 1 <= self.rows && c + other.cols - 1 <= self.cols);
        for i in 1..=other.rows {
            for j in 1..=other.cols {
                self.set(r + i - 1, c + j - 1, other.get(i, j));
            }
        }
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &BinMatrix) -> Result<BinMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = BinMatrix::zero(self.rows, rhs.cols);
        for i in 1..=self.rows {
            let lhs_row = self.row_words(i).to_vec();
            let dst = &mut out.data[(i - 1) * out.wpr..i * out.wpr];
            for j in 1..=self.cols {
                if bit_get(&lhs_row, j - 1) == 1 {
                    xor_into(dst, rhs.row_words(j));
                }
            }
        }
        Ok(out)
    }

    /// GF(2) rank by Gaussian elimination. Pivot choice: first nonzero
    /// column, lowest row index.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = (1..=self.rows)
            .map(|r| self.row_words(r).to_vec())
            .collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pr) = (rank..rows.len()).find(|&r| bit_get(&rows[r], col) == 1) else {
                continue;
            };
            rows.swap(rank, pr);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && bit_get(row, col) == 1 {
                    xor_into(row, &pivot);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    /// Render in the matrix text format: a `"rows cols"` header line, then
    /// one line of '0'/'1' characters per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 1..=self.rows {
            for c in 1..=self.cols {
                s.push(if self.get(r, c) == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// Parse the matrix text format produced by [`BinMatrix::to_text`].
    pub fn from_text(text: &str) -> Result<BinMatrix> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let mut it = header.split_whitespace();
        let rows: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad header".into()))?;
        let cols: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad header".into()))?;
        if rows == 0 || cols == 0 {
            return Err(Error::Parse("dimensions must be positive".into()));
        }
        let mut m = BinMatrix::zero(rows, cols);
        for r in 1..=rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
            let line = line.trim();
            if line.len() != cols {
                return Err(Error::Parse(format!(
                    "row {r} has {} chars, want {cols}",
                    line.len()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c + 1, 1),
                    _ => return Err(Error::Parse(format!("bad char {ch:?} in row {r}"))),
                }
            }
        }
        Ok(m)
    }

    /// Parse from rows given as strings of '0'/'1', e.g. `["10", "01"]`.
    pub fn from_bit_rows(rows: &[&str]) -> BinMatrix {
        let text = format!("{} {}\n{}", rows.len(), rows[0].len(), rows.join("\n"));
        BinMatrix::from_text(&text).expect("valid bit rows")
    }
}

#[derive(Serialize, Deserialize)]
struct BinMatrixRepr {
    rows: usize,
    cols: usize,
    bits: Vec<String>,
}

impl From<BinMatrix> for BinMatrixRepr {
    fn from(m: BinMatrix) -> Self {
        let bits = (1..=m.rows)
            .map(|r| {
                (1..=m.cols)
                    .map(|c| if m.get(r, c) == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect();
        BinMatrixRepr {
            rows: m.rows,
            cols: m.cols,
            bits,
        }
    }
}

impl TryFrom<BinMatrixRepr> for BinMatrix {
    type Error = Error;

    fn try_from(r: BinMatrixRepr) -> Result<Self> {
        let text = format!("{} {}\n{}", r.rows, r.cols, r.bits.join("\n"));
        let m = BinMatrix::from_text(&text)?;
        if m.rows != r.rows || m.cols != r.cols {
            return Err(Error::Parse("row/col count does not match bit rows".into()));
        }
        Ok(m)
    }
}

/// One equation row: packed coefficients, right-hand side, pivot column.
#[derive(Debug, Clone)]
struct EqRow {
    coeffs: Vec<u64>,
    rhs: u8,
    pivot: usize,
}

/// Online GF(2) solver: equations are added one at a time and kept in reduced
/// row-echelon form; variables whose values become uniquely implied are
/// reported as they are pinned.
///
/// Variables are indexed from 0.
#[derive(Debug, Clone)]
pub struct IncrementalSolver {
    num_vars: usize,
    rows: Vec<EqRow>,
    determined: Vec<Option<u8>>,
}

impl IncrementalSolver {
    pub fn new(num_vars: usize) -> Self {
        IncrementalSolver {
            num_vars,
            rows: Vec::new(),
            determined: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Extend the variable set by `extra` fresh (unconstrained) variables.
    pub fn add_vars(&mut self, extra: usize) {
        self.num_vars += extra;
        self.determined.resize(self.num_vars, None);
        let wpr = words_for(self.num_vars);
        for row in &mut self.rows {
            row.coeffs.resize(wpr, 0);
        }
    }

    pub fn value_of(&self, var: usize) -> Option<u8> {
        self.determined.get(var).copied().flatten()
    }

    pub fn num_determined(&self) -> usize {
        self.determined.iter().filter(|d| d.is_some()).count()
    }

    /// Add the equation `coeffs . x = rhs` with coefficients given as a bit
    /// slice of length `num_vars`. Returns the variables newly pinned by this
    /// equation as `(var, value)` pairs.
    pub fn add_equation(&mut self, coeffs: &[u8], rhs: u8) -> Result<Vec<(usize, u8)>> {
        if coeffs.len() != self.num_vars {
            return Err(Error::WrongLength {
                expected: self.num_vars,
                got: coeffs.len(),
            });
        }
        let mut packed = vec![0u64; words_for(self.num_vars)];
        for (i, &b) in coeffs.iter().enumerate() {
            if b & 1 == 1 {
                bit_set(&mut packed, i, 1);
            }
        }
        self.add_equation_packed(packed, rhs)
    }

    /// Packed-word variant of [`IncrementalSolver::add_equation`].
    pub fn add_equation_packed(
        &mut self,
        mut coeffs: Vec<u64>,
        mut rhs: u8,
    ) -> Result<Vec<(usize, u8)>> {
        coeffs.resize(words_for(self.num_vars), 0);
        // Reduce the incoming row against existing pivots.
        for row in &self.rows {
            if bit_get(&coeffs, row.pivot) == 1 {
                xor_into(&mut coeffs, &row.coeffs);
                rhs ^= row.rhs;
            }
        }
        let Some(pivot) = first_set(&coeffs) else {
            if rhs == 1 {
                return Err(Error::Inconsistent);
            }
            return Ok(Vec::new());
        };
        // Back-eliminate the new pivot from all stored rows.
        let mut touched = Vec::new();
        for (ri, row) in self.rows.iter_mut().enumerate() {
            if bit_get(&row.coeffs, pivot) == 1 {
                xor_into(&mut row.coeffs, &coeffs);
                row.rhs ^= rhs;
                touched.push(ri);
            }
        }
        let insert_at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(insert_at, EqRow { coeffs, rhs, pivot });
        touched = touched
            .iter()
            .map(|&ri| if ri >= insert_at { ri + 1 } else { ri })
            .collect();
        touched.push(insert_at);

        let mut newly = Vec::new();
        for ri in touched {
            let row = &self.rows[ri];
            if popcount(&row.coeffs) == 1 && self.determined[row.pivot].is_none() {
                self.determined[row.pivot] = Some(row.rhs);
                newly.push((row.pivot, row.rhs));
            }
        }
        newly.sort_unstable();
        Ok(newly)
    }

    /// Drop the stored row for a determined variable. Its value stays
    /// recorded; the row can be discarded because a determined variable's
    /// column is zero in every other row.
    pub fn retire(&mut self, var: usize) {
        if self.determined.get(var).copied().flatten().is_none() {
            return;
        }
        if let Some(ri) = self
            .rows
            .iter()
            .position(|r| r.pivot == var && popcount(&r.coeffs) == 1)
        {
            self.rows.remove(ri);
        }
    }
}
