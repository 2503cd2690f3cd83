use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::elim::Eliminated;
use crate::rational::{format_rational, parse_rational, Rational};
use crate::LinalgError;

/// Sparse matrix over the rationals. Zero entries are never stored and each
/// cell holds at most one entry; iteration order is row-major and fixed.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseRationalMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseRationalMatrix {
    /// The zero matrix of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    /// The identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.entries.insert((i, i), Rational::from_integer(1.into()));
        }
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets. Values landing on
    /// the same cell are summed; entries summing to zero are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, Rational)>,
    {
        let mut m = Self::zero(rows, cols);
        for (r, c, v) in triplets {
            m.add_to(r, c, v)?;
        }
        Ok(m)
    }

    /// Builds a dense row-major matrix from machine integers (test helper).
    pub fn from_rows_i64(data: &[&[i64]]) -> Self {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        let mut m = Self::zero(rows, cols);
        for (r, row) in data.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.entries.insert((r, c), Rational::from_integer(v.into()));
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_index(&self, row: usize, col: usize) -> Result<(), LinalgError> {
        if row >= self.rows || col >= self.cols {
            return Err(LinalgError::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Adds `value` into the cell, keeping the no-stored-zero invariant.
    pub fn add_to(&mut self, row: usize, col: usize, value: Rational) -> Result<(), LinalgError> {
        self.check_index(row, col)?;
        if value.is_zero() {
            return Ok(());
        }
        let cell = self.entries.entry((row, col)).or_insert_with(Rational::zero);
        *cell += value;
        if cell.is_zero() {
            self.entries.remove(&(row, col));
        }
        Ok(())
    }

    /// Overwrites the cell with `value` (removing it when zero).
    pub fn set(&mut self, row: usize, col: usize, value: Rational) -> Result<(), LinalgError> {
        self.check_index(row, col)?;
        if value.is_zero() {
            self.entries.remove(&(row, col));
        } else {
            self.entries.insert((row, col), value);
        }
        Ok(())
    }

    /// Entry at `(row, col)`, zero when absent.
    pub fn get(&self, row: usize, col: usize) -> Rational {
        self.entries
            .get(&(row, col))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Row-major iteration over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    /// Matrix-vector product; `v` must have `cols` entries.
    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![Rational::zero(); self.rows];
        for (&(r, c), val) in &self.entries {
            if !v[c].is_zero() {
                out[r] += val * &v[c];
            }
        }
        Ok(out)
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.rows, other.cols);
        // Group the right factor by rows for the sparse product.
        let mut right_rows: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
        for (&(r, c), v) in &other.entries {
            right_rows.entry(r).or_default().push((c, v));
        }
        for (&(r, k), a) in &self.entries {
            if let Some(row) = right_rows.get(&k) {
                for &(c, b) in row {
                    out.add_to(r, c, a * b)?;
                }
            }
        }
        Ok(out)
    }

    /// Sum of two equal-shaped matrices.
    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} plus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (&(r, c), v) in &other.entries {
            out.add_to(r, c, v.clone())?;
        }
        Ok(out)
    }

    /// Scalar multiple.
    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero(self.rows, self.cols);
        }
        let mut out = Self::zero(self.rows, self.cols);
        for (&(r, c), v) in &self.entries {
            out.entries.insert((r, c), v * s);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows);
        for (&(r, c), v) in &self.entries {
            out.entries.insert((c, r), v.clone());
        }
        out
    }

    /// Rank together with a basis of the right kernel. Every returned vector
    /// `k` satisfies `self * k = 0` exactly, and rank + kernel size = cols.
    pub fn rank_kernel(&self) -> (usize, Vec<Vec<Rational>>) {
        let elim = Eliminated::run(self, self.cols);
        let kernel = elim.kernel();
        debug_assert!(kernel.iter().all(|k| {
            self.mul_vec(k)
                .expect("kernel length")
                .iter()
                .all(Rational::is_zero)
        }));
        (elim.rank(), kernel)
    }

    /// Rank only.
    pub fn rank(&self) -> usize {
        Eliminated::run(self, self.cols).rank()
    }

    /// Exact solution of `self * x = b`, if one exists.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let mut aug = Self::zero(self.rows, self.cols + 1);
        aug.entries = self.entries.clone();
        for (r, v) in b.iter().enumerate() {
            if !v.is_zero() {
                aug.entries.insert((r, self.cols), v.clone());
            }
        }
        // Pivots are confined to the genuine columns; the augmented column
        // only records the reduced right-hand side.
        let elim = Eliminated::run(&aug, self.cols);
        elim.particular_solution(self.cols)
    }
}

impl fmt::Debug for SparseRationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseRationalMatrix({}x{})[", self.rows, self.cols)?;
        for (i, (&(r, c), v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({r},{c})={}", format_rational(v))?;
        }
        write!(f, "]")
    }
}

impl Serialize for SparseRationalMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SparseRationalMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        let triples: Vec<(usize, usize, String)> = self
            .entries
            .iter()
            .map(|(&(r, c), v)| (r, c, format_rational(v)))
            .collect();
        st.serialize_field("entries", &triples)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SparseRationalMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: Vec<(usize, usize, String)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut m = SparseRationalMatrix::zero(raw.rows, raw.cols);
        for (r, c, s) in raw.entries {
            let v = parse_rational(&s).map_err(serde::de::Error::custom)?;
            m.set(r, c, v).map_err(serde::de::Error::custom)?;
        }
        Ok(m)
    }
}
