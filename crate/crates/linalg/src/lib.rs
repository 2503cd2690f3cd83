//! Exact sparse linear algebra over the rationals.
//!
//! Everything here is exact: matrices store `BigRational` entries, elimination
//! is fraction-free over big integers, and every answer (rank, kernel basis,
//! solution vector, cohomology dimension) is an equality, not an approximation.
//!
//! The elimination engine uses a fixed pivot rule (leftmost column, then lowest
//! row index), so identical inputs produce bitwise-identical outputs.

mod basis;
mod cohomology;
mod elim;
mod matrix;
mod rational;
mod table;

pub use basis::LabeledBasis;
pub use cohomology::{cohomology_at, Cohomology};
pub use matrix::SparseRationalMatrix;
pub use rational::{format_rational, parse_rational, rat, rat_int, Rational};
pub use table::{render_vector, CohomologyTable, DegreeCohomology, RepTerm};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// Two maps fed to `cohomology_at` do not compose to zero, so they are not
    /// consecutive differentials of a complex.
    #[error("composition d_out . d_in is not zero (first nonzero entry at row {row}, col {col})")]
    CompositionNotZero { row: usize, col: usize },
    /// Matrix dimensions do not match the operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An entry index is out of range.
    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    /// Labels of a basis are not pairwise distinct.
    #[error("duplicate basis label: {0}")]
    DuplicateLabel(String),
    /// A rational literal could not be parsed.
    #[error("malformed rational literal: {0:?}")]
    BadRational(String),
}
