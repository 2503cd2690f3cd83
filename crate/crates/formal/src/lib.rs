//! Exact polynomial differential geometry on a formal coordinate patch.
//!
//! The scalar ring is polynomials over the rationals in a fixed number of
//! variables, optionally truncated above a total degree. On top of it live
//! vector fields (with the Lie bracket), differential forms (wedge, de Rham
//! differential, interior product, Lie derivative) and based polynomial maps
//! (jets with their truncated composition).
//!
//! All operations are exact; products and brackets let the degree grow, and
//! truncation only happens where a degree cap was requested explicitly.

mod form;
mod map;
mod poly;
mod vf;

pub use form::PolyForm;
pub use map::PolyMap;
pub use poly::{Exponent, TruncPoly};
pub use vf::PolyVectorField;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormalError {
    /// Operands live over different numbers of variables.
    #[error("variable count mismatch: {0}")]
    VarMismatch(String),
    /// Form degrees are incompatible with the requested operation.
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    /// Composition of based maps whose base points do not line up.
    #[error("base point mismatch: {0}")]
    BasePointMismatch(String),
    /// A map carries fewer Taylor coefficients than the requested order.
    #[error("map of order {has} cannot be used at order {need}")]
    InsufficientOrder { has: u32, need: u32 },
}
