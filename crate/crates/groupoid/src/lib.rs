//! Cohomology of finite groupoids over the rationals.
//!
//! A groupoid is given by explicit composition tables, a coefficient system
//! by one matrix per arrow. On top of that sit the bar complex with its
//! homogeneous differential, cup products along equivariant pairings, group
//! cohomology on the normalized subcomplex, Čech cohomology of a cover
//! recorded as a nerve with component-restriction maps, and, for a finite
//! matrix group acting on a formal coordinate patch, the bicomplex of group
//! cochains valued in polynomial forms with its total differential.
//!
//! Everything is exact: differentials are assembled as sparse rational
//! matrices and cohomology is read off by fraction-free elimination.

mod action;
mod bar;
mod cech;
mod groupoid;
mod rep;

pub use action::{
    action_bicomplex, pullback_linear, ActionBicomplex, ActionCochain, LinearAction,
};
pub use bar::{
    bar_cohomology, bar_delta, bar_delta_matrix, cup_w, group_cohomology, morphism_pullback,
    normalized_string_basis, string_basis, BarCochain, BarString,
};
pub use cech::{cech_basis, mv_cech, CechLabel, CoverNerve};
pub use groupoid::{FiniteGroupoid, GroupoidMorphism};
pub use rep::{invariant_sections, BilinearPairing, Representation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupoidError {
    /// The composition tables do not define a groupoid.
    #[error("groupoid law violated: {0}")]
    LawViolation(String),
    /// Arrows fed to a composition or string do not chain.
    #[error("non-composable string: {0}")]
    NonComposableString(String),
    /// Vector or matrix shapes do not match the declared fibers.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    /// A pairing is not equivariant, or a cochain does not fit one.
    #[error("pairing mismatch: {0}")]
    PairingMismatch(String),
    /// A claimed morphism does not respect the structure.
    #[error("not a functor: {0}")]
    NotAFunctor(String),
    /// Arrow matrices that fail functoriality or the unit law.
    #[error("not a representation: {0}")]
    NotARepresentation(String),
    /// Nerve data whose restriction maps do not fit together.
    #[error("inconsistent nerve: {0}")]
    InconsistentNerve(String),
    /// An operation requiring a one-object groupoid or a genuine matrix
    /// group received something else.
    #[error("not a group: {0}")]
    NotAGroup(String),
    /// The coefficient cap leaves no room for the requested bidegrees.
    #[error("cap {cap} too small, need at least {need}")]
    CapTooSmall { cap: u32, need: u32 },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Formal(#[from] formal::FormalError),
}
