//! Exact calculus on finite-order jets of local diffeomorphisms.
//!
//! A jet is stored as the Taylor polynomial of a pointed map germ with
//! invertible linear part, so composing and inverting jets is polynomial
//! substitution and a triangular solve, both exact over the rationals.
//! Tangent vectors to the space of jets are dual-number perturbations of
//! the same data, which turns every differential — of composition, of
//! inversion, of the truncation projections — into plain arithmetic. On top
//! of the tangent calculus sit the contact form and its compatibility with
//! multiplication, horizontal lifts along the canonical representative, a
//! bigraded complex of symbolic cochains on strings of composable jets, the
//! Spencer derivative on truncated section data, and total derivatives with
//! prolongation of polynomial constraint systems.
//!
//! Every operation tracks the order of data it consumes; asking for more
//! orders than an object carries is reported, never silently truncated.

mod cochain;
mod jet;
mod mat;
mod prolong;
mod spencer;
mod tangent;
mod verify;

pub use cochain::{haefliger_dc, haefliger_delta, JetCochain};
pub use jet::{jet_compose, jet_invert, random_jet, PolyJet};
pub use prolong::{
    mobius_check, prolong_constraints, total_derivative, ConstraintSystem, MobiusReport,
};
pub use spencer::{spencer_apply, spencer_flatness_check, SpencerSection};
pub use tangent::{
    cartan_form_eval, cartan_mult_defect, horizontal_lift, jet_tangent_compose,
    jet_tangent_invert, random_tangent, tangent_action, vertical_action, JetTangent, LiftSide,
    VerticalVariation,
};
pub use verify::{cochain_corpus, run_verification, JetCheck, JetVerification};

use formal::FormalError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JetError {
    /// Source and target points, or the tangent data riding on them, do not
    /// line up for composition.
    #[error("jets do not compose: {0}")]
    NonComposable(String),
    /// The order-one part of a would-be jet is not invertible.
    #[error("singular linear part: {0}")]
    SingularLinearPart(String),
    /// The operation needs more orders of data than are available.
    #[error(
        "order budget exhausted: needs order {needed} but only {available} is available (short by {deficit})",
        deficit = .needed - .available
    )]
    OrderExhausted { needed: u32, available: u32 },
    /// Structurally malformed input: mismatched dimensions, stray indices,
    /// or data attached to the wrong jet.
    #[error("invalid jet data: {0}")]
    Invalid(String),
    /// An underlying polynomial operation failed.
    #[error(transparent)]
    Formal(#[from] FormalError),
}
