//! Lie algebroids over a polynomial coordinate patch, together with the
//! connection-theoretic structure that makes them act on the base.
//!
//! An algebroid is presented in a trivializing frame: one polynomial anchor
//! field per frame section and polynomial structure functions. A linear
//! connection on the bundle induces derivative laws both on base vector
//! fields and on sections; the failure of the bracket to be parallel is a
//! tensorial basic curvature. When the connection is flat and the basic
//! curvature vanishes the package determines a larger algebroid on the sum
//! of the bundle and the tangent space, splits into a matched pair, and
//! carries a bigraded complex whose total cohomology is computed exactly in
//! weight slices.
//!
//! All coefficients are rational and all operations are exact.

mod algebroid;
mod connection;
mod double;
mod haefliger;

pub use algebroid::AlgebroidData;
pub use connection::{
    base_affine_change, basic_curvature, bundle_gauge, coordinate_transport, extended_isotropy,
    induced_connections, isotropy_transport_check, lie_constants_jacobi, pointwise_bracket,
    random_flat_package, CartanPackage, Connection,
};
pub use double::{
    double, double_isotropy_check, matched_pair_check, matched_pair_from_package, mc_defect,
    AConnection, DoubleAlgebroid, McReport,
};
pub use haefliger::{
    algebroid_cohomology, ce_differential, commutation_report, d_algebroid, d_de_rham,
    double_equivalence_check, double_transport_report, frame_weights, haefliger_cohomology,
    inf_haefliger, total_differential, AlgebroidCochain, DoubleEquivalence, HaefligerReport,
    MixedCochain,
};

use formal::FormalError;
use linalg::LinalgError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CartanError {
    /// The construction needs a flat connection with vanishing basic
    /// curvature, and the given package has neither or only one.
    #[error("the connection is not flat with parallel bracket")]
    NotFlatCartan,
    /// The structure data admits no weight grading, so slicewise cohomology
    /// is unavailable.
    #[error("no consistent weight grading: {0}")]
    NotWeightGraded(String),
    /// Input arrays with inconsistent shapes, mixed variable counts, or a
    /// violated structural symmetry.
    #[error("invalid structure data: {0}")]
    InvalidData(String),
    /// Parallel transport did not close into a polynomial below the
    /// requested degree.
    #[error("parallel transport still has terms at degree {0}")]
    TransportDiverges(u32),
    #[error(transparent)]
    Formal(#[from] FormalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Outcome of a family of identity checks, with every failing identity
/// reported by name in a deterministic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn from_failures(failures: Vec<String>) -> Self {
        Self {
            passed: failures.is_empty(),
            failures,
        }
    }
}
