//! Cohomology of the Lie algebra of formal vector fields in `q` variables.
//!
//! The algebra is spanned by the generators `x^α ∂/∂xᵢ`, graded by the weight
//! `|α| − 1`. Cochains split into finite-dimensional slices of fixed degree
//! and weight, and the Chevalley–Eilenberg differential preserves each slice,
//! so every cohomology question becomes exact linear algebra over ℚ.
//!
//! Three layers are provided:
//! - the absolute complex, sliced by weight, with the Euler-field contraction
//!   identities that force all cohomology off weight zero to vanish;
//! - the subcomplex of cochains basic under the orthogonal symmetries
//!   (annihilated by the linear skew fields and fixed by a reflection);
//! - the truncated characteristic algebra on generators `h_i`, `c_i` with
//!   `d(h_i) = c_i`, whose cohomology the basic subcomplex reproduces in low
//!   degrees — both sides are computed independently here and compared in
//!   tests.

mod gens;
mod relative;
mod slice;
mod wo;

pub use gens::{
    bracket_generators, coefficient_of, combination_field, euler_element, field_to_generators,
    generators_of_weight, reflection_sign, so_q_basis, GFGenerator,
};
pub use relative::{
    gf_relative_cohomology, relative_projector, restricted_differential, RelativeSlice,
};
pub use slice::{
    euler_homotopy_check, gf_cohomology, gf_complex_slice, slice_basis, EulerHomotopyReport,
    GFCochain, WedgeLabel,
};
pub use wo::{h_indices, top_odd_index, wo_basis, wo_cohomology, WOElement, WOMonomial};
