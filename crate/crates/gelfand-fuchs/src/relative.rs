use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, LinalgError,
    Rational, SparseRationalMatrix,
};
use num_traits::Zero;

use crate::gens::{reflection_sign, so_q_basis};
use crate::slice::{differential_matrix, interior_matrix, lie_matrix, slice_basis, WedgeLabel};

/// The subspace of a weight slice cut out by the orthogonal conditions: a
/// basis of cochains annihilated by interior products and Lie derivatives
/// along the linear skew fields, and fixed by the reflection `x₁ ↦ −x₁`.
#[derive(Clone, Debug)]
pub struct RelativeSlice {
    pub ambient: LabeledBasis<WedgeLabel>,
    /// Basis vectors of the subspace in ambient coordinates, in the
    /// deterministic order produced by the kernel solver.
    pub basic: Vec<Vec<Rational>>,
}

impl RelativeSlice {
    pub fn dimension(&self) -> usize {
        self.basic.len()
    }

    /// Coordinates over the subspace basis, lifted to ambient coordinates.
    pub fn to_ambient(&self, coords: &[Rational]) -> Vec<Rational> {
        assert_eq!(coords.len(), self.basic.len());
        let mut out = vec![Rational::zero(); self.ambient.dimension()];
        for (c, v) in coords.iter().zip(&self.basic) {
            if c.is_zero() {
                continue;
            }
            for (slot, x) in out.iter_mut().zip(v) {
                *slot += c * x;
            }
        }
        out
    }
}

/// Cuts the degree-`p`, weight-`w` slice down to its basic subspace by
/// stacking all annihilation conditions into one matrix and taking its
/// kernel.
pub fn relative_projector(q: usize, p: usize, w: i64) -> RelativeSlice {
    let ambient = slice_basis(q, p, w);
    let below = if p == 0 {
        LabeledBasis::new(Vec::new()).expect("empty basis")
    } else {
        slice_basis(q, p - 1, w)
    };

    let mut triplets: Vec<(usize, usize, Rational)> = Vec::new();
    let mut rows = 0usize;
    let mut absorb = |m: &SparseRationalMatrix, offset: usize| {
        for (r, c, v) in m.iter() {
            triplets.push((offset + r, c, v.clone()));
        }
        offset + m.rows()
    };
    for xi in so_q_basis(q) {
        rows = absorb(&interior_matrix(&ambient, &below, &xi), rows);
        rows = absorb(&lie_matrix(q, &ambient, &ambient, &xi), rows);
    }
    for (col, wedge) in ambient.iter() {
        let sign: i64 = wedge.0.iter().map(reflection_sign).product();
        if sign < 0 {
            triplets.push((rows, col, Rational::from_integer(1.into())));
            rows += 1;
        }
    }

    let conditions = SparseRationalMatrix::from_triplets(rows, ambient.dimension(), triplets)
        .expect("condition rows are in range");
    let (_, basic) = conditions.rank_kernel();
    RelativeSlice { ambient, basic }
}

/// The differential between two basic subspaces, expressed over their kernel
/// bases. Each image is re-expanded by exact solving; failure to land in the
/// target subspace cannot happen because the differential commutes with all
/// the defining conditions.
pub fn restricted_differential(
    q: usize,
    from: &RelativeSlice,
    to: &RelativeSlice,
) -> SparseRationalMatrix {
    let ambient_d = differential_matrix(q, &from.ambient, &to.ambient);
    let mut span = SparseRationalMatrix::zero(to.ambient.dimension(), to.basic.len());
    for (j, v) in to.basic.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            if !x.is_zero() {
                span.set(i, j, x.clone()).expect("index in range");
            }
        }
    }
    let mut triplets = Vec::new();
    for (j, v) in from.basic.iter().enumerate() {
        let dv = ambient_d.mul_vec(v).expect("ambient dimensions agree");
        let coords = span
            .solve(&dv)
            .expect("differential preserves the basic subspace");
        for (i, c) in coords.into_iter().enumerate() {
            if !c.is_zero() {
                triplets.push((i, j, c));
            }
        }
    }
    SparseRationalMatrix::from_triplets(to.dimension(), from.dimension(), triplets)
        .expect("positions are in range")
}

/// Cohomology of the basic subcomplex at weight `w` in degrees `0..=p_max`.
/// Representatives are rendered in the ambient wedge coordinates.
pub fn gf_relative_cohomology(
    q: usize,
    w: i64,
    p_max: usize,
) -> Result<CohomologyTable, LinalgError> {
    let slices: Vec<RelativeSlice> = (0..=p_max + 1)
        .map(|p| relative_projector(q, p, w))
        .collect();
    let mut table = CohomologyTable::new();
    for p in 0..=p_max {
        let d_in = if p == 0 {
            SparseRationalMatrix::zero(slices[0].dimension(), 0)
        } else {
            restricted_differential(q, &slices[p - 1], &slices[p])
        };
        let d_out = restricted_differential(q, &slices[p], &slices[p + 1]);
        let coh = cohomology_at(&d_in, &d_out)?;
        let representatives = coh
            .representatives
            .iter()
            .map(|v| render_vector(&slices[p].to_ambient(v), &slices[p].ambient))
            .collect();
        table.insert(
            p,
            DegreeCohomology {
                dim: coh.dimension,
                representatives,
            },
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gens::GFGenerator;
    use formal::Exponent;
    use linalg::rat_int;

    #[test]
    fn line_slices_keep_everything_at_weight_zero() {
        for p in 0..=3 {
            let rel = relative_projector(1, p, 0);
            assert_eq!(rel.dimension(), rel.ambient.dimension(), "degree {p}");
        }
    }

    #[test]
    fn reflection_removes_odd_duals_on_the_line() {
        // Weight 1 at degree 1 is spanned by the dual of ∂, which is odd
        // under x ↦ −x.
        let rel = relative_projector(1, 1, 1);
        assert_eq!(rel.ambient.dimension(), 1);
        assert_eq!(rel.dimension(), 0);
    }

    #[test]
    fn constants_survive_in_two_variables() {
        let rel = relative_projector(2, 0, 0);
        assert_eq!(rel.dimension(), 1);
        assert_eq!(rel.to_ambient(&[rat_int(1)]), vec![rat_int(1)]);
    }

    #[test]
    fn rotation_conditions_cut_the_first_degree_down() {
        // Degree 1, weight 0 for q = 2 is spanned by the duals of the four
        // linear fields. Horizontality kills the rotation dual, invariance
        // pairs the rest into the divergence dual alone.
        let rel = relative_projector(2, 1, 0);
        assert_eq!(rel.ambient.dimension(), 4);
        assert_eq!(rel.dimension(), 1);
        let ambient = rel.to_ambient(&[rat_int(1)]);
        let dual = |a: [u32; 2], i: usize| {
            let label = WedgeLabel(vec![GFGenerator::new(Exponent(a.to_vec()), i)]);
            rel.ambient.position(&label).expect("label present")
        };
        // The invariant line is the dual of x∂x + y∂y; both diagonal slots
        // carry the same coefficient and the off-diagonal slots vanish.
        assert_eq!(ambient[dual([1, 0], 0)], ambient[dual([0, 1], 1)]);
        assert!(!ambient[dual([1, 0], 0)].is_zero());
        assert!(ambient[dual([0, 1], 0)].is_zero());
        assert!(ambient[dual([1, 0], 1)].is_zero());
    }

    #[test]
    fn relative_line_cohomology_matches_the_absolute_one() {
        let relative = gf_relative_cohomology(1, 0, 3).unwrap();
        let absolute = crate::slice::gf_cohomology(1, 0, 3).unwrap();
        assert_eq!(relative.dims(), absolute.dims());
        assert_eq!(relative.dims(), vec![1, 0, 0, 1]);
    }
}
