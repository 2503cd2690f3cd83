use num_traits::Zero;

use crate::matrix::SparseRationalMatrix;
use crate::rational::Rational;
use crate::LinalgError;

/// Cohomology of a three-term complex at its middle slot.
#[derive(Clone, Debug)]
pub struct Cohomology {
    /// dim ker(d_out) − rank(d_in).
    pub dimension: usize,
    /// Cocycles whose classes form a basis of the cohomology. Chosen
    /// deterministically: kernel vectors of `d_out`, in kernel order, kept
    /// whenever they enlarge the span of the image of `d_in`.
    pub representatives: Vec<Vec<Rational>>,
    pub kernel_dimension: usize,
    pub image_rank: usize,
    d_in: SparseRationalMatrix,
}

impl Cohomology {
    /// Whether the cocycle `z` is a coboundary, decided by exact solving.
    pub fn is_exact(&self, z: &[Rational]) -> bool {
        self.d_in.solve(z).is_some()
    }
}

/// Cohomology at the middle of `d_in: A → B`, `d_out: B → C`, both given as
/// matrices acting on coordinate columns (so `d_in` has `dim B` rows and
/// `d_out` has `dim B` columns).
pub fn cohomology_at(
    d_in: &SparseRationalMatrix,
    d_out: &SparseRationalMatrix,
) -> Result<Cohomology, LinalgError> {
    if d_out.cols() != d_in.rows() {
        return Err(LinalgError::ShapeMismatch(format!(
            "d_in is {}x{} but d_out is {}x{}",
            d_in.rows(),
            d_in.cols(),
            d_out.rows(),
            d_out.cols()
        )));
    }
    let composite = d_out.matmul(d_in)?;
    if let Some((row, col, _)) = composite.iter().next() {
        return Err(LinalgError::CompositionNotZero { row, col });
    }

    let image_rank = d_in.rank();
    let (_, kernel) = d_out.rank_kernel();
    let kernel_dimension = kernel.len();
    let dimension = kernel_dimension - image_rank;

    // Stack the image generators as rows, then offer each kernel vector in
    // order; a vector is a new representative exactly when it raises the
    // rank of the stack.
    let n = d_in.rows();
    let mut stack: Vec<Vec<Rational>> = Vec::new();
    for c in 0..d_in.cols() {
        let mut row = vec![Rational::zero(); n];
        for (r, cc, v) in d_in.iter() {
            if cc == c {
                row[r] = v.clone();
            }
        }
        stack.push(row);
    }
    let mut current_rank = image_rank;
    let mut representatives = Vec::new();
    for k in &kernel {
        stack.push(k.clone());
        let m = rows_matrix(n, &stack);
        let r = m.rank();
        if r > current_rank {
            current_rank = r;
            representatives.push(k.clone());
        } else {
            stack.pop();
        }
    }
    debug_assert_eq!(representatives.len(), dimension);

    Ok(Cohomology {
        dimension,
        representatives,
        kernel_dimension,
        image_rank,
        d_in: d_in.clone(),
    })
}

fn rows_matrix(n: usize, rows: &[Vec<Rational>]) -> SparseRationalMatrix {
    let mut m = SparseRationalMatrix::zero(rows.len(), n);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_zero() {
                m.set(r, c, v.clone()).expect("in range");
            }
        }
    }
    m
}
