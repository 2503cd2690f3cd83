use linalg::{Rational, SparseRationalMatrix};
use num_traits::Zero;

use crate::groupoid::FiniteGroupoid;
use crate::GroupoidError;

fn unit_vec(dim: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    v[i] = Rational::from_integer(1.into());
    v
}

/// A linear representation of a finite groupoid: a rational vector space per
/// object and a matrix per arrow, sending the fiber at the source to the
/// fiber at the target. Functoriality and the unit law are checked
/// exhaustively at construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    dims: Vec<usize>,
    mats: Vec<SparseRationalMatrix>,
}

impl Representation {
    pub fn new(
        g: &FiniteGroupoid,
        dims: Vec<usize>,
        mats: Vec<SparseRationalMatrix>,
    ) -> Result<Self, GroupoidError> {
        if dims.len() != g.object_count() || mats.len() != g.arrow_count() {
            return Err(GroupoidError::DimMismatch(
                "one dimension per object and one matrix per arrow required".into(),
            ));
        }
        for (a, m) in mats.iter().enumerate() {
            let (rows, cols) = (dims[g.target(a)], dims[g.source(a)]);
            if m.rows() != rows || m.cols() != cols {
                return Err(GroupoidError::DimMismatch(format!(
                    "matrix of arrow {a} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for x in 0..g.object_count() {
            if mats[g.unit(x)] != SparseRationalMatrix::identity(dims[x]) {
                return Err(GroupoidError::NotARepresentation(format!(
                    "unit of object {x} does not act as the identity"
                )));
            }
        }
        for a in 0..g.arrow_count() {
            for b in 0..g.arrow_count() {
                if g.source(a) != g.target(b) {
                    continue;
                }
                let ab = g.compose(a, b)?;
                let product = mats[a].matmul(&mats[b])?;
                if product != mats[ab] {
                    return Err(GroupoidError::NotARepresentation(format!(
                        "matrices of ({a}, {b}) do not compose"
                    )));
                }
            }
        }
        Ok(Self { dims, mats })
    }

    /// The trivial representation of constant dimension.
    pub fn trivial(g: &FiniteGroupoid, dim: usize) -> Self {
        Self {
            dims: vec![dim; g.object_count()],
            mats: (0..g.arrow_count())
                .map(|_| SparseRationalMatrix::identity(dim))
                .collect(),
        }
    }

    pub fn dim(&self, x: usize) -> usize {
        self.dims[x]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self, a: usize) -> &SparseRationalMatrix {
        &self.mats[a]
    }
}

/// A basis of the sections fixed by every arrow: assignments `s` of a fiber
/// vector per object with `ρ(g)·s(source g) = s(target g)`. Returned in the
/// block coordinates of object-indexed sections, one block per object in
/// order.
pub fn invariant_sections(
    g: &FiniteGroupoid,
    rho: &Representation,
) -> Result<Vec<Vec<Rational>>, GroupoidError> {
    let mut offsets = Vec::with_capacity(g.object_count());
    let mut total = 0;
    for x in 0..g.object_count() {
        offsets.push(total);
        total += rho.dim(x);
    }
    let mut rows = 0;
    let mut triplets = Vec::new();
    for a in 0..g.arrow_count() {
        let (x, y) = (g.source(a), g.target(a));
        for (r, c, v) in rho.matrix(a).iter() {
            triplets.push((rows + r, offsets[x] + c, v.clone()));
        }
        for k in 0..rho.dim(y) {
            triplets.push((rows + k, offsets[y] + k, -Rational::from_integer(1.into())));
        }
        rows += rho.dim(y);
    }
    let m = SparseRationalMatrix::from_triplets(rows, total, triplets)?;
    let (_, kernel) = m.rank_kernel();
    Ok(kernel)
}

/// An equivariant bilinear pairing `V ⊗ W → U` of three representations of
/// the same groupoid: a bilinear map per object, commuting with every arrow.
#[derive(Clone, Debug)]
pub struct BilinearPairing {
    left: Representation,
    right: Representation,
    out: Representation,
    /// Per object: structure constants `(k, i, j, c)` meaning the pairing of
    /// `eᵢ ⊗ eⱼ` contributes `c·e_k`.
    entries: Vec<Vec<(usize, usize, usize, Rational)>>,
}

impl BilinearPairing {
    pub fn new(
        g: &FiniteGroupoid,
        left: Representation,
        right: Representation,
        out: Representation,
        entries: Vec<Vec<(usize, usize, usize, Rational)>>,
    ) -> Result<Self, GroupoidError> {
        if entries.len() != g.object_count() {
            return Err(GroupoidError::DimMismatch(
                "one entry table per object required".into(),
            ));
        }
        for (x, table) in entries.iter().enumerate() {
            for &(k, i, j, _) in table {
                if k >= out.dim(x) || i >= left.dim(x) || j >= right.dim(x) {
                    return Err(GroupoidError::DimMismatch(format!(
                        "pairing entry ({k}, {i}, {j}) out of range at object {x}"
                    )));
                }
            }
        }
        let pairing = Self {
            left,
            right,
            out,
            entries,
        };
        for a in 0..g.arrow_count() {
            let (x, y) = (g.source(a), g.target(a));
            for i in 0..pairing.left.dim(x) {
                let li = pairing.left.matrix(a).mul_vec(&unit_vec(pairing.left.dim(x), i))?;
                for j in 0..pairing.right.dim(x) {
                    let rj = pairing
                        .right
                        .matrix(a)
                        .mul_vec(&unit_vec(pairing.right.dim(x), j))?;
                    let lhs = pairing.apply(y, &li, &rj);
                    let paired = pairing.apply(
                        x,
                        &unit_vec(pairing.left.dim(x), i),
                        &unit_vec(pairing.right.dim(x), j),
                    );
                    let rhs = pairing.out.matrix(a).mul_vec(&paired)?;
                    if lhs != rhs {
                        return Err(GroupoidError::PairingMismatch(format!(
                            "pairing does not commute with arrow {a} at basis pair ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(pairing)
    }

    /// Scalar multiplication `ℚ ⊗ ℚ → ℚ` over the trivial line.
    pub fn multiplication(g: &FiniteGroupoid) -> Self {
        let line = Representation::trivial(g, 1);
        Self {
            left: line.clone(),
            right: line.clone(),
            out: line,
            entries: vec![vec![(0, 0, 0, Rational::from_integer(1.into()))]; g.object_count()],
        }
    }

    pub fn left(&self) -> &Representation {
        &self.left
    }

    pub fn right(&self) -> &Representation {
        &self.right
    }

    pub fn output(&self) -> &Representation {
        &self.out
    }

    /// Evaluates the pairing at object `x` on coordinate vectors.
    pub fn apply(&self, x: usize, v: &[Rational], w: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.out.dim(x)];
        for (k, i, j, c) in &self.entries[x] {
            if !v[*i].is_zero() && !w[*j].is_zero() {
                out[*k] += c * &v[*i] * &w[*j];
            }
        }
        out
    }
}
