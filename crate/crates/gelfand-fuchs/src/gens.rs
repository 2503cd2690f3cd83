use std::fmt;

use formal::{Exponent, PolyVectorField, TruncPoly};
use linalg::Rational;

/// Basis element `e_{α,i} = x^α ∂/∂xᵢ` of the Lie algebra of formal vector
/// fields in `q` variables. Its weight is `|α| − 1 ≥ −1`. The ordering is
/// graded-lexicographic on `(|α|, α, i)`, so weights never decrease along the
/// enumeration.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GFGenerator {
    pub alpha: Exponent,
    /// Direction index, `0..q`.
    pub dir: usize,
}

impl GFGenerator {
    pub fn new(alpha: Exponent, dir: usize) -> Self {
        assert!(dir < alpha.len(), "direction outside the coordinate range");
        Self { alpha, dir }
    }

    pub fn q(&self) -> usize {
        self.alpha.len()
    }

    pub fn weight(&self) -> i64 {
        i64::from(self.alpha.total()) - 1
    }

    /// The generator as a concrete polynomial vector field.
    pub fn field(&self) -> PolyVectorField {
        PolyVectorField::monomial(self.alpha.clone(), self.dir)
    }
}

impl fmt::Display for GFGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q() == 1 {
            write!(f, "xi{}", self.alpha.0[0])
        } else {
            let alpha = self
                .alpha
                .0
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",");
            write!(f, "xi[{};{}]", alpha, self.dir + 1)
        }
    }
}

impl fmt::Debug for GFGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// All exponent multi-indices in `q` slots with total degree `d`, in
/// lexicographic order.
fn exponents_of_degree(q: usize, d: u32) -> Vec<Exponent> {
    fn rec(q: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == q {
            prefix.push(d);
            out.push(Exponent(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in 0..=d {
            prefix.push(k);
            rec(q, d - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if q == 0 {
        return out;
    }
    rec(q, d, &mut Vec::new(), &mut out);
    out
}

/// Generators of a fixed weight, sorted by the generator ordering.
pub fn generators_of_weight(q: usize, weight: i64) -> Vec<GFGenerator> {
    if weight < -1 {
        return Vec::new();
    }
    let degree = (weight + 1) as u32;
    let mut out = Vec::new();
    for alpha in exponents_of_degree(q, degree) {
        for dir in 0..q {
            out.push(GFGenerator::new(alpha.clone(), dir));
        }
    }
    out.sort();
    out
}

/// Expands the bracket `[e_a, e_b]` over the generator basis.
pub fn bracket_generators(a: &GFGenerator, b: &GFGenerator) -> Vec<(GFGenerator, Rational)> {
    let bracket = a
        .field()
        .bracket(&b.field())
        .expect("generators share the coordinate count");
    field_to_generators(&bracket)
}

/// Reads a polynomial vector field as a combination of generators.
pub fn field_to_generators(v: &PolyVectorField) -> Vec<(GFGenerator, Rational)> {
    let mut out = Vec::new();
    for dir in 0..v.nvars() {
        for (exp, coeff) in v.component(dir).terms() {
            out.push((GFGenerator::new(exp.clone(), dir), coeff.clone()));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Coefficient of one generator inside a combination; repeated entries
/// accumulate.
pub fn coefficient_of(combo: &[(GFGenerator, Rational)], g: &GFGenerator) -> Rational {
    combo
        .iter()
        .filter(|(h, _)| h == g)
        .map(|(_, c)| c.clone())
        .sum()
}

/// The Euler field `Σᵢ xᵢ∂ᵢ` as a generator combination.
pub fn euler_element(q: usize) -> Vec<(GFGenerator, Rational)> {
    (0..q)
        .map(|i| {
            (
                GFGenerator::new(Exponent::unit(q, i), i),
                Rational::from_integer(1.into()),
            )
        })
        .collect()
}

/// Basis of the linear skew fields `x_j∂ᵢ − x_i∂ⱼ` over `i < j`.
pub fn so_q_basis(q: usize) -> Vec<Vec<(GFGenerator, Rational)>> {
    let mut out = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            out.push(vec![
                (
                    GFGenerator::new(Exponent::unit(q, j), i),
                    Rational::from_integer(1.into()),
                ),
                (
                    GFGenerator::new(Exponent::unit(q, i), j),
                    Rational::from_integer((-1).into()),
                ),
            ]);
        }
    }
    out
}

/// Sign of a generator under the reflection `x₁ ↦ −x₁`: the generator is an
/// eigenvector with eigenvalue `(−1)^{α₁ + [i = 1]}`.
pub fn reflection_sign(g: &GFGenerator) -> i64 {
    let mut parity = g.alpha.0[0];
    if g.dir == 0 {
        parity += 1;
    }
    if parity % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Combination of generators with rational coefficients, as a vector field.
pub fn combination_field(q: usize, combo: &[(GFGenerator, Rational)]) -> PolyVectorField {
    let mut acc = PolyVectorField::zero(q);
    for (g, c) in combo {
        let mut comps = vec![TruncPoly::zero(q); q];
        comps[g.dir] = TruncPoly::monomial(g.alpha.clone(), c.clone());
        acc = acc
            .add(&PolyVectorField::new(comps).expect("component shape"))
            .expect("matching variable counts");
    }
    acc
}
