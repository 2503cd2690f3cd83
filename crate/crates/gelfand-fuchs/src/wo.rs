use std::collections::BTreeMap;
use std::fmt;

use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, LinalgError,
    Rational, SparseRationalMatrix,
};
use num_traits::Zero;

/// The largest odd index `i` with `2i − 1 ≤ q`; odd generators `h_i` exist
/// for odd `i` up to this bound.
pub fn top_odd_index(q: usize) -> usize {
    assert!(q >= 1);
    let bound = (q + 1) / 2;
    if bound % 2 == 1 {
        bound
    } else {
        bound - 1
    }
}

/// The odd indices carrying an `h` generator.
pub fn h_indices(q: usize) -> Vec<usize> {
    (1..=top_odd_index(q)).step_by(2).collect()
}

/// Monomial `h_{i₁}∧…∧h_{i_s}·c₁^{β₁}…c_q^{β_q}` with `deg h_i = 2i − 1`,
/// `deg c_i = 2i`, subject to the truncation that a `c`-part of degree
/// exceeding `2q` vanishes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WOMonomial {
    /// Strictly increasing odd indices of the exterior factors.
    pub h: Vec<usize>,
    /// Exponents of `c₁..c_q`.
    pub c: Vec<u32>,
}

impl WOMonomial {
    pub fn unit(q: usize) -> Self {
        Self {
            h: Vec::new(),
            c: vec![0; q],
        }
    }

    pub fn degree(&self) -> usize {
        self.h.iter().map(|i| 2 * i - 1).sum::<usize>() + self.c_degree()
    }

    pub fn c_degree(&self) -> usize {
        self.c
            .iter()
            .enumerate()
            .map(|(k, &e)| 2 * (k + 1) * e as usize)
            .sum()
    }

    fn validate(&self, q: usize) {
        assert_eq!(self.c.len(), q, "one exponent per c generator");
        let top = top_odd_index(q);
        for pair in self.h.windows(2) {
            assert!(pair[0] < pair[1], "h factors must strictly increase");
        }
        for &i in &self.h {
            assert!(i % 2 == 1 && i <= top, "h{i} does not exist here");
        }
    }
}

impl fmt::Display for WOMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for &i in &self.h {
            parts.push(format!("h{i}"));
        }
        for (k, &e) in self.c.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("c{}", k + 1)),
                _ => parts.push(format!("c{}^{}", k + 1, e)),
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

impl fmt::Debug for WOMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Product of two monomials: `None` when it vanishes, either because an
/// exterior factor repeats or because the `c`-part overflows the truncation.
fn mul_monomials(q: usize, a: &WOMonomial, b: &WOMonomial) -> Option<(WOMonomial, i64)> {
    let mut sign = 1i64;
    for &x in &a.h {
        for &y in &b.h {
            if x == y {
                return None;
            }
            if x > y {
                sign = -sign;
            }
        }
    }
    let mut h: Vec<usize> = a.h.iter().chain(&b.h).copied().collect();
    h.sort_unstable();
    let c: Vec<u32> = a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect();
    let mono = WOMonomial { h, c };
    if mono.c_degree() > 2 * q {
        return None;
    }
    Some((mono, sign))
}

/// Differential of a monomial: each `h_i` turns into `c_i` with the sign of
/// sliding the derivation past the preceding exterior factors.
fn differential_monomial(q: usize, m: &WOMonomial) -> Vec<(WOMonomial, i64)> {
    let mut out = Vec::new();
    for (k, &i) in m.h.iter().enumerate() {
        let mut h = m.h.clone();
        h.remove(k);
        let mut c = m.c.clone();
        c[i - 1] += 1;
        let mono = WOMonomial { h, c };
        if mono.c_degree() > 2 * q {
            continue;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        out.push((mono, sign));
    }
    out
}

/// Element of the truncated characteristic algebra for a fixed `q`.
#[derive(Clone, PartialEq, Eq)]
pub struct WOElement {
    q: usize,
    terms: BTreeMap<WOMonomial, Rational>,
}

impl WOElement {
    pub fn zero(q: usize) -> Self {
        Self {
            q,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(q: usize) -> Self {
        Self::monomial(q, WOMonomial::unit(q), Rational::from_integer(1.into()))
    }

    pub fn monomial(q: usize, mono: WOMonomial, coeff: Rational) -> Self {
        mono.validate(q);
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() && mono.c_degree() <= 2 * q {
            terms.insert(mono, coeff);
        }
        Self { q, terms }
    }

    /// The generator `h_i`.
    pub fn h(q: usize, i: usize) -> Self {
        Self::monomial(
            q,
            WOMonomial {
                h: vec![i],
                c: vec![0; q],
            },
            Rational::from_integer(1.into()),
        )
    }

    /// The generator `c_i` (1-based).
    pub fn c(q: usize, i: usize) -> Self {
        assert!((1..=q).contains(&i));
        let mut c = vec![0; q];
        c[i - 1] = 1;
        Self::monomial(q, WOMonomial { h: Vec::new(), c }, Rational::from_integer(1.into()))
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WOMonomial, &Rational)> {
        self.terms.iter()
    }

    /// Total degree when every term shares one; `None` for 0 or mixed terms.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(WOMonomial::degree);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.q, other.q);
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_insert_with(Rational::zero) += c;
        }
        terms.retain(|_, c| !c.is_zero());
        Self { q: self.q, terms }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero(self.q);
        }
        Self {
            q: self.q,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.q, other.q);
        let mut terms: BTreeMap<WOMonomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some((mono, sign)) = mul_monomials(self.q, ma, mb) {
                    let coeff = ca * cb * Rational::from_integer(sign.into());
                    *terms.entry(mono).or_insert_with(Rational::zero) += coeff;
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { q: self.q, terms }
    }

    pub fn differential(&self) -> Self {
        let mut terms: BTreeMap<WOMonomial, Rational> = BTreeMap::new();
        for (m, c) in &self.terms {
            for (mono, sign) in differential_monomial(self.q, m) {
                let coeff = c * Rational::from_integer(sign.into());
                *terms.entry(mono).or_insert_with(Rational::zero) += coeff;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { q: self.q, terms }
    }
}

impl fmt::Debug for WOElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts = self
            .terms
            .iter()
            .map(|(m, c)| format!("{c}·{m}"))
            .collect::<Vec<_>>();
        write!(f, "{}", parts.join(" + "))
    }
}

/// All monomials of one total degree, in monomial order.
pub fn wo_basis(q: usize, degree: usize) -> LabeledBasis<WOMonomial> {
    let odd = h_indices(q);
    let mut labels = Vec::new();
    for mask in 0u32..(1 << odd.len()) {
        let h: Vec<usize> = odd
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        let h_degree: usize = h.iter().map(|i| 2 * i - 1).sum();
        if h_degree > degree {
            continue;
        }
        let rest = degree - h_degree;
        if rest > 2 * q {
            continue;
        }
        let mut c = vec![0u32; q];
        fill_c(q, 0, rest, &mut c, &h, &mut labels);
    }
    labels.sort();
    LabeledBasis::new(labels).expect("monomials are distinct")
}

fn fill_c(
    q: usize,
    slot: usize,
    remaining: usize,
    c: &mut Vec<u32>,
    h: &[usize],
    out: &mut Vec<WOMonomial>,
) {
    if slot == q {
        if remaining == 0 {
            out.push(WOMonomial {
                h: h.to_vec(),
                c: c.clone(),
            });
        }
        return;
    }
    let step = 2 * (slot + 1);
    for e in 0..=(remaining / step) {
        c[slot] = e as u32;
        fill_c(q, slot + 1, remaining - step * e, c, h, out);
    }
    c[slot] = 0;
}

/// Matrix of the differential between two degree slices.
pub(crate) fn wo_differential_matrix(
    q: usize,
    from: &LabeledBasis<WOMonomial>,
    to: &LabeledBasis<WOMonomial>,
) -> SparseRationalMatrix {
    let mut triplets = Vec::new();
    for (col, m) in from.iter() {
        for (mono, sign) in differential_monomial(q, m) {
            let row = to
                .position(&mono)
                .expect("differential raises the degree by one");
            triplets.push((row, col, Rational::from_integer(sign.into())));
        }
    }
    SparseRationalMatrix::from_triplets(to.dimension(), from.dimension(), triplets)
        .expect("positions are in range")
}

/// Cohomology of the truncated characteristic algebra in degrees
/// `0..=deg_max`, with representatives rendered over the monomial basis.
pub fn wo_cohomology(q: usize, deg_max: usize) -> Result<CohomologyTable, LinalgError> {
    let bases: Vec<LabeledBasis<WOMonomial>> = (0..=deg_max + 1).map(|d| wo_basis(q, d)).collect();
    let mut table = CohomologyTable::new();
    for d in 0..=deg_max {
        let d_in = if d == 0 {
            SparseRationalMatrix::zero(bases[0].dimension(), 0)
        } else {
            wo_differential_matrix(q, &bases[d - 1], &bases[d])
        };
        let d_out = wo_differential_matrix(q, &bases[d], &bases[d + 1]);
        let coh = cohomology_at(&d_in, &d_out)?;
        let representatives = coh
            .representatives
            .iter()
            .map(|v| render_vector(v, &bases[d]))
            .collect();
        table.insert(
            d,
            DegreeCohomology {
                dim: coh.dimension,
                representatives,
            },
        );
    }
    Ok(table)
}
