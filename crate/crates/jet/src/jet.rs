//! Finite-order jets of local diffeomorphisms and their groupoid laws.

use formal::{Exponent, PolyMap, TruncPoly};
use linalg::{format_rational, rat, Rational};
use num_traits::Zero;
use rand::Rng;

use crate::{mat, JetError};

/// All exponent multi-indices over `nvars` slots with total degree in
/// `lo..=hi`, ordered by total degree and then lexicographically.
pub(crate) fn multi_indices(nvars: usize, lo: u32, hi: u32) -> Vec<Exponent> {
    fn fill(prefix: &mut Vec<u32>, slots: usize, left: u32, out: &mut Vec<Exponent>) {
        if slots == 1 {
            prefix.push(left);
            out.push(Exponent(prefix.clone()));
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            fill(prefix, slots - 1, left - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in lo..=hi {
        if nvars == 0 {
            if total == 0 {
                out.push(Exponent(Vec::new()));
            }
            continue;
        }
        fill(&mut Vec::new(), nvars, total, &mut out);
    }
    out
}

pub(crate) fn alpha_factorial(e: &Exponent) -> Rational {
    let mut f = Rational::from_integer(1.into());
    for &k in &e.0 {
        for v in 2..=k {
            f *= Rational::from_integer(v.into());
        }
    }
    f
}

fn render_point(p: &[Rational]) -> String {
    let coords: Vec<String> = p.iter().map(format_rational).collect();
    format!("({})", coords.join(", "))
}

/// An order-`W` jet of a local diffeomorphism: the truncated Taylor
/// expansion of a pointed self-map germ whose linear part is invertible.
/// The expansion doubles as the canonical polynomial representative along
/// which the jet is slid and evaluated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyJet {
    rep: PolyMap,
}

impl PolyJet {
    /// Wraps a map germ, checking that it is a candidate arrow: equal source
    /// and target dimensions and an invertible linear part.
    pub fn from_map(rep: PolyMap) -> Result<Self, JetError> {
        if rep.source_dim() != rep.target_dim() {
            return Err(JetError::Invalid(format!(
                "a jet needs equal dimensions on both sides, got {} -> {}",
                rep.source_dim(),
                rep.target_dim()
            )));
        }
        if mat::det(&rep.linear_part()).is_zero() {
            return Err(JetError::SingularLinearPart(format!(
                "the order-one part at {} is not invertible",
                render_point(rep.source_point())
            )));
        }
        Ok(Self { rep })
    }

    /// The jet of a polynomial self-map at a marked source point.
    pub fn of_polynomial(
        components: &[TruncPoly],
        source: Vec<Rational>,
        order: u32,
    ) -> Result<Self, JetError> {
        let q = source.len();
        if components.len() != q {
            return Err(JetError::Invalid(format!(
                "{} components for a map of dimension {}",
                components.len(),
                q
            )));
        }
        let shift: Vec<TruncPoly> = (0..q)
            .map(|i| TruncPoly::var(q, i).add(&TruncPoly::constant(q, source[i].clone())))
            .collect::<Result<_, _>>()?;
        let mut target = Vec::with_capacity(q);
        let mut deviations = Vec::with_capacity(q);
        for c in components {
            let moved = c.substitute(&shift)?;
            let value = moved.constant_term();
            deviations.push(moved.sub(&TruncPoly::constant(q, value.clone()))?.truncate(order));
            target.push(value);
        }
        Self::from_map(PolyMap::new(source, target, deviations, order)?)
    }

    /// The unit arrow at a point.
    pub fn unit(point: Vec<Rational>, order: u32) -> Self {
        Self {
            rep: PolyMap::identity(point, order),
        }
    }

    pub fn dimension(&self) -> usize {
        self.rep.source_dim()
    }

    pub fn order(&self) -> u32 {
        self.rep.order()
    }

    pub fn source(&self) -> &[Rational] {
        self.rep.source_point()
    }

    pub fn target(&self) -> &[Rational] {
        self.rep.target_point()
    }

    /// Derivative-normalized coefficient: the `α`-th partial derivative of
    /// component `j` at the source point.
    pub fn coefficient(&self, j: usize, alpha: &Exponent) -> Rational {
        self.rep.derivative(j, alpha)
    }

    pub fn linear_part(&self) -> Vec<Vec<Rational>> {
        self.rep.linear_part()
    }

    /// The canonical polynomial representative.
    pub fn representative(&self) -> &PolyMap {
        &self.rep
    }

    /// Forgets orders above `order`.
    pub fn truncate(&self, order: u32) -> Result<Self, JetError> {
        if order < 1 {
            return Err(JetError::Invalid(
                "a jet keeps at least its linear part".into(),
            ));
        }
        if order > self.order() {
            return Err(JetError::OrderExhausted {
                needed: order,
                available: self.order(),
            });
        }
        Ok(Self {
            rep: self.rep.truncate(order)?,
        })
    }
}

/// Composite of two jets, `g` after `h`, at working order `w`.
pub fn jet_compose(g: &PolyJet, h: &PolyJet, w: u32) -> Result<PolyJet, JetError> {
    if w < 1 {
        return Err(JetError::Invalid("the working order is at least one".into()));
    }
    let available = g.order().min(h.order());
    if available < w {
        return Err(JetError::OrderExhausted {
            needed: w,
            available,
        });
    }
    if g.source() != h.target() {
        return Err(JetError::NonComposable(format!(
            "left factor starts at {}, right factor ends at {}",
            render_point(g.source()),
            render_point(h.target())
        )));
    }
    PolyJet::from_map(g.rep.compose(&h.rep, w)?)
}

/// Inverse jet at working order `w`, solved order by order: the correction
/// `H ← H − A⁻¹(G∘H − id)` sharpens the candidate by one order per pass.
pub fn jet_invert(g: &PolyJet, w: u32) -> Result<PolyJet, JetError> {
    if w < 1 {
        return Err(JetError::Invalid("the working order is at least one".into()));
    }
    if g.order() < w {
        return Err(JetError::OrderExhausted {
            needed: w,
            available: g.order(),
        });
    }
    let q = g.dimension();
    let a_inv = mat::inverse(&g.linear_part()).ok_or_else(|| {
        JetError::SingularLinearPart("the order-one part is not invertible".into())
    })?;
    let forward: Vec<TruncPoly> = g
        .rep
        .components()
        .iter()
        .map(|c| c.truncate(w))
        .collect();
    let eta: Vec<TruncPoly> = (0..q).map(|i| TruncPoly::var(q, i)).collect();
    let mut inverse: Vec<TruncPoly> = (0..q)
        .map(|j| {
            let mut acc = TruncPoly::zero(q);
            for i in 0..q {
                acc = acc.add(&eta[i].scale(&a_inv[j][i]))?;
            }
            Ok::<_, JetError>(acc)
        })
        .collect::<Result<_, _>>()?;
    for _ in 2..=w {
        let mut errors = Vec::with_capacity(q);
        for j in 0..q {
            errors.push(forward[j].substitute(&inverse)?.truncate(w).sub(&eta[j])?);
        }
        if errors.iter().all(TruncPoly::is_zero) {
            break;
        }
        for j in 0..q {
            let mut correction = TruncPoly::zero(q);
            for i in 0..q {
                correction = correction.add(&errors[i].scale(&a_inv[j][i]))?;
            }
            inverse[j] = inverse[j].sub(&correction)?.truncate(w);
        }
    }
    PolyJet::from_map(PolyMap::new(
        g.target().to_vec(),
        g.source().to_vec(),
        inverse,
        w,
    )?)
}

/// A jet with small random rational coefficients and an invertible linear
/// part, drawn reproducibly from the given generator.
pub fn random_jet<R: Rng>(
    rng: &mut R,
    q: usize,
    order: u32,
    source: Vec<Rational>,
    target: Vec<Rational>,
) -> PolyJet {
    loop {
        let mut components = Vec::with_capacity(q);
        for j in 0..q {
            let mut terms = Vec::new();
            for alpha in multi_indices(q, 1, order) {
                let mut c = rat(rng.gen_range(-2..=2), rng.gen_range(1..=2));
                if alpha.total() == 1 && alpha.0[j] == 1 {
                    c += Rational::from_integer(1.into());
                }
                if !c.is_zero() {
                    terms.push((alpha, c));
                }
            }
            components.push(TruncPoly::from_terms(q, None, terms));
        }
        let candidate = PolyMap::new(source.clone(), target.clone(), components, order)
            .expect("deviation components are constant-free by construction");
        if let Ok(jet) = PolyJet::from_map(candidate) {
            return jet;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linalg::rat_int;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xp(exp: Vec<u32>, num: i64) -> TruncPoly {
        TruncPoly::monomial(Exponent(exp), rat_int(num))
    }

    fn pt(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn multi_indices_enumerate_by_degree() {
        let idx = multi_indices(2, 1, 2);
        let raw: Vec<Vec<u32>> = idx.into_iter().map(|e| e.0).collect();
        assert_eq!(
            raw,
            vec![vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn composition_expands_the_shifted_square() {
        let g = PolyJet::of_polynomial(&[xp(vec![2], 1)], pt(&[1]), 2).unwrap();
        let h = PolyJet::of_polynomial(&[xp(vec![1], 1).add(&xp(vec![0], 1)).unwrap()], pt(&[0]), 2)
            .unwrap();
        let c = jet_compose(&g, &h, 2).unwrap();
        assert_eq!(c.source(), pt(&[0]).as_slice());
        assert_eq!(c.target(), pt(&[1]).as_slice());
        assert_eq!(c.coefficient(0, &Exponent(vec![1])), rat_int(2));
        assert_eq!(c.coefficient(0, &Exponent(vec![2])), rat_int(2));
    }

    #[test]
    fn composition_matches_the_substituted_map() {
        let f = xp(vec![1], 1).add(&xp(vec![2], 1)).unwrap();
        let g = xp(vec![1], 1).sub(&xp(vec![2], 2)).unwrap();
        let jf = PolyJet::of_polynomial(&[f.clone()], pt(&[1]), 3).unwrap();
        let jg = PolyJet::of_polynomial(&[g.clone()], jf.target().to_vec(), 3).unwrap();
        let composite = jet_compose(&jg, &jf, 3).unwrap();
        let direct =
            PolyJet::of_polynomial(&[g.substitute(&[f]).unwrap()], pt(&[1]), 3).unwrap();
        assert_eq!(composite, direct);
    }

    #[test]
    fn units_are_two_sided_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_jet(&mut rng, 2, 3, pt(&[0, 1]), pt(&[2, 0]));
        let us = PolyJet::unit(g.source().to_vec(), 3);
        let ut = PolyJet::unit(g.target().to_vec(), 3);
        assert_eq!(jet_compose(&g, &us, 3).unwrap(), g);
        assert_eq!(jet_compose(&ut, &g, 3).unwrap(), g);
    }

    #[test]
    fn inversion_solves_the_triangular_system() {
        let g = PolyJet::of_polynomial(&[xp(vec![1], 2).add(&xp(vec![2], 1)).unwrap()], pt(&[0]), 2)
            .unwrap();
        let inv = jet_invert(&g, 2).unwrap();
        assert_eq!(inv.target(), pt(&[0]).as_slice());
        assert_eq!(inv.coefficient(0, &Exponent(vec![1])), rat(1, 2));
        assert_eq!(inv.coefficient(0, &Exponent(vec![2])), rat(-1, 4));
        let left = jet_compose(&inv, &g, 2).unwrap();
        assert_eq!(left, PolyJet::unit(pt(&[0]), 2));
    }

    #[test]
    fn inversion_in_two_dimensions_is_exact() {
        let comps = [
            xp(vec![1, 0], 1).add(&xp(vec![0, 2], 1)).unwrap(),
            xp(vec![0, 1], 1),
        ];
        let g = PolyJet::of_polynomial(&comps, pt(&[0, 0]), 3).unwrap();
        let inv = jet_invert(&g, 3).unwrap();
        let expected = [
            xp(vec![1, 0], 1).sub(&xp(vec![0, 2], 1)).unwrap(),
            xp(vec![0, 1], 1),
        ];
        assert_eq!(
            inv,
            PolyJet::of_polynomial(&expected, pt(&[0, 0]), 3).unwrap()
        );
    }

    #[test]
    fn random_jets_invert_on_both_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let g = random_jet(&mut rng, 2, 3, pt(&[1, 0]), pt(&[0, -1]));
            let inv = jet_invert(&g, 3).unwrap();
            assert_eq!(
                jet_compose(&inv, &g, 3).unwrap(),
                PolyJet::unit(pt(&[1, 0]), 3)
            );
            assert_eq!(
                jet_compose(&g, &inv, 3).unwrap(),
                PolyJet::unit(pt(&[0, -1]), 3)
            );
        }
    }

    #[test]
    fn singular_linear_parts_are_rejected() {
        let attempt = PolyJet::of_polynomial(&[xp(vec![2], 1)], pt(&[0]), 2);
        assert!(matches!(attempt, Err(JetError::SingularLinearPart(_))));
    }

    #[test]
    fn composition_needs_matching_points() {
        let g = PolyJet::unit(pt(&[1]), 2);
        let h = PolyJet::unit(pt(&[0]), 2);
        assert!(matches!(
            jet_compose(&g, &h, 2),
            Err(JetError::NonComposable(_))
        ));
    }

    #[test]
    fn order_budgets_are_sharp() {
        let g = PolyJet::unit(pt(&[0]), 2);
        let h = PolyJet::unit(pt(&[0]), 3);
        assert_eq!(
            jet_compose(&g, &h, 3),
            Err(JetError::OrderExhausted {
                needed: 3,
                available: 2
            })
        );
        assert_eq!(
            jet_invert(&g, 3),
            Err(JetError::OrderExhausted {
                needed: 3,
                available: 2
            })
        );
        assert!(jet_compose(&g, &h, 2).is_ok());
    }
}
