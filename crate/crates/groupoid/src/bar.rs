use std::collections::BTreeMap;
use std::fmt;

use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, Rational,
    SparseRationalMatrix,
};
use num_traits::Zero;

use crate::groupoid::{FiniteGroupoid, GroupoidMorphism};
use crate::rep::{BilinearPairing, Representation};
use crate::GroupoidError;

/// A composable string of arrows `(g₁,…,g_p)` with `source(gᵢ) ==
/// target(gᵢ₊₁)`, based at the object `target(g₁)`; a length-0 string is a
/// bare object. Cochains assign to each string a vector in the coefficient
/// fiber at the base object.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BarString {
    pub object: usize,
    pub arrows: Vec<usize>,
}

impl BarString {
    pub fn at_object(x: usize) -> Self {
        Self {
            object: x,
            arrows: Vec::new(),
        }
    }

    pub fn from_arrows(g: &FiniteGroupoid, arrows: Vec<usize>) -> Result<Self, GroupoidError> {
        let first = *arrows.first().ok_or_else(|| {
            GroupoidError::NonComposableString("empty string needs an explicit object".into())
        })?;
        for w in arrows.windows(2) {
            if g.source(w[0]) != g.target(w[1]) {
                return Err(GroupoidError::NonComposableString(format!(
                    "arrows {} and {} do not chain",
                    g.arrow_label(w[0]),
                    g.arrow_label(w[1])
                )));
            }
        }
        Ok(Self {
            object: g.target(first),
            arrows,
        })
    }

    pub fn level(&self) -> usize {
        self.arrows.len()
    }

    pub fn contains_unit(&self, g: &FiniteGroupoid) -> bool {
        self.arrows.iter().any(|&a| g.is_unit(a))
    }

    pub fn display(&self, g: &FiniteGroupoid) -> String {
        if self.arrows.is_empty() {
            g.object_label(self.object).to_string()
        } else {
            let inner = self
                .arrows
                .iter()
                .map(|&a| g.arrow_label(a).to_string())
                .collect::<Vec<_>>()
                .join("|");
            format!("[{inner}]")
        }
    }
}

/// All composable `level`-strings, in lexicographic arrow order.
pub fn string_basis(g: &FiniteGroupoid, level: usize) -> Vec<BarString> {
    if level == 0 {
        return (0..g.object_count()).map(BarString::at_object).collect();
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(level);
    extend_strings(g, level, &mut stack, &mut out);
    out
}

fn extend_strings(
    g: &FiniteGroupoid,
    level: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<BarString>,
) {
    if stack.len() == level {
        out.push(BarString {
            object: g.target(stack[0]),
            arrows: stack.clone(),
        });
        return;
    }
    for h in 0..g.arrow_count() {
        if let Some(&prev) = stack.last() {
            if g.target(h) != g.source(prev) {
                continue;
            }
        }
        stack.push(h);
        extend_strings(g, level, stack, out);
        stack.pop();
    }
}

/// The strings containing no unit arrow; cochains supported on these form
/// the normalized subcomplex, which carries the same cohomology.
pub fn normalized_string_basis(g: &FiniteGroupoid, level: usize) -> Vec<BarString> {
    string_basis(g, level)
        .into_iter()
        .filter(|s| !s.contains_unit(g))
        .collect()
}

/// Block offsets of a string list under a representation: where each
/// string's value vector starts in the flattened coordinate vector, plus the
/// total dimension.
fn block_offsets(rho: &Representation, strings: &[BarString]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(strings.len());
    let mut total = 0;
    for s in strings {
        offsets.push(total);
        total += rho.dim(s.object);
    }
    (offsets, total)
}

/// The differential as a matrix between two string bases. The first face
/// acts by `ρ(g₁)`, the middle faces compose adjacent arrows, the last face
/// drops the final arrow. Faces falling outside `from` (possible only on
/// the normalized basis, where degenerate faces are quotiented away)
/// contribute nothing.
pub fn bar_delta_matrix(
    g: &FiniteGroupoid,
    rho: &Representation,
    from: &[BarString],
    to: &[BarString],
) -> Result<SparseRationalMatrix, GroupoidError> {
    let (from_offsets, from_dim) = block_offsets(rho, from);
    let (to_offsets, to_dim) = block_offsets(rho, to);
    let from_index: BTreeMap<&BarString, usize> =
        from.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut m = SparseRationalMatrix::zero(to_dim, from_dim);

    let add_identity_block =
        |m: &mut SparseRationalMatrix, row: usize, col: usize, dim: usize, sign: i64| {
            for k in 0..dim {
                m.add_to(row + k, col + k, Rational::from_integer(sign.into()))
                    .expect("block in range");
            }
        };

    for (t_idx, t) in to.iter().enumerate() {
        let row = to_offsets[t_idx];
        let p1 = t.arrows.len();
        debug_assert!(p1 >= 1, "faces start at level 1");

        let head = t.arrows[0];
        let first_face = if p1 == 1 {
            BarString::at_object(g.source(head))
        } else {
            BarString {
                object: g.target(t.arrows[1]),
                arrows: t.arrows[1..].to_vec(),
            }
        };
        if let Some(&s_idx) = from_index.get(&first_face) {
            let col = from_offsets[s_idx];
            for (r, c, v) in rho.matrix(head).iter() {
                m.add_to(row + r, col + c, v.clone())?;
            }
        }

        for i in 1..p1 {
            let mut arrows = t.arrows.clone();
            let merged = g.compose(arrows[i - 1], arrows[i])?;
            arrows[i - 1] = merged;
            arrows.remove(i);
            let face = BarString {
                object: t.object,
                arrows,
            };
            if let Some(&s_idx) = from_index.get(&face) {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                add_identity_block(&mut m, row, from_offsets[s_idx], rho.dim(t.object), sign);
            }
        }

        let last_face = if p1 == 1 {
            BarString::at_object(t.object)
        } else {
            BarString {
                object: t.object,
                arrows: t.arrows[..p1 - 1].to_vec(),
            }
        };
        if let Some(&s_idx) = from_index.get(&last_face) {
            let sign = if p1 % 2 == 0 { 1 } else { -1 };
            add_identity_block(&mut m, row, from_offsets[s_idx], rho.dim(t.object), sign);
        }
    }
    Ok(m)
}

/// A cochain on the full string basis of its level: one coefficient vector
/// per string, of the fiber dimension at the string's base object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarCochain {
    pub level: usize,
    pub values: Vec<Vec<Rational>>,
}

impl BarCochain {
    pub fn new(
        g: &FiniteGroupoid,
        rho: &Representation,
        level: usize,
        values: Vec<Vec<Rational>>,
    ) -> Result<Self, GroupoidError> {
        let basis = string_basis(g, level);
        if values.len() != basis.len() {
            return Err(GroupoidError::DimMismatch(format!(
                "{} values against {} strings at level {level}",
                values.len(),
                basis.len()
            )));
        }
        for (s, v) in basis.iter().zip(&values) {
            if v.len() != rho.dim(s.object) {
                return Err(GroupoidError::DimMismatch(format!(
                    "value at {} has length {}, fiber has dimension {}",
                    s.display(g),
                    v.len(),
                    rho.dim(s.object)
                )));
            }
        }
        Ok(Self { level, values })
    }

    pub fn zero(g: &FiniteGroupoid, rho: &Representation, level: usize) -> Self {
        let values = string_basis(g, level)
            .iter()
            .map(|s| vec![Rational::zero(); rho.dim(s.object)])
            .collect();
        Self { level, values }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GroupoidError> {
        if self.level != other.level
            || self.values.len() != other.values.len()
            || self
                .values
                .iter()
                .zip(&other.values)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(GroupoidError::DimMismatch(
                "adding cochains of different shapes".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self {
            level: self.level,
            values,
        })
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| v.iter().map(|x| x * s).collect())
            .collect();
        Self {
            level: self.level,
            values,
        }
    }

    fn flatten(&self) -> Vec<Rational> {
        self.values.iter().flatten().cloned().collect()
    }

    fn from_flat(
        g: &FiniteGroupoid,
        rho: &Representation,
        level: usize,
        flat: &[Rational],
    ) -> Self {
        let mut values = Vec::new();
        let mut at = 0;
        for s in string_basis(g, level) {
            let d = rho.dim(s.object);
            values.push(flat[at..at + d].to_vec());
            at += d;
        }
        debug_assert_eq!(at, flat.len());
        Self { level, values }
    }
}

/// The homogeneous bar differential
/// `δc(g₁,…,g_{p+1}) = ρ(g₁)·c(g₂,…) + Σᵢ (−1)ⁱ c(…,gᵢgᵢ₊₁,…) +
/// (−1)^{p+1} c(g₁,…,g_p)`.
pub fn bar_delta(
    g: &FiniteGroupoid,
    rho: &Representation,
    c: &BarCochain,
) -> Result<BarCochain, GroupoidError> {
    BarCochain::new(g, rho, c.level, c.values.clone())?;
    let from = string_basis(g, c.level);
    let to = string_basis(g, c.level + 1);
    let m = bar_delta_matrix(g, rho, &from, &to)?;
    let flat = m.mul_vec(&c.flatten())?;
    Ok(BarCochain::from_flat(g, rho, c.level + 1, &flat))
}

/// The cup product along an equivariant pairing:
/// `(c₁ ∪ c₂)(g₁,…,g_{p+p′}) = w(c₁(g₁..g_p), (g₁⋯g_p)·c₂(g_{p+1}..))`.
pub fn cup_w(
    g: &FiniteGroupoid,
    w: &BilinearPairing,
    c1: &BarCochain,
    c2: &BarCochain,
) -> Result<BarCochain, GroupoidError> {
    BarCochain::new(g, w.left(), c1.level, c1.values.clone()).map_err(|e| {
        GroupoidError::PairingMismatch(format!("left factor does not fit the pairing: {e}"))
    })?;
    BarCochain::new(g, w.right(), c2.level, c2.values.clone()).map_err(|e| {
        GroupoidError::PairingMismatch(format!("right factor does not fit the pairing: {e}"))
    })?;
    let (p, p2) = (c1.level, c2.level);
    let prefix_index: BTreeMap<BarString, usize> = string_basis(g, p)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let suffix_index: BTreeMap<BarString, usize> = string_basis(g, p2)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();

    let basis = string_basis(g, p + p2);
    let mut values = Vec::with_capacity(basis.len());
    for t in &basis {
        let prefix = if p == 0 {
            BarString::at_object(t.object)
        } else {
            BarString {
                object: t.object,
                arrows: t.arrows[..p].to_vec(),
            }
        };
        let suffix = if p2 == 0 {
            let x = match p.checked_sub(1).map(|k| t.arrows[k]) {
                Some(last) => g.source(last),
                None => t.object,
            };
            BarString::at_object(x)
        } else {
            BarString {
                object: g.target(t.arrows[p]),
                arrows: t.arrows[p..].to_vec(),
            }
        };
        let left_val = &c1.values[prefix_index[&prefix]];
        let right_val = &c2.values[suffix_index[&suffix]];
        let transported = if p == 0 {
            right_val.clone()
        } else {
            let mut composite = t.arrows[0];
            for &a in &t.arrows[1..p] {
                composite = g.compose(composite, a)?;
            }
            w.right().matrix(composite).mul_vec(right_val)?
        };
        values.push(w.apply(t.object, left_val, &transported));
    }
    Ok(BarCochain {
        level: p + p2,
        values,
    })
}

fn cochain_labels(
    g: &FiniteGroupoid,
    rho: &Representation,
    strings: &[BarString],
) -> Vec<String> {
    let mut labels = Vec::new();
    for s in strings {
        let d = rho.dim(s.object);
        for k in 0..d {
            if d == 1 {
                labels.push(s.display(g));
            } else {
                labels.push(format!("{}[{k}]", s.display(g)));
            }
        }
    }
    labels
}

/// Cohomology of the bar complex up to `p_max`, on the full or normalized
/// basis.
pub fn bar_cohomology(
    g: &FiniteGroupoid,
    rho: &Representation,
    p_max: usize,
    normalized: bool,
) -> Result<CohomologyTable, GroupoidError> {
    let basis_of = |p: usize| {
        if normalized {
            normalized_string_basis(g, p)
        } else {
            string_basis(g, p)
        }
    };
    let bases: Vec<Vec<BarString>> = (0..=p_max + 1).map(basis_of).collect();
    let mut deltas = Vec::new();
    for p in 0..=p_max {
        deltas.push(bar_delta_matrix(g, rho, &bases[p], &bases[p + 1])?);
    }
    let mut table = CohomologyTable::new();
    for p in 0..=p_max {
        let (_, dim_here) = block_offsets(rho, &bases[p]);
        let d_in = if p == 0 {
            SparseRationalMatrix::zero(dim_here, 0)
        } else {
            deltas[p - 1].clone()
        };
        let cohom = cohomology_at(&d_in, &deltas[p])?;
        let labels = LabeledBasis::new(cochain_labels(g, rho, &bases[p]))?;
        let representatives = cohom
            .representatives
            .iter()
            .map(|v| render_vector(v, &labels))
            .collect();
        table.insert(
            p,
            DegreeCohomology {
                dim: cohom.dimension,
                representatives,
            },
        );
    }
    Ok(table)
}

/// Group cohomology of a one-object groupoid, computed on the normalized
/// subcomplex.
pub fn group_cohomology(
    g: &FiniteGroupoid,
    rho: &Representation,
    p_max: usize,
) -> Result<CohomologyTable, GroupoidError> {
    if g.object_count() != 1 {
        return Err(GroupoidError::NotAGroup(format!(
            "{} objects, expected one",
            g.object_count()
        )));
    }
    bar_cohomology(g, rho, p_max, true)
}

/// Pulls a cochain back along a functor `φ: H → G`, converting coefficients
/// through one transport matrix per object of `H`:
/// `(φ*c)(h₁,…,h_p) = T_{base}·c(φh₁,…,φh_p)`. The transports must
/// intertwine the two representations, which makes the pullback commute
/// with the differentials.
pub fn morphism_pullback(
    h: &FiniteGroupoid,
    g: &FiniteGroupoid,
    phi: &GroupoidMorphism,
    rho_h: &Representation,
    rho_g: &Representation,
    transport: &[SparseRationalMatrix],
    c: &BarCochain,
) -> Result<BarCochain, GroupoidError> {
    phi.validate(h, g)?;
    if transport.len() != h.object_count() {
        return Err(GroupoidError::DimMismatch(
            "one transport matrix per object required".into(),
        ));
    }
    for (x, t) in transport.iter().enumerate() {
        let (rows, cols) = (rho_h.dim(x), rho_g.dim(phi.object_map[x]));
        if t.rows() != rows || t.cols() != cols {
            return Err(GroupoidError::DimMismatch(format!(
                "transport at object {x} is {}x{}, expected {rows}x{cols}",
                t.rows(),
                t.cols()
            )));
        }
    }
    for a in 0..h.arrow_count() {
        let left = transport[h.target(a)].matmul(rho_g.matrix(phi.arrow_map[a]))?;
        let right = rho_h.matrix(a).matmul(&transport[h.source(a)])?;
        if left != right {
            return Err(GroupoidError::NotAFunctor(format!(
                "transport does not intertwine the coefficients at arrow {a}"
            )));
        }
    }
    BarCochain::new(g, rho_g, c.level, c.values.clone())?;

    let g_index: BTreeMap<BarString, usize> = string_basis(g, c.level)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut values = Vec::new();
    for s in string_basis(h, c.level) {
        let image = BarString {
            object: phi.object_map[s.object],
            arrows: s.arrows.iter().map(|&a| phi.arrow_map[a]).collect(),
        };
        let v = &c.values[g_index[&image]];
        values.push(transport[s.object].mul_vec(v)?);
    }
    Ok(BarCochain {
        level: c.level,
        values,
    })
}

impl fmt::Display for BarString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arrows.is_empty() {
            write!(f, "obj{}", self.object)
        } else {
            let inner = self
                .arrows
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join("|");
            write!(f, "[{inner}]")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linalg::rat_int;

    fn z2() -> FiniteGroupoid {
        FiniteGroupoid::cyclic(2)
    }

    #[test]
    fn string_counts_for_a_group() {
        let g = FiniteGroupoid::symmetric(3);
        assert_eq!(string_basis(&g, 0).len(), 1);
        assert_eq!(string_basis(&g, 1).len(), 6);
        assert_eq!(string_basis(&g, 2).len(), 36);
        assert_eq!(normalized_string_basis(&g, 2).len(), 25);
    }

    #[test]
    fn string_counts_for_the_pair_groupoid() {
        let g = FiniteGroupoid::pair(3);
        assert_eq!(string_basis(&g, 0).len(), 3);
        assert_eq!(string_basis(&g, 1).len(), 9);
        assert_eq!(string_basis(&g, 2).len(), 27);
    }

    #[test]
    fn delta_on_z2_indicator() {
        let g = z2();
        let rho = Representation::trivial(&g, 1);
        let c = BarCochain::new(
            &g,
            &rho,
            1,
            vec![vec![rat_int(0)], vec![rat_int(1)]],
        )
        .unwrap();
        let dc = bar_delta(&g, &rho, &c).unwrap();
        let basis = string_basis(&g, 2);
        let ss = basis
            .iter()
            .position(|s| s.arrows == vec![1, 1])
            .unwrap();
        assert_eq!(dc.values[ss], vec![rat_int(2)]);
    }

    #[test]
    fn delta_of_a_constant_section_vanishes() {
        let g = FiniteGroupoid::symmetric(3);
        let rho = Representation::trivial(&g, 1);
        let c = BarCochain::new(&g, &rho, 0, vec![vec![rat_int(5)]]).unwrap();
        let dc = bar_delta(&g, &rho, &c).unwrap();
        assert!(dc.values.iter().flatten().all(Rational::is_zero));
    }

    #[test]
    fn delta_squared_is_zero_on_matrices() {
        let g = FiniteGroupoid::symmetric(3);
        let rho = Representation::trivial(&g, 1);
        for p in 0..3 {
            let b0 = string_basis(&g, p);
            let b1 = string_basis(&g, p + 1);
            let b2 = string_basis(&g, p + 2);
            let d0 = bar_delta_matrix(&g, &rho, &b0, &b1).unwrap();
            let d1 = bar_delta_matrix(&g, &rho, &b1, &b2).unwrap();
            assert!(d1.matmul(&d0).unwrap().is_zero());
        }
    }

    #[test]
    fn cup_of_indicators_on_z2() {
        let g = z2();
        let w = BilinearPairing::multiplication(&g);
        let c = BarCochain::new(
            &g,
            &rho_line(&g),
            1,
            vec![vec![rat_int(0)], vec![rat_int(1)]],
        )
        .unwrap();
        let cc = cup_w(&g, &w, &c, &c).unwrap();
        let basis = string_basis(&g, 2);
        let ss = basis
            .iter()
            .position(|s| s.arrows == vec![1, 1])
            .unwrap();
        assert_eq!(cc.values[ss], vec![rat_int(1)]);
    }

    fn rho_line(g: &FiniteGroupoid) -> Representation {
        Representation::trivial(g, 1)
    }

    #[test]
    fn unit_cochain_is_neutral_for_cup() {
        let g = FiniteGroupoid::symmetric(3);
        let w = BilinearPairing::multiplication(&g);
        let one = BarCochain::new(&g, &rho_line(&g), 0, vec![vec![rat_int(1)]]).unwrap();
        let c = BarCochain::new(
            &g,
            &rho_line(&g),
            1,
            (0..6).map(|k| vec![rat_int(k - 2)]).collect(),
        )
        .unwrap();
        assert_eq!(cup_w(&g, &w, &one, &c).unwrap(), c);
        assert_eq!(cup_w(&g, &w, &c, &one).unwrap(), c);
    }

    #[test]
    fn z2_cohomology_over_the_rationals() {
        let g = z2();
        let table = group_cohomology(&g, &rho_line(&g), 4).unwrap();
        assert_eq!(table.dims(), vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn z2_cohomology_with_sign_coefficients() {
        let g = z2();
        let sign = Representation::new(
            &g,
            vec![1],
            vec![
                SparseRationalMatrix::identity(1),
                SparseRationalMatrix::from_rows_i64(&[&[-1]]),
            ],
        )
        .unwrap();
        let table = group_cohomology(&g, &sign, 3).unwrap();
        assert_eq!(table.dims(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn multi_object_groupoid_is_not_a_group() {
        let g = FiniteGroupoid::pair(2);
        let err = group_cohomology(&g, &rho_line(&g), 1);
        assert!(matches!(err, Err(GroupoidError::NotAGroup(_))));
    }

    #[test]
    fn pair_groupoid_has_trivial_cohomology() {
        let g = FiniteGroupoid::pair(2);
        let table = bar_cohomology(&g, &rho_line(&g), 2, true).unwrap();
        assert_eq!(table.dims(), vec![1, 0, 0]);
    }

    #[test]
    fn identity_pullback_is_identity() {
        let g = FiniteGroupoid::symmetric(3);
        let rho = rho_line(&g);
        let c = BarCochain::new(
            &g,
            &rho,
            1,
            (0..6).map(|k| vec![rat_int(k * k - 3)]).collect(),
        )
        .unwrap();
        let phi = GroupoidMorphism::identity(&g);
        let transport = vec![SparseRationalMatrix::identity(1)];
        let back = morphism_pullback(&g, &g, &phi, &rho, &rho, &transport, &c).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn collapse_pullback_restricts_sections() {
        let h = FiniteGroupoid::pair(2);
        let g = FiniteGroupoid::units_only(vec!["pt".into()]);
        let phi = GroupoidMorphism {
            object_map: vec![0, 0],
            arrow_map: vec![0; 4],
        };
        let rho_h = Representation::trivial(&h, 1);
        let rho_g = Representation::trivial(&g, 1);
        let c = BarCochain::new(&g, &rho_g, 0, vec![vec![rat_int(7)]]).unwrap();
        let transport = vec![SparseRationalMatrix::identity(1); 2];
        let back = morphism_pullback(&h, &g, &phi, &rho_h, &rho_g, &transport, &c).unwrap();
        assert_eq!(back.values, vec![vec![rat_int(7)], vec![rat_int(7)]]);
    }
}
