use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, LinalgError,
    Rational, SparseRationalMatrix,
};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::gens::{
    bracket_generators, coefficient_of, combination_field, euler_element, field_to_generators,
    generators_of_weight, GFGenerator,
};

/// Dual basis wedge `ξ_{g₁}∧…∧ξ_{g_p}` with strictly increasing factors.
/// Its weight is minus the sum of the generator weights, which makes it the
/// eigenvalue of the Euler field acting by Lie derivative.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WedgeLabel(pub Vec<GFGenerator>);

impl WedgeLabel {
    pub fn new(gens: Vec<GFGenerator>) -> Self {
        for pair in gens.windows(2) {
            assert!(pair[0] < pair[1], "wedge factors must strictly increase");
        }
        Self(gens)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> i64 {
        -self.0.iter().map(GFGenerator::weight).sum::<i64>()
    }
}

impl fmt::Display for WedgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts = self
            .0
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join("∧");
        write!(f, "{parts}")
    }
}

impl fmt::Debug for WedgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Sorts wedge factors into increasing order, tracking the permutation sign;
/// `None` when a factor repeats.
pub(crate) fn sorted_wedge(mut gens: Vec<GFGenerator>) -> Option<(WedgeLabel, i64)> {
    let mut sign = 1i64;
    for i in 1..gens.len() {
        let mut j = i;
        while j > 0 && gens[j - 1] > gens[j] {
            gens.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if gens.windows(2).any(|p| p[0] == p[1]) {
        return None;
    }
    Some((WedgeLabel(gens), sign))
}

/// Basis of the degree-`p`, weight-`w` slice: all strictly increasing wedges
/// whose generator weights sum to `−w`, in label order.
pub fn slice_basis(q: usize, p: usize, w: i64) -> LabeledBasis<WedgeLabel> {
    assert!(q >= 1, "at least one variable");
    if p == 0 {
        let labels = if w == 0 {
            vec![WedgeLabel(Vec::new())]
        } else {
            Vec::new()
        };
        return LabeledBasis::new(labels).expect("labels are distinct");
    }
    let target = -w;
    let wmax = target + (p as i64 - 1);
    if wmax < -1 {
        return LabeledBasis::new(Vec::new()).expect("empty basis");
    }
    let mut pool = Vec::new();
    for wt in -1..=wmax {
        pool.extend(generators_of_weight(q, wt));
    }

    fn dfs(
        pool: &[GFGenerator],
        start: usize,
        remaining: usize,
        sum_left: i64,
        cur: &mut Vec<GFGenerator>,
        out: &mut Vec<WedgeLabel>,
    ) {
        if remaining == 0 {
            if sum_left == 0 {
                out.push(WedgeLabel(cur.clone()));
            }
            return;
        }
        for idx in start..pool.len() {
            let wt = pool[idx].weight();
            if wt * remaining as i64 > sum_left {
                break;
            }
            cur.push(pool[idx].clone());
            dfs(pool, idx + 1, remaining - 1, sum_left - wt, cur, out);
            cur.pop();
        }
    }

    let mut out = Vec::new();
    dfs(&pool, 0, p, target, &mut Vec::new(), &mut out);
    LabeledBasis::new(out).expect("DFS yields distinct wedges")
}

/// For each generator weight in `weights`, tabulates the coefficients of the
/// dual differential: `dξ_g = −Σ_{a<b} ⟨ξ_g, [e_a, e_b]⟩ ξ_a∧ξ_b`, stored as
/// `g ↦ [((a, b), coefficient)]`.
fn dual_differential_table(
    q: usize,
    weights: &BTreeSet<i64>,
) -> BTreeMap<GFGenerator, Vec<((GFGenerator, GFGenerator), Rational)>> {
    let mut table: BTreeMap<GFGenerator, Vec<((GFGenerator, GFGenerator), Rational)>> =
        BTreeMap::new();
    let Some(&max_w) = weights.iter().next_back() else {
        return table;
    };
    let mut pool = Vec::new();
    for wt in -1..=(max_w + 1) {
        pool.extend(generators_of_weight(q, wt));
    }
    for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            let wsum = pool[i].weight() + pool[j].weight();
            if !weights.contains(&wsum) {
                continue;
            }
            for (g, c) in bracket_generators(&pool[i], &pool[j]) {
                table
                    .entry(g)
                    .or_default()
                    .push(((pool[i].clone(), pool[j].clone()), -c));
            }
        }
    }
    table
}

/// Matrix of the Chevalley–Eilenberg differential between two weight slices,
/// columns over `from`, rows over `to`. The differential is the odd
/// derivation extending `dξ_g` on dual generators.
pub(crate) fn differential_matrix(
    q: usize,
    from: &LabeledBasis<WedgeLabel>,
    to: &LabeledBasis<WedgeLabel>,
) -> SparseRationalMatrix {
    let weights: BTreeSet<i64> = from
        .labels()
        .iter()
        .flat_map(|wl| wl.0.iter().map(GFGenerator::weight))
        .collect();
    let table = dual_differential_table(q, &weights);
    let empty = Vec::new();
    let mut triplets = Vec::new();
    for (col, wedge) in from.iter() {
        for (k, g) in wedge.0.iter().enumerate() {
            let slot_sign = if k % 2 == 0 { 1i64 } else { -1 };
            for ((a, b), c) in table.get(g).unwrap_or(&empty) {
                let mut gens = Vec::with_capacity(wedge.0.len() + 1);
                gens.extend_from_slice(&wedge.0[..k]);
                gens.push(a.clone());
                gens.push(b.clone());
                gens.extend_from_slice(&wedge.0[k + 1..]);
                let Some((label, sign)) = sorted_wedge(gens) else {
                    continue;
                };
                let row = to
                    .position(&label)
                    .expect("differential must land in the same weight slice");
                let coeff = c * Rational::from_integer((slot_sign * sign).into());
                triplets.push((row, col, coeff));
            }
        }
    }
    SparseRationalMatrix::from_triplets(to.dimension(), from.dimension(), triplets)
        .expect("positions are in range")
}

/// Matrix of the interior product with a homogeneous field combination,
/// mapping the `from` slice (degree p) into `to` (degree p − 1).
pub(crate) fn interior_matrix(
    from: &LabeledBasis<WedgeLabel>,
    to: &LabeledBasis<WedgeLabel>,
    v: &[(GFGenerator, Rational)],
) -> SparseRationalMatrix {
    let mut triplets = Vec::new();
    for (col, wedge) in from.iter() {
        for (k, g) in wedge.0.iter().enumerate() {
            let pairing = coefficient_of(v, g);
            if pairing.is_zero() {
                continue;
            }
            let mut gens = wedge.0.clone();
            gens.remove(k);
            let label = WedgeLabel(gens);
            let row = to
                .position(&label)
                .expect("interior product must land in the matching slice");
            let slot_sign = if k % 2 == 0 { 1i64 } else { -1 };
            triplets.push((row, col, pairing * Rational::from_integer(slot_sign.into())));
        }
    }
    SparseRationalMatrix::from_triplets(to.dimension(), from.dimension(), triplets)
        .expect("positions are in range")
}

/// Matrix of the Lie derivative along a weight-homogeneous field combination
/// acting on a slice. On dual generators `L_v ξ_g = −Σ_h ⟨ξ_g, [v, e_h]⟩ ξ_h`,
/// extended as a degree-zero derivation.
pub(crate) fn lie_matrix(
    q: usize,
    from: &LabeledBasis<WedgeLabel>,
    to: &LabeledBasis<WedgeLabel>,
    v: &[(GFGenerator, Rational)],
) -> SparseRationalMatrix {
    let vw = v.first().map(|(g, _)| g.weight()).unwrap_or(0);
    debug_assert!(v.iter().all(|(g, _)| g.weight() == vw));
    let field = combination_field(q, v);

    let mut replacements: BTreeMap<GFGenerator, Vec<(GFGenerator, Rational)>> = BTreeMap::new();
    for wedge in from.labels() {
        for g in &wedge.0 {
            if replacements.contains_key(g) {
                continue;
            }
            let mut terms = Vec::new();
            for h in generators_of_weight(q, g.weight() - vw) {
                let bracket = field_to_generators(
                    &field.bracket(&h.field()).expect("uniform variable count"),
                );
                let c = coefficient_of(&bracket, g);
                if !c.is_zero() {
                    terms.push((h, -c));
                }
            }
            replacements.insert(g.clone(), terms);
        }
    }

    let mut triplets = Vec::new();
    for (col, wedge) in from.iter() {
        for (k, g) in wedge.0.iter().enumerate() {
            for (h, c) in &replacements[g] {
                let mut gens = wedge.0.clone();
                gens[k] = h.clone();
                let Some((label, sign)) = sorted_wedge(gens) else {
                    continue;
                };
                let row = to
                    .position(&label)
                    .expect("Lie derivative must land in the matching slice");
                triplets.push((row, col, c * Rational::from_integer(sign.into())));
            }
        }
    }
    SparseRationalMatrix::from_triplets(to.dimension(), from.dimension(), triplets)
        .expect("positions are in range")
}

/// The degree-`p`, weight-`w` slice of the complex: its basis together with
/// the differential into degree `p + 1` at the same weight.
pub fn gf_complex_slice(
    q: usize,
    p: usize,
    w: i64,
) -> (LabeledBasis<WedgeLabel>, SparseRationalMatrix) {
    let basis = slice_basis(q, p, w);
    let next = slice_basis(q, p + 1, w);
    let d = differential_matrix(q, &basis, &next);
    (basis, d)
}

/// Cohomology of the weight-`w` slice in degrees `0..=p_max`, with
/// representative cocycles rendered over the wedge basis.
pub fn gf_cohomology(q: usize, w: i64, p_max: usize) -> Result<CohomologyTable, LinalgError> {
    let bases: Vec<LabeledBasis<WedgeLabel>> =
        (0..=p_max + 1).map(|p| slice_basis(q, p, w)).collect();
    let mut table = CohomologyTable::new();
    for p in 0..=p_max {
        let d_in = if p == 0 {
            SparseRationalMatrix::zero(bases[0].dimension(), 0)
        } else {
            differential_matrix(q, &bases[p - 1], &bases[p])
        };
        let d_out = differential_matrix(q, &bases[p], &bases[p + 1]);
        let coh = cohomology_at(&d_in, &d_out)?;
        let representatives = coh
            .representatives
            .iter()
            .map(|v| render_vector(v, &bases[p]))
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

/// Outcome of checking the Euler field contraction identities on one slice.
#[derive(Clone, Debug, Serialize)]
pub struct EulerHomotopyReport {
    pub q: usize,
    pub degree: usize,
    pub weight: i64,
    pub dimension: usize,
    /// `L_E` acts on the slice as multiplication by its weight.
    pub lie_matches_weight: bool,
    /// `d∘ι_E + ι_E∘d = L_E` on the slice.
    pub homotopy_matches_lie: bool,
}

impl EulerHomotopyReport {
    pub fn holds(&self) -> bool {
        self.lie_matches_weight && self.homotopy_matches_lie
    }
}

/// Verifies `L_E = w·id` and `d∘ι_E + ι_E∘d = L_E` on the `(p, w)` slice for
/// the Euler field `E = Σᵢ xᵢ∂ᵢ`. Together these force the weight-`w`
/// cohomology to vanish, which is why only weight 0 carries content.
pub fn euler_homotopy_check(q: usize, p: usize, w: i64) -> EulerHomotopyReport {
    assert!(w != 0, "the contraction argument applies off weight zero");
    let prev = if p == 0 {
        LabeledBasis::new(Vec::new()).expect("empty basis")
    } else {
        slice_basis(q, p - 1, w)
    };
    let here = slice_basis(q, p, w);
    let next = slice_basis(q, p + 1, w);
    let euler = euler_element(q);

    let d_prev = differential_matrix(q, &prev, &here);
    let d_here = differential_matrix(q, &here, &next);
    let iota_here = interior_matrix(&here, &prev, &euler);
    let iota_next = interior_matrix(&next, &here, &euler);
    let lie = lie_matrix(q, &here, &here, &euler);

    let scaled_identity =
        SparseRationalMatrix::identity(here.dimension()).scale(&Rational::from_integer(w.into()));
    let homotopy = d_prev
        .matmul(&iota_here)
        .and_then(|a| iota_next.matmul(&d_here).and_then(|b| a.add(&b)))
        .expect("slice dimensions agree");

    EulerHomotopyReport {
        q,
        degree: p,
        weight: w,
        dimension: here.dimension(),
        lie_matches_weight: lie == scaled_identity,
        homotopy_matches_lie: homotopy == lie,
    }
}

/// A cochain presented over explicit wedge labels, all of one degree and one
/// weight. Mainly a vehicle for evaluating cochains on tuples of fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFCochain {
    q: usize,
    degree: usize,
    weight: i64,
    terms: BTreeMap<WedgeLabel, Rational>,
}

impl GFCochain {
    pub fn new(q: usize, degree: usize, weight: i64, terms: Vec<(WedgeLabel, Rational)>) -> Self {
        let mut map: BTreeMap<WedgeLabel, Rational> = BTreeMap::new();
        for (label, coeff) in terms {
            assert_eq!(label.degree(), degree, "mixed degrees in one cochain");
            assert_eq!(label.weight(), weight, "label outside the declared weight");
            assert!(label.0.iter().all(|g| g.q() == q), "mixed variable counts");
            if coeff.is_zero() {
                continue;
            }
            *map.entry(label).or_insert_with(Rational::zero) += coeff;
        }
        map.retain(|_, c| !c.is_zero());
        Self {
            q,
            degree,
            weight,
            terms: map,
        }
    }

    pub fn from_vector(
        q: usize,
        weight: i64,
        basis: &LabeledBasis<WedgeLabel>,
        coords: &[Rational],
    ) -> Self {
        assert_eq!(coords.len(), basis.dimension());
        let degree = basis.labels().first().map(|l| l.degree()).unwrap_or(0);
        let terms = basis
            .iter()
            .map(|(i, l)| (l.clone(), coords[i].clone()))
            .collect();
        Self::new(q, degree, weight, terms)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WedgeLabel, &Rational)> {
        self.terms.iter()
    }

    /// Evaluates on a tuple of fields given as generator combinations; the
    /// value of a basis wedge is the determinant of the pairing matrix.
    pub fn evaluate(&self, args: &[Vec<(GFGenerator, Rational)>]) -> Rational {
        assert_eq!(args.len(), self.degree, "argument count must match degree");
        let mut total = Rational::zero();
        for (label, coeff) in &self.terms {
            let n = label.0.len();
            let mut m = vec![vec![Rational::zero(); n]; n];
            for (a, g) in label.0.iter().enumerate() {
                for (b, arg) in args.iter().enumerate() {
                    m[a][b] = coefficient_of(arg, g);
                }
            }
            total += coeff * dense_det(&m);
        }
        total
    }

    /// The Chevalley–Eilenberg differential, via the odd-derivation expansion
    /// on dual generators.
    pub fn differential(&self) -> GFCochain {
        let weights: BTreeSet<i64> = self
            .terms
            .keys()
            .flat_map(|wl| wl.0.iter().map(GFGenerator::weight))
            .collect();
        let table = dual_differential_table(self.q, &weights);
        let empty = Vec::new();
        let mut out = Vec::new();
        for (wedge, coeff) in &self.terms {
            for (k, g) in wedge.0.iter().enumerate() {
                let slot_sign = if k % 2 == 0 { 1i64 } else { -1 };
                for ((a, b), c) in table.get(g).unwrap_or(&empty) {
                    let mut gens = Vec::with_capacity(wedge.0.len() + 1);
                    gens.extend_from_slice(&wedge.0[..k]);
                    gens.push(a.clone());
                    gens.push(b.clone());
                    gens.extend_from_slice(&wedge.0[k + 1..]);
                    let Some((label, sign)) = sorted_wedge(gens) else {
                        continue;
                    };
                    out.push((
                        label,
                        coeff * c * Rational::from_integer((slot_sign * sign).into()),
                    ));
                }
            }
        }
        GFCochain::new(self.q, self.degree + 1, self.weight, out)
    }
}

fn dense_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 0 {
        return Rational::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = Rational::zero();
    for (k, head) in m[0].iter().enumerate() {
        if head.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Rational>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sign = if k % 2 == 0 { 1i64 } else { -1 };
        total += head * dense_det(&minor) * Rational::from_integer(sign.into());
    }
    total
}
