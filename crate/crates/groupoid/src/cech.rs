use std::collections::BTreeMap;
use std::fmt;

use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, Rational,
    SparseRationalMatrix,
};

use crate::GroupoidError;

/// Combinatorial record of an open cover: for each finite subset of cover
/// indices whose intersection is nonempty, the set of connected components
/// of that intersection, together with the maps sending a component into
/// the components of every smaller intersection. Nothing topological is
/// stored; the maps are all the cohomology needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverNerve {
    n: usize,
    /// Sorted index set → number of components of the intersection. Empty
    /// intersections are omitted.
    components: BTreeMap<Vec<usize>, usize>,
    /// `(sorted set S, x ∈ S)` → map from components of `∩S` to components
    /// of `∩(S∖{x})`.
    restrictions: BTreeMap<(Vec<usize>, usize), Vec<usize>>,
}

impl CoverNerve {
    pub fn new(
        n: usize,
        components: BTreeMap<Vec<usize>, usize>,
        restrictions: BTreeMap<(Vec<usize>, usize), Vec<usize>>,
    ) -> Result<Self, GroupoidError> {
        let fail = |msg: String| Err(GroupoidError::InconsistentNerve(msg));

        for (set, &count) in &components {
            if set.is_empty() || set.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("index set {set:?} is not sorted and nonempty"));
            }
            if set.iter().any(|&i| i >= n) {
                return fail(format!("index set {set:?} exceeds the cover size {n}"));
            }
            if count == 0 {
                return fail(format!(
                    "index set {set:?} has no components; omit empty intersections"
                ));
            }
        }

        for (set, &count) in &components {
            if set.len() < 2 {
                continue;
            }
            for &x in set {
                let smaller: Vec<usize> = set.iter().copied().filter(|&i| i != x).collect();
                let Some(&smaller_count) = components.get(&smaller) else {
                    return fail(format!(
                        "{set:?} meets but its subset {smaller:?} is missing"
                    ));
                };
                let Some(map) = restrictions.get(&(set.clone(), x)) else {
                    return fail(format!("missing restriction from {set:?} dropping {x}"));
                };
                if map.len() != count || map.iter().any(|&c| c >= smaller_count) {
                    return fail(format!(
                        "restriction from {set:?} dropping {x} has the wrong shape"
                    ));
                }
            }
        }

        for (set, x) in restrictions.keys() {
            if !components.contains_key(set) || !set.contains(x) {
                return fail(format!(
                    "restriction key ({set:?}, {x}) refers to nothing"
                ));
            }
        }

        // Two ways from ∩S down to ∩(S∖{x,y}) must agree on every component.
        for (set, &count) in &components {
            if set.len() < 3 {
                continue;
            }
            for &x in set {
                for &y in set {
                    if y <= x {
                        continue;
                    }
                    let minus_x: Vec<usize> =
                        set.iter().copied().filter(|&i| i != x).collect();
                    let minus_y: Vec<usize> =
                        set.iter().copied().filter(|&i| i != y).collect();
                    let via_x = &restrictions[&(set.clone(), x)];
                    let via_y = &restrictions[&(set.clone(), y)];
                    let then_y = &restrictions[&(minus_x.clone(), y)];
                    let then_x = &restrictions[&(minus_y.clone(), x)];
                    for c in 0..count {
                        if then_y[via_x[c]] != then_x[via_y[c]] {
                            return fail(format!(
                                "restrictions from {set:?} disagree on component {c}"
                            ));
                        }
                    }
                }
            }
        }

        Ok(Self {
            n,
            components,
            restrictions,
        })
    }

    pub fn cover_size(&self) -> usize {
        self.n
    }

    /// Components of the intersection over a sorted index set (zero when the
    /// intersection is empty).
    pub fn component_count(&self, set: &[usize]) -> usize {
        self.components.get(set).copied().unwrap_or(0)
    }

    pub fn restrict(&self, set: &[usize], dropped: usize, comp: usize) -> usize {
        self.restrictions[&(set.to_vec(), dropped)][comp]
    }
}

/// A basis element of the level-`p` cochains: an ordered `(p+1)`-tuple of
/// cover indices together with a component of the intersection over the
/// tuple's index set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CechLabel {
    pub tuple: Vec<usize>,
    pub comp: usize,
}

impl fmt::Display for CechLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opens = self
            .tuple
            .iter()
            .map(|i| format!("U{i}"))
            .collect::<Vec<_>>()
            .join("∩");
        write!(f, "{opens}#{}", self.comp)
    }
}

fn index_set(tuple: &[usize]) -> Vec<usize> {
    let mut set = tuple.to_vec();
    set.sort_unstable();
    set.dedup();
    set
}

/// All level-`p` basis labels: ordered tuples in lexicographic order, each
/// fanned out over the components of its intersection.
pub fn cech_basis(cover: &CoverNerve, level: usize) -> Vec<CechLabel> {
    let mut out = Vec::new();
    let mut tuple = vec![0usize; level + 1];
    loop {
        let count = cover.component_count(&index_set(&tuple));
        for comp in 0..count {
            out.push(CechLabel {
                tuple: tuple.clone(),
                comp,
            });
        }
        let mut k = level + 1;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < cover.cover_size() {
                break;
            }
            tuple[k] = 0;
        }
    }
}

/// The alternating face sum `δω(i₀,…,i_{p+1}) = Σₖ (−1)ᵏ ω(…,îₖ,…)`, with
/// each face transported through the component restriction (or the identity,
/// when the dropped index still occurs in the tuple).
pub(crate) fn cech_delta(
    cover: &CoverNerve,
    from: &[CechLabel],
    to: &[CechLabel],
) -> SparseRationalMatrix {
    let from_index: BTreeMap<&CechLabel, usize> =
        from.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut m = SparseRationalMatrix::zero(to.len(), from.len());
    for (row, label) in to.iter().enumerate() {
        let set = index_set(&label.tuple);
        for k in 0..label.tuple.len() {
            let mut face = label.tuple.clone();
            let dropped = face.remove(k);
            let comp = if face.contains(&dropped) {
                label.comp
            } else {
                cover.restrict(&set, dropped, label.comp)
            };
            let face_label = CechLabel { tuple: face, comp };
            let col = from_index[&face_label];
            let sign = if k % 2 == 0 { 1 } else { -1 };
            m.add_to(row, col, Rational::from_integer(sign.into()))
                .expect("face in range");
        }
    }
    m
}

/// Cohomology of the cover with locally constant rational coefficients.
pub fn mv_cech(cover: &CoverNerve, p_max: usize) -> Result<CohomologyTable, GroupoidError> {
    let bases: Vec<Vec<CechLabel>> = (0..=p_max + 1).map(|p| cech_basis(cover, p)).collect();
    let deltas: Vec<SparseRationalMatrix> = (0..=p_max)
        .map(|p| cech_delta(cover, &bases[p], &bases[p + 1]))
        .collect();
    let mut table = CohomologyTable::new();
    for p in 0..=p_max {
        let d_in = if p == 0 {
            SparseRationalMatrix::zero(bases[0].len(), 0)
        } else {
            deltas[p - 1].clone()
        };
        let cohom = cohomology_at(&d_in, &deltas[p])?;
        let labels = LabeledBasis::new(bases[p].clone())?;
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
