use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::basis::LabeledBasis;
use crate::rational::{format_rational, Rational};

/// One term of a rendered cocycle: a rational coefficient (as a string, to
/// keep JSON exact) paired with a human-readable basis label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepTerm {
    pub coeff: String,
    pub label: String,
}

/// Cohomology in a single degree: the dimension and one rendered
/// representative cocycle per basis class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DegreeCohomology {
    pub dim: usize,
    pub representatives: Vec<Vec<RepTerm>>,
}

/// Cohomology table keyed by degree, the common result shape of the
/// complex-building modules. Serializes as `{degree: {dim, representatives}}`
/// with degrees in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CohomologyTable {
    #[serde(flatten)]
    pub degrees: BTreeMap<usize, DegreeCohomology>,
}

impl CohomologyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, degree: usize, entry: DegreeCohomology) {
        self.degrees.insert(degree, entry);
    }

    /// Dimensions as a dense vector over degrees `0..=max`, missing degrees
    /// reported as zero.
    pub fn dims(&self) -> Vec<usize> {
        let max = match self.degrees.keys().next_back() {
            Some(&m) => m,
            None => return Vec::new(),
        };
        (0..=max)
            .map(|d| self.degrees.get(&d).map_or(0, |e| e.dim))
            .collect()
    }

    pub fn dim_at(&self, degree: usize) -> usize {
        self.degrees.get(&degree).map_or(0, |e| e.dim)
    }

    /// CSV rendering: one line per degree, representatives joined by `;`,
    /// terms inside a representative joined by ` + ` as `coeff*label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,dim,representatives\n");
        for (degree, entry) in &self.degrees {
            let reps = entry
                .representatives
                .iter()
                .map(|rep| {
                    rep.iter()
                        .map(|t| format!("{}*{}", t.coeff, t.label))
                        .collect::<Vec<_>>()
                        .join(" + ")
                })
                .collect::<Vec<_>>()
                .join("; ");
            out.push_str(&format!("{degree},{},\"{reps}\"\n", entry.dim));
        }
        out
    }
}

/// Renders a coordinate vector against a labeled basis, skipping zeros.
pub fn render_vector<L: Ord + Clone + std::fmt::Display + std::fmt::Debug>(
    v: &[Rational],
    basis: &LabeledBasis<L>,
) -> Vec<RepTerm> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| RepTerm {
            coeff: format_rational(c),
            label: basis.label(i).to_string(),
        })
        .collect()
}
