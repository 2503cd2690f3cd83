use std::collections::BTreeMap;

use crate::LinalgError;

/// An ordered basis whose elements are identified by labels rather than bare
/// positions. Matrices built against two of these stay meaningful even when
/// the modules producing source and target enumerate their bases separately.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledBasis<L: Ord + Clone> {
    labels: Vec<L>,
    index: BTreeMap<L, usize>,
}

impl<L: Ord + Clone + std::fmt::Debug> LabeledBasis<L> {
    /// Builds a basis from labels in the given order; duplicates are
    /// rejected.
    pub fn new(labels: Vec<L>) -> Result<Self, LinalgError> {
        let mut index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(LinalgError::DuplicateLabel(format!("{l:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// Builds a basis sorted by the label ordering itself.
    pub fn sorted(mut labels: Vec<L>) -> Result<Self, LinalgError> {
        labels.sort();
        Self::new(labels)
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &L {
        &self.labels[i]
    }

    pub fn position(&self, label: &L) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &L)> {
        self.labels.iter().enumerate()
    }
}
