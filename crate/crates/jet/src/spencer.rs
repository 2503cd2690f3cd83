//! Sections of the bundle of jets of vector-valued functions and their
//! covariant derivative in a base direction: the operator whose kernel
//! picks out the sections that are genuinely jets of a single function.

use std::collections::BTreeMap;

use formal::{Exponent, PolyPolyVectorField, TruncPoly};
use linalg::Rational;

use crate::jet::multi_indices;
use crate::JetError;

/// A formal section of order-`order` jets with values in `q`-dimensional
/// space: one polynomial coefficient function per component `j` and
/// multi-index `|α| ≤ order`, all over the same base variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpencerSection {
    q: usize,
    order: u32,
    comps: Vec<BTreeMap<Exponent, TruncPoly>>,
}

impl SpencerSection {
    pub fn new(
        q: usize,
        order: u32,
        comps: Vec<BTreeMap<Exponent, TruncPoly>>,
    ) -> Result<Self, JetError> {
        if comps.len() != q {
            return Err(JetError::Invalid(format!(
                "{} component blocks for values in dimension {}",
                comps.len(),
                q
            )));
        }
        let expected: Vec<Exponent> = multi_indices(q, 0, order);
        for block in &comps {
            for alpha in &expected {
                let entry = block.get(alpha).ok_or_else(|| {
                    JetError::Invalid(format!("missing coefficient at {:?}", alpha.0))
                })?;
                if entry.nvars() != q {
                    return Err(JetError::Invalid(format!(
                        "coefficient over {} variables on a base of dimension {}",
                        entry.nvars(),
                        q
                    )));
                }
            }
            if block.len() != expected.len() {
                return Err(JetError::Invalid(
                    "stray coefficients beyond the stated order".into(),
                ));
            }
        }
        Ok(Self { q, order, comps })
    }

    /// The section of jets of an actual function: coefficient `α` is the
    /// `α`-th partial derivative of the component.
    pub fn holonomic(components: &[TruncPoly], order: u32) -> Result<Self, JetError> {
        let q = components.len();
        let mut comps = Vec::with_capacity(q);
        for f in components {
            if f.nvars() != q {
                return Err(JetError::Invalid(format!(
                    "component over {} variables on a base of dimension {}",
                    f.nvars(),
                    q
                )));
            }
            let mut block = BTreeMap::new();
            for alpha in multi_indices(q, 0, order) {
                let mut d = f.clone();
                for (i, &m) in alpha.0.iter().enumerate() {
                    for _ in 0..m {
                        d = d.partial(i);
                    }
                }
                block.insert(alpha, d);
            }
            comps.push(block);
        }
        Ok(Self { q, order, comps })
    }

    pub fn dimension(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coefficient(&self, j: usize, alpha: &Exponent) -> &TruncPoly {
        &self.comps[j][alpha]
    }

    /// Forgets the coefficients above `order`.
    pub fn truncate(&self, order: u32) -> Result<Self, JetError> {
        if order > self.order {
            return Err(JetError::OrderExhausted {
                needed: order,
                available: self.order,
            });
        }
        let comps = self
            .comps
            .iter()
            .map(|block| {
                block
                    .iter()
                    .filter(|(e, _)| e.total() <= order)
                    .map(|(e, p)| (e.clone(), p.clone()))
                    .collect()
            })
            .collect();
        Ok(Self {
            q: self.q,
            order,
            comps,
        })
    }

    pub fn scale_fn(&self, f: &TruncPoly) -> Result<Self, JetError> {
        let comps = self
            .comps
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|(e, p)| Ok((e.clone(), p.mul(f)?)))
                    .collect::<Result<_, JetError>>()
            })
            .collect::<Result<_, JetError>>()?;
        Ok(Self {
            q: self.q,
            order: self.order,
            comps,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, JetError> {
        if self.q != other.q || self.order != other.order {
            return Err(JetError::Invalid(
                "sections of different shapes cannot be added".into(),
            ));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                a.iter()
                    .map(|(e, p)| Ok((e.clone(), p.add(&b[e])?)))
                    .collect::<Result<_, JetError>>()
            })
            .collect::<Result<_, JetError>>()?;
        Ok(Self {
            q: self.q,
            order: self.order,
            comps,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, JetError> {
        if self.q != other.q || self.order != other.order {
            return Err(JetError::Invalid(
                "sections of different shapes cannot be subtracted".into(),
            ));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                a.iter()
                    .map(|(e, p)| Ok((e.clone(), p.sub(&b[e])?)))
                    .collect::<Result<_, JetError>>()
            })
            .collect::<Result<_, JetError>>()?;
        Ok(Self {
            q: self.q,
            order: self.order,
            comps,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.comps
            .iter()
            .all(|block| block.values().all(TruncPoly::is_zero))
    }
}

/// Covariant derivative of a section along a base vector field: derivative
/// of each coefficient minus the coefficient one order up contracted with
/// the direction. The result lives one order lower, and vanishes exactly on
/// jets of actual functions.
pub fn spencer_apply(sigma: &SpencerSection, x: &PolyVectorField) -> Result<SpencerSection, JetError> {
    if sigma.order == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        });
    }
    let q = sigma.q;
    if x.nvars() != q {
        return Err(JetError::Invalid(format!(
            "field over {} variables on a base of dimension {}",
            x.nvars(),
            q
        )));
    }
    let comps = sigma
        .comps
        .iter()
        .map(|block| {
            multi_indices(q, 0, sigma.order - 1)
                .into_iter()
                .map(|alpha| {
                    let mut value = x.apply(&block[&alpha])?;
                    for i in 0..q {
                        value = value.sub(&block[&alpha.raised(i)].mul(x.component(i))?)?;
                    }
                    Ok((alpha, value))
                })
                .collect::<Result<_, JetError>>()
        })
        .collect::<Result<_, JetError>>()?;
    SpencerSection::new(q, sigma.order - 1, comps)
}

/// Whether the covariant derivative is flat on the given section along the
/// given pair of fields: the commutator of the two derivatives agrees with
/// the derivative along the field bracket, two orders down.
pub fn spencer_flatness_check(
    sigma: &SpencerSection,
    x: &PolyVectorField,
    y: &PolyVectorField,
) -> Result<bool, JetError> {
    if sigma.order < 2 {
        return Err(JetError::OrderExhausted {
            needed: 2,
            available: sigma.order,
        });
    }
    let xy = spencer_apply(&spencer_apply(sigma, y)?, x)?;
    let yx = spencer_apply(&spencer_apply(sigma, x)?, y)?;
    let along_bracket = spencer_apply(&sigma.truncate(sigma.order - 1)?, &x.bracket(y)?)?;
    Ok(xy.sub(&yx)?.sub(&along_bracket)?.is_zero())
}
