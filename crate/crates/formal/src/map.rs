use std::fmt;

use linalg::{format_rational, parse_rational, Rational};
use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::poly::{Exponent, TruncPoly};
use crate::FormalError;

/// A polynomial map germ of finite order: it sends a marked source point to a
/// marked target point, and stores the Taylor expansion of orders `1..=order`
/// around the source point. Each component polynomial lives in the deviation
/// variables `u = x − source point` (monomial coefficients, so the
/// coefficient of `u^α` is `∂^α f / α!`).
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMap {
    source_point: Vec<Rational>,
    target_point: Vec<Rational>,
    order: u32,
    components: Vec<TruncPoly>,
}

impl PolyMap {
    /// Builds a map from deviation components. Components must be polynomials
    /// in `source_point.len()` variables with zero constant term; terms above
    /// `order` are dropped.
    pub fn new(
        source_point: Vec<Rational>,
        target_point: Vec<Rational>,
        components: Vec<TruncPoly>,
        order: u32,
    ) -> Result<Self, FormalError> {
        assert!(order >= 1, "a map germ needs at least its linear part");
        if components.len() != target_point.len() {
            return Err(FormalError::VarMismatch(format!(
                "{} components for a target of dimension {}",
                components.len(),
                target_point.len()
            )));
        }
        let n = source_point.len();
        let mut trimmed = Vec::with_capacity(components.len());
        for c in components {
            if c.nvars() != n {
                return Err(FormalError::VarMismatch(format!(
                    "component over {} variables for a source of dimension {}",
                    c.nvars(),
                    n
                )));
            }
            if !c.constant_term().is_zero() {
                return Err(FormalError::BasePointMismatch(
                    "deviation component with a constant term".into(),
                ));
            }
            trimmed.push(c.truncate(order));
        }
        Ok(Self {
            source_point,
            target_point,
            order,
            components: trimmed,
        })
    }

    /// The identity germ at a point.
    pub fn identity(point: Vec<Rational>, order: u32) -> Self {
        let n = point.len();
        let components = (0..n)
            .map(|i| TruncPoly::var(n, i).truncate(order))
            .collect();
        Self {
            source_point: point.clone(),
            target_point: point,
            order,
            components,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source_point.len()
    }

    pub fn target_dim(&self) -> usize {
        self.target_point.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn source_point(&self) -> &[Rational] {
        &self.source_point
    }

    pub fn target_point(&self) -> &[Rational] {
        &self.target_point
    }

    pub fn component(&self, a: usize) -> &TruncPoly {
        &self.components[a]
    }

    pub fn components(&self) -> &[TruncPoly] {
        &self.components
    }

    /// Monomial Taylor coefficient of `u^α` in component `a`.
    pub fn taylor_coefficient(&self, a: usize, exp: &Exponent) -> Rational {
        self.components[a].coeff(exp)
    }

    /// Derivative-normalized coefficient `∂^α f_a` = monomial coefficient
    /// times `α!`.
    pub fn derivative(&self, a: usize, exp: &Exponent) -> Rational {
        let mut factorial = Rational::from_integer(1.into());
        for &e in &exp.0 {
            for k in 2..=e {
                factorial *= Rational::from_integer(k.into());
            }
        }
        self.taylor_coefficient(a, exp) * factorial
    }

    /// The matrix of the linear part, `m × n` over (target, source) slots.
    pub fn linear_part(&self) -> Vec<Vec<Rational>> {
        let n = self.source_dim();
        self.components
            .iter()
            .map(|c| {
                (0..n)
                    .map(|i| c.coeff(&Exponent::unit(n, i)))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Lowers the order, dropping the fine part of the expansion.
    pub fn truncate(&self, order: u32) -> Result<Self, FormalError> {
        if order > self.order {
            return Err(FormalError::InsufficientOrder {
                has: self.order,
                need: order,
            });
        }
        assert!(order >= 1);
        Ok(Self {
            source_point: self.source_point.clone(),
            target_point: self.target_point.clone(),
            order,
            components: self.components.iter().map(|c| c.truncate(order)).collect(),
        })
    }

    /// Composition `self ∘ other` through order `w`: the target point of
    /// `other` must be the source point of `self`, and both maps must carry
    /// at least `w` orders of data.
    pub fn compose(&self, other: &Self, w: u32) -> Result<Self, FormalError> {
        if other.target_point != self.source_point {
            return Err(FormalError::BasePointMismatch(format!(
                "inner map lands at {:?}, outer map is based at {:?}",
                render_point(&other.target_point),
                render_point(&self.source_point)
            )));
        }
        for m in [self, other] {
            if m.order < w {
                return Err(FormalError::InsufficientOrder {
                    has: m.order,
                    need: w,
                });
            }
        }
        let images: Vec<TruncPoly> = other.components.iter().map(|c| c.truncate(w)).collect();
        let components = self
            .components
            .iter()
            .map(|c| c.truncate(w).substitute(&images))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(
            other.source_point.clone(),
            self.target_point.clone(),
            components,
            w,
        )
    }

    /// Value of the polynomial representative at a source-space point.
    pub fn eval(&self, x: &[Rational]) -> Result<Vec<Rational>, FormalError> {
        if x.len() != self.source_dim() {
            return Err(FormalError::VarMismatch(format!(
                "point of dimension {} fed to a map with source dimension {}",
                x.len(),
                self.source_dim()
            )));
        }
        let u: Vec<Rational> = x
            .iter()
            .zip(&self.source_point)
            .map(|(a, b)| a - b)
            .collect();
        self.components
            .iter()
            .zip(&self.target_point)
            .map(|(c, t)| Ok(t + c.eval(&u)?))
            .collect()
    }
}

fn render_point(p: &[Rational]) -> String {
    let coords: Vec<String> = p.iter().map(format_rational).collect();
    format!("({})", coords.join(", "))
}

impl fmt::Debug for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PolyMap[order {}] {} -> {}: ",
            self.order,
            render_point(&self.source_point),
            render_point(&self.target_point)
        )?;
        for (a, c) in self.components.iter().enumerate() {
            if a > 0 {
                write!(f, "; ")?;
            }
            write!(f, "u{} = {}", a + 1, c)?;
        }
        Ok(())
    }
}

impl Serialize for PolyMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PolyMap", 4)?;
        let sp: Vec<String> = self.source_point.iter().map(format_rational).collect();
        let tp: Vec<String> = self.target_point.iter().map(format_rational).collect();
        st.serialize_field("source_point", &sp)?;
        st.serialize_field("target_point", &tp)?;
        st.serialize_field("order", &self.order)?;
        st.serialize_field("components", &self.components)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PolyMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            source_point: Vec<String>,
            target_point: Vec<String>,
            order: u32,
            components: Vec<TruncPoly>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let parse_pt = |v: &[String]| -> Result<Vec<Rational>, D::Error> {
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        };
        PolyMap::new(
            parse_pt(&raw.source_point)?,
            parse_pt(&raw.target_point)?,
            raw.components,
            raw.order,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linalg::rat_int;

    fn pt(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn squaring_after_shift() {
        // F: y ↦ y² based at 1 ↦ 1, deviation 2v + v².
        let f_dev = TruncPoly::from_terms(
            1,
            None,
            vec![
                (Exponent(vec![1]), rat_int(2)),
                (Exponent(vec![2]), rat_int(1)),
            ],
        );
        let f = PolyMap::new(pt(&[1]), pt(&[1]), vec![f_dev], 2).unwrap();
        // G: x ↦ x + 1 based at 0 ↦ 1, deviation u.
        let g = PolyMap::new(pt(&[0]), pt(&[1]), vec![TruncPoly::var(1, 0)], 2).unwrap();
        let fg = f.compose(&g, 2).unwrap();
        // (x+1)² = 1 + 2x + x²: value 1, then Taylor coefficients 2 and 1,
        // i.e. derivatives 2 and 2.
        assert_eq!(fg.target_point(), pt(&[1]).as_slice());
        assert_eq!(fg.taylor_coefficient(0, &Exponent(vec![1])), rat_int(2));
        assert_eq!(fg.taylor_coefficient(0, &Exponent(vec![2])), rat_int(1));
        assert_eq!(fg.derivative(0, &Exponent(vec![1])), rat_int(2));
        assert_eq!(fg.derivative(0, &Exponent(vec![2])), rat_int(2));
        assert_eq!(fg.eval(&pt(&[2])).unwrap(), pt(&[9]));
    }

    #[test]
    fn identity_is_neutral() {
        let dev = TruncPoly::from_terms(
            1,
            None,
            vec![
                (Exponent(vec![1]), rat_int(3)),
                (Exponent(vec![3]), rat_int(-1)),
            ],
        );
        let f = PolyMap::new(pt(&[2]), pt(&[5]), vec![dev], 3).unwrap();
        let id_source = PolyMap::identity(pt(&[2]), 3);
        let id_target = PolyMap::identity(pt(&[5]), 3);
        assert_eq!(f.compose(&id_source, 3).unwrap(), f);
        assert_eq!(id_target.compose(&f, 3).unwrap(), f);
    }

    #[test]
    fn linear_parts_multiply() {
        let f = PolyMap::new(
            pt(&[0, 0]),
            pt(&[0]),
            vec![TruncPoly::from_terms(
                2,
                None,
                vec![
                    (Exponent(vec![1, 0]), rat_int(2)),
                    (Exponent(vec![0, 1]), rat_int(3)),
                ],
            )],
            1,
        )
        .unwrap();
        let g = PolyMap::new(
            pt(&[0]),
            pt(&[0, 0]),
            vec![
                TruncPoly::from_terms(1, None, vec![(Exponent(vec![1]), rat_int(5))]),
                TruncPoly::from_terms(1, None, vec![(Exponent(vec![1]), rat_int(-1))]),
            ],
            1,
        )
        .unwrap();
        let fg = f.compose(&g, 1).unwrap();
        // (2, 3) · (5, -1)ᵀ = 7
        assert_eq!(fg.linear_part(), vec![vec![rat_int(7)]]);
    }

    #[test]
    fn base_point_mismatch_is_rejected() {
        let f = PolyMap::identity(pt(&[0]), 2);
        let g = PolyMap::new(pt(&[0]), pt(&[1]), vec![TruncPoly::var(1, 0)], 2).unwrap();
        assert!(matches!(
            f.compose(&g, 2),
            Err(FormalError::BasePointMismatch(_))
        ));
    }

    #[test]
    fn insufficient_order_is_rejected() {
        let f = PolyMap::identity(pt(&[0]), 2);
        let g = PolyMap::identity(pt(&[0]), 3);
        assert_eq!(
            f.compose(&g, 3),
            Err(FormalError::InsufficientOrder { has: 2, need: 3 })
        );
    }

    #[test]
    fn serde_round_trip() {
        let dev = TruncPoly::from_terms(
            1,
            None,
            vec![
                (Exponent(vec![1]), linalg::rat(1, 2)),
                (Exponent(vec![2]), rat_int(4)),
            ],
        );
        let f = PolyMap::new(pt(&[3]), pt(&[-1]), vec![dev], 2).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: PolyMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
