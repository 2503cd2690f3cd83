use std::fmt;

use linalg::Rational;
use serde::{Deserialize, Serialize};

use crate::poly::{var_name, Exponent, TruncPoly};
use crate::FormalError;

/// Polynomial vector field `Σᵢ fⁱ ∂/∂xᵢ`, one coefficient polynomial per
/// variable.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyVectorField {
    components: Vec<TruncPoly>,
}

impl PolyVectorField {
    /// A vector field from its coefficient polynomials; every component must
    /// be a polynomial in `components.len()` variables.
    pub fn new(components: Vec<TruncPoly>) -> Result<Self, FormalError> {
        let n = components.len();
        for c in &components {
            if c.nvars() != n {
                return Err(FormalError::VarMismatch(format!(
                    "component over {} variables in a field on {} variables",
                    c.nvars(),
                    n
                )));
            }
        }
        Ok(Self { components })
    }

    pub fn zero(nvars: usize) -> Self {
        Self {
            components: vec![TruncPoly::zero(nvars); nvars],
        }
    }

    /// The coordinate field `∂/∂xᵢ`.
    pub fn coordinate(nvars: usize, i: usize) -> Self {
        let mut f = Self::zero(nvars);
        f.components[i] = TruncPoly::one(nvars);
        f
    }

    /// The monomial field `x^α ∂/∂xᵢ`.
    pub fn monomial(exp: Exponent, i: usize) -> Self {
        let n = exp.len();
        let mut f = Self::zero(n);
        f.components[i] = TruncPoly::monomial(exp, Rational::from_integer(1.into()));
        f
    }

    pub fn nvars(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &TruncPoly {
        &self.components[i]
    }

    pub fn components(&self) -> &[TruncPoly] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(TruncPoly::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormalError> {
        self.check_nvars(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_, _>>()?;
        Ok(Self { components })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormalError> {
        self.add(&other.scale(&-Rational::from_integer(1.into())))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Scales by a polynomial function (module structure over the scalars).
    pub fn scale_fn(&self, f: &TruncPoly) -> Result<Self, FormalError> {
        let components = self
            .components
            .iter()
            .map(|c| c.mul(f))
            .collect::<Result<_, _>>()?;
        Ok(Self { components })
    }

    /// Applies the field to a function: `X(f) = Σⱼ Xʲ ∂ⱼf`.
    pub fn apply(&self, f: &TruncPoly) -> Result<TruncPoly, FormalError> {
        let n = self.nvars();
        if f.nvars() != n {
            return Err(FormalError::VarMismatch(format!(
                "function over {} variables, field over {}",
                f.nvars(),
                n
            )));
        }
        let mut acc = TruncPoly::zero(n);
        for (j, xj) in self.components.iter().enumerate() {
            acc = acc.add(&xj.mul(&f.partial(j))?)?;
        }
        Ok(acc)
    }

    /// Lie bracket `[X,Y]ⁱ = Σⱼ (Xʲ ∂ⱼYⁱ − Yʲ ∂ⱼXⁱ)`, computed exactly.
    pub fn bracket(&self, other: &Self) -> Result<Self, FormalError> {
        self.check_nvars(other)?;
        let components = (0..self.nvars())
            .map(|i| {
                self.apply(&other.components[i])?
                    .sub(&other.apply(&self.components[i])?)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { components })
    }

    fn check_nvars(&self, other: &Self) -> Result<(), FormalError> {
        if self.nvars() != other.nvars() {
            return Err(FormalError::VarMismatch(format!(
                "fields over {} and {} variables",
                self.nvars(),
                other.nvars()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.nvars();
        let mut wrote = false;
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "({c})*d/d{}", var_name(n, i))?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linalg::rat_int;

    fn field(comps: &[&[(&[u32], i64)]]) -> PolyVectorField {
        let n = comps.len();
        let components = comps
            .iter()
            .map(|terms| {
                TruncPoly::from_terms(
                    n,
                    None,
                    terms
                        .iter()
                        .map(|&(e, c)| (Exponent(e.to_vec()), rat_int(c))),
                )
            })
            .collect();
        PolyVectorField::new(components).unwrap()
    }

    #[test]
    fn bracket_constant_with_quadratic() {
        // [d/dx, x^2 d/dx] = 2x d/dx
        let ddx = field(&[&[(&[0], 1)]]);
        let x2ddx = field(&[&[(&[2], 1)]]);
        let expected = field(&[&[(&[1], 2)]]);
        assert_eq!(ddx.bracket(&x2ddx).unwrap(), expected);
    }

    #[test]
    fn bracket_euler_with_constant() {
        // [x d/dx, d/dx] = -d/dx
        let euler = field(&[&[(&[1], 1)]]);
        let ddx = field(&[&[(&[0], 1)]]);
        let expected = field(&[&[(&[0], -1)]]);
        assert_eq!(euler.bracket(&ddx).unwrap(), expected);
    }

    #[test]
    fn bracket_is_alternating() {
        let x = field(&[&[(&[2, 1], 3), (&[0, 0], 1)], &[(&[1, 1], -2)]]);
        assert!(x.bracket(&x).unwrap().is_zero());
    }

    #[test]
    fn bracket_two_variables() {
        // [y d/dx, x d/dy] = y d/dy - x d/dx
        let a = field(&[&[(&[0, 1], 1)], &[]]);
        let b = field(&[&[], &[(&[1, 0], 1)]]);
        let expected = field(&[&[(&[1, 0], -1)], &[(&[0, 1], 1)]]);
        assert_eq!(a.bracket(&b).unwrap(), expected);
    }
}
