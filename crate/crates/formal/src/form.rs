use std::collections::BTreeMap;
use std::fmt;

use linalg::Rational;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::poly::{var_name, TruncPoly};
use crate::vf::PolyVectorField;
use crate::FormalError;

/// Polynomial differential form of a fixed degree: a sum of terms
/// `f(x) dx_{i₁}∧…∧dx_{i_q}` indexed by strictly increasing tuples.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyForm {
    nvars: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, TruncPoly>,
}

/// Sorts an index tuple, returning the permutation sign, or `None` when an
/// index repeats (so the wedge vanishes).
fn sort_with_sign(mut idx: Vec<usize>) -> Option<(Vec<usize>, i64)> {
    let mut sign = 1i64;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((idx, sign))
}

impl PolyForm {
    pub fn zero(nvars: usize, degree: usize) -> Self {
        Self {
            nvars,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// Degree-zero form from a function.
    pub fn from_function(f: TruncPoly) -> Self {
        let mut form = Self::zero(f.nvars(), 0);
        form.insert_add(Vec::new(), f);
        form
    }

    /// The coordinate one-form `dxᵢ`.
    pub fn dx(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "coordinate index out of range");
        let mut form = Self::zero(nvars, 1);
        form.insert_add(vec![i], TruncPoly::one(nvars));
        form
    }

    /// A single term `coeff · dx_{i₁}∧…∧dx_{i_q}`; the indices may come in
    /// any order and are sorted with the corresponding sign.
    pub fn term(coeff: TruncPoly, indices: &[usize]) -> Self {
        let nvars = coeff.nvars();
        assert!(indices.iter().all(|&i| i < nvars), "index out of range");
        let mut form = Self::zero(nvars, indices.len());
        if let Some((sorted, sign)) = sort_with_sign(indices.to_vec()) {
            form.insert_add(sorted, coeff.scale(&Rational::from_integer(sign.into())));
        }
        form
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &TruncPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, indices: &[usize]) -> TruncPoly {
        self.terms
            .get(indices)
            .cloned()
            .unwrap_or_else(|| TruncPoly::zero(self.nvars))
    }

    fn insert_add(&mut self, idx: Vec<usize>, coeff: TruncPoly) {
        debug_assert_eq!(idx.len(), self.degree);
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(slot) => {
                *slot = slot.add(&coeff).expect("matching variable counts");
                if slot.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, coeff);
            }
        }
    }

    fn check_shape(&self, other: &Self) -> Result<(), FormalError> {
        if self.nvars != other.nvars {
            return Err(FormalError::VarMismatch(format!(
                "forms over {} and {} variables",
                self.nvars, other.nvars
            )));
        }
        if self.degree != other.degree {
            return Err(FormalError::DegreeMismatch(format!(
                "cannot add forms of degrees {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormalError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.insert_add(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormalError> {
        self.add(&other.scale(&-Rational::from_integer(1.into())))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Self::zero(self.nvars, self.degree);
        for (idx, c) in &self.terms {
            out.insert_add(idx.clone(), c.scale(s));
        }
        out
    }

    /// Multiplies every coefficient by a function.
    pub fn scale_fn(&self, f: &TruncPoly) -> Result<Self, FormalError> {
        let mut out = Self::zero(self.nvars, self.degree);
        for (idx, c) in &self.terms {
            out.insert_add(idx.clone(), c.mul(f)?);
        }
        Ok(out)
    }

    /// Wedge product; degrees add, coefficients multiply, and overlapping
    /// index tuples cancel.
    pub fn wedge(&self, other: &Self) -> Result<Self, FormalError> {
        if self.nvars != other.nvars {
            return Err(FormalError::VarMismatch(format!(
                "forms over {} and {} variables",
                self.nvars, other.nvars
            )));
        }
        let mut out = Self::zero(self.nvars, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let mut idx = ia.clone();
                idx.extend_from_slice(ib);
                if let Some((sorted, sign)) = sort_with_sign(idx) {
                    out.insert_add(
                        sorted,
                        ca.mul(cb)?.scale(&Rational::from_integer(sign.into())),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative `d(f dx_I) = Σⱼ ∂ⱼf · dxⱼ∧dx_I`.
    pub fn de_rham_d(&self) -> Self {
        let mut out = Self::zero(self.nvars, self.degree + 1);
        for (idx, c) in &self.terms {
            for j in 0..self.nvars {
                let g = c.partial(j);
                if g.is_zero() {
                    continue;
                }
                let mut with_j = vec![j];
                with_j.extend_from_slice(idx);
                if let Some((sorted, sign)) = sort_with_sign(with_j) {
                    out.insert_add(sorted, g.scale(&Rational::from_integer(sign.into())));
                }
            }
        }
        out
    }

    /// Interior product with a vector field:
    /// `ι_X(f dx_I) = Σₖ (−1)ᵏ f·X^{iₖ} dx_{I∖iₖ}`.
    pub fn interior(&self, x: &PolyVectorField) -> Result<Self, FormalError> {
        if x.nvars() != self.nvars {
            return Err(FormalError::VarMismatch(format!(
                "field over {} variables, form over {}",
                x.nvars(),
                self.nvars
            )));
        }
        if self.degree == 0 {
            return Err(FormalError::DegreeMismatch(
                "interior product of a degree-0 form".into(),
            ));
        }
        let mut out = Self::zero(self.nvars, self.degree - 1);
        for (idx, c) in &self.terms {
            for (k, &ik) in idx.iter().enumerate() {
                let coeff = c.mul(x.component(ik))?;
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let mut rest = idx.clone();
                rest.remove(k);
                out.insert_add(rest, coeff.scale(&Rational::from_integer(sign.into())));
            }
        }
        Ok(out)
    }

    /// Lie derivative along a vector field, computed termwise from
    /// `L_X(f dx_I) = X(f) dx_I + f Σₖ dx_{i₁}∧…∧d(X^{iₖ})∧…∧dx_{i_q}`.
    pub fn lie(&self, x: &PolyVectorField) -> Result<Self, FormalError> {
        if x.nvars() != self.nvars {
            return Err(FormalError::VarMismatch(format!(
                "field over {} variables, form over {}",
                x.nvars(),
                self.nvars
            )));
        }
        let mut out = Self::zero(self.nvars, self.degree);
        for (idx, c) in &self.terms {
            out.insert_add(idx.clone(), x.apply(c)?);
            for (k, &ik) in idx.iter().enumerate() {
                for j in 0..self.nvars {
                    let deriv = x.component(ik).partial(j);
                    if deriv.is_zero() {
                        continue;
                    }
                    let mut replaced = idx.clone();
                    replaced[k] = j;
                    if let Some((sorted, sign)) = sort_with_sign(replaced) {
                        out.insert_add(
                            sorted,
                            c.mul(&deriv)?.scale(&Rational::from_integer(sign.into())),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// Evaluates on a tuple of vector fields:
    /// `(f dx_I)(X₁,…,X_q) = f · det(Xₐ^{i_b})`.
    pub fn evaluate(&self, fields: &[PolyVectorField]) -> Result<TruncPoly, FormalError> {
        if fields.len() != self.degree {
            return Err(FormalError::DegreeMismatch(format!(
                "{} fields fed to a degree-{} form",
                fields.len(),
                self.degree
            )));
        }
        for x in fields {
            if x.nvars() != self.nvars {
                return Err(FormalError::VarMismatch(format!(
                    "field over {} variables, form over {}",
                    x.nvars(),
                    self.nvars
                )));
            }
        }
        let mut acc = TruncPoly::zero(self.nvars);
        for (idx, c) in &self.terms {
            acc = acc.add(&c.mul(&determinant_of_components(self.nvars, fields, idx)?)?)?;
        }
        Ok(acc)
    }
}

/// Determinant of the matrix `M[a][b] = fields[a].component(idx[b])` by
/// Laplace expansion; tuples are short, so this stays cheap.
fn determinant_of_components(
    nvars: usize,
    fields: &[PolyVectorField],
    idx: &[usize],
) -> Result<TruncPoly, FormalError> {
    let n = fields.len();
    debug_assert_eq!(n, idx.len());
    if n == 0 {
        return Ok(TruncPoly::one(nvars));
    }
    let mut acc = TruncPoly::zero(nvars);
    for (a, field) in fields.iter().enumerate() {
        let entry = field.component(idx[0]);
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<PolyVectorField> = fields
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(_, f)| f.clone())
            .collect();
        let minor = determinant_of_components(nvars, &rest, &idx[1..])?;
        let sign = if a % 2 == 0 { 1 } else { -1 };
        acc = acc.add(
            &entry
                .mul(&minor)?
                .scale(&Rational::from_integer(sign.into())),
        )?;
    }
    Ok(acc)
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (idx, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if idx.is_empty() {
                write!(f, "{c}")?;
                continue;
            }
            let wedge = idx
                .iter()
                .map(|&i| format!("d{}", var_name(self.nvars, i)))
                .collect::<Vec<_>>()
                .join("∧");
            if c == &TruncPoly::one(self.nvars) {
                write!(f, "{wedge}")?;
            } else {
                write!(f, "({c})·{wedge}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct FormTermRepr {
    idx: Vec<usize>,
    coef: TruncPoly,
}

impl Serialize for PolyForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PolyForm", 3)?;
        st.serialize_field("nvars", &self.nvars)?;
        st.serialize_field("degree", &self.degree)?;
        let terms: Vec<FormTermRepr> = self
            .terms
            .iter()
            .map(|(idx, coef)| FormTermRepr {
                idx: idx.clone(),
                coef: coef.clone(),
            })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PolyForm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nvars: usize,
            degree: usize,
            terms: Vec<FormTermRepr>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut form = PolyForm::zero(raw.nvars, raw.degree);
        for t in raw.terms {
            if t.idx.len() != raw.degree || t.idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(serde::de::Error::custom(format!(
                    "bad index tuple {:?} for a degree-{} form",
                    t.idx, raw.degree
                )));
            }
            if t.coef.nvars() != raw.nvars {
                return Err(serde::de::Error::custom("coefficient variable count"));
            }
            form.insert_add(t.idx, t.coef);
        }
        Ok(form)
    }
}
