use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use linalg::{format_rational, parse_rational, Rational};
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::FormalError;

/// Exponent multi-index, ordered by total degree first and lexicographically
/// within a degree, so terms enumerate deterministically from low to high.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Exponent(pub Vec<u32>);

impl Exponent {
    pub fn zero(nvars: usize) -> Self {
        Exponent(vec![0; nvars])
    }

    /// The multi-index of the bare variable `x_i`.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Exponent(e)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn plus(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Bumps slot `i` by one.
    pub fn raised(&self, i: usize) -> Exponent {
        let mut e = self.0.clone();
        e[i] += 1;
        Exponent(e)
    }

    /// Drops slot `i` by one, if possible.
    pub fn lowered(&self, i: usize) -> Option<Exponent> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(Exponent(e))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial over the rationals in `nvars` variables, optionally truncated:
/// with `cap = Some(N)` the ring is polynomials modulo all terms of total
/// degree above `N`, and every operation reduces accordingly. With `cap =
/// None` nothing is ever dropped.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncPoly {
    nvars: usize,
    cap: Option<u32>,
    terms: BTreeMap<Exponent, Rational>,
}

fn combined_cap(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(p), Some(q)) => Some(p.min(q)),
        (Some(p), None) | (None, Some(p)) => Some(p),
        (None, None) => None,
    }
}

impl TruncPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            cap: None,
            terms: BTreeMap::new(),
        }
    }

    pub fn zero_capped(nvars: usize, cap: Option<u32>) -> Self {
        Self {
            nvars,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.insert_add(Exponent::zero(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// The bare variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut p = Self::zero(nvars);
        p.insert_add(Exponent::unit(nvars, i), Rational::one());
        p
    }

    pub fn monomial(exp: Exponent, coeff: Rational) -> Self {
        let mut p = Self::zero(exp.len());
        p.insert_add(exp, coeff);
        p
    }

    pub fn from_terms<I>(nvars: usize, cap: Option<u32>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, Rational)>,
    {
        let mut p = Self::zero_capped(nvars, cap);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            p.insert_add(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree of the highest term, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::total).max()
    }

    pub fn coeff(&self, e: &Exponent) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Exponent::zero(self.nvars))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert_add(&mut self, e: Exponent, c: Rational) {
        if c.is_zero() {
            return;
        }
        if let Some(cap) = self.cap {
            if e.total() > cap {
                return;
            }
        }
        match self.terms.get_mut(&e) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    fn check_nvars(&self, other: &Self) -> Result<(), FormalError> {
        if self.nvars != other.nvars {
            return Err(FormalError::VarMismatch(format!(
                "{} vs {} variables",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormalError> {
        self.check_nvars(other)?;
        let mut out = Self::zero_capped(self.nvars, combined_cap(self.cap, other.cap));
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.insert_add(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormalError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -v.clone();
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero_capped(self.nvars, self.cap);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FormalError> {
        self.check_nvars(other)?;
        let cap = combined_cap(self.cap, other.cap);
        let mut out = Self::zero_capped(self.nvars, cap);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                if let Some(n) = cap {
                    if ea.total() + eb.total() > n {
                        continue;
                    }
                }
                out.insert_add(ea.plus(eb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Drops every term of total degree above `n` and remembers `n` as the
    /// truncation cap of the result.
    pub fn truncate(&self, n: u32) -> Self {
        let mut out = Self::zero_capped(self.nvars, Some(n));
        for (e, c) in &self.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    /// Same terms with a different cap policy (no terms are recovered, but
    /// later operations stop truncating when the cap is removed).
    pub fn with_cap(&self, cap: Option<u32>) -> Self {
        let mut out = Self::zero_capped(self.nvars, cap);
        for (e, c) in &self.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    /// Partial derivative in the `i`-th variable.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.nvars, "variable index out of range");
        let mut out = Self::zero_capped(self.nvars, self.cap);
        for (e, c) in &self.terms {
            if let Some(lowered) = e.lowered(i) {
                out.insert_add(lowered, c * Rational::from_integer(e.0[i].into()));
            }
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational, FormalError> {
        if point.len() != self.nvars {
            return Err(FormalError::VarMismatch(format!(
                "evaluation point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &k) in e.0.iter().enumerate() {
                for _ in 0..k {
                    term *= &point[i];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Substitutes `images[i]` for the `i`-th variable. All images must share
    /// a variable count; the result cap is the meet of every cap involved.
    pub fn substitute(&self, images: &[TruncPoly]) -> Result<TruncPoly, FormalError> {
        if images.len() != self.nvars {
            return Err(FormalError::VarMismatch(format!(
                "{} images for {} variables",
                images.len(),
                self.nvars
            )));
        }
        let target_nvars = match images.first() {
            Some(p) => p.nvars,
            // A polynomial in zero variables is a constant.
            None => {
                return Ok(TruncPoly::constant(0, self.constant_term()));
            }
        };
        let mut cap = self.cap;
        for im in images {
            if im.nvars != target_nvars {
                return Err(FormalError::VarMismatch(
                    "substitution images disagree on variable count".into(),
                ));
            }
            cap = combined_cap(cap, im.cap);
        }

        // Powers of each image, memoized; every product is reduced by `cap`.
        let mut powers: Vec<Vec<TruncPoly>> = images
            .iter()
            .map(|_| vec![TruncPoly::one(target_nvars).with_cap(cap)])
            .collect();
        for (i, im) in images.iter().enumerate() {
            let base = im.with_cap(cap);
            let max_pow = self
                .terms
                .keys()
                .map(|e| e.0[i])
                .max()
                .unwrap_or(0);
            for k in 1..=max_pow {
                let next = powers[i][(k - 1) as usize].mul(&base)?;
                powers[i].push(next);
            }
        }

        let mut out = TruncPoly::zero_capped(target_nvars, cap);
        for (e, c) in &self.terms {
            let mut term = TruncPoly::constant(target_nvars, c.clone()).with_cap(cap);
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&powers[i][k as usize])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }
}

impl fmt::Display for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| {
                    let name = var_name(self.nvars, i);
                    if p == 1 {
                        name
                    } else {
                        format!("{name}^{p}")
                    }
                })
                .collect();
            let coeff = format_rational(c);
            let body = if mono.is_empty() {
                coeff.trim_start_matches('-').to_string()
            } else if coeff == "1" || coeff == "-1" {
                mono.join("*")
            } else {
                format!("{}*{}", coeff.trim_start_matches('-'), mono.join("*"))
            };
            if k == 0 {
                if coeff.starts_with('-') {
                    write!(f, "-{body}")?;
                } else {
                    write!(f, "{body}")?;
                }
            } else if coeff.starts_with('-') {
                write!(f, " - {body}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub(crate) fn var_name(nvars: usize, i: usize) -> String {
    if nvars == 1 {
        "x".to_string()
    } else if nvars <= 3 {
        ["x", "y", "z"][i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u32>,
    coef: String,
}

impl Serialize for TruncPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("TruncPoly", 3)?;
        st.serialize_field("nvars", &self.nvars)?;
        st.serialize_field("cap", &self.cap)?;
        let terms: Vec<TermRepr> = self
            .terms
            .iter()
            .map(|(e, c)| TermRepr {
                exp: e.0.clone(),
                coef: format_rational(c),
            })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for TruncPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nvars: usize,
            #[serde(default)]
            cap: Option<u32>,
            terms: Vec<TermRepr>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut p = TruncPoly::zero_capped(raw.nvars, raw.cap);
        for t in raw.terms {
            if t.exp.len() != raw.nvars {
                return Err(serde::de::Error::custom(format!(
                    "exponent {:?} does not have {} slots",
                    t.exp, raw.nvars
                )));
            }
            let c = parse_rational(&t.coef).map_err(serde::de::Error::custom)?;
            p.insert_add(Exponent(t.exp), c);
        }
        Ok(p)
    }
}
