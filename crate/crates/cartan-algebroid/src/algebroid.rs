use formal::{PolyVectorField, TruncPoly};
use linalg::{rat_int, Rational};

use crate::{CartanError, CheckReport};

/// A Lie algebroid over the polynomial patch in `base_dim` variables,
/// presented in a trivializing frame `e_0, .., e_{r-1}`: one anchor field
/// per frame section and structure functions
/// `[e_a, e_b] = sum_k c[a][b][k] e_k`.
///
/// Construction validates shapes and antisymmetry of the structure
/// functions. Bracket compatibility of the anchor and the Jacobi identity
/// are not assumed; [`AlgebroidData::jacobi_check`] reports them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebroidData {
    base_dim: usize,
    anchor: Vec<PolyVectorField>,
    c: Vec<Vec<Vec<TruncPoly>>>,
}

impl AlgebroidData {
    pub fn new(
        base_dim: usize,
        anchor: Vec<PolyVectorField>,
        c: Vec<Vec<Vec<TruncPoly>>>,
    ) -> Result<Self, CartanError> {
        let rank = anchor.len();
        for (a, rho) in anchor.iter().enumerate() {
            if rho.nvars() != base_dim {
                return Err(CartanError::InvalidData(format!(
                    "anchor of e_{a} lives in {} variables, base has {base_dim}",
                    rho.nvars()
                )));
            }
        }
        if c.len() != rank {
            return Err(CartanError::InvalidData(format!(
                "structure functions for {} frame sections, rank is {rank}",
                c.len()
            )));
        }
        for (a, row) in c.iter().enumerate() {
            if row.len() != rank {
                return Err(CartanError::InvalidData(format!(
                    "structure row of e_{a} has length {}, rank is {rank}",
                    row.len()
                )));
            }
            for (b, entry) in row.iter().enumerate() {
                if entry.len() != rank {
                    return Err(CartanError::InvalidData(format!(
                        "bracket [e_{a}, e_{b}] has {} components, rank is {rank}",
                        entry.len()
                    )));
                }
                for p in entry {
                    if p.nvars() != base_dim {
                        return Err(CartanError::InvalidData(format!(
                            "structure function in [e_{a}, e_{b}] uses {} variables, base has {base_dim}",
                            p.nvars()
                        )));
                    }
                }
            }
        }
        for a in 0..rank {
            for b in a..rank {
                for k in 0..rank {
                    if c[a][b][k].add(&c[b][a][k])?.is_zero() {
                        continue;
                    }
                    return Err(CartanError::InvalidData(format!(
                        "structure functions of [e_{a}, e_{b}] and [e_{b}, e_{a}] are not opposite"
                    )));
                }
            }
        }
        Ok(Self {
            base_dim,
            anchor,
            c,
        })
    }

    /// The tangent algebroid: frame `∂_0, .., ∂_{n-1}`, identity anchor,
    /// vanishing structure functions.
    pub fn tangent(base_dim: usize) -> Self {
        let anchor = (0..base_dim)
            .map(|i| PolyVectorField::coordinate(base_dim, i))
            .collect();
        let zero = TruncPoly::constant(base_dim, rat_int(0));
        let c = vec![vec![vec![zero; base_dim]; base_dim]; base_dim];
        Self {
            base_dim,
            anchor,
            c,
        }
    }

    /// The action algebroid of a Lie algebra represented by vector fields:
    /// constant structure constants `[e_a, e_b] = sum_k k_ab^k e_k`.
    pub fn action(
        base_dim: usize,
        anchor: Vec<PolyVectorField>,
        constants: Vec<Vec<Vec<Rational>>>,
    ) -> Result<Self, CartanError> {
        let c = constants
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|entry| {
                        entry
                            .into_iter()
                            .map(|v| TruncPoly::constant(base_dim, v))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(base_dim, anchor, c)
    }

    pub fn rank(&self) -> usize {
        self.anchor.len()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn anchor(&self, a: usize) -> &PolyVectorField {
        &self.anchor[a]
    }

    /// Structure functions of `[e_a, e_b]`, one per frame section.
    pub fn structure(&self, a: usize, b: usize) -> &[TruncPoly] {
        &self.c[a][b]
    }

    pub fn zero_section(&self) -> Vec<TruncPoly> {
        vec![TruncPoly::constant(self.base_dim, rat_int(0)); self.rank()]
    }

    /// The frame section `e_a` as a coefficient vector.
    pub fn frame_section(&self, a: usize) -> Vec<TruncPoly> {
        let mut s = self.zero_section();
        s[a] = TruncPoly::one(self.base_dim);
        s
    }

    fn check_section(&self, s: &[TruncPoly]) -> Result<(), CartanError> {
        if s.len() != self.rank() {
            return Err(CartanError::InvalidData(format!(
                "section has {} components, rank is {}",
                s.len(),
                self.rank()
            )));
        }
        for p in s {
            if p.nvars() != self.base_dim {
                return Err(CartanError::InvalidData(format!(
                    "section component uses {} variables, base has {}",
                    p.nvars(),
                    self.base_dim
                )));
            }
        }
        Ok(())
    }

    /// The anchor applied to a section, `rho(sum_a s^a e_a)`.
    pub fn anchor_of(&self, s: &[TruncPoly]) -> Result<PolyVectorField, CartanError> {
        self.check_section(s)?;
        let mut out = PolyVectorField::zero(self.base_dim);
        for (coeff, rho) in s.iter().zip(&self.anchor) {
            if !coeff.is_zero() {
                out = out.add(&rho.scale_fn(coeff)?)?;
            }
        }
        Ok(out)
    }

    /// The bracket of two sections, extended from the frame by the Leibniz
    /// rule:
    /// `[s, t]^k = sum_{a,b} s^a t^b c[a][b][k] + rho(s)(t^k) - rho(t)(s^k)`.
    pub fn bracket(&self, s: &[TruncPoly], t: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
        self.check_section(s)?;
        self.check_section(t)?;
        let rho_s = self.anchor_of(s)?;
        let rho_t = self.anchor_of(t)?;
        let mut out = self.zero_section();
        for k in 0..self.rank() {
            let mut acc = rho_s.apply(&t[k])?.sub(&rho_t.apply(&s[k])?)?;
            for a in 0..self.rank() {
                if s[a].is_zero() {
                    continue;
                }
                for b in 0..self.rank() {
                    if t[b].is_zero() || self.c[a][b][k].is_zero() {
                        continue;
                    }
                    acc = acc.add(&s[a].mul(&t[b])?.mul(&self.c[a][b][k])?)?;
                }
            }
            out[k] = acc;
        }
        Ok(out)
    }

    /// Checks that the anchor is bracket-compatible on the frame and that
    /// the Jacobi identity holds on frame triples; with the Leibniz
    /// extension of the bracket this settles both for all sections.
    pub fn jacobi_check(&self) -> CheckReport {
        let r = self.rank();
        let mut failures = Vec::new();
        for a in 0..r {
            for b in a + 1..r {
                let mut pushed = self
                    .anchor_of(&self.c[a][b])
                    .expect("structure row is a section");
                pushed = self.anchor[a]
                    .bracket(&self.anchor[b])
                    .expect("anchors share the base")
                    .sub(&pushed)
                    .expect("anchors share the base");
                if !pushed.is_zero() {
                    failures.push(format!(
                        "anchor does not intertwine [e_{a}, e_{b}] with the field bracket"
                    ));
                }
            }
        }
        for a in 0..r {
            for b in a + 1..r {
                for k in b + 1..r {
                    let j = self.jacobiator(a, b, k).expect("frames are sections");
                    if j.iter().any(|p| !p.is_zero()) {
                        failures.push(format!("Jacobi fails on (e_{a}, e_{b}, e_{k})"));
                    }
                }
            }
        }
        CheckReport::from_failures(failures)
    }

    fn jacobiator(&self, a: usize, b: usize, k: usize) -> Result<Vec<TruncPoly>, CartanError> {
        let ea = self.frame_section(a);
        let eb = self.frame_section(b);
        let ek = self.frame_section(k);
        let mut total = self.bracket(&ea, &self.bracket(&eb, &ek)?)?;
        for (lhs, inner) in [(&eb, self.bracket(&ek, &ea)?), (&ek, self.bracket(&ea, &eb)?)] {
            let part = self.bracket(lhs, &inner)?;
            for (t, p) in total.iter_mut().zip(&part) {
                *t = t.add(p)?;
            }
        }
        Ok(total)
    }
}
