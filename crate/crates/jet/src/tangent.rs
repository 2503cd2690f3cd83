//! Tangent vectors to the space of jets and the differentials of the
//! groupoid operations: the contact form, horizontal lifts, and the
//! compatibility of the form with multiplication.
//!
//! A tangent is a dual-number perturbation of jet data. Pushing the
//! perturbation through composition or inversion is done by running the
//! ordinary algorithms over polynomials with one extra square-zero
//! variable, so every differential is computed exactly and without any
//! symbolic chain rule.

use std::collections::BTreeMap;

use formal::{Exponent, PolyMap, TruncPoly};
use linalg::{rat, Rational};
use num_traits::Zero;
use rand::Rng;

use crate::jet::{alpha_factorial, multi_indices, PolyJet};
use crate::{mat, JetError};

/// A tangent vector to the space of jets at `base`: a first-order variation
/// of the source point, the target point, and every derivative-normalized
/// coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetTangent {
    base: PolyJet,
    dx: Vec<Rational>,
    dy: Vec<Rational>,
    du: Vec<BTreeMap<Exponent, Rational>>,
}

impl JetTangent {
    pub fn new(
        base: PolyJet,
        dx: Vec<Rational>,
        dy: Vec<Rational>,
        du: Vec<BTreeMap<Exponent, Rational>>,
    ) -> Result<Self, JetError> {
        let q = base.dimension();
        if dx.len() != q || dy.len() != q || du.len() != q {
            return Err(JetError::Invalid(format!(
                "variation blocks sized {}/{}/{} on a jet of dimension {}",
                dx.len(),
                dy.len(),
                du.len(),
                q
            )));
        }
        let mut trimmed = Vec::with_capacity(q);
        for block in du {
            for e in block.keys() {
                if e.len() != q || e.total() == 0 || e.total() > base.order() {
                    return Err(JetError::Invalid(format!(
                        "coefficient variation at {:?} on a jet of order {}",
                        e.0,
                        base.order()
                    )));
                }
            }
            trimmed.push(block.into_iter().filter(|(_, c)| !c.is_zero()).collect());
        }
        Ok(Self {
            base,
            dx,
            dy,
            du: trimmed,
        })
    }

    pub fn zero(base: PolyJet) -> Self {
        let q = base.dimension();
        Self {
            base,
            dx: vec![Rational::zero(); q],
            dy: vec![Rational::zero(); q],
            du: vec![BTreeMap::new(); q],
        }
    }

    pub fn base(&self) -> &PolyJet {
        &self.base
    }

    pub fn source_variation(&self) -> &[Rational] {
        &self.dx
    }

    pub fn target_variation(&self) -> &[Rational] {
        &self.dy
    }

    pub fn coefficient_variation(&self, j: usize, alpha: &Exponent) -> Rational {
        self.du[j].get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn variation_is_zero(&self) -> bool {
        self.dx.iter().all(Zero::is_zero)
            && self.dy.iter().all(Zero::is_zero)
            && self.du.iter().all(BTreeMap::is_empty)
    }

    /// Forgets base orders above `order` together with their variations.
    pub fn truncate(&self, order: u32) -> Result<Self, JetError> {
        let base = self.base.truncate(order)?;
        let du = self
            .du
            .iter()
            .map(|block| {
                block
                    .iter()
                    .filter(|(e, _)| e.total() <= order)
                    .map(|(e, c)| (e.clone(), c.clone()))
                    .collect()
            })
            .collect();
        Ok(Self {
            base,
            dx: self.dx.clone(),
            dy: self.dy.clone(),
            du,
        })
    }
}

/// A variation with no source motion, recorded one order below the jet it
/// came from: the value of the contact form, or a difference of such
/// values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerticalVariation {
    dimension: usize,
    order: u32,
    dy: Vec<Rational>,
    du: Vec<BTreeMap<Exponent, Rational>>,
}

impl VerticalVariation {
    fn new(
        dimension: usize,
        order: u32,
        dy: Vec<Rational>,
        du: Vec<BTreeMap<Exponent, Rational>>,
    ) -> Self {
        let du = du
            .into_iter()
            .map(|block| block.into_iter().filter(|(_, c)| !c.is_zero()).collect())
            .collect();
        Self {
            dimension,
            order,
            dy,
            du,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn target_component(&self, j: usize) -> &Rational {
        &self.dy[j]
    }

    pub fn coefficient_component(&self, j: usize, alpha: &Exponent) -> Rational {
        self.du[j].get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.dy.iter().all(Zero::is_zero) && self.du.iter().all(BTreeMap::is_empty)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, JetError> {
        if self.dimension != other.dimension || self.order != other.order {
            return Err(JetError::Invalid(format!(
                "vertical variations of shapes {}/{} and {}/{}",
                self.dimension, self.order, other.dimension, other.order
            )));
        }
        let dy = self
            .dy
            .iter()
            .zip(&other.dy)
            .map(|(a, b)| a - b)
            .collect();
        let du = self
            .du
            .iter()
            .zip(&other.du)
            .map(|(a, b)| {
                let mut out = a.clone();
                for (e, c) in b {
                    let entry = out.entry(e.clone()).or_insert_with(Rational::zero);
                    *entry -= c;
                }
                out
            })
            .collect();
        Ok(Self::new(self.dimension, self.order, dy, du))
    }
}

/// A jet whose scalars are dual numbers `a + εb` with `ε² = 0`: deviation
/// polynomials over one extra square-zero variable, and dual marked points.
#[derive(Clone, Debug)]
struct DualJet {
    q: usize,
    order: u32,
    src: Vec<Rational>,
    dsrc: Vec<Rational>,
    tgt: Vec<Rational>,
    dtgt: Vec<Rational>,
    dev: Vec<TruncPoly>,
}

fn strip(p: &TruncPoly, q: usize, cap: u32) -> TruncPoly {
    TruncPoly::from_terms(
        q + 1,
        None,
        p.terms().filter_map(|(e, c)| {
            let xi: u32 = e.0[..q].iter().sum();
            (xi <= cap && e.0[q] <= 1).then(|| (e.clone(), c.clone()))
        }),
    )
}

impl DualJet {
    fn from_tangent(v: &JetTangent) -> Self {
        let q = v.base.dimension();
        let rep = v.base.representative();
        let dev = (0..q)
            .map(|j| {
                let value = rep.component(j).terms().map(|(e, c)| {
                    let mut raised = e.0.clone();
                    raised.push(0);
                    (Exponent(raised), c.clone())
                });
                let variation = v.du[j].iter().map(|(e, c)| {
                    let mut raised = e.0.clone();
                    raised.push(1);
                    (Exponent(raised), c / alpha_factorial(e))
                });
                TruncPoly::from_terms(q + 1, None, value.chain(variation))
            })
            .collect();
        Self {
            q,
            order: v.base.order(),
            src: v.base.source().to_vec(),
            dsrc: v.dx.clone(),
            tgt: v.base.target().to_vec(),
            dtgt: v.dy.clone(),
            dev,
        }
    }

    fn to_tangent(&self) -> Result<JetTangent, JetError> {
        let q = self.q;
        let mut comps = Vec::with_capacity(q);
        let mut du = vec![BTreeMap::new(); q];
        for (j, d) in self.dev.iter().enumerate() {
            let mut value_terms = Vec::new();
            for (e, c) in d.terms() {
                let inner = Exponent(e.0[..q].to_vec());
                if e.0[q] == 0 {
                    value_terms.push((inner, c.clone()));
                } else {
                    du[j].insert(inner.clone(), c * alpha_factorial(&inner));
                }
            }
            comps.push(TruncPoly::from_terms(q, None, value_terms));
        }
        let base = PolyJet::from_map(PolyMap::new(
            self.src.clone(),
            self.tgt.clone(),
            comps,
            self.order,
        )?)?;
        JetTangent::new(base, self.dsrc.clone(), self.dtgt.clone(), du)
    }

    fn compose(g: &DualJet, h: &DualJet, w: u32) -> Result<DualJet, JetError> {
        let available = g.order.min(h.order);
        if available < w {
            return Err(JetError::OrderExhausted {
                needed: w,
                available,
            });
        }
        if g.src != h.tgt {
            return Err(JetError::NonComposable(
                "left factor does not start where the right factor ends".into(),
            ));
        }
        if g.dsrc != h.dtgt {
            return Err(JetError::NonComposable(
                "the tangents do not share their middle-point motion".into(),
            ));
        }
        let q = g.q;
        let mut images: Vec<TruncPoly> = h.dev.iter().map(|d| strip(d, q, w)).collect();
        images.push(TruncPoly::var(q + 1, q));
        let dev = g
            .dev
            .iter()
            .map(|d| Ok(strip(&strip(d, q, w).substitute(&images)?, q, w)))
            .collect::<Result<_, JetError>>()?;
        Ok(DualJet {
            q,
            order: w,
            src: h.src.clone(),
            dsrc: h.dsrc.clone(),
            tgt: g.tgt.clone(),
            dtgt: g.dtgt.clone(),
            dev,
        })
    }

    fn invert(&self, w: u32) -> Result<DualJet, JetError> {
        if self.order < w {
            return Err(JetError::OrderExhausted {
                needed: w,
                available: self.order,
            });
        }
        let q = self.q;
        let mut a = vec![vec![Rational::zero(); q]; q];
        let mut b = vec![vec![Rational::zero(); q]; q];
        for j in 0..q {
            for i in 0..q {
                let mut plain = vec![0; q + 1];
                plain[i] = 1;
                a[j][i] = self.dev[j].coeff(&Exponent(plain.clone()));
                plain[q] = 1;
                b[j][i] = self.dev[j].coeff(&Exponent(plain));
            }
        }
        let a_inv = mat::inverse(&a).ok_or_else(|| {
            JetError::SingularLinearPart("the order-one part is not invertible".into())
        })?;
        // (A + εB)⁻¹ = A⁻¹ − ε A⁻¹BA⁻¹.
        let c: Vec<Vec<Rational>> = mat::matmul(&a_inv, &mat::matmul(&b, &a_inv))
            .into_iter()
            .map(|row| row.into_iter().map(|x| -x).collect())
            .collect();
        let eps = TruncPoly::var(q + 1, q);
        let dual_scale = |p: &TruncPoly, plain: &Rational, slope: &Rational| {
            let shifted = strip(&p.mul(&eps).expect("shared variable count"), q, w);
            p.scale(plain)
                .add(&shifted.scale(slope))
                .expect("shared variable count")
        };
        let forward: Vec<TruncPoly> = self.dev.iter().map(|d| strip(d, q, w)).collect();
        let mut inverse: Vec<TruncPoly> = (0..q)
            .map(|j| {
                let mut acc = TruncPoly::zero(q + 1);
                for i in 0..q {
                    acc = acc
                        .add(&dual_scale(&TruncPoly::var(q + 1, i), &a_inv[j][i], &c[j][i]))
                        .expect("shared variable count");
                }
                acc
            })
            .collect();
        for _ in 2..=w {
            let mut images = inverse.clone();
            images.push(eps.clone());
            let mut errors = Vec::with_capacity(q);
            for j in 0..q {
                errors.push(
                    strip(&forward[j].substitute(&images)?, q, w)
                        .sub(&TruncPoly::var(q + 1, j))?,
                );
            }
            if errors.iter().all(TruncPoly::is_zero) {
                break;
            }
            for j in 0..q {
                let mut correction = TruncPoly::zero(q + 1);
                for i in 0..q {
                    correction = correction.add(&dual_scale(&errors[i], &a_inv[j][i], &c[j][i]))?;
                }
                inverse[j] = strip(&inverse[j].sub(&correction)?, q, w);
            }
        }
        Ok(DualJet {
            q,
            order: w,
            src: self.tgt.clone(),
            dsrc: self.dtgt.clone(),
            tgt: self.src.clone(),
            dtgt: self.dsrc.clone(),
            dev: inverse,
        })
    }
}

/// Differential of composition at working order `w`: the tangent at the
/// composite jet induced by tangents at the two factors.
pub fn jet_tangent_compose(
    vg: &JetTangent,
    vh: &JetTangent,
    w: u32,
) -> Result<JetTangent, JetError> {
    if w < 1 {
        return Err(JetError::Invalid("the working order is at least one".into()));
    }
    DualJet::compose(&DualJet::from_tangent(vg), &DualJet::from_tangent(vh), w)?.to_tangent()
}

/// Differential of inversion at working order `w`.
pub fn jet_tangent_invert(v: &JetTangent, w: u32) -> Result<JetTangent, JetError> {
    if w < 1 {
        return Err(JetError::Invalid("the working order is at least one".into()));
    }
    DualJet::from_tangent(v).invert(w)?.to_tangent()
}

/// The matrix through which an arrow carries tangent directions at its
/// target back to its source: the inverse of the linear part.
pub fn tangent_action(g: &PolyJet) -> Vec<Vec<Rational>> {
    mat::inverse(&g.linear_part()).expect("jet linear parts are invertible")
}

/// Value of the order-`k` contact form on a tangent: the part of the
/// variation that fails to follow the jet's own polynomial representative,
/// recorded at order `k − 1`.
pub fn cartan_form_eval(v: &JetTangent, k: u32) -> Result<VerticalVariation, JetError> {
    if k == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        });
    }
    if v.base.order() < k {
        return Err(JetError::OrderExhausted {
            needed: k,
            available: v.base.order(),
        });
    }
    let q = v.base.dimension();
    let slide = |j: usize, alpha: &Exponent| {
        (0..q).fold(Rational::zero(), |acc, i| {
            acc + v.base.coefficient(j, &alpha.raised(i)) * &v.dx[i]
        })
    };
    let zero = Exponent::zero(q);
    let dy = (0..q).map(|j| &v.dy[j] - slide(j, &zero)).collect();
    let du = (0..q)
        .map(|j| {
            multi_indices(q, 1, k - 1)
                .into_iter()
                .map(|alpha| {
                    let value = v.coefficient_variation(j, &alpha) - slide(j, &alpha);
                    (alpha, value)
                })
                .collect()
        })
        .collect();
    Ok(VerticalVariation::new(q, k - 1, dy, du))
}

/// Which end of the arrow a lifted direction is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftSide {
    Source,
    Target,
}

/// Horizontal lift of a base direction through a jet: the source point
/// slides along the canonical polynomial representative and every retained
/// coefficient follows it. The lift lives one order below the jet and is
/// annihilated by the contact form.
pub fn horizontal_lift(
    g: &PolyJet,
    v: &[Rational],
    side: LiftSide,
) -> Result<JetTangent, JetError> {
    let w = g.order();
    if w < 2 {
        return Err(JetError::OrderExhausted {
            needed: 2,
            available: w,
        });
    }
    let q = g.dimension();
    if v.len() != q {
        return Err(JetError::Invalid(format!(
            "direction of dimension {} on a jet of dimension {}",
            v.len(),
            q
        )));
    }
    let slide = match side {
        LiftSide::Source => v.to_vec(),
        LiftSide::Target => mat::matvec(&tangent_action(g), v),
    };
    let follow = |j: usize, alpha: &Exponent| {
        (0..q).fold(Rational::zero(), |acc, i| {
            acc + g.coefficient(j, &alpha.raised(i)) * &slide[i]
        })
    };
    let zero = Exponent::zero(q);
    let dy = (0..q).map(|j| follow(j, &zero)).collect();
    let du = (0..q)
        .map(|j| {
            multi_indices(q, 1, w - 1)
                .into_iter()
                .map(|alpha| {
                    let value = follow(j, &alpha);
                    (alpha, value)
                })
                .collect()
        })
        .collect();
    JetTangent::new(g.truncate(w - 1)?, slide, dy, du)
}

/// Pushes a vertical variation at `h` through left composition with `g`:
/// the action of an arrow on the fibres of the contact projection.
pub fn vertical_action(
    g: &PolyJet,
    h: &PolyJet,
    v: &VerticalVariation,
) -> Result<VerticalVariation, JetError> {
    let q = v.dimension();
    if g.dimension() != q || h.dimension() != q {
        return Err(JetError::Invalid(
            "the acting pair and the variation disagree on dimension".into(),
        ));
    }
    if g.source() != h.target() {
        return Err(JetError::NonComposable(
            "left factor does not start where the right factor ends".into(),
        ));
    }
    let k = v.order();
    if k == 0 {
        let dy = mat::matvec(&g.linear_part(), &v.dy);
        return Ok(VerticalVariation::new(q, 0, dy, vec![BTreeMap::new(); q]));
    }
    let available = g.order().min(h.order());
    if available < k {
        return Err(JetError::OrderExhausted {
            needed: k,
            available,
        });
    }
    let still = vec![Rational::zero(); q];
    let vh = JetTangent::new(h.truncate(k)?, still, v.dy.clone(), v.du.clone())?;
    let vg = JetTangent::zero(g.truncate(k)?);
    let moved = jet_tangent_compose(&vg, &vh, k)?;
    Ok(VerticalVariation::new(q, k, moved.dy, moved.du))
}

/// Multiplicativity defect of the contact form at order `k` on a composable
/// pair carrying composable tangents: the form of the composite variation,
/// minus the form at the left factor, minus the left factor acting on the
/// form at the right factor. Identically zero on jets of maps.
pub fn cartan_mult_defect(
    g: &PolyJet,
    h: &PolyJet,
    vg: &JetTangent,
    vh: &JetTangent,
    k: u32,
) -> Result<VerticalVariation, JetError> {
    if k == 0 {
        return Err(JetError::OrderExhausted {
            needed: 1,
            available: 0,
        });
    }
    if vg.base() != g || vh.base() != h {
        return Err(JetError::Invalid(
            "the tangents must ride on the given jets".into(),
        ));
    }
    let available = g.order().min(h.order());
    if available < k + 1 {
        return Err(JetError::OrderExhausted {
            needed: k + 1,
            available,
        });
    }
    if g.source() != h.target() {
        return Err(JetError::NonComposable(
            "left factor does not start where the right factor ends".into(),
        ));
    }
    if vg.dx != vh.dy {
        return Err(JetError::NonComposable(
            "the tangents do not share their middle-point motion".into(),
        ));
    }
    let dm = jet_tangent_compose(&vg.truncate(k)?, &vh.truncate(k)?, k)?;
    let whole = cartan_form_eval(&dm, k)?;
    let left = cartan_form_eval(&vg.truncate(k)?, k)?;
    let right = cartan_form_eval(&vh.truncate(k)?, k)?;
    let carried = vertical_action(g, h, &right)?;
    whole.sub(&left)?.sub(&carried)
}

/// A random variation of the given jet, with small rational entries.
pub fn random_tangent<R: Rng>(rng: &mut R, base: &PolyJet) -> JetTangent {
    let q = base.dimension();
    let order = base.order();
    let mut small = |r: &mut R| rat(r.gen_range(-2..=2), r.gen_range(1..=2));
    let dx = (0..q).map(|_| small(rng)).collect();
    let dy = (0..q).map(|_| small(rng)).collect();
    let du = (0..q)
        .map(|_| {
            multi_indices(q, 1, order)
                .into_iter()
                .map(|alpha| (alpha, small(rng)))
                .collect()
        })
        .collect();
    JetTangent::new(base.clone(), dx, dy, du).expect("shapes are consistent by construction")
}
