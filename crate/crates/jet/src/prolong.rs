//! Differential constraint systems in jet coordinates, their prolongation
//! by total derivatives, and a worked third-order example: the expression
//! `2φ′φ‴ − 3(φ″)²` that vanishes exactly on fractional linear maps.

use formal::{Exponent, TruncPoly};
use linalg::{rat_int, Rational};
use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::jet::{multi_indices, PolyJet};
use crate::JetError;

/// A finite list of polynomial equations on jets of self-maps of
/// `dimension`-dimensional space. The variables are the source coordinates
/// followed by one derivative coordinate per component and multi-index up
/// to `budget`; equations may only reach orders the budget can still
/// differentiate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    dimension: usize,
    budget: u32,
    equations: Vec<TruncPoly>,
}

/// Number of variables in the coordinate ring of order-`budget` jets on
/// `q`-dimensional space.
pub fn jet_ring_nvars(q: usize, budget: u32) -> usize {
    q + q * multi_indices(q, 1, budget).len()
}

/// Index of the `i`-th source coordinate.
pub fn base_variable(_q: usize, _budget: u32, i: usize) -> usize {
    i
}

/// Index of the derivative coordinate for component `j` at multi-index
/// `alpha`.
pub fn jet_variable(q: usize, budget: u32, j: usize, alpha: &Exponent) -> Option<usize> {
    let alphas = multi_indices(q, 1, budget);
    let a = alphas.iter().position(|e| e == alpha)?;
    Some(q + j * alphas.len() + a)
}

fn order_of(q: usize, budget: u32, f: &TruncPoly) -> u32 {
    let alphas = multi_indices(q, 1, budget);
    let mut order = 0;
    for (e, _) in f.terms() {
        for (v, &m) in e.0.iter().enumerate() {
            if m > 0 && v >= q {
                order = order.max(alphas[(v - q) % alphas.len()].total());
            }
        }
    }
    order
}

impl ConstraintSystem {
    pub fn new(
        dimension: usize,
        budget: u32,
        equations: Vec<TruncPoly>,
    ) -> Result<Self, JetError> {
        if dimension == 0 || budget == 0 {
            return Err(JetError::Invalid(
                "constraint systems need a positive dimension and budget".into(),
            ));
        }
        let nvars = jet_ring_nvars(dimension, budget);
        for f in &equations {
            if f.nvars() != nvars {
                return Err(JetError::Invalid(format!(
                    "equation over {} variables in a ring of {} variables",
                    f.nvars(),
                    nvars
                )));
            }
        }
        Ok(Self {
            dimension,
            budget,
            equations,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn equations(&self) -> &[TruncPoly] {
        &self.equations
    }

    /// The highest derivative coordinate any equation actually mentions.
    pub fn order(&self) -> u32 {
        self.equations
            .iter()
            .map(|f| order_of(self.dimension, self.budget, f))
            .max()
            .unwrap_or(0)
    }

    /// Whether every equation vanishes on the coordinates of the given jet.
    pub fn satisfied_by(&self, g: &PolyJet) -> Result<bool, JetError> {
        let q = self.dimension;
        if g.dimension() != q {
            return Err(JetError::Invalid(format!(
                "jet of dimension {} against constraints in dimension {}",
                g.dimension(),
                q
            )));
        }
        let order = self.order();
        if g.order() < order {
            return Err(JetError::OrderExhausted {
                needed: order,
                available: g.order(),
            });
        }
        let mut coords = vec![Rational::zero(); jet_ring_nvars(q, self.budget)];
        coords[..q].clone_from_slice(g.source());
        let alphas = multi_indices(q, 1, self.budget);
        for j in 0..q {
            for (a, alpha) in alphas.iter().enumerate() {
                if alpha.total() <= g.order() {
                    coords[q + j * alphas.len() + a] = g.coefficient(j, alpha);
                }
            }
        }
        for f in &self.equations {
            if !f.eval(&coords)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Total derivative of `f` in the `i`-th base direction: the explicit
/// partial plus the chain terms that bump every derivative coordinate one
/// order up. Needs one order of headroom in the budget.
pub fn total_derivative(
    q: usize,
    budget: u32,
    f: &TruncPoly,
    i: usize,
) -> Result<TruncPoly, JetError> {
    let nvars = jet_ring_nvars(q, budget);
    if f.nvars() != nvars {
        return Err(JetError::Invalid(format!(
            "equation over {} variables in a ring of {} variables",
            f.nvars(),
            nvars
        )));
    }
    if i >= q {
        return Err(JetError::Invalid(format!(
            "direction {} in dimension {}",
            i, q
        )));
    }
    let order = order_of(q, budget, f);
    if order + 1 > budget {
        return Err(JetError::OrderExhausted {
            needed: order + 1,
            available: budget,
        });
    }
    let mut out = f.partial(i);
    for j in 0..q {
        for alpha in multi_indices(q, 1, order) {
            let var = jet_variable(q, budget, j, &alpha).expect("within budget");
            let chain = f.partial(var);
            if chain.is_zero() {
                continue;
            }
            let bumped = jet_variable(q, budget, j, &alpha.raised(i)).expect("headroom checked");
            out = out.add(&chain.mul(&TruncPoly::var(nvars, bumped))?)?;
        }
    }
    Ok(out)
}

/// Extends a system by `steps` rounds of total derivatives of every
/// equation in every direction, keeping one copy of each equation.
pub fn prolong_constraints(
    system: &ConstraintSystem,
    steps: u32,
) -> Result<ConstraintSystem, JetError> {
    let q = system.dimension;
    let order = system.order();
    if order + steps > system.budget {
        return Err(JetError::OrderExhausted {
            needed: order + steps,
            available: system.budget,
        });
    }
    let mut equations = system.equations.clone();
    for _ in 0..steps {
        let mut fresh = Vec::new();
        for f in &equations {
            for i in 0..q {
                let d = total_derivative(q, system.budget, f, i)?;
                if !d.is_zero() && !equations.contains(&d) && !fresh.contains(&d) {
                    fresh.push(d);
                }
            }
        }
        equations.extend(fresh);
    }
    ConstraintSystem::new(q, system.budget, equations)
}

/// A ratio of polynomials, kept unreduced; enough calculus to
/// differentiate fractional expressions symbolically.
#[derive(Clone, Debug)]
struct RatFn {
    num: TruncPoly,
    den: TruncPoly,
}

impl RatFn {
    fn poly(num: TruncPoly) -> Self {
        let den = TruncPoly::one(num.nvars());
        Self { num, den }
    }

    fn partial(&self, i: usize) -> Self {
        let num = self
            .num
            .partial(i)
            .mul(&self.den)
            .and_then(|a| a.sub(&self.num.mul(&self.den.partial(i))?))
            .expect("shared variable count");
        let den = self.den.mul(&self.den).expect("shared variable count");
        Self { num, den }
    }

    fn mul(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num).expect("shared variable count"),
            den: self.den.mul(&other.den).expect("shared variable count"),
        }
    }

    fn scale(&self, s: i64) -> Self {
        Self {
            num: self.num.scale(&rat_int(s)),
            den: self.den.clone(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        let left = self.num.mul(&other.den).expect("shared variable count");
        let right = other.num.mul(&self.den).expect("shared variable count");
        Self {
            num: left.sub(&right).expect("shared variable count"),
            den: self.den.mul(&other.den).expect("shared variable count"),
        }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

fn schwarzian_numerator(phi: &RatFn, x: usize) -> RatFn {
    let d1 = phi.partial(x);
    let d2 = d1.partial(x);
    let d3 = d2.partial(x);
    d1.mul(&d3).scale(2).sub(&d2.mul(&d2).scale(3))
}

/// Outcome of the symbolic third-order test: the expression
/// `2φ′φ‴ − 3(φ″)²` on a general fractional linear map, on the identity,
/// and on the cubic that fails it.
#[derive(Clone, Debug, Serialize)]
pub struct MobiusReport {
    pub fractional_linear_vanishes: bool,
    pub identity_vanishes: bool,
    pub cubic_defect: TruncPoly,
    pub passed: bool,
}

/// Evaluates `2φ′φ‴ − 3(φ″)²` symbolically on `(ax + b)/(cx + d)` with all
/// five letters free, on the identity, and on `x³`.
pub fn mobius_check() -> MobiusReport {
    // Variables a, b, c, d, x.
    let letter = |i: usize| TruncPoly::var(5, i);
    let x = 4;
    let num = letter(0).mul(&letter(x)).unwrap().add(&letter(1)).unwrap();
    let den = letter(2).mul(&letter(x)).unwrap().add(&letter(3)).unwrap();
    let phi = RatFn { num, den };
    let fractional_linear_vanishes = schwarzian_numerator(&phi, x).is_zero();

    let line = RatFn::poly(TruncPoly::var(1, 0));
    let identity_vanishes = schwarzian_numerator(&line, 0).is_zero();

    let cube = TruncPoly::monomial(Exponent(vec![3]), rat_int(1));
    let cubic = schwarzian_numerator(&RatFn::poly(cube), 0);
    let cubic_defect = cubic.num.clone();
    let expected = TruncPoly::monomial(Exponent(vec![2]), rat_int(-72));

    let passed = fractional_linear_vanishes && identity_vanishes && cubic_defect == expected;
    MobiusReport {
        fractional_linear_vanishes,
        identity_vanishes,
        cubic_defect,
        passed,
    }
}

impl Serialize for ConstraintSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ConstraintSystem", 3)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("budget", &self.budget)?;
        st.serialize_field("equations", &self.equations)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ConstraintSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dimension: usize,
            budget: u32,
            equations: Vec<TruncPoly>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ConstraintSystem::new(raw.dimension, raw.budget, raw.equations)
            .map_err(serde::de::Error::custom)
    }
}
