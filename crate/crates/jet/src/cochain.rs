//! The bigraded complex of symbolic cochains on strings of composable
//! jets. One differential moves along the string by symbolic composition;
//! the other slides every jet holonomically along its own representative
//! and differentiates. Scalars are polynomials divided by powers of the
//! slot determinants, so inverse linear parts stay exact.

use std::collections::BTreeMap;

use formal::{Exponent, PolyForm, TruncPoly};
use linalg::Rational;
use num_traits::Zero;

use crate::jet::{alpha_factorial, multi_indices, PolyJet};
use crate::JetError;

/// Variable bookkeeping for cochains on strings of `p` composable jets in
/// dimension `q`, derivative coordinates up to order `w`: first the source
/// of the innermost jet, then per slot (outermost arrow first) its target
/// and its derivative coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    q: usize,
    p: usize,
    w: u32,
    alphas: Vec<Exponent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarKind {
    X(usize),
    /// Target coordinate `i` of the arrow in (1-based) slot `m`.
    Y(usize, usize),
    /// Derivative coordinate of component `j` at `alphas` index `a` of the
    /// arrow in slot `m`.
    U(usize, usize, usize),
}

impl Layout {
    fn new(q: usize, p: usize, w: u32) -> Self {
        Self {
            q,
            p,
            w,
            alphas: multi_indices(q, 1, w),
        }
    }

    fn a(&self) -> usize {
        self.alphas.len()
    }

    fn block(&self) -> usize {
        self.q + self.q * self.a()
    }

    fn nvars(&self) -> usize {
        self.q + self.p * self.block()
    }

    fn x(&self, i: usize) -> usize {
        i
    }

    fn y(&self, m: usize, i: usize) -> usize {
        self.q + (m - 1) * self.block() + i
    }

    fn u(&self, m: usize, j: usize, a: usize) -> usize {
        self.q + (m - 1) * self.block() + self.q + j * self.a() + a
    }

    fn alpha_index(&self, alpha: &Exponent) -> Option<usize> {
        self.alphas.iter().position(|e| e == alpha)
    }

    fn classify(&self, v: usize) -> VarKind {
        if v < self.q {
            return VarKind::X(v);
        }
        let rest = v - self.q;
        let m = rest / self.block() + 1;
        let inside = rest % self.block();
        if inside < self.q {
            VarKind::Y(m, inside)
        } else {
            let inside = inside - self.q;
            VarKind::U(m, inside / self.a(), inside % self.a())
        }
    }

    fn var(&self, v: usize) -> TruncPoly {
        TruncPoly::var(self.nvars(), v)
    }

    fn linear_matrix(&self, m: usize) -> Vec<Vec<TruncPoly>> {
        (0..self.q)
            .map(|j| {
                (0..self.q)
                    .map(|i| {
                        let e = Exponent::unit(self.q, i);
                        let a = self.alpha_index(&e).expect("order one is always laid out");
                        self.var(self.u(m, j, a))
                    })
                    .collect()
            })
            .collect()
    }

    fn det(&self, m: usize) -> TruncPoly {
        poly_det(self.nvars(), &self.linear_matrix(m))
    }

    fn adj(&self, m: usize) -> Vec<Vec<TruncPoly>> {
        adjugate(self.nvars(), &self.linear_matrix(m))
    }

    fn det_product(&self, powers: &[u32]) -> TruncPoly {
        let mut out = TruncPoly::one(self.nvars());
        for (s, &k) in powers.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let d = self.det(s + 1);
            for _ in 0..k {
                out = out.mul(&d).expect("shared layout ring");
            }
        }
        out
    }
}

fn poly_det(nvars: usize, m: &[Vec<TruncPoly>]) -> TruncPoly {
    let n = m.len();
    if n == 0 {
        return TruncPoly::one(nvars);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out = TruncPoly::zero(nvars);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<TruncPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(l, _)| *l != c)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let cof = m[0][c]
            .mul(&poly_det(nvars, &minor))
            .expect("shared layout ring");
        out = if c % 2 == 0 {
            out.add(&cof).expect("shared layout ring")
        } else {
            out.sub(&cof).expect("shared layout ring")
        };
    }
    out
}

fn adjugate(nvars: usize, m: &[Vec<TruncPoly>]) -> Vec<Vec<TruncPoly>> {
    let n = m.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    // Entry (i, j) is the (j, i) cofactor.
                    let minor: Vec<Vec<TruncPoly>> = (0..n)
                        .filter(|&r| r != j)
                        .map(|r| {
                            (0..n)
                                .filter(|&c| c != i)
                                .map(|c| m[r][c].clone())
                                .collect()
                        })
                        .collect();
                    let d = poly_det(nvars, &minor);
                    if (i + j) % 2 == 0 {
                        d
                    } else {
                        d.neg()
                    }
                })
                .collect()
        })
        .collect()
}

fn subsets(q: usize, s: usize) -> Vec<Vec<usize>> {
    if s == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(s);
    fn fill(q: usize, s: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == s {
            out.push(current.clone());
            return;
        }
        for i in start..q {
            current.push(i);
            fill(q, s, i + 1, current, out);
            current.pop();
        }
    }
    fill(q, s, 0, &mut current, &mut out);
    out
}

/// A polynomial divided by a monomial in the slot determinants, kept
/// unreduced.
#[derive(Clone, Debug)]
struct Frac {
    num: TruncPoly,
    dets: Vec<u32>,
}

impl Frac {
    fn zero(layout: &Layout) -> Self {
        Self {
            num: TruncPoly::zero(layout.nvars()),
            dets: vec![0; layout.p],
        }
    }

    fn from_poly(layout: &Layout, num: TruncPoly) -> Self {
        Self {
            num,
            dets: vec![0; layout.p],
        }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn add(&self, other: &Self, layout: &Layout) -> Self {
        let dets: Vec<u32> = self
            .dets
            .iter()
            .zip(&other.dets)
            .map(|(&a, &b)| a.max(b))
            .collect();
        let raise = |f: &Frac| {
            let extra: Vec<u32> = dets.iter().zip(&f.dets).map(|(&t, &h)| t - h).collect();
            f.num
                .mul(&layout.det_product(&extra))
                .expect("shared layout ring")
        };
        Self {
            num: raise(self).add(&raise(other)).expect("shared layout ring"),
            dets,
        }
    }

    fn neg(&self) -> Self {
        Self {
            num: self.num.neg(),
            dets: self.dets.clone(),
        }
    }

    fn sub(&self, other: &Self, layout: &Layout) -> Self {
        self.add(&other.neg(), layout)
    }

    fn mul(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num).expect("shared layout ring"),
            dets: self
                .dets
                .iter()
                .zip(&other.dets)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    fn mul_poly(&self, p: &TruncPoly) -> Self {
        Self {
            num: self.num.mul(p).expect("shared layout ring"),
            dets: self.dets.clone(),
        }
    }

    fn scale(&self, s: &Rational) -> Self {
        Self {
            num: self.num.scale(s),
            dets: self.dets.clone(),
        }
    }

    fn div_det(mut self, slot: usize) -> Self {
        self.dets[slot - 1] += 1;
        self
    }

    fn partial(&self, v: usize, layout: &Layout) -> Self {
        let mut out = Self {
            num: self.num.partial(v),
            dets: self.dets.clone(),
        };
        for (s, &k) in self.dets.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let dd = layout.det(s + 1).partial(v);
            if dd.is_zero() {
                continue;
            }
            let mut dets = self.dets.clone();
            dets[s] += 1;
            let scaled = self
                .num
                .mul(&dd)
                .expect("shared layout ring")
                .scale(&-Rational::from_integer(k.into()));
            out = out.add(&Frac { num: scaled, dets }, layout);
        }
        out
    }

    fn equiv(&self, other: &Self, layout: &Layout) -> bool {
        let left = self
            .num
            .mul(&layout.det_product(&other.dets))
            .expect("shared layout ring");
        let right = other
            .num
            .mul(&layout.det_product(&self.dets))
            .expect("shared layout ring");
        left == right
    }

    fn u_order(&self, layout: &Layout) -> u32 {
        let mut order = if self.dets.iter().any(|&k| k > 0) { 1 } else { 0 };
        for (e, _) in self.num.terms() {
            for (v, &m) in e.0.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                if let VarKind::U(_, _, a) = layout.classify(v) {
                    order = order.max(layout.alphas[a].total());
                }
            }
        }
        order
    }
}

/// A cochain on strings of `p` composable jets with an antisymmetric block
/// of fibre-direction indices: one scalar fraction per strictly increasing
/// index set. Both differentials act symbolically.
#[derive(Clone, Debug)]
pub struct JetCochain {
    layout: Layout,
    form_degree: usize,
    comps: BTreeMap<Vec<usize>, Frac>,
}

impl JetCochain {
    /// Number of variables in the coordinate ring for the given shape.
    pub fn nvars(q: usize, p: usize, w: u32) -> usize {
        Layout::new(q, p, w).nvars()
    }

    /// The `i`-th coordinate of the source of the innermost arrow.
    pub fn source_coordinate(q: usize, p: usize, w: u32, i: usize) -> TruncPoly {
        let layout = Layout::new(q, p, w);
        layout.var(layout.x(i))
    }

    /// The `i`-th coordinate of the target of the arrow in slot `m`
    /// (1-based, outermost first).
    pub fn target_coordinate(q: usize, p: usize, w: u32, m: usize, i: usize) -> Option<TruncPoly> {
        if m == 0 || m > p || i >= q {
            return None;
        }
        let layout = Layout::new(q, p, w);
        Some(layout.var(layout.y(m, i)))
    }

    /// The derivative coordinate of component `j` at `alpha` of the arrow
    /// in slot `m`.
    pub fn jet_coordinate(
        q: usize,
        p: usize,
        w: u32,
        m: usize,
        j: usize,
        alpha: &Exponent,
    ) -> Option<TruncPoly> {
        if m == 0 || m > p || j >= q {
            return None;
        }
        let layout = Layout::new(q, p, w);
        let a = layout.alpha_index(alpha)?;
        Some(layout.var(layout.u(m, j, a)))
    }

    /// Builds a cochain from polynomial components, one per strictly
    /// increasing index set.
    pub fn from_components(
        q: usize,
        p: usize,
        w: u32,
        form_degree: usize,
        components: Vec<(Vec<usize>, TruncPoly)>,
    ) -> Result<Self, JetError> {
        let layout = Layout::new(q, p, w);
        let mut comps = BTreeMap::new();
        for (idx, poly) in components {
            if idx.len() != form_degree
                || idx.windows(2).any(|v| v[0] >= v[1])
                || idx.iter().any(|&i| i >= q)
            {
                return Err(JetError::Invalid(format!(
                    "index set {:?} for form degree {} in dimension {}",
                    idx, form_degree, q
                )));
            }
            if poly.nvars() != layout.nvars() {
                return Err(JetError::Invalid(format!(
                    "component over {} variables in a ring of {} variables",
                    poly.nvars(),
                    layout.nvars()
                )));
            }
            if comps.contains_key(&idx) {
                return Err(JetError::Invalid(format!("repeated index set {:?}", idx)));
            }
            let f = Frac::from_poly(&layout, poly.with_cap(None));
            if !f.is_zero() {
                comps.insert(idx, f);
            }
        }
        Ok(Self {
            layout,
            form_degree,
            comps,
        })
    }

    /// Embeds a differential form on the base as a cochain on empty
    /// strings.
    pub fn from_base_form(q: usize, w: u32, form: &PolyForm) -> Result<Self, JetError> {
        if form.nvars() != q {
            return Err(JetError::Invalid(format!(
                "form over {} variables on a base of dimension {}",
                form.nvars(),
                q
            )));
        }
        let components = form
            .terms()
            .map(|(idx, coeff)| (idx.clone(), coeff.clone()))
            .collect();
        Self::from_components(q, 0, w, form.degree(), components)
    }

    /// Reads a cochain on empty strings back as a differential form.
    pub fn to_base_form(&self) -> Result<PolyForm, JetError> {
        if self.layout.p != 0 {
            return Err(JetError::Invalid(
                "only cochains on empty strings are base forms".into(),
            ));
        }
        let mut out = PolyForm::zero(self.layout.q, self.form_degree);
        for (idx, f) in &self.comps {
            out = out.add(&PolyForm::term(f.num.clone(), idx))?;
        }
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.layout.q
    }

    pub fn string_length(&self) -> usize {
        self.layout.p
    }

    pub fn order_budget(&self) -> u32 {
        self.layout.w
    }

    pub fn form_degree(&self) -> usize {
        self.form_degree
    }

    /// The highest derivative coordinate the cochain actually involves,
    /// counting the slot determinants in the denominators.
    pub fn order(&self) -> u32 {
        self.comps
            .values()
            .map(|f| f.u_order(&self.layout))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(Frac::is_zero)
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.layout == other.layout && self.form_degree == other.form_degree
    }

    /// Equality as rational functions, component by component.
    pub fn equiv(&self, other: &Self) -> bool {
        if !self.same_shape(other) {
            return false;
        }
        let keys: std::collections::BTreeSet<_> =
            self.comps.keys().chain(other.comps.keys()).collect();
        let zero = Frac::zero(&self.layout);
        keys.into_iter().all(|k| {
            self.comps
                .get(k)
                .unwrap_or(&zero)
                .equiv(other.comps.get(k).unwrap_or(&zero), &self.layout)
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, JetError> {
        if !self.same_shape(other) {
            return Err(JetError::Invalid(
                "cochains of different shapes cannot be added".into(),
            ));
        }
        let mut comps = self.comps.clone();
        for (k, f) in &other.comps {
            let entry = comps.remove(k).unwrap_or_else(|| Frac::zero(&self.layout));
            let sum = entry.add(f, &self.layout);
            if !sum.is_zero() {
                comps.insert(k.clone(), sum);
            }
        }
        Ok(Self {
            layout: self.layout.clone(),
            form_degree: self.form_degree,
            comps,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, JetError> {
        self.add(&other.scalar_mul(&-Rational::from_integer(1.into())))
    }

    pub fn scalar_mul(&self, s: &Rational) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|(k, f)| (k.clone(), f.scale(s)))
            .collect();
        Self {
            layout: self.layout.clone(),
            form_degree: self.form_degree,
            comps,
        }
    }

    /// Evaluates every component on a concrete string: `jets` lists the
    /// arrows outermost first, and `base` is the source of the innermost
    /// one.
    pub fn evaluate(
        &self,
        base: &[Rational],
        jets: &[PolyJet],
    ) -> Result<BTreeMap<Vec<usize>, Rational>, JetError> {
        let layout = &self.layout;
        let q = layout.q;
        if base.len() != q {
            return Err(JetError::Invalid(format!(
                "base point of dimension {} in dimension {}",
                base.len(),
                q
            )));
        }
        if jets.len() != layout.p {
            return Err(JetError::Invalid(format!(
                "{} jets on a string of length {}",
                jets.len(),
                layout.p
            )));
        }
        for g in jets {
            if g.dimension() != q {
                return Err(JetError::Invalid(format!(
                    "jet of dimension {} in dimension {}",
                    g.dimension(),
                    q
                )));
            }
        }
        for pair in jets.windows(2) {
            if pair[0].source() != pair[1].target() {
                return Err(JetError::NonComposable(
                    "adjacent arrows do not share their middle point".into(),
                ));
            }
        }
        if let Some(last) = jets.last() {
            if last.source() != base {
                return Err(JetError::NonComposable(
                    "the base point is not the source of the innermost arrow".into(),
                ));
            }
            let needed = self.order();
            let available = jets.iter().map(PolyJet::order).min().unwrap();
            if available < needed {
                return Err(JetError::OrderExhausted { needed, available });
            }
        }
        let mut coords = vec![Rational::zero(); layout.nvars()];
        coords[..q].clone_from_slice(base);
        for (m, g) in jets.iter().enumerate() {
            let m = m + 1;
            for i in 0..q {
                coords[layout.y(m, i)] = g.target()[i].clone();
            }
            for j in 0..q {
                for (a, alpha) in layout.alphas.iter().enumerate() {
                    if alpha.total() <= g.order() {
                        coords[layout.u(m, j, a)] = g.coefficient(j, alpha);
                    }
                }
            }
        }
        let det_values: Vec<Rational> = (1..=layout.p)
            .map(|m| layout.det(m).eval(&coords))
            .collect::<Result<_, _>>()?;
        let mut out = BTreeMap::new();
        for (idx, f) in &self.comps {
            let mut value = f.num.eval(&coords)?;
            for (s, &k) in f.dets.iter().enumerate() {
                for _ in 0..k {
                    value /= det_values[s].clone();
                }
            }
            out.insert(idx.clone(), value);
        }
        Ok(out)
    }
}

/// Composite derivative coordinates for merging (1-based) output slots `i`
/// and `i + 1`: each entry is the coordinate of the composed arrow as a
/// polynomial in the output string variables.
fn composite_coefficients(layout: &Layout, i: usize) -> Result<Vec<Vec<TruncPoly>>, JetError> {
    let q = layout.q;
    let w = layout.w;
    let n = layout.nvars();
    let aux = q + n;
    let embed = |slot: usize, j: usize| {
        let mut acc = TruncPoly::zero(aux);
        for (a, alpha) in layout.alphas.iter().enumerate() {
            let mut exp = vec![0u32; aux];
            exp[..q].copy_from_slice(&alpha.0);
            exp[q + layout.u(slot, j, a)] = 1;
            let term = TruncPoly::monomial(
                Exponent(exp),
                Rational::from_integer(1.into()) / alpha_factorial(alpha),
            );
            acc = acc.add(&term).expect("shared auxiliary ring");
        }
        acc
    };
    let inner: Vec<TruncPoly> = (0..q).map(|j| embed(i + 1, j)).collect();
    let images: Vec<TruncPoly> = (0..aux)
        .map(|v| {
            if v < q {
                inner[v].clone()
            } else {
                TruncPoly::var(aux, v)
            }
        })
        .collect();
    let mut out = vec![vec![TruncPoly::zero(n); layout.a()]; q];
    for j in 0..q {
        let composed = embed(i, j).substitute(&images)?;
        for (e, coef) in composed.terms() {
            let xi = Exponent(e.0[..q].to_vec());
            if xi.total() == 0 || xi.total() > w {
                continue;
            }
            let a = layout.alpha_index(&xi).expect("within the order budget");
            let rest = TruncPoly::monomial(
                Exponent(e.0[q..].to_vec()),
                coef * &alpha_factorial(&xi),
            );
            out[j][a] = out[j][a].add(&rest).expect("shared layout ring");
        }
    }
    Ok(out)
}

/// String-direction differential: the alternating sum over dropping the
/// outermost arrow (transporting fibre directions through it), composing
/// each adjacent pair symbolically, and dropping the innermost arrow.
pub fn haefliger_delta(c: &JetCochain) -> Result<JetCochain, JetError> {
    let q = c.layout.q;
    let p = c.layout.p;
    let w = c.layout.w;
    let s = c.form_degree;
    let out_layout = Layout::new(q, p + 1, w);
    let mut comps: BTreeMap<Vec<usize>, Frac> = BTreeMap::new();
    let accumulate = |comps: &mut BTreeMap<Vec<usize>, Frac>, key: Vec<usize>, f: Frac| {
        if f.is_zero() {
            return;
        }
        let entry = comps.remove(&key).unwrap_or_else(|| Frac::zero(&out_layout));
        let sum = entry.add(&f, &out_layout);
        if !sum.is_zero() {
            comps.insert(key, sum);
        }
    };

    // Dropping the outermost arrow shifts every slot outward and pulls the
    // fibre directions back through the dropped arrow.
    let shift_out: Vec<TruncPoly> = (0..c.layout.nvars())
        .map(|v| match c.layout.classify(v) {
            VarKind::X(i) => out_layout.var(out_layout.x(i)),
            VarKind::Y(m, i) => out_layout.var(out_layout.y(m + 1, i)),
            VarKind::U(m, j, a) => out_layout.var(out_layout.u(m + 1, j, a)),
        })
        .collect();
    let adj1 = out_layout.adj(1);
    for target in subsets(q, s) {
        let mut acc = Frac::zero(&out_layout);
        for (source, cj) in &c.comps {
            let minor: Vec<Vec<TruncPoly>> = source
                .iter()
                .map(|&r| target.iter().map(|&col| adj1[r][col].clone()).collect())
                .collect();
            let minor = poly_det(out_layout.nvars(), &minor);
            if minor.is_zero() {
                continue;
            }
            let num = cj
                .num
                .substitute(&shift_out)?
                .mul(&minor)
                .expect("shared layout ring");
            let mut dets = vec![0u32; p + 1];
            dets[0] = s as u32;
            dets[1..].copy_from_slice(&cj.dets);
            acc = acc.add(&Frac { num, dets }, &out_layout);
        }
        accumulate(&mut comps, target, acc);
    }

    // Composing slots i and i + 1 of the longer string.
    for i in 1..=p {
        let composite = composite_coefficients(&out_layout, i)?;
        let images: Vec<TruncPoly> = (0..c.layout.nvars())
            .map(|v| match c.layout.classify(v) {
                VarKind::X(l) => out_layout.var(out_layout.x(l)),
                VarKind::Y(m, l) if m <= i => out_layout.var(out_layout.y(m, l)),
                VarKind::Y(m, l) => out_layout.var(out_layout.y(m + 1, l)),
                VarKind::U(m, j, a) if m < i => out_layout.var(out_layout.u(m, j, a)),
                VarKind::U(m, j, a) if m > i => out_layout.var(out_layout.u(m + 1, j, a)),
                VarKind::U(_, j, a) => composite[j][a].clone(),
            })
            .collect();
        for (key, cj) in &c.comps {
            let mut dets = vec![0u32; p + 1];
            for (m0, &k) in cj.dets.iter().enumerate() {
                let m = m0 + 1;
                if m < i {
                    dets[m - 1] += k;
                } else if m == i {
                    // The determinant of a composite is the product of the
                    // factors' determinants.
                    dets[i - 1] += k;
                    dets[i] += k;
                } else {
                    dets[m] += k;
                }
            }
            let num = cj.num.substitute(&images)?;
            let num = if i % 2 == 1 { num.neg() } else { num };
            accumulate(&mut comps, key.clone(), Frac { num, dets });
        }
    }

    // Dropping the innermost arrow re-bases the remaining string at its
    // target.
    {
        let images: Vec<TruncPoly> = (0..c.layout.nvars())
            .map(|v| match c.layout.classify(v) {
                VarKind::X(i) => out_layout.var(out_layout.y(p + 1, i)),
                VarKind::Y(m, i) => out_layout.var(out_layout.y(m, i)),
                VarKind::U(m, j, a) => out_layout.var(out_layout.u(m, j, a)),
            })
            .collect();
        for (key, cj) in &c.comps {
            let mut dets = vec![0u32; p + 1];
            dets[..p].copy_from_slice(&cj.dets);
            let num = cj.num.substitute(&images)?;
            let num = if (p + 1) % 2 == 1 { num.neg() } else { num };
            accumulate(&mut comps, key.clone(), Frac { num, dets });
        }
    }

    Ok(JetCochain {
        layout: out_layout,
        form_degree: s,
        comps,
    })
}

/// Fibre-direction differential: antisymmetrized directional derivatives
/// along the canonical deformation of the whole string, where a motion of
/// the final target is carried back through each arrow by the inverse of
/// its linear part and every derivative coordinate slides holonomically.
/// Consumes one order of the budget.
pub fn haefliger_dc(c: &JetCochain) -> Result<JetCochain, JetError> {
    let layout = &c.layout;
    let q = layout.q;
    let p = layout.p;
    let needed = c.order() + 1;
    if needed > layout.w {
        return Err(JetError::OrderExhausted {
            needed,
            available: layout.w,
        });
    }
    let chains: Vec<Vec<Vec<Frac>>> = (0..q)
        .map(|k| {
            let mut levels = Vec::with_capacity(p + 1);
            let mut d: Vec<Frac> = (0..q)
                .map(|i| {
                    if i == k {
                        Frac::from_poly(layout, TruncPoly::one(layout.nvars()))
                    } else {
                        Frac::zero(layout)
                    }
                })
                .collect();
            levels.push(d.clone());
            for m in 1..=p {
                let adj = layout.adj(m);
                d = (0..q)
                    .map(|i| {
                        let mut acc = Frac::zero(layout);
                        for (l, prev) in d.iter().enumerate() {
                            acc = acc.add(&prev.mul_poly(&adj[i][l]), layout);
                        }
                        acc.div_det(m)
                    })
                    .collect();
                levels.push(d.clone());
            }
            levels
        })
        .collect();

    let motion = |k: usize, v: usize| -> Result<Frac, JetError> {
        match layout.classify(v) {
            VarKind::X(i) => Ok(chains[k][p][i].clone()),
            VarKind::Y(m, i) => Ok(chains[k][m - 1][i].clone()),
            VarKind::U(m, j, a) => {
                let alpha = &layout.alphas[a];
                let mut acc = Frac::zero(layout);
                for i in 0..q {
                    let raised = alpha.raised(i);
                    let ra = layout
                        .alpha_index(&raised)
                        .ok_or(JetError::OrderExhausted {
                            needed: alpha.total() + 1,
                            available: layout.w,
                        })?;
                    let slid = chains[k][m][i].mul_poly(&layout.var(layout.u(m, j, ra)));
                    acc = acc.add(&slid, layout);
                }
                Ok(acc)
            }
        }
    };

    let derive = |k: usize, f: &Frac| -> Result<Frac, JetError> {
        let mut out = Frac::zero(layout);
        for v in 0..layout.nvars() {
            let pf = f.partial(v, layout);
            if pf.is_zero() {
                continue;
            }
            out = out.add(&motion(k, v)?.mul(&pf), layout);
        }
        Ok(out)
    };

    let mut comps = BTreeMap::new();
    for idx in subsets(q, c.form_degree + 1) {
        let mut acc = Frac::zero(layout);
        for (a, &k) in idx.iter().enumerate() {
            let rest: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(_, &i)| i)
                .collect();
            let Some(cj) = c.comps.get(&rest) else {
                continue;
            };
            let term = derive(k, cj)?;
            let term = if a % 2 == 1 { term.neg() } else { term };
            acc = acc.add(&term, layout);
        }
        if !acc.is_zero() {
            comps.insert(idx, acc);
        }
    }
    Ok(JetCochain {
        layout: layout.clone(),
        form_degree: c.form_degree + 1,
        comps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{jet_compose, random_jet};
    use linalg::{rat, rat_int};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xp(exp: Vec<u32>, num: i64) -> TruncPoly {
        TruncPoly::monomial(Exponent(exp), rat_int(num))
    }

    fn pt(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn adjugate_times_matrix_is_the_determinant() {
        let layout = Layout::new(2, 1, 2);
        let m = layout.linear_matrix(1);
        let adj = layout.adj(1);
        let det = layout.det(1);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = TruncPoly::zero(layout.nvars());
                for l in 0..2 {
                    acc = acc.add(&m[i][l].mul(&adj[l][j]).unwrap()).unwrap();
                }
                let expected = if i == j {
                    det.clone()
                } else {
                    TruncPoly::zero(layout.nvars())
                };
                assert_eq!(acc, expected);
            }
        }
    }

    #[test]
    fn base_forms_round_trip() {
        let form = PolyForm::term(xp(vec![1, 0], 3), &[1])
            .add(&PolyForm::term(xp(vec![0, 2], 1), &[0]))
            .unwrap();
        let c = JetCochain::from_base_form(2, 2, &form).unwrap();
        assert_eq!(c.string_length(), 0);
        assert_eq!(c.form_degree(), 1);
        assert!(c.to_base_form().unwrap().sub(&form).unwrap().is_zero());
    }

    #[test]
    fn fibre_differential_is_de_rham_on_base_forms() {
        let form = PolyForm::term(xp(vec![1, 2], 5), &[0]);
        let c = JetCochain::from_base_form(2, 1, &form).unwrap();
        let dc = haefliger_dc(&c).unwrap();
        let expected = JetCochain::from_base_form(2, 1, &form.de_rham_d()).unwrap();
        assert!(dc.equiv(&expected));
    }

    #[test]
    fn string_differential_of_a_function_compares_ends() {
        // On functions of the base point, the string differential is the
        // value at the source minus the value at the target.
        let f = xp(vec![2], 1);
        let c =
            JetCochain::from_components(1, 0, 2, 0, vec![(vec![], f)]).unwrap();
        let d = haefliger_delta(&c).unwrap();
        let x = JetCochain::source_coordinate(1, 1, 2, 0);
        let y = JetCochain::target_coordinate(1, 1, 2, 1, 0).unwrap();
        let expected = JetCochain::from_components(
            1,
            1,
            2,
            0,
            vec![(vec![], x.mul(&x).unwrap().sub(&y.mul(&y).unwrap()).unwrap())],
        )
        .unwrap();
        assert!(d.equiv(&expected));
    }

    #[test]
    fn the_two_differentials_commute_on_functions() {
        // Both orders of applying the differentials to x² give the same
        // one-form on single arrows; its value at the jet of 2x based at 1
        // is 2·1/2 − 2·2 = −3.
        let c = JetCochain::from_components(1, 0, 2, 0, vec![(vec![], xp(vec![2], 1))]).unwrap();
        let dc_then_delta = haefliger_delta(&haefliger_dc(&c).unwrap()).unwrap();
        let delta_then_dc = haefliger_dc(&haefliger_delta(&c).unwrap()).unwrap();
        assert!(dc_then_delta.equiv(&delta_then_dc));
        let g = PolyJet::of_polynomial(&[xp(vec![1], 2)], pt(&[1]), 2).unwrap();
        let values = dc_then_delta.evaluate(&pt(&[1]), &[g]).unwrap();
        assert_eq!(values[&vec![0]], rat_int(-3));
    }

    #[test]
    fn string_differential_squares_to_zero() {
        let u = JetCochain::jet_coordinate(1, 1, 3, 1, 0, &Exponent(vec![1])).unwrap();
        let c = JetCochain::from_components(1, 1, 3, 0, vec![(vec![], u)]).unwrap();
        let dd = haefliger_delta(&haefliger_delta(&c).unwrap()).unwrap();
        assert!(dd.is_zero());
        let f = JetCochain::from_components(1, 0, 3, 0, vec![(vec![], xp(vec![3], 2))]).unwrap();
        assert!(haefliger_delta(&haefliger_delta(&f).unwrap())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn fibre_differential_squares_to_zero_on_strings() {
        let u = JetCochain::jet_coordinate(2, 1, 3, 1, 0, &Exponent(vec![1, 0])).unwrap();
        let c = JetCochain::from_components(2, 1, 3, 0, vec![(vec![], u)]).unwrap();
        let dd = haefliger_dc(&haefliger_dc(&c).unwrap()).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn differentials_commute_on_jet_coordinates() {
        let u = JetCochain::jet_coordinate(1, 1, 3, 1, 0, &Exponent(vec![1])).unwrap();
        let c = JetCochain::from_components(1, 1, 3, 0, vec![(vec![], u)]).unwrap();
        let ab = haefliger_dc(&haefliger_delta(&c).unwrap()).unwrap();
        let ba = haefliger_delta(&haefliger_dc(&c).unwrap()).unwrap();
        assert!(ab.equiv(&ba));
    }

    #[test]
    fn string_differential_matches_pointwise_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = JetCochain::jet_coordinate(1, 1, 3, 1, 0, &Exponent(vec![2])).unwrap();
        let c = JetCochain::from_components(1, 1, 3, 0, vec![(vec![], u)]).unwrap();
        let d = haefliger_delta(&c).unwrap();
        for _ in 0..5 {
            let h = random_jet(&mut rng, 1, 3, pt(&[0]), pt(&[1]));
            let g = random_jet(&mut rng, 1, 3, pt(&[1]), pt(&[2]));
            let composite = jet_compose(&g, &h, 3).unwrap();
            let whole = d.evaluate(&pt(&[0]), &[g.clone(), h.clone()]).unwrap();
            let drop_outer = c.evaluate(&pt(&[0]), &[h.clone()]).unwrap();
            let merged = c.evaluate(&pt(&[0]), &[composite]).unwrap();
            let drop_inner = c.evaluate(&pt(&[1]), &[g.clone()]).unwrap();
            let expected = &drop_outer[&vec![]] - &merged[&vec![]] + &drop_inner[&vec![]];
            assert_eq!(whole[&vec![]], expected);
        }
    }

    #[test]
    fn fibre_differential_consumes_exactly_one_order() {
        let u = JetCochain::jet_coordinate(1, 1, 2, 1, 0, &Exponent(vec![2])).unwrap();
        let c = JetCochain::from_components(1, 1, 2, 0, vec![(vec![], u)]).unwrap();
        assert!(matches!(
            haefliger_dc(&c),
            Err(JetError::OrderExhausted {
                needed: 3,
                available: 2
            })
        ));
        let u = JetCochain::jet_coordinate(1, 1, 3, 1, 0, &Exponent(vec![2])).unwrap();
        let c = JetCochain::from_components(1, 1, 3, 0, vec![(vec![], u)]).unwrap();
        assert!(haefliger_dc(&c).is_ok());
    }

    #[test]
    fn transport_divides_by_the_linear_part_on_the_line() {
        // δ of the base form dx picks up the reciprocal of the slope.
        let form = PolyForm::dx(1, 0);
        let c = JetCochain::from_base_form(1, 2, &form).unwrap();
        let d = haefliger_delta(&c).unwrap();
        let g = PolyJet::of_polynomial(&[xp(vec![1], 4)], pt(&[0]), 2).unwrap();
        let values = d.evaluate(&pt(&[0]), &[g]).unwrap();
        assert_eq!(values[&vec![0]], rat(1, 4) - rat_int(1));
    }

    #[test]
    fn evaluation_checks_the_string_shape() {
        let u = JetCochain::jet_coordinate(1, 2, 2, 1, 0, &Exponent(vec![1])).unwrap();
        let c = JetCochain::from_components(1, 2, 2, 0, vec![(vec![], u)]).unwrap();
        let g = PolyJet::unit(pt(&[0]), 2);
        let h = PolyJet::unit(pt(&[1]), 2);
        assert!(matches!(
            c.evaluate(&pt(&[1]), &[g.clone(), h]),
            Err(JetError::NonComposable(_))
        ));
        assert!(matches!(
            c.evaluate(&pt(&[1]), &[g.clone(), g.clone()]),
            Err(JetError::NonComposable(_))
        ));
        assert!(matches!(
            c.evaluate(&pt(&[0]), &[g]),
            Err(JetError::Invalid(_))
        ));
    }
}
