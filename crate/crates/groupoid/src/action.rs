use std::collections::BTreeMap;

use formal::{Exponent, PolyForm, TruncPoly};
use linalg::{
    cohomology_at, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis, Rational,
    SparseRationalMatrix,
};
use num_traits::Zero;

use crate::GroupoidError;

fn one() -> Rational {
    Rational::from_integer(1.into())
}

/// A finite matrix group acting linearly on a formal coordinate patch. The
/// list must be closed under products, contain the identity, and consist of
/// invertible matrices; the multiplication and inverse tables are built and
/// checked at construction.
#[derive(Clone, Debug)]
pub struct LinearAction {
    nvars: usize,
    labels: Vec<String>,
    mats: Vec<SparseRationalMatrix>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    identity: usize,
}

impl LinearAction {
    pub fn new(
        labels: Vec<String>,
        mats: Vec<SparseRationalMatrix>,
    ) -> Result<Self, GroupoidError> {
        let fail = |msg: String| Err(GroupoidError::NotAGroup(msg));
        if mats.is_empty() || labels.len() != mats.len() {
            return fail("one label per matrix, at least one matrix".into());
        }
        let nvars = mats[0].rows();
        if nvars == 0 {
            return fail("matrices must act on at least one variable".into());
        }
        for (i, m) in mats.iter().enumerate() {
            if m.rows() != nvars || m.cols() != nvars {
                return fail(format!("matrix {i} is not {nvars}x{nvars}"));
            }
            if m.rank() < nvars {
                return fail(format!("matrix {i} is singular"));
            }
        }
        for i in 0..mats.len() {
            for j in (i + 1)..mats.len() {
                if mats[i] == mats[j] {
                    return fail(format!("matrices {i} and {j} coincide"));
                }
            }
        }
        let position = |m: &SparseRationalMatrix| mats.iter().position(|k| k == m);
        let mut mul = Vec::with_capacity(mats.len());
        for a in &mats {
            let mut row = Vec::with_capacity(mats.len());
            for b in &mats {
                let Some(k) = position(&a.matmul(b)?) else {
                    return fail("set is not closed under products".into());
                };
                row.push(k);
            }
            mul.push(row);
        }
        let Some(identity) = position(&SparseRationalMatrix::identity(nvars)) else {
            return fail("identity matrix is missing".into());
        };
        let mut inv = Vec::with_capacity(mats.len());
        for g in 0..mats.len() {
            let Some(h) = (0..mats.len()).find(|&h| mul[g][h] == identity) else {
                return fail(format!("element {g} has no inverse in the set"));
            };
            inv.push(h);
        }
        Ok(Self {
            nvars,
            labels,
            mats,
            mul,
            inv,
            identity,
        })
    }

    /// The one-element group acting on `nvars` variables.
    pub fn trivial(nvars: usize) -> Self {
        Self::new(vec!["e".into()], vec![SparseRationalMatrix::identity(nvars)])
            .expect("identity alone is a group")
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    pub fn matrix(&self, g: usize) -> &SparseRationalMatrix {
        &self.mats[g]
    }

    pub fn multiply(&self, g: usize, h: usize) -> usize {
        self.mul[g][h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inv[g]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// The group element `g` acting on a form from the left, via the
    /// pullback along the linear map of `g⁻¹`.
    pub fn act(&self, g: usize, form: &PolyForm) -> Result<PolyForm, GroupoidError> {
        pullback_linear(form, &self.mats[self.inv[g]])
    }
}

/// Pullback of a polynomial form along the linear substitution
/// `xᵢ ↦ Σⱼ Aᵢⱼ xⱼ`, acting on coefficients and on each `dxᵢ` alike.
pub fn pullback_linear(
    form: &PolyForm,
    a: &SparseRationalMatrix,
) -> Result<PolyForm, GroupoidError> {
    let n = form.nvars();
    if a.rows() != n || a.cols() != n {
        return Err(GroupoidError::DimMismatch(format!(
            "{}x{} matrix against a form over {n} variables",
            a.rows(),
            a.cols()
        )));
    }
    let mut images = Vec::with_capacity(n);
    let mut one_forms = Vec::with_capacity(n);
    for i in 0..n {
        let mut img = TruncPoly::zero(n);
        let mut omega = PolyForm::zero(n, 1);
        for j in 0..n {
            let c = a.get(i, j);
            if c.is_zero() {
                continue;
            }
            img = img.add(&TruncPoly::var(n, j).scale(&c))?;
            omega = omega.add(&PolyForm::dx(n, j).scale(&c))?;
        }
        images.push(img);
        one_forms.push(omega);
    }
    let mut out = PolyForm::zero(n, form.degree());
    for (idx, coeff) in form.terms() {
        let mut part = PolyForm::from_function(coeff.substitute(&images)?);
        for &i in idx {
            part = part.wedge(&one_forms[i])?;
        }
        out = out.add(&part)?;
    }
    Ok(out)
}

fn tuples(order: usize, level: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(out.len() * order);
        for t in &out {
            for g in 0..order {
                let mut u = t.clone();
                u.push(g);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn fill_exponent(slot: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
    if slot + 1 == cur.len() {
        cur[slot] = left;
        out.push(Exponent(cur.clone()));
        cur[slot] = 0;
        return;
    }
    for d in 0..=left {
        cur[slot] = d;
        fill_exponent(slot + 1, left - d, cur, out);
    }
    cur[slot] = 0;
}

fn exponents_up_to(nvars: usize, max_total: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    for deg in 0..=max_total {
        fill_exponent(0, deg, &mut cur, &mut out);
    }
    out
}

fn increasing_subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, q, &mut Vec::with_capacity(q), &mut out);
    out
}

fn basis_form(exp: &Exponent, dxs: &[usize]) -> PolyForm {
    PolyForm::term(TruncPoly::monomial(exp.clone(), one()), dxs)
}

fn expand_form(
    form: &PolyForm,
    index: &BTreeMap<(Exponent, Vec<usize>), usize>,
) -> Vec<(usize, Rational)> {
    let mut out = Vec::new();
    for (idx, poly) in form.terms() {
        for (exp, c) in poly.terms() {
            let pos = *index
                .get(&(exp.clone(), idx.clone()))
                .expect("graded operations stay inside the basis");
            out.push((pos, c.clone()));
        }
    }
    out
}

/// The double complex of group cochains valued in polynomial forms:
/// `C^{p,q}` holds functions from `p`-tuples of group elements to degree-`q`
/// forms whose coefficient degree plus `q` stays within the cap, so both
/// differentials preserve the grading exactly. The horizontal `δ` is the
/// group differential through the pullback action, the vertical arrow is
/// the coordinatewise exterior derivative, and the total differential is
/// `D = δ + (−1)^p d`.
///
/// Truncation at `p_max` cuts the complex, so total degrees at the upper
/// boundary see spurious classes; read the table strictly below `p_max`.
#[derive(Clone, Debug)]
pub struct ActionBicomplex {
    action: LinearAction,
    cap: u32,
    p_max: usize,
    q_max: usize,
    strings: Vec<Vec<Vec<usize>>>,
    string_index: Vec<BTreeMap<Vec<usize>, usize>>,
    forms: Vec<Vec<(Exponent, Vec<usize>)>>,
    form_index: Vec<BTreeMap<(Exponent, Vec<usize>), usize>>,
    horiz: Vec<Vec<SparseRationalMatrix>>,
    vert: Vec<Vec<SparseRationalMatrix>>,
}

impl ActionBicomplex {
    pub fn new(
        action: LinearAction,
        cap: u32,
        p_max: usize,
        q_max: usize,
    ) -> Result<Self, GroupoidError> {
        let need = (p_max + q_max + 1) as u32;
        if cap < need {
            return Err(GroupoidError::CapTooSmall { cap, need });
        }
        let n = action.nvars();
        let q_eff = q_max.min(n);

        let strings: Vec<Vec<Vec<usize>>> = (0..=p_max)
            .map(|p| tuples(action.order(), p))
            .collect();
        let string_index: Vec<BTreeMap<Vec<usize>, usize>> = strings
            .iter()
            .map(|level| {
                level
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i))
                    .collect()
            })
            .collect();

        let mut forms = Vec::with_capacity(q_eff + 1);
        for q in 0..=q_eff {
            let mut level = Vec::new();
            for dxs in increasing_subsets(n, q) {
                for exp in exponents_up_to(n, cap - q as u32) {
                    level.push((exp, dxs.clone()));
                }
            }
            forms.push(level);
        }
        let form_index: Vec<BTreeMap<(Exponent, Vec<usize>), usize>> = forms
            .iter()
            .map(|level| {
                level
                    .iter()
                    .enumerate()
                    .map(|(i, (e, d))| ((e.clone(), d.clone()), i))
                    .collect()
            })
            .collect();

        // Expansion of the pullback action of each group element on each
        // graded form basis, reused across all string blocks.
        let mut action_tables: Vec<Vec<Vec<Vec<(usize, Rational)>>>> = Vec::new();
        for q in 0..=q_eff {
            let mut per_element = Vec::with_capacity(action.order());
            for g in 0..action.order() {
                let table = forms[q]
                    .iter()
                    .map(|(exp, dxs)| {
                        let moved = action.act(g, &basis_form(exp, dxs))?;
                        Ok(expand_form(&moved, &form_index[q]))
                    })
                    .collect::<Result<Vec<_>, GroupoidError>>()?;
                per_element.push(table);
            }
            action_tables.push(per_element);
        }

        let mut horiz = Vec::new();
        for p in 0..p_max {
            let mut per_q = Vec::with_capacity(q_eff + 1);
            for q in 0..=q_eff {
                let fdim = forms[q].len();
                let mut m = SparseRationalMatrix::zero(
                    strings[p + 1].len() * fdim,
                    strings[p].len() * fdim,
                );
                for (t_idx, t) in strings[p + 1].iter().enumerate() {
                    let row = t_idx * fdim;

                    let face = t[1..].to_vec();
                    let col = string_index[p][&face] * fdim;
                    for (f_in, image) in action_tables[q][t[0]].iter().enumerate() {
                        for (f_out, c) in image {
                            m.add_to(row + f_out, col + f_in, c.clone())?;
                        }
                    }

                    let mut block = |face: Vec<usize>, sign: i64| {
                        let col = string_index[p][&face] * fdim;
                        for k in 0..fdim {
                            m.add_to(row + k, col + k, Rational::from_integer(sign.into()))
                                .expect("block in range");
                        }
                    };
                    for i in 1..=p {
                        let mut face = t.clone();
                        face[i - 1] = action.multiply(face[i - 1], face[i]);
                        face.remove(i);
                        block(face, if i % 2 == 0 { 1 } else { -1 });
                    }
                    block(t[..p].to_vec(), if (p + 1) % 2 == 0 { 1 } else { -1 });
                }
                per_q.push(m);
            }
            horiz.push(per_q);
        }

        let mut vert = Vec::new();
        for p in 0..=p_max {
            let mut per_q = Vec::with_capacity(q_eff);
            for q in 0..q_eff {
                let (fdim_in, fdim_out) = (forms[q].len(), forms[q + 1].len());
                let mut m = SparseRationalMatrix::zero(
                    strings[p].len() * fdim_out,
                    strings[p].len() * fdim_in,
                );
                let d_table: Vec<Vec<(usize, Rational)>> = forms[q]
                    .iter()
                    .map(|(exp, dxs)| {
                        expand_form(&basis_form(exp, dxs).de_rham_d(), &form_index[q + 1])
                    })
                    .collect();
                for s_idx in 0..strings[p].len() {
                    for (f_in, image) in d_table.iter().enumerate() {
                        for (f_out, c) in image {
                            m.add_to(s_idx * fdim_out + f_out, s_idx * fdim_in + f_in, c.clone())?;
                        }
                    }
                }
                per_q.push(m);
            }
            vert.push(per_q);
        }

        Ok(Self {
            action,
            cap,
            p_max,
            q_max: q_eff,
            strings,
            string_index,
            forms,
            form_index,
            horiz,
            vert,
        })
    }

    pub fn action(&self) -> &LinearAction {
        &self.action
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn level_cap(&self) -> usize {
        self.p_max
    }

    /// Largest form degree actually carried (the requested bound clipped at
    /// the number of variables).
    pub fn degree_cap(&self) -> usize {
        self.q_max
    }

    fn blocks_of(&self, m: usize) -> Vec<(usize, usize)> {
        (0..=self.p_max.min(m))
            .filter_map(|p| {
                let q = m - p;
                (q <= self.q_max).then_some((p, q))
            })
            .collect()
    }

    pub fn block_dimension(&self, p: usize, q: usize) -> usize {
        self.strings[p].len() * self.forms[q].len()
    }

    pub fn total_dimension(&self, m: usize) -> usize {
        self.blocks_of(m)
            .into_iter()
            .map(|(p, q)| self.block_dimension(p, q))
            .sum()
    }

    fn block_offsets(&self, m: usize) -> BTreeMap<(usize, usize), usize> {
        let mut at = 0;
        let mut out = BTreeMap::new();
        for (p, q) in self.blocks_of(m) {
            out.insert((p, q), at);
            at += self.block_dimension(p, q);
        }
        out
    }

    /// The total differential `D = δ + (−1)^p d` from total degree `m` to
    /// `m + 1`.
    pub fn total_differential(&self, m: usize) -> SparseRationalMatrix {
        let from_offsets = self.block_offsets(m);
        let to_offsets = self.block_offsets(m + 1);
        let mut out =
            SparseRationalMatrix::zero(self.total_dimension(m + 1), self.total_dimension(m));
        for (&(p, q), &col) in &from_offsets {
            if let Some(&row) = to_offsets.get(&(p + 1, q)) {
                for (r, c, v) in self.horiz[p][q].iter() {
                    out.add_to(row + r, col + c, v.clone()).expect("in range");
                }
            }
            if let Some(&row) = to_offsets.get(&(p, q + 1)) {
                let sign = if p % 2 == 0 { one() } else { -one() };
                for (r, c, v) in self.vert[p][q].iter() {
                    out.add_to(row + r, col + c, v * &sign).expect("in range");
                }
            }
        }
        out
    }

    fn basis_label(&self, string: &[usize], exp: &Exponent, dxs: &[usize]) -> String {
        let form = basis_form(exp, dxs);
        if string.is_empty() {
            format!("{form}")
        } else {
            let inner = string
                .iter()
                .map(|&g| self.action.label(g).to_string())
                .collect::<Vec<_>>()
                .join("|");
            format!("[{inner}]·{form}")
        }
    }

    fn total_labels(&self, m: usize) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.total_dimension(m));
        for (p, q) in self.blocks_of(m) {
            for s in &self.strings[p] {
                for (exp, dxs) in &self.forms[q] {
                    labels.push(self.basis_label(s, exp, dxs));
                }
            }
        }
        labels
    }

    /// Total cohomology through degree `m_max`.
    pub fn total_cohomology(&self, m_max: usize) -> Result<CohomologyTable, GroupoidError> {
        let diffs: Vec<SparseRationalMatrix> =
            (0..=m_max).map(|m| self.total_differential(m)).collect();
        let mut table = CohomologyTable::new();
        for m in 0..=m_max {
            let d_in = if m == 0 {
                SparseRationalMatrix::zero(self.total_dimension(0), 0)
            } else {
                diffs[m - 1].clone()
            };
            let cohom = cohomology_at(&d_in, &diffs[m])?;
            let labels = LabeledBasis::new(self.total_labels(m))?;
            let representatives = cohom
                .representatives
                .iter()
                .map(|v| render_vector(v, &labels))
                .collect();
            table.insert(
                m,
                DegreeCohomology {
                    dim: cohom.dimension,
                    representatives,
                },
            );
        }
        Ok(table)
    }

    /// Embeds a pure-bidegree cochain into the total coordinate vector of
    /// its total degree.
    pub fn cochain_coordinates(&self, c: &ActionCochain) -> Result<Vec<Rational>, GroupoidError> {
        let (p, q) = (c.level, c.degree);
        if p > self.p_max || q > self.q_max {
            return Err(GroupoidError::DimMismatch(format!(
                "bidegree ({p}, {q}) outside the bicomplex"
            )));
        }
        let m = p + q;
        let offset = self.block_offsets(m)[&(p, q)];
        let fdim = self.forms[q].len();
        let mut out = vec![Rational::zero(); self.total_dimension(m)];
        for (string, form) in &c.values {
            let Some(&s_idx) = self.string_index[p].get(string) else {
                return Err(GroupoidError::DimMismatch(format!(
                    "string {string:?} is not a {p}-tuple over the group"
                )));
            };
            for (idx, poly) in form.terms() {
                for (exp, coeff) in poly.terms() {
                    let Some(&f_idx) = self.form_index[q].get(&(exp.clone(), idx.clone())) else {
                        return Err(GroupoidError::DimMismatch(format!(
                            "monomial of degree {} exceeds the cap {}",
                            exp.total() + q as u32,
                            self.cap
                        )));
                    };
                    out[offset + s_idx * fdim + f_idx] = coeff.clone();
                }
            }
        }
        Ok(out)
    }
}

/// A cochain of one bidegree, written out as a map from group tuples to
/// forms; strings not listed carry the zero form. This is the
/// formula-level counterpart of the matrix bicomplex, used to state the
/// differentials and products directly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionCochain {
    pub level: usize,
    pub degree: usize,
    values: BTreeMap<Vec<usize>, PolyForm>,
}

impl ActionCochain {
    pub fn new(
        action: &LinearAction,
        level: usize,
        degree: usize,
        values: BTreeMap<Vec<usize>, PolyForm>,
    ) -> Result<Self, GroupoidError> {
        for (string, form) in &values {
            if string.len() != level || string.iter().any(|&g| g >= action.order()) {
                return Err(GroupoidError::DimMismatch(format!(
                    "string {string:?} is not a {level}-tuple over the group"
                )));
            }
            if form.nvars() != action.nvars() || form.degree() != degree {
                return Err(GroupoidError::DimMismatch(format!(
                    "form at {string:?} has the wrong shape"
                )));
            }
        }
        let values = values.into_iter().filter(|(_, f)| !f.is_zero()).collect();
        Ok(Self {
            level,
            degree,
            values,
        })
    }

    pub fn zero(level: usize, degree: usize) -> Self {
        Self {
            level,
            degree,
            values: BTreeMap::new(),
        }
    }

    pub fn at(&self, string: &[usize], nvars: usize) -> PolyForm {
        self.values
            .get(string)
            .cloned()
            .unwrap_or_else(|| PolyForm::zero(nvars, self.degree))
    }

    pub fn values(&self) -> impl Iterator<Item = (&Vec<usize>, &PolyForm)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let values = self
            .values
            .iter()
            .map(|(k, f)| (k.clone(), f.scale(s)))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        Self {
            level: self.level,
            degree: self.degree,
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GroupoidError> {
        if self.level != other.level || self.degree != other.degree {
            return Err(GroupoidError::DimMismatch(format!(
                "adding bidegrees ({}, {}) and ({}, {})",
                self.level, self.degree, other.level, other.degree
            )));
        }
        let mut values = self.values.clone();
        for (k, f) in &other.values {
            let merged = match values.get(k) {
                Some(g) => g.add(f)?,
                None => f.clone(),
            };
            if merged.is_zero() {
                values.remove(k);
            } else {
                values.insert(k.clone(), merged);
            }
        }
        Ok(Self {
            level: self.level,
            degree: self.degree,
            values,
        })
    }

    /// Horizontal differential: the group coboundary with the pullback
    /// action on the leading slot.
    pub fn delta(&self, action: &LinearAction) -> Result<Self, GroupoidError> {
        let n = action.nvars();
        let p = self.level;
        let mut values = BTreeMap::new();
        for t in tuples(action.order(), p + 1) {
            let mut acc = action.act(t[0], &self.at(&t[1..], n))?;
            for i in 1..=p {
                let mut face = t.clone();
                face[i - 1] = action.multiply(face[i - 1], face[i]);
                face.remove(i);
                let sign = if i % 2 == 0 { one() } else { -one() };
                acc = acc.add(&self.at(&face, n).scale(&sign))?;
            }
            let sign = if (p + 1) % 2 == 0 { one() } else { -one() };
            acc = acc.add(&self.at(&t[..p], n).scale(&sign))?;
            if !acc.is_zero() {
                values.insert(t, acc);
            }
        }
        Ok(Self {
            level: p + 1,
            degree: self.degree,
            values,
        })
    }

    /// Vertical differential: the exterior derivative applied pointwise
    /// (unsigned; the total differential weights it by `(−1)^p`).
    pub fn vertical(&self) -> Self {
        let values = self
            .values
            .iter()
            .map(|(k, f)| (k.clone(), f.de_rham_d()))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        Self {
            level: self.level,
            degree: self.degree + 1,
            values,
        }
    }

    /// The unsigned cup product
    /// `(c ⌣ c′)(g₁,…,g_{p+p′}) = c(g₁..g_p) ∧ (g₁⋯g_p)·c′(g_{p+1}..)`.
    pub fn wedge_cup(&self, other: &Self, action: &LinearAction) -> Result<Self, GroupoidError> {
        let n = action.nvars();
        let (p, p2) = (self.level, other.level);
        let mut values = BTreeMap::new();
        for t in tuples(action.order(), p + p2) {
            let mut composite = action.identity();
            for &g in &t[..p] {
                composite = action.multiply(composite, g);
            }
            let moved = action.act(composite, &other.at(&t[p..], n))?;
            let product = self.at(&t[..p], n).wedge(&moved)?;
            if !product.is_zero() {
                values.insert(t, product);
            }
        }
        Ok(Self {
            level: p + p2,
            degree: self.degree + other.degree,
            values,
        })
    }

    /// The cup product adjusted for the total grading: `c ∪ c′ =
    /// (−1)^{q·p′} c ⌣ c′`, which turns the total differential into a
    /// derivation of total degree one.
    pub fn total_cup(&self, other: &Self, action: &LinearAction) -> Result<Self, GroupoidError> {
        let raw = self.wedge_cup(other, action)?;
        if (self.degree * other.level) % 2 == 1 {
            Ok(raw.scale(&-one()))
        } else {
            Ok(raw)
        }
    }
}

/// Builds the bicomplex and its total cohomology through every computable
/// total degree.
pub fn action_bicomplex(
    action: LinearAction,
    cap: u32,
    p_max: usize,
    q_max: usize,
) -> Result<(ActionBicomplex, CohomologyTable), GroupoidError> {
    let bicx = ActionBicomplex::new(action, cap, p_max, q_max)?;
    let m_max = bicx.level_cap() + bicx.degree_cap();
    let table = bicx.total_cohomology(m_max)?;
    Ok((bicx, table))
}
