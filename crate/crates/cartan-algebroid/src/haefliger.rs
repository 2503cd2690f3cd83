use std::collections::BTreeMap;
use std::thread;

use formal::{Exponent, TruncPoly};
use linalg::{
    cohomology_at, rat_int, render_vector, CohomologyTable, DegreeCohomology, LabeledBasis,
    Rational, SparseRationalMatrix,
};
use serde::Serialize;

use crate::algebroid::AlgebroidData;
use crate::connection::CartanPackage;
use crate::double::double;
use crate::{CartanError, CheckReport};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for v in start..=n - need {
            cur.push(v);
            rec(n, k, v + 1, cur, out);
            cur.pop();
        }
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

fn exponents_exact(nvars: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for v in 0..=remaining {
            cur[pos] = v;
            rec(pos + 1, remaining - v, cur, out);
        }
        cur[pos] = 0;
    }
    if nvars == 0 {
        return if total == 0 {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    rec(0, total, &mut vec![0; nvars], &mut out);
    out
}

fn exponents_up_to(nvars: usize, bound: u32) -> Vec<Vec<u32>> {
    (0..=bound)
        .flat_map(|d| exponents_exact(nvars, d))
        .collect()
}

fn sort_signed(tuple: &[usize]) -> Option<(Vec<usize>, i64)> {
    let mut v = tuple.to_vec();
    let mut sign = 1i64;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

fn var_label(nvars: usize, i: usize) -> String {
    if nvars == 1 {
        "x".to_string()
    } else if nvars <= 3 {
        ["x", "y", "z"][i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

fn monomial_label(exp: &[u32]) -> String {
    TruncPoly::monomial(Exponent(exp.to_vec()), rat_int(1)).to_string()
}

fn mixed_label(nvars: usize, exp: &[u32], aset: &[usize], iset: &[usize]) -> String {
    let mut parts = Vec::new();
    let mono = monomial_label(exp);
    if mono != "1" {
        parts.push(mono);
    }
    if !aset.is_empty() {
        parts.push(
            aset.iter()
                .map(|a| format!("e*{a}"))
                .collect::<Vec<_>>()
                .join("∧"),
        );
    }
    if !iset.is_empty() {
        parts.push(
            iset.iter()
                .map(|&i| format!("d{}", var_label(nvars, i)))
                .collect::<Vec<_>>()
                .join("∧"),
        );
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("·")
    }
}

fn frame_label(exp: &[u32], sset: &[usize]) -> String {
    let mut parts = Vec::new();
    let mono = monomial_label(exp);
    if mono != "1" {
        parts.push(mono);
    }
    if !sset.is_empty() {
        parts.push(
            sset.iter()
                .map(|s| format!("ξ{s}"))
                .collect::<Vec<_>>()
                .join("∧"),
        );
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("·")
    }
}

/// A bihomogeneous cochain of the package's bigraded complex: an
/// alternating `p`-multilinear form on frame sections with values in
/// alternating `q`-forms on the base, stored through its coefficients on
/// strictly increasing index pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedCochain {
    rank: usize,
    base_dim: usize,
    p: usize,
    q: usize,
    coeffs: BTreeMap<(Vec<usize>, Vec<usize>), TruncPoly>,
}

impl MixedCochain {
    pub fn new(
        rank: usize,
        base_dim: usize,
        p: usize,
        q: usize,
        coeffs: BTreeMap<(Vec<usize>, Vec<usize>), TruncPoly>,
    ) -> Result<Self, CartanError> {
        let mut clean = BTreeMap::new();
        for ((aset, iset), poly) in coeffs {
            if aset.len() != p || iset.len() != q {
                return Err(CartanError::InvalidData(format!(
                    "index pair of shape ({}, {}) in a ({p}, {q}) cochain",
                    aset.len(),
                    iset.len()
                )));
            }
            if aset.windows(2).any(|w| w[0] >= w[1]) || aset.iter().any(|&a| a >= rank) {
                return Err(CartanError::InvalidData(
                    "frame indices must be strictly increasing and in range".into(),
                ));
            }
            if iset.windows(2).any(|w| w[0] >= w[1]) || iset.iter().any(|&i| i >= base_dim) {
                return Err(CartanError::InvalidData(
                    "base indices must be strictly increasing and in range".into(),
                ));
            }
            if poly.nvars() != base_dim {
                return Err(CartanError::InvalidData(format!(
                    "coefficient uses {} variables, base has {base_dim}",
                    poly.nvars()
                )));
            }
            if !poly.is_zero() {
                clean.insert((aset, iset), poly);
            }
        }
        Ok(Self {
            rank,
            base_dim,
            p,
            q,
            coeffs: clean,
        })
    }

    pub fn zero(rank: usize, base_dim: usize, p: usize, q: usize) -> Self {
        Self {
            rank,
            base_dim,
            p,
            q,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(
        rank: usize,
        base_dim: usize,
        aset: Vec<usize>,
        iset: Vec<usize>,
        coeff: TruncPoly,
    ) -> Result<Self, CartanError> {
        let p = aset.len();
        let q = iset.len();
        let mut coeffs = BTreeMap::new();
        coeffs.insert((aset, iset), coeff);
        Self::new(rank, base_dim, p, q, coeffs)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn coeffs(&self) -> &BTreeMap<(Vec<usize>, Vec<usize>), TruncPoly> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient on an already sorted index pair.
    pub fn coeff(&self, aset: &[usize], iset: &[usize]) -> TruncPoly {
        self.coeffs
            .get(&(aset.to_vec(), iset.to_vec()))
            .cloned()
            .unwrap_or_else(|| TruncPoly::zero(self.base_dim))
    }

    /// Value on arbitrary index tuples, alternating in both groups.
    pub fn eval(&self, aset: &[usize], iset: &[usize]) -> TruncPoly {
        let (sa, sgn_a) = match sort_signed(aset) {
            Some(v) => v,
            None => return TruncPoly::zero(self.base_dim),
        };
        let (si, sgn_i) = match sort_signed(iset) {
            Some(v) => v,
            None => return TruncPoly::zero(self.base_dim),
        };
        match self.coeffs.get(&(sa, si)) {
            Some(p) => p.scale(&rat_int(sgn_a * sgn_i)),
            None => TruncPoly::zero(self.base_dim),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, CartanError> {
        if self.rank != other.rank
            || self.base_dim != other.base_dim
            || self.p != other.p
            || self.q != other.q
        {
            return Err(CartanError::InvalidData(
                "cochains of different shapes cannot be added".into(),
            ));
        }
        let mut out = self.clone();
        for (key, poly) in &other.coeffs {
            let merged = match out.coeffs.get(key) {
                Some(cur) => cur.add(poly)?,
                None => poly.clone(),
            };
            if merged.is_zero() {
                out.coeffs.remove(key);
            } else {
                out.coeffs.insert(key.clone(), merged);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = self.clone();
        if *s == rat_int(0) {
            out.coeffs.clear();
            return out;
        }
        for poly in out.coeffs.values_mut() {
            *poly = poly.scale(s);
        }
        out
    }

    fn insert_nonzero(&mut self, aset: Vec<usize>, iset: Vec<usize>, poly: TruncPoly) {
        if !poly.is_zero() {
            self.coeffs.insert((aset, iset), poly);
        }
    }
}

/// The frame-direction differential: the Chevalley–Eilenberg formula with
/// the anchor acting on coefficient forms through the induced base
/// derivative. Raises `p` by one.
pub fn d_algebroid(pkg: &CartanPackage, omega: &MixedCochain) -> Result<MixedCochain, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    if omega.rank != r || omega.base_dim != n {
        return Err(CartanError::InvalidData(
            "cochain shape does not match the package".into(),
        ));
    }
    let mut out = MixedCochain::zero(r, n, omega.p + 1, omega.q);
    for aset in subsets(r, omega.p + 1) {
        for iset in subsets(n, omega.q) {
            let mut acc = TruncPoly::zero(n);
            for k in 0..aset.len() {
                let sgn = rat_int(if k % 2 == 0 { 1 } else { -1 });
                let mut rest = aset.clone();
                rest.remove(k);
                let inner = omega.coeff(&rest, &iset);
                if !inner.is_zero() {
                    acc = acc.add(&alg.anchor(aset[k]).apply(&inner)?.scale(&sgn))?;
                }
                for (m, &im) in iset.iter().enumerate() {
                    let tm = pkg.tm_frame(aset[k], im);
                    for j in 0..n {
                        let comp = tm.component(j);
                        if comp.is_zero() {
                            continue;
                        }
                        let mut rep = iset.clone();
                        rep[m] = j;
                        let val = omega.eval(&rest, &rep);
                        if val.is_zero() {
                            continue;
                        }
                        acc = acc.sub(&comp.mul(&val)?.scale(&sgn))?;
                    }
                }
            }
            for k in 0..aset.len() {
                for l in k + 1..aset.len() {
                    let sgn = rat_int(if (k + l) % 2 == 0 { 1 } else { -1 });
                    let mut rest = aset.clone();
                    rest.remove(l);
                    rest.remove(k);
                    for d in 0..r {
                        let cpoly = &alg.structure(aset[k], aset[l])[d];
                        if cpoly.is_zero() {
                            continue;
                        }
                        let mut tuple = Vec::with_capacity(rest.len() + 1);
                        tuple.push(d);
                        tuple.extend_from_slice(&rest);
                        let val = omega.eval(&tuple, &iset);
                        if val.is_zero() {
                            continue;
                        }
                        acc = acc.add(&cpoly.mul(&val)?.scale(&sgn))?;
                    }
                }
            }
            out.insert_nonzero(aset.clone(), iset, acc);
        }
    }
    Ok(out)
}

/// The base-direction differential: the de Rham formula on coordinate
/// fields, with the coefficient values differentiated through the dual of
/// the connection. Raises `q` by one.
pub fn d_de_rham(pkg: &CartanPackage, omega: &MixedCochain) -> Result<MixedCochain, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    if omega.rank != r || omega.base_dim != n {
        return Err(CartanError::InvalidData(
            "cochain shape does not match the package".into(),
        ));
    }
    let mut out = MixedCochain::zero(r, n, omega.p, omega.q + 1);
    for aset in subsets(r, omega.p) {
        for jset in subsets(n, omega.q + 1) {
            let mut acc = TruncPoly::zero(n);
            for k in 0..jset.len() {
                let sgn = rat_int(if k % 2 == 0 { 1 } else { -1 });
                let mut rest = jset.clone();
                rest.remove(k);
                let inner = omega.coeff(&aset, &rest);
                if !inner.is_zero() {
                    acc = acc.add(&inner.partial(jset[k]).scale(&sgn))?;
                }
                for (m, &am) in aset.iter().enumerate() {
                    for b in 0..r {
                        let g = &pkg.connection().christoffel(jset[k], am)[b];
                        if g.is_zero() {
                            continue;
                        }
                        let mut rep = aset.clone();
                        rep[m] = b;
                        let val = omega.eval(&rep, &rest);
                        if val.is_zero() {
                            continue;
                        }
                        acc = acc.sub(&g.mul(&val)?.scale(&sgn))?;
                    }
                }
            }
            out.insert_nonzero(aset.clone(), jset, acc);
        }
    }
    Ok(out)
}

/// Both graded pieces of the total differential: the frame piece and the
/// base piece already multiplied by `(-1)^p`, so their sum squares to zero
/// whenever the two pieces commute.
pub fn total_differential(
    pkg: &CartanPackage,
    omega: &MixedCochain,
) -> Result<(MixedCochain, MixedCochain), CartanError> {
    let da = d_algebroid(pkg, omega)?;
    let sign = rat_int(if omega.p % 2 == 0 { 1 } else { -1 });
    let dd = d_de_rham(pkg, omega)?.scale(&sign);
    Ok((da, dd))
}

/// Checks `d_A² = 0`, `d² = 0` and `d_A d = d d_A` on every monomial
/// cochain with `p ≤ p_max`, `q ≤ q_max` and coefficient degree at most
/// `degree_bound`. By linearity this settles the identities for all
/// cochains within those bounds; they hold exactly when the package is flat
/// Cartan.
pub fn commutation_report(
    pkg: &CartanPackage,
    p_max: usize,
    q_max: usize,
    degree_bound: u32,
) -> Result<CheckReport, CartanError> {
    let r = pkg.algebroid().rank();
    let n = pkg.algebroid().base_dim();
    let mut failures = Vec::new();
    for p in 0..=p_max.min(r) {
        for q in 0..=q_max.min(n) {
            for aset in subsets(r, p) {
                for iset in subsets(n, q) {
                    for exp in exponents_up_to(n, degree_bound) {
                        let label = mixed_label(n, &exp, &aset, &iset);
                        let omega = MixedCochain::monomial(
                            r,
                            n,
                            aset.clone(),
                            iset.clone(),
                            TruncPoly::monomial(Exponent(exp), rat_int(1)),
                        )?;
                        let da = d_algebroid(pkg, &omega)?;
                        let dd = d_de_rham(pkg, &omega)?;
                        if !d_algebroid(pkg, &da)?.is_zero() {
                            failures.push(format!("the frame differential does not square to zero on {label}"));
                        }
                        if !d_de_rham(pkg, &dd)?.is_zero() {
                            failures.push(format!("the base differential does not square to zero on {label}"));
                        }
                        let ad = d_algebroid(pkg, &dd)?;
                        let da_then_d = d_de_rham(pkg, &da)?;
                        if ad != da_then_d {
                            failures.push(format!("the differentials do not commute on {label}"));
                        }
                    }
                }
            }
        }
    }
    Ok(CheckReport::from_failures(failures))
}

struct LinearConstraint {
    terms: Vec<(usize, i64)>,
    rhs: i64,
    desc: String,
}

fn combined_terms(raw: &[(usize, i64)]) -> Vec<(usize, i64)> {
    let mut map: BTreeMap<usize, i64> = BTreeMap::new();
    for &(v, c) in raw {
        *map.entry(v).or_insert(0) += c;
    }
    map.into_iter().filter(|&(_, c)| c != 0).collect()
}

/// Infers a weight per frame section making the whole structure data
/// homogeneous: base variables weigh one, coordinate derivatives minus one,
/// and every monomial of the anchor, the structure functions and the
/// Christoffel coefficients must respect the grading. Free weights default
/// to zero.
pub fn frame_weights(pkg: &CartanPackage) -> Result<Vec<i64>, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let mut constraints = Vec::new();
    for a in 0..r {
        for i in 0..n {
            for (e, _) in alg.anchor(a).component(i).terms() {
                let deg: i64 = e.0.iter().map(|&p| p as i64).sum();
                constraints.push(LinearConstraint {
                    terms: vec![(a, 1)],
                    rhs: deg - 1,
                    desc: format!("anchor of e_{a}"),
                });
            }
        }
    }
    for a in 0..r {
        for b in a + 1..r {
            for k in 0..r {
                for (e, _) in alg.structure(a, b)[k].terms() {
                    let deg: i64 = e.0.iter().map(|&p| p as i64).sum();
                    constraints.push(LinearConstraint {
                        terms: combined_terms(&[(a, 1), (b, 1), (k, -1)]),
                        rhs: deg,
                        desc: format!("bracket [e_{a}, e_{b}]"),
                    });
                }
            }
        }
    }
    for i in 0..n {
        for a in 0..r {
            for b in 0..r {
                for (e, _) in pkg.connection().christoffel(i, a)[b].terms() {
                    let deg: i64 = e.0.iter().map(|&p| p as i64).sum();
                    constraints.push(LinearConstraint {
                        terms: combined_terms(&[(a, 1), (b, -1)]),
                        rhs: deg + 1,
                        desc: format!("Christoffel coefficient of e_{a} along ∂_{i}"),
                    });
                }
            }
        }
    }
    let mut weights: Vec<Option<i64>> = vec![None; r];
    let propagate = |weights: &mut Vec<Option<i64>>| -> Result<(), CartanError> {
        loop {
            let mut progress = false;
            for con in &constraints {
                let mut known = 0i64;
                let mut unknown: Option<(usize, i64)> = None;
                let mut too_many = false;
                for &(v, c) in &con.terms {
                    match weights[v] {
                        Some(w) => known += c * w,
                        None => {
                            if unknown.is_some() {
                                too_many = true;
                            }
                            unknown = Some((v, c));
                        }
                    }
                }
                if too_many {
                    continue;
                }
                if let Some((v, c)) = unknown {
                    let need = con.rhs - known;
                    if need % c != 0 {
                        return Err(CartanError::NotWeightGraded(format!(
                            "{} forces a fractional weight",
                            con.desc
                        )));
                    }
                    weights[v] = Some(need / c);
                    progress = true;
                }
            }
            if !progress {
                return Ok(());
            }
        }
    };
    propagate(&mut weights)?;
    for a in 0..r {
        if weights[a].is_none() {
            weights[a] = Some(0);
            propagate(&mut weights)?;
        }
    }
    let weights: Vec<i64> = weights.into_iter().map(|w| w.unwrap_or(0)).collect();
    for con in &constraints {
        let total: i64 = con.terms.iter().map(|&(v, c)| c * weights[v]).sum();
        if total != con.rhs {
            return Err(CartanError::NotWeightGraded(format!(
                "{} is not weight-homogeneous",
                con.desc
            )));
        }
    }
    Ok(weights)
}

fn thread_count() -> usize {
    std::env::var("CARTAN_COH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or(1)
}

fn sliced_tables<F>(weight_bound: u32, per_weight: F) -> Result<BTreeMap<i64, CohomologyTable>, CartanError>
where
    F: Fn(i64) -> Result<CohomologyTable, CartanError> + Sync,
{
    let ws: Vec<i64> = (-(weight_bound as i64)..=weight_bound as i64).collect();
    let threads = thread_count().min(ws.len().max(1));
    if threads <= 1 {
        let mut out = BTreeMap::new();
        for &w in &ws {
            out.insert(w, per_weight(w)?);
        }
        return Ok(out);
    }
    let chunk = ws.len().div_ceil(threads);
    let results: Vec<Result<Vec<(i64, CohomologyTable)>, CartanError>> = thread::scope(|s| {
        let per_weight = &per_weight;
        let handles: Vec<_> = ws
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&w| per_weight(w).map(|t| (w, t)))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("weight slice workers do not panic"))
            .collect()
    });
    let mut out = BTreeMap::new();
    for res in results {
        for (w, t) in res? {
            out.insert(w, t);
        }
    }
    Ok(out)
}

struct MixedSlice {
    keys: Vec<(Vec<u32>, Vec<usize>, Vec<usize>)>,
    index: BTreeMap<(Vec<u32>, Vec<usize>, Vec<usize>), usize>,
    labels: LabeledBasis<String>,
}

fn mixed_slice(rank: usize, base_dim: usize, weights: &[i64], w: i64, m: usize) -> MixedSlice {
    let mut keys = Vec::new();
    let mut labels = Vec::new();
    for p in 0..=m.min(rank) {
        let q = m - p;
        if q > base_dim {
            continue;
        }
        for aset in subsets(rank, p) {
            let frame_weight: i64 = aset.iter().map(|&a| weights[a]).sum();
            let degree = w + frame_weight - q as i64;
            if degree < 0 {
                continue;
            }
            for iset in subsets(base_dim, q) {
                for exp in exponents_exact(base_dim, degree as u32) {
                    labels.push(mixed_label(base_dim, &exp, &aset, &iset));
                    keys.push((exp, aset.clone(), iset.clone()));
                }
            }
        }
    }
    let index = keys
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    MixedSlice {
        keys,
        index,
        labels: LabeledBasis::new(labels).expect("slice labels are distinct"),
    }
}

fn mixed_matrix(
    pkg: &CartanPackage,
    from: &MixedSlice,
    to: &MixedSlice,
) -> Result<SparseRationalMatrix, CartanError> {
    let r = pkg.algebroid().rank();
    let n = pkg.algebroid().base_dim();
    let mut triplets = Vec::new();
    for (col, (exp, aset, iset)) in from.keys.iter().enumerate() {
        let omega = MixedCochain::monomial(
            r,
            n,
            aset.clone(),
            iset.clone(),
            TruncPoly::monomial(Exponent(exp.clone()), rat_int(1)),
        )?;
        let (da, dd) = total_differential(pkg, &omega)?;
        for part in [da, dd] {
            for ((ta, ti), poly) in part.coeffs() {
                for (e, c) in poly.terms() {
                    let row = to
                        .index
                        .get(&(e.0.clone(), ta.clone(), ti.clone()))
                        .copied()
                        .ok_or_else(|| {
                            CartanError::InvalidData(
                                "the total differential left the weight slice".into(),
                            )
                        })?;
                    triplets.push((row, col, c.clone()));
                }
            }
        }
    }
    Ok(SparseRationalMatrix::from_triplets(
        to.keys.len(),
        from.keys.len(),
        triplets,
    )?)
}

fn haefliger_weight_table(
    pkg: &CartanPackage,
    weights: &[i64],
    w: i64,
) -> Result<CohomologyTable, CartanError> {
    let r = pkg.algebroid().rank();
    let n = pkg.algebroid().base_dim();
    let top = r + n;
    let bases: Vec<MixedSlice> = (0..=top + 1)
        .map(|m| mixed_slice(r, n, weights, w, m))
        .collect();
    let mats: Vec<SparseRationalMatrix> = (0..=top)
        .map(|m| mixed_matrix(pkg, &bases[m], &bases[m + 1]))
        .collect::<Result<_, _>>()?;
    let zero_in = SparseRationalMatrix::zero(bases[0].keys.len(), 0);
    let mut table = CohomologyTable::new();
    for m in 0..=top {
        let d_in = if m == 0 { &zero_in } else { &mats[m - 1] };
        let coh = cohomology_at(d_in, &mats[m])?;
        let representatives = coh
            .representatives
            .iter()
            .map(|v| render_vector(v, &bases[m].labels))
            .collect();
        table.insert(
            m,
            DegreeCohomology {
                dim: coh.dimension,
                representatives,
            },
        );
    }
    Ok(table)
}

/// Total cohomology of the bigraded complex, sliced by weight for
/// `|w| ≤ weight_bound`. Each slice is finite-dimensional and computed
/// exactly; `CARTAN_COH_THREADS` distributes slices over worker threads
/// without changing the result.
pub fn haefliger_cohomology(
    pkg: &CartanPackage,
    weight_bound: u32,
) -> Result<BTreeMap<i64, CohomologyTable>, CartanError> {
    let weights = frame_weights(pkg)?;
    sliced_tables(weight_bound, |w| haefliger_weight_table(pkg, &weights, w))
}

/// Commutation identities and, when they pass, the sliced total
/// cohomology.
#[derive(Clone, Debug, Serialize)]
pub struct HaefligerReport {
    pub commutation: CheckReport,
    pub tables: BTreeMap<i64, CohomologyTable>,
}

/// Runs the bigraded identity checks up to the requested bidegrees and
/// coefficient degree, then computes the sliced total cohomology when the
/// complex actually is a complex. A failing identity leaves the tables
/// empty rather than reporting cohomology of a non-complex.
pub fn inf_haefliger(
    pkg: &CartanPackage,
    p_max: usize,
    q_max: usize,
    weight_bound: u32,
) -> Result<HaefligerReport, CartanError> {
    let commutation = commutation_report(pkg, p_max, q_max, weight_bound)?;
    let tables = if commutation.passed {
        haefliger_cohomology(pkg, weight_bound)?
    } else {
        BTreeMap::new()
    };
    Ok(HaefligerReport {
        commutation,
        tables,
    })
}

/// An alternating multilinear form on the frame sections of one algebroid,
/// with polynomial coefficients on strictly increasing index sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebroidCochain {
    rank: usize,
    base_dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, TruncPoly>,
}

impl AlgebroidCochain {
    pub fn new(
        rank: usize,
        base_dim: usize,
        degree: usize,
        coeffs: BTreeMap<Vec<usize>, TruncPoly>,
    ) -> Result<Self, CartanError> {
        let mut clean = BTreeMap::new();
        for (sset, poly) in coeffs {
            if sset.len() != degree {
                return Err(CartanError::InvalidData(format!(
                    "index set of size {} in a degree {degree} cochain",
                    sset.len()
                )));
            }
            if sset.windows(2).any(|w| w[0] >= w[1]) || sset.iter().any(|&s| s >= rank) {
                return Err(CartanError::InvalidData(
                    "frame indices must be strictly increasing and in range".into(),
                ));
            }
            if poly.nvars() != base_dim {
                return Err(CartanError::InvalidData(format!(
                    "coefficient uses {} variables, base has {base_dim}",
                    poly.nvars()
                )));
            }
            if !poly.is_zero() {
                clean.insert(sset, poly);
            }
        }
        Ok(Self {
            rank,
            base_dim,
            degree,
            coeffs: clean,
        })
    }

    pub fn zero(rank: usize, base_dim: usize, degree: usize) -> Self {
        Self {
            rank,
            base_dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(
        rank: usize,
        base_dim: usize,
        sset: Vec<usize>,
        coeff: TruncPoly,
    ) -> Result<Self, CartanError> {
        let degree = sset.len();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(sset, coeff);
        Self::new(rank, base_dim, degree, coeffs)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, TruncPoly> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, sset: &[usize]) -> TruncPoly {
        self.coeffs
            .get(&sset.to_vec())
            .cloned()
            .unwrap_or_else(|| TruncPoly::zero(self.base_dim))
    }

    pub fn eval(&self, sset: &[usize]) -> TruncPoly {
        match sort_signed(sset) {
            Some((sorted, sign)) => match self.coeffs.get(&sorted) {
                Some(p) => p.scale(&rat_int(sign)),
                None => TruncPoly::zero(self.base_dim),
            },
            None => TruncPoly::zero(self.base_dim),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, CartanError> {
        if self.rank != other.rank
            || self.base_dim != other.base_dim
            || self.degree != other.degree
        {
            return Err(CartanError::InvalidData(
                "cochains of different shapes cannot be added".into(),
            ));
        }
        let mut out = self.clone();
        for (key, poly) in &other.coeffs {
            let merged = match out.coeffs.get(key) {
                Some(cur) => cur.add(poly)?,
                None => poly.clone(),
            };
            if merged.is_zero() {
                out.coeffs.remove(key);
            } else {
                out.coeffs.insert(key.clone(), merged);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = self.clone();
        if *s == rat_int(0) {
            out.coeffs.clear();
            return out;
        }
        for poly in out.coeffs.values_mut() {
            *poly = poly.scale(s);
        }
        out
    }
}

/// The Chevalley–Eilenberg differential of an algebroid on frame cochains:
/// anchor derivatives plus bracket insertions.
pub fn ce_differential(
    data: &AlgebroidData,
    omega: &AlgebroidCochain,
) -> Result<AlgebroidCochain, CartanError> {
    let r = data.rank();
    let n = data.base_dim();
    if omega.rank != r || omega.base_dim != n {
        return Err(CartanError::InvalidData(
            "cochain shape does not match the algebroid".into(),
        ));
    }
    let mut out = AlgebroidCochain::zero(r, n, omega.degree + 1);
    for sset in subsets(r, omega.degree + 1) {
        let mut acc = TruncPoly::zero(n);
        for k in 0..sset.len() {
            let sgn = rat_int(if k % 2 == 0 { 1 } else { -1 });
            let mut rest = sset.clone();
            rest.remove(k);
            let inner = omega.coeff(&rest);
            if !inner.is_zero() {
                acc = acc.add(&data.anchor(sset[k]).apply(&inner)?.scale(&sgn))?;
            }
        }
        for k in 0..sset.len() {
            for l in k + 1..sset.len() {
                let sgn = rat_int(if (k + l) % 2 == 0 { 1 } else { -1 });
                let mut rest = sset.clone();
                rest.remove(l);
                rest.remove(k);
                for d in 0..r {
                    let cpoly = &data.structure(sset[k], sset[l])[d];
                    if cpoly.is_zero() {
                        continue;
                    }
                    let mut tuple = Vec::with_capacity(rest.len() + 1);
                    tuple.push(d);
                    tuple.extend_from_slice(&rest);
                    let val = omega.eval(&tuple);
                    if val.is_zero() {
                        continue;
                    }
                    acc = acc.add(&cpoly.mul(&val)?.scale(&sgn))?;
                }
            }
        }
        if !acc.is_zero() {
            out.coeffs.insert(sset, acc);
        }
    }
    Ok(out)
}

struct FrameSlice {
    keys: Vec<(Vec<u32>, Vec<usize>)>,
    index: BTreeMap<(Vec<u32>, Vec<usize>), usize>,
    labels: LabeledBasis<String>,
}

fn frame_slice(rank: usize, base_dim: usize, weights: &[i64], w: i64, m: usize) -> FrameSlice {
    let mut keys = Vec::new();
    let mut labels = Vec::new();
    for sset in subsets(rank, m) {
        let frame_weight: i64 = sset.iter().map(|&s| weights[s]).sum();
        let degree = w + frame_weight;
        if degree < 0 {
            continue;
        }
        for exp in exponents_exact(base_dim, degree as u32) {
            labels.push(frame_label(&exp, &sset));
            keys.push((exp, sset.clone()));
        }
    }
    let index = keys
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    FrameSlice {
        keys,
        index,
        labels: LabeledBasis::new(labels).expect("slice labels are distinct"),
    }
}

fn frame_matrix(
    data: &AlgebroidData,
    from: &FrameSlice,
    to: &FrameSlice,
) -> Result<SparseRationalMatrix, CartanError> {
    let mut triplets = Vec::new();
    for (col, (exp, sset)) in from.keys.iter().enumerate() {
        let omega = AlgebroidCochain::monomial(
            data.rank(),
            data.base_dim(),
            sset.clone(),
            TruncPoly::monomial(Exponent(exp.clone()), rat_int(1)),
        )?;
        let image = ce_differential(data, &omega)?;
        for (tset, poly) in image.coeffs() {
            for (e, c) in poly.terms() {
                let row = to
                    .index
                    .get(&(e.0.clone(), tset.clone()))
                    .copied()
                    .ok_or_else(|| {
                        CartanError::InvalidData(
                            "the differential left the weight slice".into(),
                        )
                    })?;
                triplets.push((row, col, c.clone()));
            }
        }
    }
    Ok(SparseRationalMatrix::from_triplets(
        to.keys.len(),
        from.keys.len(),
        triplets,
    )?)
}

fn frame_weight_table(
    data: &AlgebroidData,
    weights: &[i64],
    w: i64,
) -> Result<CohomologyTable, CartanError> {
    let r = data.rank();
    let n = data.base_dim();
    let bases: Vec<FrameSlice> = (0..=r + 1)
        .map(|m| frame_slice(r, n, weights, w, m))
        .collect();
    let mats: Vec<SparseRationalMatrix> = (0..=r)
        .map(|m| frame_matrix(data, &bases[m], &bases[m + 1]))
        .collect::<Result<_, _>>()?;
    let zero_in = SparseRationalMatrix::zero(bases[0].keys.len(), 0);
    let mut table = CohomologyTable::new();
    for m in 0..=r {
        let d_in = if m == 0 { &zero_in } else { &mats[m - 1] };
        let coh = cohomology_at(d_in, &mats[m])?;
        let representatives = coh
            .representatives
            .iter()
            .map(|v| render_vector(v, &bases[m].labels))
            .collect();
        table.insert(
            m,
            DegreeCohomology {
                dim: coh.dimension,
                representatives,
            },
        );
    }
    Ok(table)
}

/// Chevalley–Eilenberg cohomology of an algebroid with explicitly supplied
/// frame weights, sliced by weight for `|w| ≤ weight_bound`.
pub fn algebroid_cohomology(
    data: &AlgebroidData,
    weights: &[i64],
    weight_bound: u32,
) -> Result<BTreeMap<i64, CohomologyTable>, CartanError> {
    if weights.len() != data.rank() {
        return Err(CartanError::InvalidData(format!(
            "{} weights for rank {}",
            weights.len(),
            data.rank()
        )));
    }
    sliced_tables(weight_bound, |w| frame_weight_table(data, weights, w))
}

fn iota(omega: &MixedCochain) -> AlgebroidCochain {
    let mut coeffs = BTreeMap::new();
    for ((aset, iset), poly) in &omega.coeffs {
        let mut key = aset.clone();
        key.extend(iset.iter().map(|i| omega.rank + i));
        coeffs.insert(key, poly.clone());
    }
    AlgebroidCochain {
        rank: omega.rank + omega.base_dim,
        base_dim: omega.base_dim,
        degree: omega.p + omega.q,
        coeffs,
    }
}

/// Verifies termwise that reindexing bigraded cochains into the double
/// turns the total differential into the double's Chevalley–Eilenberg
/// differential, on every monomial cochain with `p + q ≤ k_max` and
/// coefficient degree at most `degree_bound`.
pub fn double_transport_report(
    pkg: &CartanPackage,
    k_max: usize,
    degree_bound: u32,
) -> Result<CheckReport, CartanError> {
    let dbl = double(pkg)?;
    let r = pkg.algebroid().rank();
    let n = pkg.algebroid().base_dim();
    let mut failures = Vec::new();
    for p in 0..=k_max.min(r) {
        for q in 0..=k_max.saturating_sub(p).min(n) {
            for aset in subsets(r, p) {
                for iset in subsets(n, q) {
                    for exp in exponents_up_to(n, degree_bound) {
                        let label = mixed_label(n, &exp, &aset, &iset);
                        let omega = MixedCochain::monomial(
                            r,
                            n,
                            aset.clone(),
                            iset.clone(),
                            TruncPoly::monomial(Exponent(exp), rat_int(1)),
                        )?;
                        let (da, dd) = total_differential(pkg, &omega)?;
                        let lhs = ce_differential(dbl.data(), &iota(&omega))?;
                        let rhs = iota(&da).add(&iota(&dd))?;
                        if lhs != rhs {
                            failures.push(format!(
                                "the double differential disagrees with the total differential on {label}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(CheckReport::from_failures(failures))
}

/// The two sides of the comparison between the bigraded complex and the
/// double: the termwise differential identities, and the per-weight
/// cohomology tables of both models.
#[derive(Clone, Debug, Serialize)]
pub struct DoubleEquivalence {
    pub differentials: CheckReport,
    pub haefliger: BTreeMap<i64, CohomologyTable>,
    pub double_side: BTreeMap<i64, CohomologyTable>,
    pub dims_agree: bool,
}

/// Compares the bigraded complex with the Chevalley–Eilenberg complex of
/// the double: the differentials must agree termwise under reindexing, and
/// the sliced cohomology dimensions must match degree by degree.
pub fn double_equivalence_check(
    pkg: &CartanPackage,
    k_max: usize,
    weight_bound: u32,
) -> Result<DoubleEquivalence, CartanError> {
    let differentials = double_transport_report(pkg, k_max, weight_bound)?;
    let weights = frame_weights(pkg)?;
    let haefliger = haefliger_cohomology(pkg, weight_bound)?;
    let dbl = double(pkg)?;
    let n = pkg.algebroid().base_dim();
    let mut dweights = weights;
    dweights.extend(std::iter::repeat(-1).take(n));
    let double_side = algebroid_cohomology(dbl.data(), &dweights, weight_bound)?;
    let top = pkg.algebroid().rank() + n;
    let mut dims_agree = true;
    for (w, table) in &haefliger {
        let other = &double_side[w];
        for m in 0..=top {
            if table.dim_at(m) != other.dim_at(m) {
                dims_agree = false;
            }
        }
    }
    Ok(DoubleEquivalence {
        differentials,
        haefliger,
        double_side,
        dims_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Connection;
    use formal::PolyVectorField;

    fn xp(exp: Vec<u32>, num: i64) -> TruncPoly {
        TruncPoly::monomial(Exponent(exp), rat_int(num))
    }

    fn euler_package() -> CartanPackage {
        let alg = AlgebroidData::action(
            1,
            vec![PolyVectorField::monomial(Exponent(vec![1]), 0)],
            vec![vec![vec![rat_int(0)]]],
        )
        .unwrap();
        CartanPackage::new(alg, Connection::zero(1, 1)).unwrap()
    }

    fn sl2_package() -> CartanPackage {
        let e = PolyVectorField::coordinate(1, 0);
        let h = PolyVectorField::monomial(Exponent(vec![1]), 0).scale(&rat_int(-2));
        let f = PolyVectorField::monomial(Exponent(vec![2]), 0).scale(&rat_int(-1));
        let mut k = vec![vec![vec![rat_int(0); 3]; 3]; 3];
        k[1][0][0] = rat_int(2);
        k[0][1][0] = rat_int(-2);
        k[1][2][2] = rat_int(-2);
        k[2][1][2] = rat_int(2);
        k[0][2][1] = rat_int(1);
        k[2][0][1] = rat_int(-1);
        let alg = AlgebroidData::action(1, vec![e, h, f], k).unwrap();
        CartanPackage::new(alg, Connection::zero(1, 3)).unwrap()
    }

    fn rank_zero_package() -> CartanPackage {
        let alg = AlgebroidData::new(2, Vec::new(), Vec::new()).unwrap();
        CartanPackage::new(alg, Connection::zero(2, 0)).unwrap()
    }

    fn curved_plane_package() -> CartanPackage {
        let alg = AlgebroidData::action(
            2,
            vec![
                PolyVectorField::coordinate(2, 0),
                PolyVectorField::coordinate(2, 1),
            ],
            vec![vec![vec![rat_int(0); 2]; 2]; 2],
        )
        .unwrap();
        let mut gamma = vec![vec![vec![TruncPoly::zero(2); 2]; 2]; 2];
        gamma[0][0][1] = xp(vec![0, 1], 1);
        CartanPackage::new(alg, Connection::new(2, 2, gamma).unwrap()).unwrap()
    }

    #[test]
    fn base_differential_on_functions_takes_partials() {
        let pkg = CartanPackage::new(AlgebroidData::tangent(2), Connection::zero(2, 2)).unwrap();
        let f = MixedCochain::monomial(2, 2, vec![], vec![], xp(vec![2, 1], 1)).unwrap();
        let df = d_de_rham(&pkg, &f).unwrap();
        assert_eq!(df.coeff(&[], &[0]), xp(vec![1, 1], 2));
        assert_eq!(df.coeff(&[], &[1]), xp(vec![2, 0], 1));
        assert_eq!(df.coeffs().len(), 2);
    }

    #[test]
    fn frame_differential_on_functions_applies_the_anchor() {
        let pkg = euler_package();
        let f = MixedCochain::monomial(1, 1, vec![], vec![], xp(vec![2], 1)).unwrap();
        let df = d_algebroid(&pkg, &f).unwrap();
        assert_eq!(df.coeff(&[0], &[]), xp(vec![2], 2));
    }

    #[test]
    fn evaluation_is_alternating() {
        let pkg = sl2_package();
        let omega =
            MixedCochain::monomial(3, 1, vec![0, 2], vec![0], xp(vec![1], 1)).unwrap();
        assert_eq!(omega.eval(&[2, 0], &[0]), xp(vec![1], -1));
        assert!(omega.eval(&[0, 0], &[0]).is_zero());
        let chain =
            AlgebroidCochain::monomial(3, 1, vec![0, 1], TruncPoly::one(1)).unwrap();
        assert_eq!(chain.eval(&[1, 0]), xp(vec![0], -1));
        drop(pkg);
    }

    #[test]
    fn commutation_holds_for_the_euler_action() {
        let report = commutation_report(&euler_package(), 1, 1, 3).unwrap();
        assert!(report.passed, "{:?}", report.failures);
    }

    #[test]
    fn curved_connection_breaks_the_squares() {
        let pkg = curved_plane_package();
        let report = commutation_report(&pkg, 1, 1, 2).unwrap();
        assert!(!report.passed);
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("does not square to zero")));
        let out = inf_haefliger(&pkg, 1, 1, 2).unwrap();
        assert!(!out.commutation.passed);
        assert!(out.tables.is_empty());
    }

    #[test]
    fn frame_weights_solve_the_grading_constraints() {
        assert_eq!(frame_weights(&euler_package()).unwrap(), vec![0]);
        assert_eq!(frame_weights(&sl2_package()).unwrap(), vec![-1, 0, 1]);
    }

    #[test]
    fn inconsistent_anchor_degrees_are_rejected() {
        let rho = PolyVectorField::coordinate(1, 0)
            .add(&PolyVectorField::monomial(Exponent(vec![1]), 0))
            .unwrap();
        let alg = AlgebroidData::action(1, vec![rho], vec![vec![vec![rat_int(0)]]]).unwrap();
        let pkg = CartanPackage::new(alg, Connection::zero(1, 1)).unwrap();
        let err = frame_weights(&pkg).unwrap_err();
        assert!(matches!(err, CartanError::NotWeightGraded(_)));
    }

    #[test]
    fn euler_cohomology_concentrates_in_weight_zero() {
        let out = inf_haefliger(&euler_package(), 1, 1, 2).unwrap();
        assert!(out.commutation.passed);
        for (w, table) in &out.tables {
            if *w == 0 {
                assert_eq!(table.dims(), vec![1, 1, 0]);
            } else {
                assert_eq!(table.dims(), vec![0, 0, 0], "weight {w}");
            }
        }
        assert_eq!(out.tables.len(), 5);
    }

    #[test]
    fn chevalley_eilenberg_differential_on_the_euler_double() {
        let pkg = euler_package();
        let dbl = crate::double::double(&pkg).unwrap();
        let f = AlgebroidCochain::monomial(2, 1, vec![], xp(vec![1], 1)).unwrap();
        let df = ce_differential(dbl.data(), &f).unwrap();
        assert_eq!(df.coeff(&[0]), xp(vec![1], 1));
        assert_eq!(df.coeff(&[1]), TruncPoly::one(1));
    }

    #[test]
    fn euler_complex_matches_its_double() {
        let out = double_equivalence_check(&euler_package(), 3, 2).unwrap();
        assert!(out.differentials.passed, "{:?}", out.differentials.failures);
        assert!(out.dims_agree);
    }

    #[test]
    fn rank_zero_package_reduces_to_formal_forms() {
        let pkg = rank_zero_package();
        let out = double_equivalence_check(&pkg, 2, 2).unwrap();
        assert!(out.differentials.passed);
        assert!(out.dims_agree);
        for (w, table) in &out.haefliger {
            if *w == 0 {
                assert_eq!(table.dims(), vec![1, 0, 0]);
            } else {
                assert_eq!(table.dims(), vec![0, 0, 0], "weight {w}");
            }
        }
    }

    #[test]
    fn slice_bases_count_scaled_monomials() {
        let weights = vec![0];
        let slice = mixed_slice(1, 1, &weights, 1, 1);
        assert_eq!(slice.keys.len(), 2);
        let labels: Vec<String> = slice.labels.labels().to_vec();
        assert!(labels.iter().any(|l| l.contains("e*0")));
        assert!(labels.iter().any(|l| l.contains("dx")));
    }

    #[test]
    fn worker_threads_do_not_change_the_tables() {
        let pkg = sl2_package();
        let sequential = haefliger_cohomology(&pkg, 2).unwrap();
        std::env::set_var("CARTAN_COH_THREADS", "3");
        let threaded = haefliger_cohomology(&pkg, 2).unwrap();
        std::env::remove_var("CARTAN_COH_THREADS");
        assert_eq!(sequential, threaded);
    }
}
