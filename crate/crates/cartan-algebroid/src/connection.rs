use formal::{Exponent, PolyVectorField, TruncPoly};
use linalg::{rat_int, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebroid::AlgebroidData;
use crate::{CartanError, CheckReport};

pub(crate) fn sec_add(s: &[TruncPoly], t: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
    s.iter()
        .zip(t)
        .map(|(a, b)| a.add(b).map_err(CartanError::from))
        .collect()
}

pub(crate) fn sec_sub(s: &[TruncPoly], t: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
    s.iter()
        .zip(t)
        .map(|(a, b)| a.sub(b).map_err(CartanError::from))
        .collect()
}

pub(crate) fn sec_is_zero(s: &[TruncPoly]) -> bool {
    s.iter().all(TruncPoly::is_zero)
}

pub(crate) fn eval_poly(p: &TruncPoly, x: &[Rational]) -> Rational {
    let mut total = rat_int(0);
    for (e, c) in p.terms() {
        let mut term = c.clone();
        for (xi, &pow) in x.iter().zip(&e.0) {
            for _ in 0..pow {
                term *= xi.clone();
            }
        }
        total += term;
    }
    total
}

pub(crate) fn eval_section(s: &[TruncPoly], x: &[Rational]) -> Vec<Rational> {
    s.iter().map(|p| eval_poly(p, x)).collect()
}

/// A linear connection on the frame bundle, stored through its Christoffel
/// coefficients: `nabla_{∂_i} e_a = sum_b gamma[i][a][b] e_b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    base_dim: usize,
    rank: usize,
    gamma: Vec<Vec<Vec<TruncPoly>>>,
}

impl Connection {
    pub fn new(
        base_dim: usize,
        rank: usize,
        gamma: Vec<Vec<Vec<TruncPoly>>>,
    ) -> Result<Self, CartanError> {
        if gamma.len() != base_dim {
            return Err(CartanError::InvalidData(format!(
                "Christoffel data for {} coordinates, base has {base_dim}",
                gamma.len()
            )));
        }
        for (i, slab) in gamma.iter().enumerate() {
            if slab.len() != rank {
                return Err(CartanError::InvalidData(format!(
                    "Christoffel slab {i} covers {} frame sections, rank is {rank}",
                    slab.len()
                )));
            }
            for row in slab {
                if row.len() != rank {
                    return Err(CartanError::InvalidData(format!(
                        "Christoffel row in slab {i} has {} components, rank is {rank}",
                        row.len()
                    )));
                }
                for p in row {
                    if p.nvars() != base_dim {
                        return Err(CartanError::InvalidData(format!(
                            "Christoffel coefficient in slab {i} uses {} variables, base has {base_dim}",
                            p.nvars()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            base_dim,
            rank,
            gamma,
        })
    }

    /// The connection whose Christoffel coefficients all vanish, so the
    /// frame sections are parallel.
    pub fn zero(base_dim: usize, rank: usize) -> Self {
        let z = TruncPoly::zero(base_dim);
        Self {
            base_dim,
            rank,
            gamma: vec![vec![vec![z; rank]; rank]; base_dim],
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The image section `nabla_{∂_i} e_a` as a coefficient vector.
    pub fn christoffel(&self, i: usize, a: usize) -> &[TruncPoly] {
        &self.gamma[i][a]
    }

    /// Covariant derivative along a coordinate field:
    /// `(nabla_{∂_i} s)^b = ∂_i s^b + sum_a gamma[i][a][b] s^a`.
    pub fn nabla_coordinate(&self, i: usize, s: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
        let mut out = Vec::with_capacity(self.rank);
        for b in 0..self.rank {
            let mut acc = s[b].partial(i);
            for a in 0..self.rank {
                if s[a].is_zero() || self.gamma[i][a][b].is_zero() {
                    continue;
                }
                acc = acc.add(&self.gamma[i][a][b].mul(&s[a])?)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Covariant derivative along an arbitrary field, tensorially in the
    /// field: `nabla_X = sum_i X^i nabla_{∂_i}`.
    pub fn nabla(&self, x: &PolyVectorField, s: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
        let mut out = vec![TruncPoly::zero(self.base_dim); self.rank];
        for i in 0..self.base_dim {
            if x.component(i).is_zero() {
                continue;
            }
            let step = self.nabla_coordinate(i, s)?;
            for (o, p) in out.iter_mut().zip(&step) {
                *o = o.add(&p.mul(x.component(i))?)?;
            }
        }
        Ok(out)
    }

    /// Curvature on coordinate fields,
    /// `R(∂_i, ∂_j) e_a = nabla_i nabla_j e_a - nabla_j nabla_i e_a`.
    pub fn curvature(&self, i: usize, j: usize, a: usize) -> Result<Vec<TruncPoly>, CartanError> {
        let ea: Vec<TruncPoly> = (0..self.rank)
            .map(|b| {
                if b == a {
                    TruncPoly::one(self.base_dim)
                } else {
                    TruncPoly::zero(self.base_dim)
                }
            })
            .collect();
        let ij = self.nabla_coordinate(i, &self.nabla_coordinate(j, &ea)?)?;
        let ji = self.nabla_coordinate(j, &self.nabla_coordinate(i, &ea)?)?;
        sec_sub(&ij, &ji)
    }

    pub fn is_flat(&self) -> bool {
        for i in 0..self.base_dim {
            for j in i + 1..self.base_dim {
                for a in 0..self.rank {
                    let r = self.curvature(i, j, a).expect("frames are sections");
                    if !sec_is_zero(&r) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// An algebroid with a connection on its bundle, together with the two
/// derivative laws the pair induces and the flags that make it a flat
/// Cartan package.
///
/// `tm_conn[a][i]` is the induced derivative of `∂_i` along `e_a`,
/// `[rho(e_a), ∂_i] + rho(nabla_{∂_i} e_a)`; `a_conn[a][b]` is the induced
/// derivative of `e_b` along `e_a`, `nabla_{rho(e_b)} e_a + [e_a, e_b]`.
/// `flat` records vanishing curvature of the connection and
/// `multiplicative` the vanishing of the basic curvature.
#[derive(Clone, Debug)]
pub struct CartanPackage {
    algebroid: AlgebroidData,
    connection: Connection,
    tm_conn: Vec<Vec<PolyVectorField>>,
    a_conn: Vec<Vec<Vec<TruncPoly>>>,
    flat: bool,
    multiplicative: bool,
}

impl CartanPackage {
    pub fn new(algebroid: AlgebroidData, connection: Connection) -> Result<Self, CartanError> {
        if connection.rank() != algebroid.rank() || connection.base_dim() != algebroid.base_dim() {
            return Err(CartanError::InvalidData(format!(
                "connection of rank {} over {} variables on an algebroid of rank {} over {}",
                connection.rank(),
                connection.base_dim(),
                algebroid.rank(),
                algebroid.base_dim()
            )));
        }
        let r = algebroid.rank();
        let n = algebroid.base_dim();
        let mut tm_conn = Vec::with_capacity(r);
        for a in 0..r {
            let mut row = Vec::with_capacity(n);
            for i in 0..n {
                let coord = PolyVectorField::coordinate(n, i);
                let field = algebroid
                    .anchor(a)
                    .bracket(&coord)?
                    .add(&algebroid.anchor_of(connection.christoffel(i, a))?)?;
                row.push(field);
            }
            tm_conn.push(row);
        }
        let mut a_conn = Vec::with_capacity(r);
        for a in 0..r {
            let mut row = Vec::with_capacity(r);
            for b in 0..r {
                let nab = connection.nabla(algebroid.anchor(b), &algebroid.frame_section(a))?;
                row.push(sec_add(&nab, algebroid.structure(a, b))?);
            }
            a_conn.push(row);
        }
        let mut pkg = Self {
            algebroid,
            connection,
            tm_conn,
            a_conn,
            flat: false,
            multiplicative: false,
        };
        pkg.flat = pkg.connection.is_flat();
        pkg.multiplicative = pkg.basic_curvature_vanishes()?;
        Ok(pkg)
    }

    fn basic_curvature_vanishes(&self) -> Result<bool, CartanError> {
        let r = self.algebroid.rank();
        for a in 0..r {
            for b in a + 1..r {
                for i in 0..self.algebroid.base_dim() {
                    let k = basic_curvature(
                        self,
                        &self.algebroid.frame_section(a),
                        &self.algebroid.frame_section(b),
                        &PolyVectorField::coordinate(self.algebroid.base_dim(), i),
                    )?;
                    if !sec_is_zero(&k) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn algebroid(&self) -> &AlgebroidData {
        &self.algebroid
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    /// The induced derivative of `∂_i` along the frame section `e_a`.
    pub fn tm_frame(&self, a: usize, i: usize) -> &PolyVectorField {
        &self.tm_conn[a][i]
    }

    /// The induced derivative of `e_b` along the frame section `e_a`.
    pub fn a_frame(&self, a: usize, b: usize) -> &[TruncPoly] {
        &self.a_conn[a][b]
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn is_multiplicative(&self) -> bool {
        self.multiplicative
    }

    /// Both flags at once: flat and with vanishing basic curvature.
    pub fn is_cartan(&self) -> bool {
        self.flat && self.multiplicative
    }

    /// The induced derivative of a base field along a section,
    /// `[rho(s), x] + rho(nabla_x s)`; tensorial in `s`.
    pub fn tm_nabla(
        &self,
        s: &[TruncPoly],
        x: &PolyVectorField,
    ) -> Result<PolyVectorField, CartanError> {
        let bracket = self.algebroid.anchor_of(s)?.bracket(x)?;
        Ok(bracket.add(&self.algebroid.anchor_of(&self.connection.nabla(x, s)?)?)?)
    }

    /// The induced derivative of a section along a section,
    /// `nabla_{rho(t)} s + [s, t]`; tensorial in `s`.
    pub fn a_nabla(&self, s: &[TruncPoly], t: &[TruncPoly]) -> Result<Vec<TruncPoly>, CartanError> {
        let nab = self.connection.nabla(&self.algebroid.anchor_of(t)?, s)?;
        sec_add(&nab, &self.algebroid.bracket(s, t)?)
    }
}

/// The basic curvature of the package on two sections and a base field:
///
/// `k(a, b)(x) = nabla_x [a, b] - [nabla_x a, b] - [a, nabla_x b]
///             - nabla_{D_b x} a + nabla_{D_a x} b`
///
/// where `D` is the induced derivative on base fields. It measures the
/// failure of the bracket to be parallel and is tensorial in all three
/// slots.
pub fn basic_curvature(
    pkg: &CartanPackage,
    alpha: &[TruncPoly],
    beta: &[TruncPoly],
    x: &PolyVectorField,
) -> Result<Vec<TruncPoly>, CartanError> {
    let alg = pkg.algebroid();
    let conn = pkg.connection();
    let mut out = conn.nabla(x, &alg.bracket(alpha, beta)?)?;
    out = sec_sub(&out, &alg.bracket(&conn.nabla(x, alpha)?, beta)?)?;
    out = sec_sub(&out, &alg.bracket(alpha, &conn.nabla(x, beta)?)?)?;
    out = sec_sub(&out, &conn.nabla(&pkg.tm_nabla(beta, x)?, alpha)?)?;
    sec_add(&out, &conn.nabla(&pkg.tm_nabla(alpha, x)?, beta)?)
}

/// The two induced derivative laws on frames, together with a report that
/// their curvatures are the anchor images of the basic curvature: the base
/// one is `rho` after the basic curvature, the bundle one is the basic
/// curvature after `rho`. The curvature of an induced law `F` is oriented
/// as `k(a, b) = F_b F_a - F_a F_b + F_{[a, b]}`, the orientation that
/// makes both identities exact.
pub fn induced_connections(
    pkg: &CartanPackage,
) -> Result<(Vec<Vec<PolyVectorField>>, Vec<Vec<Vec<TruncPoly>>>, CheckReport), CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let mut failures = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            let ea = alg.frame_section(a);
            let eb = alg.frame_section(b);
            for i in 0..n {
                let coord = PolyVectorField::coordinate(n, i);
                let curv = pkg
                    .tm_nabla(&eb, &pkg.tm_nabla(&ea, &coord)?)?
                    .sub(&pkg.tm_nabla(&ea, &pkg.tm_nabla(&eb, &coord)?)?)?
                    .add(&pkg.tm_nabla(alg.structure(a, b), &coord)?)?;
                let pushed = alg.anchor_of(&basic_curvature(pkg, &ea, &eb, &coord)?)?;
                if !curv.sub(&pushed)?.is_zero() {
                    failures.push(format!(
                        "base curvature on (e_{a}, e_{b}, ∂_{i}) is not the anchored basic curvature"
                    ));
                }
            }
            for k in 0..r {
                let ek = alg.frame_section(k);
                let mut curv = pkg.a_nabla(&eb, &pkg.a_nabla(&ea, &ek)?)?;
                curv = sec_sub(&curv, &pkg.a_nabla(&ea, &pkg.a_nabla(&eb, &ek)?)?)?;
                curv = sec_add(&curv, &pkg.a_nabla(alg.structure(a, b), &ek)?)?;
                let pulled = basic_curvature(pkg, &ea, &eb, alg.anchor(k))?;
                if !sec_is_zero(&sec_sub(&curv, &pulled)?) {
                    failures.push(format!(
                        "bundle curvature on (e_{a}, e_{b}, e_{k}) is not the basic curvature of the anchor"
                    ));
                }
            }
        }
    }
    Ok((
        pkg.tm_conn.clone(),
        pkg.a_conn.clone(),
        CheckReport::from_failures(failures),
    ))
}

/// The fibrewise bracket `{a, b} = [a, b] - nabla_{rho(a)} b + nabla_{rho(b)} a`.
///
/// On a flat Cartan package it is tensorial and makes every fibre a Lie
/// algebra, deforming the pointwise bracket by the anchor's derivative
/// terms.
pub fn pointwise_bracket(
    pkg: &CartanPackage,
    alpha: &[TruncPoly],
    beta: &[TruncPoly],
) -> Result<Vec<TruncPoly>, CartanError> {
    let alg = pkg.algebroid();
    let conn = pkg.connection();
    let mut out = alg.bracket(alpha, beta)?;
    out = sec_sub(&out, &conn.nabla(&alg.anchor_of(alpha)?, beta)?)?;
    sec_add(&out, &conn.nabla(&alg.anchor_of(beta)?, alpha)?)
}

/// Structure constants of the extended isotropy Lie algebra at a rational
/// point: the full fibre with the fibrewise bracket evaluated there.
/// Requires a flat Cartan package.
pub fn extended_isotropy(
    pkg: &CartanPackage,
    x: &[Rational],
) -> Result<Vec<Vec<Vec<Rational>>>, CartanError> {
    if !pkg.is_cartan() {
        return Err(CartanError::NotFlatCartan);
    }
    let alg = pkg.algebroid();
    if x.len() != alg.base_dim() {
        return Err(CartanError::InvalidData(format!(
            "point has {} coordinates, base has {}",
            x.len(),
            alg.base_dim()
        )));
    }
    let r = alg.rank();
    let mut constants = vec![vec![vec![rat_int(0); r]; r]; r];
    for a in 0..r {
        for b in 0..r {
            let br = pointwise_bracket(pkg, &alg.frame_section(a), &alg.frame_section(b))?;
            constants[a][b] = eval_section(&br, x);
        }
    }
    Ok(constants)
}

/// Whether constant antisymmetric structure data satisfies the Jacobi
/// identity.
pub fn lie_constants_jacobi(c: &[Vec<Vec<Rational>>]) -> bool {
    let r = c.len();
    for a in 0..r {
        for b in a + 1..r {
            for k in b + 1..r {
                for e in 0..r {
                    let mut total = rat_int(0);
                    for d in 0..r {
                        total += c[a][b][d].clone() * c[d][k][e].clone();
                        total += c[b][k][d].clone() * c[d][a][e].clone();
                        total += c[k][a][d].clone() * c[d][b][e].clone();
                    }
                    if total != rat_int(0) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Parallel transport along the coordinate axis `direction`, from the
/// origin: the matrix `T(x)` with `T(0) = I` and `T' = -G T`, where `G` is
/// the Christoffel matrix of the axis restricted to it. The series must
/// close into an exact polynomial within `degree_bound`, otherwise the
/// transport is reported divergent.
///
/// Column `a` of the result expands the transported frame section `e_a`.
pub fn coordinate_transport(
    pkg: &CartanPackage,
    direction: usize,
    degree_bound: u32,
) -> Result<Vec<Vec<TruncPoly>>, CartanError> {
    let alg = pkg.algebroid();
    let n = alg.base_dim();
    let r = alg.rank();
    if direction >= n {
        return Err(CartanError::InvalidData(format!(
            "direction {direction} out of range for base dimension {n}"
        )));
    }
    let axis: Vec<TruncPoly> = (0..n)
        .map(|j| {
            if j == direction {
                TruncPoly::var(n, j)
            } else {
                TruncPoly::zero(n)
            }
        })
        .collect();
    let mut g = vec![vec![TruncPoly::zero(n); r]; r];
    for a in 0..r {
        for b in 0..r {
            g[b][a] = pkg.connection().christoffel(direction, a)[b].substitute(&axis)?;
        }
    }
    let mut gcoef: Vec<Vec<Vec<Rational>>> = Vec::new();
    for (b, row) in g.iter().enumerate() {
        for (a, p) in row.iter().enumerate() {
            for (e, c) in p.terms() {
                let m = e.0[direction] as usize;
                while gcoef.len() <= m {
                    gcoef.push(vec![vec![rat_int(0); r]; r]);
                }
                gcoef[m][b][a] = c.clone();
            }
        }
    }
    let mut tcoef: Vec<Vec<Vec<Rational>>> = Vec::with_capacity(degree_bound as usize + 1);
    let mut identity = vec![vec![rat_int(0); r]; r];
    for (d, row) in identity.iter_mut().enumerate() {
        row[d] = rat_int(1);
    }
    tcoef.push(identity);
    for k in 0..degree_bound as usize {
        let mut next = vec![vec![rat_int(0); r]; r];
        for (m, gm) in gcoef.iter().enumerate().take(k + 1) {
            let tk = &tcoef[k - m];
            for (row, next_row) in next.iter_mut().enumerate() {
                for col in 0..r {
                    for mid in 0..r {
                        next_row[col] -= gm[row][mid].clone() * tk[mid][col].clone();
                    }
                }
            }
        }
        let scale = Rational::new(1.into(), (k as i64 + 1).into());
        for row in next.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale.clone();
            }
        }
        tcoef.push(next);
    }
    let mut t_mat = vec![vec![TruncPoly::zero(n); r]; r];
    for row in 0..r {
        for col in 0..r {
            let terms = tcoef.iter().enumerate().filter_map(|(k, m)| {
                if m[row][col] == rat_int(0) {
                    None
                } else {
                    let mut e = vec![0u32; n];
                    e[direction] = k as u32;
                    Some((Exponent(e), m[row][col].clone()))
                }
            });
            t_mat[row][col] = TruncPoly::from_terms(n, None, terms);
        }
    }
    for row in 0..r {
        for col in 0..r {
            let mut residual = t_mat[row][col].partial(direction);
            for mid in 0..r {
                residual = residual.add(&g[row][mid].mul(&t_mat[mid][col])?)?;
            }
            if !residual.is_zero() {
                return Err(CartanError::TransportDiverges(degree_bound));
            }
        }
    }
    Ok(t_mat)
}

/// Checks that parallel transport along a coordinate axis intertwines the
/// extended isotropy brackets at the origin and at the target point
/// `t · e_direction`.
pub fn isotropy_transport_check(
    pkg: &CartanPackage,
    direction: usize,
    t: &Rational,
    degree_bound: u32,
) -> Result<CheckReport, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let origin = vec![rat_int(0); alg.base_dim()];
    let mut target = origin.clone();
    target[direction] = t.clone();
    let c0 = extended_isotropy(pkg, &origin)?;
    let c1 = extended_isotropy(pkg, &target)?;
    let transport = coordinate_transport(pkg, direction, degree_bound)?;
    let tnum: Vec<Vec<Rational>> = transport
        .iter()
        .map(|row| row.iter().map(|p| eval_poly(p, &target)).collect())
        .collect();
    let mut failures = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            for e in 0..r {
                let mut lhs = rat_int(0);
                for ap in 0..r {
                    for bp in 0..r {
                        lhs += tnum[ap][a].clone() * tnum[bp][b].clone() * c1[ap][bp][e].clone();
                    }
                }
                let mut rhs = rat_int(0);
                for d in 0..r {
                    rhs += c0[a][b][d].clone() * tnum[e][d].clone();
                }
                if lhs != rhs {
                    failures.push(format!(
                        "transport along ∂_{direction} does not intertwine the isotropy brackets on (e_{a}, e_{b})"
                    ));
                    break;
                }
            }
        }
    }
    Ok(CheckReport::from_failures(failures))
}

fn mat_mul(a: &[Vec<TruncPoly>], b: &[Vec<TruncPoly>]) -> Result<Vec<Vec<TruncPoly>>, CartanError> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nvars = a[0][0].nvars();
    let mut out = vec![vec![TruncPoly::zero(nvars); n]; n];
    for (row, out_row) in out.iter_mut().enumerate() {
        for col in 0..n {
            let mut acc = TruncPoly::zero(nvars);
            for mid in 0..n {
                if a[row][mid].is_zero() || b[mid][col].is_zero() {
                    continue;
                }
                acc = acc.add(&a[row][mid].mul(&b[mid][col])?)?;
            }
            out_row[col] = acc;
        }
    }
    Ok(out)
}

fn mat_identity(n: usize, nvars: usize) -> Vec<Vec<TruncPoly>> {
    let mut out = vec![vec![TruncPoly::zero(nvars); n]; n];
    for (d, row) in out.iter_mut().enumerate() {
        row[d] = TruncPoly::one(nvars);
    }
    out
}

fn mat_is_identity(m: &[Vec<TruncPoly>]) -> Result<bool, CartanError> {
    for (row, entries) in m.iter().enumerate() {
        for (col, p) in entries.iter().enumerate() {
            let want = if row == col {
                TruncPoly::one(p.nvars())
            } else {
                TruncPoly::zero(p.nvars())
            };
            if !p.sub(&want)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Regauges the package by a bundle automorphism: the new frame is
/// `ẽ_a = sum_b phi[b][a] e_b`. The anchor, structure functions and
/// Christoffel coefficients are rewritten in the new frame; the two flags
/// are recomputed and are invariant under the change.
pub fn bundle_gauge(
    pkg: &CartanPackage,
    phi: &[Vec<TruncPoly>],
    phi_inv: &[Vec<TruncPoly>],
) -> Result<CartanPackage, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let shape_ok = |m: &[Vec<TruncPoly>]| {
        m.len() == r && m.iter().all(|row| row.len() == r && row.iter().all(|p| p.nvars() == n))
    };
    if !shape_ok(phi) || !shape_ok(phi_inv) {
        return Err(CartanError::InvalidData(
            "gauge matrices must be rank-sized squares over the base".into(),
        ));
    }
    if r > 0 && !mat_is_identity(&mat_mul(phi, phi_inv)?)? {
        return Err(CartanError::InvalidData(
            "gauge matrices are not mutually inverse".into(),
        ));
    }
    let column = |m: &[Vec<TruncPoly>], a: usize| -> Vec<TruncPoly> {
        (0..r).map(|b| m[b][a].clone()).collect()
    };
    let mut anchor = Vec::with_capacity(r);
    for a in 0..r {
        anchor.push(alg.anchor_of(&column(phi, a))?);
    }
    let mut c = vec![vec![vec![TruncPoly::zero(n); r]; r]; r];
    for a in 0..r {
        for b in 0..r {
            let w = alg.bracket(&column(phi, a), &column(phi, b))?;
            for k in 0..r {
                let mut acc = TruncPoly::zero(n);
                for (m, wm) in w.iter().enumerate() {
                    if wm.is_zero() || phi_inv[k][m].is_zero() {
                        continue;
                    }
                    acc = acc.add(&phi_inv[k][m].mul(wm)?)?;
                }
                c[a][b][k] = acc;
            }
        }
    }
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        let mut old = vec![vec![TruncPoly::zero(n); r]; r];
        let mut dphi = vec![vec![TruncPoly::zero(n); r]; r];
        for a in 0..r {
            for b in 0..r {
                old[b][a] = pkg.connection().christoffel(i, a)[b].clone();
                dphi[b][a] = phi[b][a].partial(i);
            }
        }
        let new_mat = mat_mul(phi_inv, &dphi)?
            .iter()
            .zip(mat_mul(&mat_mul(phi_inv, &old)?, phi)?)
            .map(|(lhs, rhs)| {
                lhs.iter()
                    .zip(rhs)
                    .map(|(p, q)| p.add(&q).map_err(CartanError::from))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut slab = vec![vec![TruncPoly::zero(n); r]; r];
        for a in 0..r {
            for b in 0..r {
                slab[a][b] = new_mat[b][a].clone();
            }
        }
        gamma.push(slab);
    }
    CartanPackage::new(
        AlgebroidData::new(n, anchor, c)?,
        Connection::new(n, r, gamma)?,
    )
}

/// Rewrites the package through the affine base change `x = A y + b`. The
/// matrix must come with its exact inverse so the push-forward of the
/// anchor stays polynomial.
pub fn base_affine_change(
    pkg: &CartanPackage,
    a_mat: &[Vec<Rational>],
    a_inv: &[Vec<Rational>],
    shift: &[Rational],
) -> Result<CartanPackage, CartanError> {
    let alg = pkg.algebroid();
    let n = alg.base_dim();
    let r = alg.rank();
    let square_ok =
        |m: &[Vec<Rational>]| m.len() == n && m.iter().all(|row| row.len() == n);
    if !square_ok(a_mat) || !square_ok(a_inv) || shift.len() != n {
        return Err(CartanError::InvalidData(
            "affine data must be base-sized".into(),
        ));
    }
    for row in 0..n {
        for col in 0..n {
            let mut acc = rat_int(0);
            for mid in 0..n {
                acc += a_mat[row][mid].clone() * a_inv[mid][col].clone();
            }
            let want = if row == col { rat_int(1) } else { rat_int(0) };
            if acc != want {
                return Err(CartanError::InvalidData(
                    "affine matrices are not mutually inverse".into(),
                ));
            }
        }
    }
    let mut images = Vec::with_capacity(n);
    for j in 0..n {
        let mut img = TruncPoly::constant(n, shift[j].clone());
        for k in 0..n {
            if a_mat[j][k] != rat_int(0) {
                img = img.add(&TruncPoly::var(n, k).scale(&a_mat[j][k]))?;
            }
        }
        images.push(img);
    }
    let mut anchor = Vec::with_capacity(r);
    for a in 0..r {
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = TruncPoly::zero(n);
            for j in 0..n {
                if a_inv[i][j] == rat_int(0) {
                    continue;
                }
                acc = acc.add(&alg.anchor(a).component(j).substitute(&images)?.scale(&a_inv[i][j]))?;
            }
            comps.push(acc);
        }
        anchor.push(PolyVectorField::new(comps)?);
    }
    let mut c = vec![vec![vec![TruncPoly::zero(n); r]; r]; r];
    for a in 0..r {
        for b in 0..r {
            for k in 0..r {
                c[a][b][k] = alg.structure(a, b)[k].substitute(&images)?;
            }
        }
    }
    let mut gamma = vec![vec![vec![TruncPoly::zero(n); r]; r]; n];
    for (i, slab) in gamma.iter_mut().enumerate() {
        for a in 0..r {
            for b in 0..r {
                let mut acc = TruncPoly::zero(n);
                for j in 0..n {
                    if a_mat[j][i] == rat_int(0) {
                        continue;
                    }
                    acc = acc.add(
                        &pkg.connection().christoffel(j, a)[b]
                            .substitute(&images)?
                            .scale(&a_mat[j][i]),
                    )?;
                }
                slab[a][b] = acc;
            }
        }
    }
    CartanPackage::new(
        AlgebroidData::new(n, anchor, c)?,
        Connection::new(n, r, gamma)?,
    )
}

fn seed_package(choice: usize) -> CartanPackage {
    let pkg = |n: usize, anchor: Vec<PolyVectorField>, brackets: Vec<(usize, usize, usize, i64)>| {
        let r = anchor.len();
        let mut c = vec![vec![vec![rat_int(0); r]; r]; r];
        for (a, b, k, v) in brackets {
            c[a][b][k] = rat_int(v);
            c[b][a][k] = rat_int(-v);
        }
        let alg = AlgebroidData::action(n, anchor, c).expect("seed data is well formed");
        CartanPackage::new(alg, Connection::zero(n, r)).expect("seed data is well formed")
    };
    let x_del = |n: usize, var: usize, target: usize, scale: i64| {
        let mut e = vec![0u32; n];
        e[var] = 1;
        PolyVectorField::monomial(Exponent(e), target).scale(&rat_int(scale))
    };
    match choice {
        0 => pkg(1, vec![x_del(1, 0, 0, 1)], vec![]),
        1 => {
            let e = PolyVectorField::coordinate(1, 0);
            let h = x_del(1, 0, 0, -2);
            let mut sq = vec![0u32; 1];
            sq[0] = 2;
            let f = PolyVectorField::monomial(Exponent(sq), 0).scale(&rat_int(-1));
            pkg(
                1,
                vec![e, h, f],
                vec![(1, 0, 0, 2), (1, 2, 2, -2), (0, 2, 1, 1)],
            )
        }
        2 => pkg(
            1,
            vec![PolyVectorField::coordinate(1, 0), x_del(1, 0, 0, -1)],
            vec![(0, 1, 0, -1)],
        ),
        3 => pkg(
            2,
            vec![
                PolyVectorField::coordinate(2, 0),
                PolyVectorField::coordinate(2, 1),
            ],
            vec![],
        ),
        _ => pkg(
            2,
            vec![
                PolyVectorField::coordinate(2, 0),
                x_del(2, 0, 1, 1),
                PolyVectorField::coordinate(2, 1),
            ],
            vec![(0, 1, 2, 1)],
        ),
    }
}

fn neumann_inverse(nilpotent: &[Vec<TruncPoly>]) -> Result<Vec<Vec<TruncPoly>>, CartanError> {
    let r = nilpotent.len();
    let nvars = if r == 0 { 0 } else { nilpotent[0][0].nvars() };
    let mut inv = mat_identity(r, nvars);
    let mut power = mat_identity(r, nvars);
    for k in 1..r {
        power = mat_mul(&power, nilpotent)?;
        let sign = if k % 2 == 0 { rat_int(1) } else { rat_int(-1) };
        for (inv_row, pow_row) in inv.iter_mut().zip(&power) {
            for (entry, p) in inv_row.iter_mut().zip(pow_row) {
                *entry = entry.add(&p.scale(&sign))?;
            }
        }
    }
    Ok(inv)
}

/// A reproducible flat Cartan package: a small catalogue of action
/// algebroids with their canonical flat connections, disguised by a random
/// polynomial gauge of the frame bundle and a random affine change of base
/// coordinates. Both flags hold on every output.
pub fn random_flat_package(seed: u64) -> CartanPackage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = seed_package(rng.gen_range(0..5));
    let r = base.algebroid().rank();
    let n = base.algebroid().base_dim();

    let mut upper = vec![vec![TruncPoly::zero(n); r]; r];
    for row in 0..r {
        for col in row + 1..r {
            let mut e = vec![0u32; n];
            e[rng.gen_range(0..n)] = rng.gen_range(0..=2);
            upper[row][col] =
                TruncPoly::monomial(Exponent(e), rat_int(rng.gen_range(-2..=2)));
        }
    }
    let mut lower = vec![vec![TruncPoly::zero(n); r]; r];
    for row in 0..r {
        for col in 0..row {
            lower[row][col] = TruncPoly::constant(n, rat_int(rng.gen_range(-2..=2)));
        }
    }
    let id = mat_identity(r, n);
    let add = |m: &[Vec<TruncPoly>], s: &[Vec<TruncPoly>]| -> Vec<Vec<TruncPoly>> {
        m.iter()
            .zip(s)
            .map(|(mr, sr)| {
                mr.iter()
                    .zip(sr)
                    .map(|(p, q)| p.add(q).expect("matching bases"))
                    .collect()
            })
            .collect()
    };
    let phi_u = add(&id, &upper);
    let phi_l = add(&id, &lower);
    let phi = mat_mul(&phi_l, &phi_u).expect("matching bases");
    let phi_inv = mat_mul(
        &neumann_inverse(&upper).expect("matching bases"),
        &neumann_inverse(&lower).expect("matching bases"),
    )
    .expect("matching bases");
    let gauged = bundle_gauge(&base, &phi, &phi_inv).expect("gauge of a valid package");

    let mut a_mat = vec![vec![rat_int(0); n]; n];
    for (d, row) in a_mat.iter_mut().enumerate() {
        row[d] = rat_int(1);
    }
    for row in 0..n {
        for col in 0..n {
            if row != col && rng.gen_bool(0.5) {
                a_mat[row][col] = rat_int(rng.gen_range(-2..=2));
            }
        }
    }
    let a_inv = invert_unimodular(&a_mat);
    let shift: Vec<Rational> = (0..n).map(|_| rat_int(rng.gen_range(-2..=2))).collect();
    match a_inv {
        Some(inv) => base_affine_change(&gauged, &a_mat, &inv, &shift)
            .expect("affine change of a valid package"),
        None => gauged,
    }
}

fn invert_unimodular(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut work: Vec<Vec<Rational>> = m.to_vec();
    let mut inv = vec![vec![rat_int(0); n]; n];
    for (d, row) in inv.iter_mut().enumerate() {
        row[d] = rat_int(1);
    }
    for col in 0..n {
        let pivot = (col..n).find(|&row| work[row][col] != rat_int(0))?;
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = work[col][col].clone();
        for j in 0..n {
            work[col][j] /= p.clone();
            inv[col][j] /= p.clone();
        }
        for row in 0..n {
            if row == col || work[row][col] == rat_int(0) {
                continue;
            }
            let f = work[row][col].clone();
            for j in 0..n {
                let w = work[col][j].clone() * f.clone();
                work[row][j] -= w;
                let v = inv[col][j].clone() * f.clone();
                inv[row][j] -= v;
            }
        }
    }
    Some(inv)
}
