use formal::{PolyVectorField, TruncPoly};
use linalg::{rat_int, Rational};
use serde::Serialize;

use crate::algebroid::AlgebroidData;
use crate::connection::{
    eval_section, extended_isotropy, pointwise_bracket, sec_add, sec_is_zero, sec_sub,
    CartanPackage,
};
use crate::{CartanError, CheckReport};

/// The algebroid assembled from a flat Cartan package on the sum of the
/// bundle and the tangent space. The first `algebroid_rank` frame sections
/// come from the bundle, the remaining `base_dim` are the coordinate
/// fields.
#[derive(Clone, Debug)]
pub struct DoubleAlgebroid {
    data: AlgebroidData,
    algebroid_rank: usize,
}

impl DoubleAlgebroid {
    pub fn data(&self) -> &AlgebroidData {
        &self.data
    }

    pub fn algebroid_rank(&self) -> usize {
        self.algebroid_rank
    }

    pub fn base_dim(&self) -> usize {
        self.data.base_dim()
    }
}

/// Builds the double of a flat Cartan package: the bundle summand keeps its
/// brackets, mixed brackets pair the two induced derivative laws,
///
/// `[e_a, ∂_i] = -nabla_{∂_i} e_a + D_{e_a} ∂_i`,
///
/// and the tangent summand is abelian on coordinate fields. The result
/// satisfies the Jacobi identity exactly when the package flags hold, which
/// is required.
pub fn double(pkg: &CartanPackage) -> Result<DoubleAlgebroid, CartanError> {
    if !pkg.is_cartan() {
        return Err(CartanError::NotFlatCartan);
    }
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let total = r + n;
    let mut anchor = Vec::with_capacity(total);
    for a in 0..r {
        anchor.push(alg.anchor(a).clone());
    }
    for i in 0..n {
        anchor.push(PolyVectorField::coordinate(n, i));
    }
    let mut c = vec![vec![vec![TruncPoly::zero(n); total]; total]; total];
    for a in 0..r {
        for b in 0..r {
            for k in 0..r {
                c[a][b][k] = alg.structure(a, b)[k].clone();
            }
        }
    }
    for a in 0..r {
        for i in 0..n {
            for b in 0..r {
                let v = pkg.connection().christoffel(i, a)[b].neg();
                c[a][r + i][b] = v.clone();
                c[r + i][a][b] = v.neg();
            }
            for j in 0..n {
                let v = pkg.tm_frame(a, i).component(j).clone();
                c[a][r + i][r + j] = v.clone();
                c[r + i][a][r + j] = v.neg();
            }
        }
    }
    Ok(DoubleAlgebroid {
        data: AlgebroidData::new(n, anchor, c)?,
        algebroid_rank: r,
    })
}

/// Checks that the fibrewise isotropy algebra at a rational point embeds
/// into the double: the constant sections `e_a - sum_i rho(e_a)^i(x) ∂_i`
/// close under the double's bracket at `x`, with the fibrewise structure
/// constants.
pub fn double_isotropy_check(
    pkg: &CartanPackage,
    x: &[Rational],
) -> Result<CheckReport, CartanError> {
    let dbl = double(pkg)?;
    let constants = extended_isotropy(pkg, x)?;
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let sigma: Vec<Vec<TruncPoly>> = (0..r)
        .map(|a| {
            let rho_at = eval_section(
                &(0..n)
                    .map(|i| alg.anchor(a).component(i).clone())
                    .collect::<Vec<_>>(),
                x,
            );
            let mut s = vec![TruncPoly::zero(n); r + n];
            s[a] = TruncPoly::one(n);
            for (i, v) in rho_at.into_iter().enumerate() {
                s[r + i] = TruncPoly::constant(n, -v);
            }
            s
        })
        .collect();
    let mut failures = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            let br = dbl.data().bracket(&sigma[a], &sigma[b])?;
            let mut want = vec![rat_int(0); r + n];
            for k in 0..r {
                let coeff = &constants[a][b][k];
                for (w, s) in want.iter_mut().zip(eval_section(&sigma[k], x)) {
                    *w += coeff.clone() * s;
                }
            }
            if eval_section(&br, x) != want {
                failures.push(format!(
                    "the isotropy sections at the point do not close on (e_{a}, e_{b})"
                ));
            }
        }
    }
    Ok(CheckReport::from_failures(failures))
}

/// A flat-candidate connection of one algebroid on another: per acting
/// frame section and module frame section, the image section
/// `nabla_{e_a} f_b = sum_k coeffs[a][b][k] f_k`. The derivative part acts
/// through the acting algebroid's anchor.
#[derive(Clone, Debug)]
pub struct AConnection {
    acting_rank: usize,
    module_rank: usize,
    base_dim: usize,
    coeffs: Vec<Vec<Vec<TruncPoly>>>,
}

impl AConnection {
    pub fn new(
        acting_rank: usize,
        module_rank: usize,
        base_dim: usize,
        coeffs: Vec<Vec<Vec<TruncPoly>>>,
    ) -> Result<Self, CartanError> {
        if coeffs.len() != acting_rank
            || coeffs
                .iter()
                .any(|row| row.len() != module_rank || row.iter().any(|s| s.len() != module_rank))
        {
            return Err(CartanError::InvalidData(
                "connection coefficients must be acting-by-module shaped".into(),
            ));
        }
        for row in &coeffs {
            for s in row {
                for p in s {
                    if p.nvars() != base_dim {
                        return Err(CartanError::InvalidData(format!(
                            "connection coefficient uses {} variables, base has {base_dim}",
                            p.nvars()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            acting_rank,
            module_rank,
            base_dim,
            coeffs,
        })
    }

    pub fn frame(&self, a: usize, b: usize) -> &[TruncPoly] {
        &self.coeffs[a][b]
    }

    /// `nabla_s t`, tensorial in `s` and a derivation in `t` through the
    /// acting anchor.
    pub fn apply(
        &self,
        acting: &AlgebroidData,
        s: &[TruncPoly],
        t: &[TruncPoly],
    ) -> Result<Vec<TruncPoly>, CartanError> {
        let rho_s = acting.anchor_of(s)?;
        let mut out = Vec::with_capacity(self.module_rank);
        for p in t.iter() {
            out.push(rho_s.apply(p)?);
        }
        for a in 0..self.acting_rank {
            if s[a].is_zero() {
                continue;
            }
            for b in 0..self.module_rank {
                if t[b].is_zero() {
                    continue;
                }
                let w = s[a].mul(&t[b])?;
                for (o, coeff) in out.iter_mut().zip(&self.coeffs[a][b]) {
                    if !coeff.is_zero() {
                        *o = o.add(&w.mul(coeff)?)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn a_connection_flat(
    acting: &AlgebroidData,
    module: &AlgebroidData,
    conn: &AConnection,
    frame_names: (&str, &str),
    failures: &mut Vec<String>,
) -> Result<(), CartanError> {
    let (an, mn) = frame_names;
    for a in 0..acting.rank() {
        for b in a + 1..acting.rank() {
            for k in 0..module.rank() {
                let ea = acting.frame_section(a);
                let eb = acting.frame_section(b);
                let fk = module.frame_section(k);
                let mut curv = conn.apply(acting, &ea, &conn.apply(acting, &eb, &fk)?)?;
                curv = sec_sub(&curv, &conn.apply(acting, &eb, &conn.apply(acting, &ea, &fk)?)?)?;
                curv = sec_sub(&curv, &conn.apply(acting, acting.structure(a, b), &fk)?)?;
                if !sec_is_zero(&curv) {
                    failures.push(format!(
                        "connection along {an} is not flat on ({an}_{a}, {an}_{b}, {mn}_{k})"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Decides whether two algebroids with mutual connections form a matched
/// pair: both connections flat, the mixed anchor brackets expressed through
/// the two derivatives, and each connection a derivation of the other
/// bracket up to the correction terms. Failures name the first violated
/// identity per frame tuple.
pub fn matched_pair_check(
    a1: &AlgebroidData,
    n1: &AConnection,
    a2: &AlgebroidData,
    n2: &AConnection,
) -> Result<CheckReport, CartanError> {
    if a1.base_dim() != a2.base_dim() {
        return Err(CartanError::InvalidData(
            "matched pair factors live over different bases".into(),
        ));
    }
    if n1.acting_rank != a1.rank()
        || n1.module_rank != a2.rank()
        || n2.acting_rank != a2.rank()
        || n2.module_rank != a1.rank()
        || n1.base_dim != a1.base_dim()
        || n2.base_dim != a2.base_dim()
    {
        return Err(CartanError::InvalidData(
            "connection shapes do not match the factors".into(),
        ));
    }
    let mut failures = Vec::new();
    a_connection_flat(a1, a2, n1, ("e", "f"), &mut failures)?;
    a_connection_flat(a2, a1, n2, ("f", "e"), &mut failures)?;
    for a in 0..a1.rank() {
        for b in 0..a2.rank() {
            let ea = a1.frame_section(a);
            let fb = a2.frame_section(b);
            let lhs = a1.anchor(a).bracket(a2.anchor(b))?;
            let rhs = a2
                .anchor_of(&n1.apply(a1, &ea, &fb)?)?
                .sub(&a1.anchor_of(&n2.apply(a2, &fb, &ea)?)?)?;
            if !lhs.sub(&rhs)?.is_zero() {
                failures.push(format!("axiom i fails on (e_{a}, f_{b})"));
            }
        }
    }
    for a in 0..a1.rank() {
        let ea = a1.frame_section(a);
        for b1 in 0..a2.rank() {
            for b2 in b1 + 1..a2.rank() {
                let f1 = a2.frame_section(b1);
                let f2 = a2.frame_section(b2);
                let lhs = n1.apply(a1, &ea, a2.structure(b1, b2))?;
                let mut rhs = a2.bracket(&n1.apply(a1, &ea, &f1)?, &f2)?;
                rhs = sec_add(&rhs, &a2.bracket(&f1, &n1.apply(a1, &ea, &f2)?)?)?;
                rhs = sec_add(&rhs, &n1.apply(a1, &n2.apply(a2, &f2, &ea)?, &f1)?)?;
                rhs = sec_sub(&rhs, &n1.apply(a1, &n2.apply(a2, &f1, &ea)?, &f2)?)?;
                if !sec_is_zero(&sec_sub(&lhs, &rhs)?) {
                    failures.push(format!("axiom ii fails on (e_{a}, f_{b1}, f_{b2})"));
                }
            }
        }
    }
    for b in 0..a2.rank() {
        let fb = a2.frame_section(b);
        for a1i in 0..a1.rank() {
            for a2i in a1i + 1..a1.rank() {
                let e1 = a1.frame_section(a1i);
                let e2 = a1.frame_section(a2i);
                let lhs = n2.apply(a2, &fb, a1.structure(a1i, a2i))?;
                let mut rhs = a1.bracket(&n2.apply(a2, &fb, &e1)?, &e2)?;
                rhs = sec_add(&rhs, &a1.bracket(&e1, &n2.apply(a2, &fb, &e2)?)?)?;
                rhs = sec_add(&rhs, &n2.apply(a2, &n1.apply(a1, &e2, &fb)?, &e1)?)?;
                rhs = sec_sub(&rhs, &n2.apply(a2, &n1.apply(a1, &e1, &fb)?, &e2)?)?;
                if !sec_is_zero(&sec_sub(&lhs, &rhs)?) {
                    failures.push(format!("axiom iii fails on (f_{b}, e_{a1i}, e_{a2i})"));
                }
            }
        }
    }
    Ok(CheckReport::from_failures(failures))
}

/// The matched pair carried by a flat Cartan package: the algebroid acting
/// on the tangent algebroid through the induced base derivative, and the
/// tangent algebroid acting back through the connection itself.
pub fn matched_pair_from_package(
    pkg: &CartanPackage,
) -> Result<(AlgebroidData, AConnection, AlgebroidData, AConnection), CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    let mut fwd = vec![vec![vec![TruncPoly::zero(n); n]; n]; r];
    for a in 0..r {
        for i in 0..n {
            for j in 0..n {
                fwd[a][i][j] = pkg.tm_frame(a, i).component(j).clone();
            }
        }
    }
    let mut back = vec![vec![vec![TruncPoly::zero(n); r]; r]; n];
    for i in 0..n {
        for a in 0..r {
            for b in 0..r {
                back[i][a][b] = pkg.connection().christoffel(i, a)[b].clone();
            }
        }
    }
    Ok((
        alg.clone(),
        AConnection::new(r, n, n, fwd)?,
        AlgebroidData::tangent(n),
        AConnection::new(n, r, n, back)?,
    ))
}

/// The flatness defect of a bundle-valued coordinate family and its
/// morphism reading: `defect[(i, j)]` is
/// `nabla_{∂_i} θ_j - nabla_{∂_j} θ_i + {θ_i, θ_j}`, and `morphism` states
/// whether `X -> (θ(X), X - rho θ(X))` is a bracket morphism into the
/// double. The two verdicts agree identically.
#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub defect: Vec<((usize, usize), Vec<TruncPoly>)>,
    pub defect_vanishes: bool,
    pub morphism: bool,
}

/// Evaluates the structure equation of a candidate flat family `θ` against
/// its reading as a section of the double. Requires a flat Cartan package.
pub fn mc_defect(pkg: &CartanPackage, theta: &[Vec<TruncPoly>]) -> Result<McReport, CartanError> {
    let alg = pkg.algebroid();
    let r = alg.rank();
    let n = alg.base_dim();
    if theta.len() != n {
        return Err(CartanError::InvalidData(format!(
            "θ has {} components, base has {n}",
            theta.len()
        )));
    }
    for t in theta {
        if t.len() != r {
            return Err(CartanError::InvalidData(format!(
                "θ component has {} coefficients, rank is {r}",
                t.len()
            )));
        }
    }
    let dbl = double(pkg)?;
    let mut defect = Vec::new();
    let mut defect_vanishes = true;
    for i in 0..n {
        for j in i + 1..n {
            let mut d = sec_sub(
                &pkg.connection().nabla_coordinate(i, &theta[j])?,
                &pkg.connection().nabla_coordinate(j, &theta[i])?,
            )?;
            d = sec_add(&d, &pointwise_bracket(pkg, &theta[i], &theta[j])?)?;
            defect_vanishes &= sec_is_zero(&d);
            defect.push(((i, j), d));
        }
    }
    let lift: Vec<Vec<TruncPoly>> = (0..n)
        .map(|i| {
            let mut s: Vec<TruncPoly> = theta[i].to_vec();
            let rho_theta = alg.anchor_of(&theta[i]).expect("θ components are sections");
            for j in 0..n {
                let mut comp = rho_theta.component(j).neg();
                if j == i {
                    comp = comp.add(&TruncPoly::one(n)).expect("same base");
                }
                s.push(comp);
            }
            s
        })
        .collect();
    let mut morphism = true;
    for i in 0..n {
        for j in i + 1..n {
            if !sec_is_zero(&dbl.data().bracket(&lift[i], &lift[j])?) {
                morphism = false;
            }
        }
    }
    Ok(McReport {
        defect,
        defect_vanishes,
        morphism,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Connection;
    use formal::Exponent;
    use linalg::{rat, rat_int};

    fn xp(exp: Vec<u32>, num: i64) -> TruncPoly {
        TruncPoly::monomial(Exponent(exp), rat_int(num))
    }

    fn tangent_package(n: usize) -> CartanPackage {
        CartanPackage::new(AlgebroidData::tangent(n), Connection::zero(n, n)).unwrap()
    }

    fn trivial_package() -> CartanPackage {
        let alg = AlgebroidData::new(
            2,
            vec![PolyVectorField::zero(2); 2],
            vec![vec![vec![TruncPoly::zero(2); 2]; 2]; 2],
        )
        .unwrap();
        CartanPackage::new(alg, Connection::zero(2, 2)).unwrap()
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

    fn lie_bundle_package() -> CartanPackage {
        let zero = TruncPoly::zero(1);
        let x = xp(vec![1], 1);
        let mut c = vec![vec![vec![zero.clone(); 2]; 2]; 2];
        c[0][1][1] = x.clone();
        c[1][0][1] = x.neg();
        let alg = AlgebroidData::new(1, vec![PolyVectorField::zero(1); 2], c).unwrap();
        CartanPackage::new(alg, Connection::zero(1, 2)).unwrap()
    }

    #[test]
    fn trivial_double_brackets_only_the_field_parts() {
        let pkg = trivial_package();
        let dbl = double(&pkg).unwrap();
        let x = PolyVectorField::new(vec![xp(vec![0, 2], 1), xp(vec![1, 0], 1)]).unwrap();
        let y = PolyVectorField::new(vec![xp(vec![1, 0], 1), TruncPoly::one(2)]).unwrap();
        let s = vec![
            TruncPoly::one(2),
            TruncPoly::constant(2, rat(1, 2)),
            x.component(0).clone(),
            x.component(1).clone(),
        ];
        let t = vec![
            TruncPoly::constant(2, rat_int(-3)),
            TruncPoly::one(2),
            y.component(0).clone(),
            y.component(1).clone(),
        ];
        let got = dbl.data().bracket(&s, &t).unwrap();
        let xy = x.bracket(&y).unwrap();
        assert!(got[0].is_zero());
        assert!(got[1].is_zero());
        assert_eq!(got[2], *xy.component(0));
        assert_eq!(got[3], *xy.component(1));
    }

    #[test]
    fn mixed_double_bracket_pairs_the_two_derivatives() {
        let alg = AlgebroidData::new(
            1,
            vec![PolyVectorField::zero(1)],
            vec![vec![vec![TruncPoly::zero(1)]]],
        )
        .unwrap();
        let gamma = vec![vec![vec![TruncPoly::one(1)]]];
        let pkg = CartanPackage::new(alg, Connection::new(1, 1, gamma).unwrap()).unwrap();
        let dbl = double(&pkg).unwrap();
        let f = TruncPoly::one(1)
            .add(&xp(vec![1], 1))
            .unwrap()
            .add(&xp(vec![2], 2))
            .unwrap();
        let g = xp(vec![1], 1);
        let s = vec![f.clone(), TruncPoly::zero(1)];
        let t = vec![TruncPoly::zero(1), g.clone()];
        let got = dbl.data().bracket(&s, &t).unwrap();
        let y = PolyVectorField::new(vec![g]).unwrap();
        let expect_a = pkg.connection().nabla(&y, &[f.clone()]).unwrap()[0].neg();
        let expect_x = pkg.tm_nabla(&[f], &y).unwrap();
        assert_eq!(got[0], expect_a);
        assert_eq!(got[1], *expect_x.component(0));
    }

    #[test]
    fn doubles_of_flat_packages_satisfy_jacobi() {
        for pkg in [tangent_package(2), sl2_package()] {
            let dbl = double(&pkg).unwrap();
            assert_eq!(dbl.data().rank(), dbl.algebroid_rank() + dbl.base_dim());
            assert!(dbl.data().jacobi_check().passed);
        }
    }

    #[test]
    fn double_needs_both_flags() {
        let err = double(&lie_bundle_package()).unwrap_err();
        assert!(matches!(err, CartanError::NotFlatCartan));
    }

    #[test]
    fn isotropy_sections_close_inside_the_double() {
        for point in [vec![rat_int(0)], vec![rat(1, 2)]] {
            let report = double_isotropy_check(&sl2_package(), &point).unwrap();
            assert!(report.passed, "{:?}", report.failures);
        }
    }

    #[test]
    fn flat_packages_produce_matched_pairs() {
        for pkg in [tangent_package(2), sl2_package()] {
            let (a1, n1, a2, n2) = matched_pair_from_package(&pkg).unwrap();
            let report = matched_pair_check(&a1, &n1, &a2, &n2).unwrap();
            assert!(report.passed, "{:?}", report.failures);
        }
    }

    #[test]
    fn position_dependent_fibre_bracket_fails_the_derivation_axiom() {
        let (a1, n1, a2, n2) = matched_pair_from_package(&lie_bundle_package()).unwrap();
        let report = matched_pair_check(&a1, &n1, &a2, &n2).unwrap();
        assert!(!report.passed);
        assert_eq!(report.failures, vec!["axiom iii fails on (f_0, e_0, e_1)".to_string()]);
    }

    #[test]
    fn rank_zero_factors_are_matched() {
        let a = AlgebroidData::new(1, Vec::new(), Vec::new()).unwrap();
        let n = AConnection::new(0, 0, 1, Vec::new()).unwrap();
        let report = matched_pair_check(&a, &n, &a, &n).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn identity_family_on_the_plane_is_flat() {
        let pkg = tangent_package(2);
        let theta: Vec<Vec<TruncPoly>> =
            (0..2).map(|i| pkg.algebroid().frame_section(i)).collect();
        let report = mc_defect(&pkg, &theta).unwrap();
        assert!(report.defect_vanishes);
        assert!(report.morphism);
    }

    #[test]
    fn zero_family_is_flat() {
        let pkg = sl2_package();
        let theta = vec![pkg.algebroid().zero_section()];
        let report = mc_defect(&pkg, &theta).unwrap();
        assert!(report.defect_vanishes);
        assert!(report.morphism);
    }

    #[test]
    fn perturbed_identity_family_has_a_defect() {
        let pkg = tangent_package(2);
        let mut theta: Vec<Vec<TruncPoly>> =
            (0..2).map(|i| pkg.algebroid().frame_section(i)).collect();
        theta[0][0] = theta[0][0].add(&xp(vec![0, 1], 1)).unwrap();
        let report = mc_defect(&pkg, &theta).unwrap();
        assert!(!report.defect_vanishes);
        assert!(!report.morphism);
        assert_eq!(report.defect.len(), 1);
        assert_eq!(report.defect[0].0, (0, 1));
        assert_eq!(
            report.defect[0].1,
            vec![TruncPoly::constant(2, rat_int(-1)), TruncPoly::zero(2)]
        );
    }

    #[test]
    fn family_shapes_are_validated() {
        let pkg = tangent_package(2);
        let err = mc_defect(&pkg, &[pkg.algebroid().zero_section()]).unwrap_err();
        assert!(err.to_string().contains("components"));
    }
}
