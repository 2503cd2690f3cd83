use cartan_algebroid::{
    basic_curvature, double_isotropy_check, double_transport_report, extended_isotropy,
    induced_connections, isotropy_transport_check, lie_constants_jacobi, matched_pair_check,
    matched_pair_from_package, mc_defect, pointwise_bracket, random_flat_package, AlgebroidData,
    CartanPackage, Connection,
};
use formal::{Exponent, PolyVectorField, TruncPoly};
use linalg::{rat, rat_int};

fn xp(exp: Vec<u32>, num: i64) -> TruncPoly {
    TruncPoly::monomial(Exponent(exp), rat_int(num))
}

fn messy_lie_bundle() -> CartanPackage {
    let zero = TruncPoly::zero(2);
    let mut c = vec![vec![vec![zero.clone(); 2]; 2]; 2];
    c[0][1][1] = xp(vec![1, 1], 1);
    c[1][0][1] = xp(vec![1, 1], -1);
    c[0][1][0] = xp(vec![0, 2], 3);
    c[1][0][0] = xp(vec![0, 2], -3);
    let alg = AlgebroidData::new(2, vec![PolyVectorField::zero(2); 2], c).unwrap();
    let mut gamma = vec![vec![vec![TruncPoly::zero(2); 2]; 2]; 2];
    gamma[0][0][1] = xp(vec![1, 0], 2);
    gamma[1][1][0] = xp(vec![0, 1], -1);
    gamma[0][1][1] = TruncPoly::one(2);
    CartanPackage::new(alg, Connection::new(2, 2, gamma).unwrap()).unwrap()
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

fn scale_section(s: &[TruncPoly], f: &TruncPoly) -> Vec<TruncPoly> {
    s.iter().map(|p| p.mul(f).unwrap()).collect()
}

#[test]
fn basic_curvature_is_trilinear_over_functions() {
    let pkg = messy_lie_bundle();
    let alpha = vec![xp(vec![1, 0], 1), TruncPoly::one(2)];
    let beta = vec![xp(vec![0, 0], 2), xp(vec![0, 1], 1)];
    let x = PolyVectorField::new(vec![xp(vec![0, 1], 1), xp(vec![1, 0], -1)]).unwrap();
    let f = TruncPoly::one(2)
        .add(&xp(vec![1, 0], 1))
        .unwrap()
        .add(&xp(vec![0, 2], 2))
        .unwrap();

    let base = basic_curvature(&pkg, &alpha, &beta, &x).unwrap();
    assert!(base.iter().any(|p| !p.is_zero()));
    let scaled = scale_section(&base, &f);

    let got = basic_curvature(&pkg, &scale_section(&alpha, &f), &beta, &x).unwrap();
    assert_eq!(got, scaled);
    let got = basic_curvature(&pkg, &alpha, &scale_section(&beta, &f), &x).unwrap();
    assert_eq!(got, scaled);
    let got = basic_curvature(&pkg, &alpha, &beta, &x.scale_fn(&f).unwrap()).unwrap();
    assert_eq!(got, scaled);
}

#[test]
fn vanishing_basic_curvature_flattens_the_induced_connections() {
    for seed in 0..8 {
        let pkg = random_flat_package(seed);
        let alg = pkg.algebroid();
        for a in 0..alg.rank() {
            for b in 0..alg.rank() {
                for i in 0..alg.base_dim() {
                    let x = PolyVectorField::coordinate(alg.base_dim(), i);
                    let k = basic_curvature(
                        &pkg,
                        &alg.frame_section(a),
                        &alg.frame_section(b),
                        &x,
                    )
                    .unwrap();
                    assert!(k.iter().all(TruncPoly::is_zero), "seed {seed}");
                    let mut lhs = pkg
                        .tm_nabla(&alg.frame_section(a), &pkg.tm_nabla(&alg.frame_section(b), &x).unwrap())
                        .unwrap();
                    lhs = lhs
                        .sub(&pkg.tm_nabla(&alg.frame_section(b), &pkg.tm_nabla(&alg.frame_section(a), &x).unwrap()).unwrap())
                        .unwrap();
                    lhs = lhs.sub(&pkg.tm_nabla(alg.structure(a, b), &x).unwrap()).unwrap();
                    assert!(lhs.is_zero(), "seed {seed}");
                }
            }
        }
    }
}

#[test]
fn curvature_relations_hold_on_randomized_packages() {
    for seed in 0..10 {
        let (_, _, report) = induced_connections(&random_flat_package(seed)).unwrap();
        assert!(report.passed, "seed {seed}: {:?}", report.failures);
    }
}

#[test]
fn relations_hold_without_the_flags_too() {
    for pkg in [messy_lie_bundle(), curved_plane_package()] {
        let (_, _, report) = induced_connections(&pkg).unwrap();
        assert!(report.passed, "{:?}", report.failures);
    }
}

#[test]
fn matched_pair_verdict_tracks_the_flags() {
    let mut cases: Vec<CartanPackage> = (0..8).map(random_flat_package).collect();
    cases.push(messy_lie_bundle());
    cases.push(curved_plane_package());
    for (i, pkg) in cases.iter().enumerate() {
        let (a1, n1, a2, n2) = matched_pair_from_package(pkg).unwrap();
        let report = matched_pair_check(&a1, &n1, &a2, &n2).unwrap();
        assert_eq!(report.passed, pkg.is_cartan(), "case {i}: {:?}", report.failures);
    }
}

#[test]
fn double_transport_holds_on_randomized_packages() {
    for seed in 0..10 {
        let pkg = random_flat_package(seed);
        let report = double_transport_report(&pkg, 2, 2).unwrap();
        assert!(report.passed, "seed {seed}: {:?}", report.failures);
    }
}

#[test]
fn isotropy_algebras_and_their_transport() {
    let half = rat(1, 2);
    for seed in 0..6 {
        let pkg = random_flat_package(seed);
        let n = pkg.algebroid().base_dim();
        for point in [vec![rat_int(0); n], vec![half.clone(); n]] {
            let constants = extended_isotropy(&pkg, &point).unwrap();
            assert!(lie_constants_jacobi(&constants), "seed {seed}");
            for a in 0..constants.len() {
                for b in 0..constants.len() {
                    for k in 0..constants.len() {
                        assert_eq!(
                            constants[a][b][k],
                            -constants[b][a][k].clone(),
                            "seed {seed}"
                        );
                    }
                }
            }
            let report = double_isotropy_check(&pkg, &point).unwrap();
            assert!(report.passed, "seed {seed}: {:?}", report.failures);
        }
        for t in [rat_int(1), rat(1, 2)] {
            let report = isotropy_transport_check(&pkg, 0, &t, 24).unwrap();
            assert!(report.passed, "seed {seed}: {:?}", report.failures);
        }
    }
}

#[test]
fn zero_families_are_always_flat() {
    for seed in 0..5 {
        let pkg = random_flat_package(seed);
        let theta = vec![pkg.algebroid().zero_section(); pkg.algebroid().base_dim()];
        let report = mc_defect(&pkg, &theta).unwrap();
        assert!(report.defect_vanishes && report.morphism, "seed {seed}");
    }
}

#[test]
fn pointwise_bracket_is_antisymmetric_on_sections() {
    let pkg = messy_lie_bundle();
    let alpha = vec![xp(vec![1, 0], 1), xp(vec![0, 0], 1)];
    let beta = vec![xp(vec![0, 1], 2), xp(vec![2, 0], 1)];
    let lhs = pointwise_bracket(&pkg, &alpha, &beta).unwrap();
    let rhs = pointwise_bracket(&pkg, &beta, &alpha).unwrap();
    for (l, r) in lhs.iter().zip(&rhs) {
        assert!(l.add(r).unwrap().is_zero());
    }
}
