use cartan_algebroid::{
    basic_curvature, double, double_isotropy_check, extended_isotropy, induced_connections,
    lie_constants_jacobi, matched_pair_check, matched_pair_from_package, pointwise_bracket,
    random_flat_package, AlgebroidData, CartanPackage, Connection, MixedCochain,
};
use formal::{Exponent, PolyVectorField, TruncPoly};
use linalg::{rat, rat_int};
use proptest::prelude::*;

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

fn section_from_ints(nvars: usize, rank: usize, picks: &[(usize, i64)]) -> Vec<TruncPoly> {
    let mut out = vec![TruncPoly::zero(nvars); rank];
    let exps: Vec<Vec<u32>> = match nvars {
        1 => vec![vec![0], vec![1], vec![2]],
        _ => vec![vec![0; nvars], {
            let mut e = vec![0; nvars];
            e[0] = 1;
            e
        }, {
            let mut e = vec![0; nvars];
            e[nvars - 1] = 2;
            e
        }],
    };
    for (slot, (which, coeff)) in picks.iter().enumerate() {
        if *coeff == 0 {
            continue;
        }
        let b = slot % rank;
        let term = TruncPoly::monomial(Exponent(exps[*which].clone()), rat_int(*coeff));
        out[b] = out[b].add(&term).unwrap();
    }
    out
}

fn sec_zero(s: &[TruncPoly]) -> bool {
    s.iter().all(TruncPoly::is_zero)
}

fn sec_add(a: &[TruncPoly], b: &[TruncPoly]) -> Vec<TruncPoly> {
    a.iter().zip(b).map(|(x, y)| x.add(y).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_packages_are_flat_cartan_algebroids(seed in 0u64..256) {
        let pkg = random_flat_package(seed);
        prop_assert!(pkg.is_cartan());
        prop_assert!(pkg.algebroid().jacobi_check().passed);
        let (_, _, report) = induced_connections(&pkg).unwrap();
        prop_assert!(report.passed);
    }

    #[test]
    fn pointwise_bracket_is_antisymmetric(
        seed in 0u64..64,
        picks_a in proptest::collection::vec((0usize..3, -2i64..=2), 3),
        picks_b in proptest::collection::vec((0usize..3, -2i64..=2), 3),
    ) {
        let pkg = random_flat_package(seed);
        let r = pkg.algebroid().rank();
        let n = pkg.algebroid().base_dim();
        let alpha = section_from_ints(n, r.max(1), &picks_a);
        let beta = section_from_ints(n, r.max(1), &picks_b);
        if r == 0 { return Ok(()); }
        let lhs = pointwise_bracket(&pkg, &alpha, &beta).unwrap();
        let rhs = pointwise_bracket(&pkg, &beta, &alpha).unwrap();
        prop_assert!(sec_zero(&sec_add(&lhs, &rhs)));
    }

    #[test]
    fn basic_curvature_scales_in_every_slot(
        which in 0usize..3,
        coeff in -3i64..=3,
        exp0 in 0u32..=2,
        exp1 in 0u32..=2,
    ) {
        let pkg = messy_lie_bundle();
        let alpha = vec![xp(vec![1, 0], 1), TruncPoly::one(2)];
        let beta = vec![xp(vec![0, 0], 2), xp(vec![0, 1], 1)];
        let x = PolyVectorField::new(vec![xp(vec![0, 1], 1), xp(vec![1, 0], -1)]).unwrap();
        let f = TruncPoly::monomial(Exponent(vec![exp0, exp1]), rat_int(coeff));
        let base = basic_curvature(&pkg, &alpha, &beta, &x).unwrap();
        let scaled: Vec<TruncPoly> = base.iter().map(|p| p.mul(&f).unwrap()).collect();
        let got = match which {
            0 => {
                let fa: Vec<TruncPoly> = alpha.iter().map(|p| p.mul(&f).unwrap()).collect();
                basic_curvature(&pkg, &fa, &beta, &x).unwrap()
            }
            1 => {
                let fb: Vec<TruncPoly> = beta.iter().map(|p| p.mul(&f).unwrap()).collect();
                basic_curvature(&pkg, &alpha, &fb, &x).unwrap()
            }
            _ => basic_curvature(&pkg, &alpha, &beta, &x.scale_fn(&f).unwrap()).unwrap(),
        };
        prop_assert_eq!(got, scaled);
    }

    #[test]
    fn isotropy_fibres_are_lie_algebras(seed in 0u64..48, num in -2i64..=2, den in 1i64..=3) {
        let pkg = random_flat_package(seed);
        let n = pkg.algebroid().base_dim();
        let point = vec![rat(num, den); n];
        let constants = extended_isotropy(&pkg, &point).unwrap();
        prop_assert!(lie_constants_jacobi(&constants));
        let report = double_isotropy_check(&pkg, &point).unwrap();
        prop_assert!(report.passed);
    }

    #[test]
    fn doubles_satisfy_jacobi_and_split_the_anchor(seed in 0u64..48) {
        let pkg = random_flat_package(seed);
        let dbl = double(&pkg).unwrap();
        prop_assert!(dbl.data().jacobi_check().passed);
        let r = dbl.algebroid_rank();
        let n = dbl.base_dim();
        for i in 0..n {
            prop_assert_eq!(
                dbl.data().anchor(r + i).clone(),
                PolyVectorField::coordinate(n, i)
            );
        }
    }

    #[test]
    fn matched_pairs_from_flat_packages_always_pass(seed in 0u64..64) {
        let pkg = random_flat_package(seed);
        let (a1, n1, a2, n2) = matched_pair_from_package(&pkg).unwrap();
        let report = matched_pair_check(&a1, &n1, &a2, &n2).unwrap();
        prop_assert!(report.passed);
    }

    #[test]
    fn mixed_cochain_evaluation_alternates(
        swap in 0usize..2,
        coeff in -3i64..=3,
    ) {
        prop_assume!(coeff != 0);
        let poly = TruncPoly::constant(2, rat_int(coeff));
        let omega = MixedCochain::monomial(3, 2, vec![0, 2], vec![0, 1], poly.clone()).unwrap();
        let (aset, iset): (Vec<usize>, Vec<usize>) = if swap == 0 {
            (vec![2, 0], vec![0, 1])
        } else {
            (vec![0, 2], vec![1, 0])
        };
        prop_assert_eq!(omega.eval(&aset, &iset), poly.neg());
        prop_assert!(omega.eval(&[0, 0], &[0, 1]).is_zero());
    }
}
