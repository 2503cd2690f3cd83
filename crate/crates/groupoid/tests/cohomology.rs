use std::collections::BTreeMap;

use groupoid::{
    action_bicomplex, bar_cohomology, bar_delta, bar_delta_matrix, cup_w, group_cohomology,
    invariant_sections, morphism_pullback, mv_cech, string_basis, ActionBicomplex, BarCochain,
    BilinearPairing, CoverNerve, FiniteGroupoid, GroupoidMorphism, LinearAction, Representation,
};
use linalg::{rat_int, Rational, SparseRationalMatrix};

fn line(g: &FiniteGroupoid) -> Representation {
    Representation::trivial(g, 1)
}

fn sign_rep_s3(g: &FiniteGroupoid) -> Representation {
    let mats = (0..g.arrow_count())
        .map(|a| {
            let lbl = g.arrow_label(a).as_bytes();
            let mut inversions = 0;
            for i in 0..lbl.len() {
                for j in (i + 1)..lbl.len() {
                    if lbl[i] > lbl[j] {
                        inversions += 1;
                    }
                }
            }
            SparseRationalMatrix::from_rows_i64(&[&[if inversions % 2 == 0 { 1 } else { -1 }]])
        })
        .collect();
    Representation::new(g, vec![1], mats).unwrap()
}

fn order_six_plane_rep(g: &FiniteGroupoid) -> Representation {
    // Generator of order six: the negative of a companion matrix of
    // x² + x + 1, so its sixth power is the first to reach the identity.
    let a = SparseRationalMatrix::from_rows_i64(&[&[0, 1], &[-1, 1]]);
    let mut mats = vec![SparseRationalMatrix::identity(2)];
    for k in 1..6 {
        let prev = mats[k - 1].clone();
        mats.push(prev.matmul(&a).unwrap());
    }
    Representation::new(g, vec![2], mats).unwrap()
}

fn int_cochain(g: &FiniteGroupoid, rho: &Representation, level: usize, seed: i64) -> BarCochain {
    let mut values = Vec::new();
    for (i, s) in string_basis(g, level).iter().enumerate() {
        let d = rho.dim(s.object);
        values.push(
            (0..d)
                .map(|k| rat_int((seed + 3 * i as i64 + 7 * k as i64) % 11 - 5))
                .collect(),
        );
    }
    BarCochain::new(g, rho, level, values).unwrap()
}

#[test]
fn delta_squared_vanishes_on_large_groupoids() {
    let cases: Vec<(FiniteGroupoid, usize)> = vec![
        (FiniteGroupoid::symmetric(4), 1),
        (FiniteGroupoid::symmetric(3), 2),
        (FiniteGroupoid::pair(4), 2),
        (FiniteGroupoid::cyclic(6), 2),
    ];
    for (g, top) in cases {
        assert!(g.arrow_count() <= 24);
        let rho = line(&g);
        for p in 0..=top {
            let b0 = string_basis(&g, p);
            let b1 = string_basis(&g, p + 1);
            let b2 = string_basis(&g, p + 2);
            let d0 = bar_delta_matrix(&g, &rho, &b0, &b1).unwrap();
            let d1 = bar_delta_matrix(&g, &rho, &b1, &b2).unwrap();
            assert!(d1.matmul(&d0).unwrap().is_zero());
        }
    }
}

#[test]
fn delta_squared_vanishes_with_matrix_coefficients() {
    let g = FiniteGroupoid::cyclic(6);
    let rho = order_six_plane_rep(&g);
    for p in 0..=2 {
        let b0 = string_basis(&g, p);
        let b1 = string_basis(&g, p + 1);
        let b2 = string_basis(&g, p + 2);
        let d0 = bar_delta_matrix(&g, &rho, &b0, &b1).unwrap();
        let d1 = bar_delta_matrix(&g, &rho, &b1, &b2).unwrap();
        assert!(d1.matmul(&d0).unwrap().is_zero());
    }
}

#[test]
fn normalized_and_full_complexes_agree() {
    let groups = vec![
        FiniteGroupoid::cyclic(2),
        FiniteGroupoid::cyclic(3),
        FiniteGroupoid::cyclic(6),
        FiniteGroupoid::symmetric(3),
    ];
    for g in groups {
        let rho = line(&g);
        let full = bar_cohomology(&g, &rho, 2, false).unwrap();
        let norm = bar_cohomology(&g, &rho, 2, true).unwrap();
        assert_eq!(full.dims(), norm.dims(), "{} arrows", g.arrow_count());
    }
    let g = FiniteGroupoid::cyclic(6);
    let rho = order_six_plane_rep(&g);
    let full = bar_cohomology(&g, &rho, 2, false).unwrap();
    let norm = bar_cohomology(&g, &rho, 2, true).unwrap();
    assert_eq!(full.dims(), norm.dims());
}

#[test]
fn degree_zero_is_the_invariant_sections() {
    let s3 = FiniteGroupoid::symmetric(3);
    let z6 = FiniteGroupoid::cyclic(6);
    let pair = FiniteGroupoid::pair(2);
    let shear = Representation::new(
        &pair,
        vec![2, 2],
        vec![
            SparseRationalMatrix::identity(2),
            SparseRationalMatrix::from_rows_i64(&[&[1, 1], &[0, 1]]),
            SparseRationalMatrix::from_rows_i64(&[&[1, -1], &[0, 1]]),
            SparseRationalMatrix::identity(2),
        ],
    )
    .unwrap();
    let cases: Vec<(&FiniteGroupoid, Representation, usize)> = vec![
        (&s3, line(&s3), 1),
        (&s3, sign_rep_s3(&s3), 0),
        (&z6, order_six_plane_rep(&z6), 0),
        (&pair, shear, 2),
        (&pair, line(&pair), 1),
    ];
    for (g, rho, expected) in cases {
        let sections = invariant_sections(g, &rho).unwrap();
        assert_eq!(sections.len(), expected);
        for normalized in [false, true] {
            let table = bar_cohomology(g, &rho, 0, normalized).unwrap();
            assert_eq!(table.dim_at(0), expected);
        }
    }
}

#[test]
fn group_cohomology_tables() {
    let z2 = FiniteGroupoid::cyclic(2);
    assert_eq!(
        group_cohomology(&z2, &line(&z2), 4).unwrap().dims(),
        vec![1, 0, 0, 0, 0]
    );
    let e = FiniteGroupoid::cyclic(1);
    assert_eq!(
        group_cohomology(&e, &line(&e), 3).unwrap().dims(),
        vec![1, 0, 0, 0]
    );
    let s3 = FiniteGroupoid::symmetric(3);
    assert_eq!(
        group_cohomology(&s3, &line(&s3), 2).unwrap().dims(),
        vec![1, 0, 0]
    );
}

#[test]
fn cup_satisfies_the_leibniz_identity() {
    let g = FiniteGroupoid::symmetric(3);
    let w = BilinearPairing::multiplication(&g);
    let rho = line(&g);
    for (p1, p2, seed) in [(0, 1, 1), (1, 1, 2), (1, 2, 3), (2, 1, 4), (2, 2, 5)] {
        let c1 = int_cochain(&g, &rho, p1, seed);
        let c2 = int_cochain(&g, &rho, p2, seed + 10);
        let lhs = bar_delta(&g, &rho, &cup_w(&g, &w, &c1, &c2).unwrap()).unwrap();
        let first = cup_w(&g, &w, &bar_delta(&g, &rho, &c1).unwrap(), &c2).unwrap();
        let sign = if p1 % 2 == 0 { rat_int(1) } else { rat_int(-1) };
        let second = cup_w(&g, &w, &c1, &bar_delta(&g, &rho, &c2).unwrap())
            .unwrap()
            .scale(&sign);
        assert_eq!(lhs, first.add(&second).unwrap());
    }
}

#[test]
fn pullback_commutes_with_the_differential() {
    let s3 = FiniteGroupoid::symmetric(3);
    let z2 = FiniteGroupoid::cyclic(2);
    // Send the non-unit of ℤ/2 to the transposition swapping the first two
    // letters.
    let swap = (0..s3.arrow_count())
        .find(|&a| s3.arrow_label(a) == "213")
        .unwrap();
    let phi = GroupoidMorphism {
        object_map: vec![0],
        arrow_map: vec![s3.unit(0), swap],
    };
    phi.validate(&z2, &s3).unwrap();
    let rho_h = line(&z2);
    let rho_g = line(&s3);
    let transport = vec![SparseRationalMatrix::identity(1)];
    for (level, seed) in [(0, 2), (1, 6), (2, 11)] {
        let c = int_cochain(&s3, &rho_g, level, seed);
        let lhs = bar_delta(
            &z2,
            &rho_h,
            &morphism_pullback(&z2, &s3, &phi, &rho_h, &rho_g, &transport, &c).unwrap(),
        )
        .unwrap();
        let rhs = morphism_pullback(
            &z2,
            &s3,
            &phi,
            &rho_h,
            &rho_g,
            &transport,
            &bar_delta(&s3, &rho_g, &c).unwrap(),
        )
        .unwrap();
        assert_eq!(lhs, rhs);
    }
}

fn nerve_with_connected_overlaps(n: usize, overlaps: &[[usize; 2]]) -> CoverNerve {
    let mut components: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for i in 0..n {
        components.insert(vec![i], 1);
    }
    let mut restrictions: BTreeMap<(Vec<usize>, usize), Vec<usize>> = BTreeMap::new();
    for pair in overlaps {
        let set = vec![pair[0], pair[1]];
        components.insert(set.clone(), 1);
        restrictions.insert((set.clone(), pair[0]), vec![0]);
        restrictions.insert((set, pair[1]), vec![0]);
    }
    CoverNerve::new(n, components, restrictions).unwrap()
}

#[test]
fn cover_cohomology_tables() {
    let single = nerve_with_connected_overlaps(1, &[]);
    assert_eq!(mv_cech(&single, 2).unwrap().dims(), vec![1, 0, 0]);

    let interval = nerve_with_connected_overlaps(2, &[[0, 1]]);
    assert_eq!(mv_cech(&interval, 2).unwrap().dims(), vec![1, 0, 0]);

    let circle = nerve_with_connected_overlaps(3, &[[0, 1], [0, 2], [1, 2]]);
    assert_eq!(mv_cech(&circle, 2).unwrap().dims(), vec![1, 1, 0]);

    let two_loops = nerve_with_connected_overlaps(
        5,
        &[[0, 1], [0, 2], [1, 2], [2, 3], [2, 4], [3, 4]],
    );
    assert_eq!(mv_cech(&two_loops, 2).unwrap().dims(), vec![1, 2, 0]);
}

#[test]
fn reflection_action_total_cohomology() {
    let action = LinearAction::new(
        vec!["1".into(), "-1".into()],
        vec![
            SparseRationalMatrix::identity(1),
            SparseRationalMatrix::from_rows_i64(&[&[-1]]),
        ],
    )
    .unwrap();
    let (bicx, table) = action_bicomplex(action, 6, 4, 1).unwrap();
    assert_eq!(bicx.degree_cap(), 1);
    let dims = table.dims();
    assert_eq!(&dims[..4], &[1, 0, 0, 0]);
    let h0 = &table.degrees[&0];
    assert_eq!(h0.representatives.len(), 1);
    assert_eq!(h0.representatives[0].len(), 1);
    assert_eq!(h0.representatives[0][0].coeff, "1");
    assert_eq!(h0.representatives[0][0].label, "1");
}

#[test]
fn swap_action_total_cohomology() {
    let action = LinearAction::new(
        vec!["e".into(), "s".into()],
        vec![
            SparseRationalMatrix::identity(2),
            SparseRationalMatrix::from_rows_i64(&[&[0, 1], &[1, 0]]),
        ],
    )
    .unwrap();
    let bicx = ActionBicomplex::new(action, 6, 3, 2).unwrap();
    let table = bicx.total_cohomology(2).unwrap();
    assert_eq!(table.dims(), vec![1, 0, 0]);
}

#[test]
fn zero_cochain_differential_is_the_section_defect() {
    let g = FiniteGroupoid::pair(3);
    let rho = line(&g);
    let values: Vec<Vec<Rational>> = (0..3).map(|x| vec![rat_int(x as i64 + 1)]).collect();
    let c = BarCochain::new(&g, &rho, 0, values).unwrap();
    let dc = bar_delta(&g, &rho, &c).unwrap();
    // δs(g) = s(source g) − s(target g) over the trivial coefficients.
    for (s, v) in string_basis(&g, 1).iter().zip(&dc.values) {
        let a = s.arrows[0];
        let expected = rat_int(g.source(a) as i64 + 1) - rat_int(g.target(a) as i64 + 1);
        assert_eq!(v, &vec![expected]);
    }
}
