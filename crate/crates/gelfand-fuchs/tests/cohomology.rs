use gelfand_fuchs::{
    euler_homotopy_check, gf_cohomology, gf_complex_slice, gf_relative_cohomology, slice_basis,
    wo_cohomology,
};

#[test]
fn line_weight_zero_table() {
    let table = gf_cohomology(1, 0, 3).unwrap();
    assert_eq!(table.dims(), vec![1, 0, 0, 1]);
    let rep = &table.degrees[&3].representatives[0];
    assert_eq!(rep.len(), 1);
    assert_eq!(rep[0].label, "xi0∧xi1∧xi2");
}

#[test]
fn relative_and_absolute_agree_on_the_line() {
    let relative = gf_relative_cohomology(1, 0, 3).unwrap();
    let absolute = gf_cohomology(1, 0, 3).unwrap();
    assert_eq!(relative.dims(), absolute.dims());
}

#[test]
fn characteristic_algebra_matches_the_basic_complex_on_the_line() {
    let wo = wo_cohomology(1, 5).unwrap();
    let rel = gf_relative_cohomology(1, 0, 5).unwrap();
    assert_eq!(wo.dims(), rel.dims());
    assert_eq!(wo.dims(), vec![1, 0, 0, 1, 0, 0]);
}

#[test]
fn characteristic_algebra_matches_the_basic_complex_on_the_plane() {
    let wo = wo_cohomology(2, 5).unwrap();
    let rel = gf_relative_cohomology(2, 0, 5).unwrap();
    assert_eq!(wo.dims(), rel.dims());
    assert_eq!(wo.dims(), vec![1, 0, 0, 0, 1, 2]);
}

#[test]
fn euler_identities_hold_on_the_full_grid() {
    for q in 1..=2usize {
        for w in -3..=3i64 {
            if w == 0 {
                continue;
            }
            for p in 0..=4usize {
                let report = euler_homotopy_check(q, p, w);
                assert!(
                    report.holds(),
                    "contraction identity fails at q={q} p={p} w={w}"
                );
            }
        }
    }
}

#[test]
fn nonzero_weights_carry_no_cohomology_in_low_degree() {
    for w in [-2i64, -1, 1, 2] {
        let table = gf_cohomology(1, w, 3).unwrap();
        assert!(table.dims().iter().all(|&d| d == 0), "weight {w}");
    }
}

#[test]
fn differentials_compose_to_zero_across_weights() {
    for q in 1..=2usize {
        for w in -2..=2i64 {
            for p in 0..=3usize {
                let (basis, d1) = gf_complex_slice(q, p, w);
                let (_, d2) = gf_complex_slice(q, p + 1, w);
                let prod = d2.matmul(&d1).unwrap();
                assert!(prod.is_zero(), "q={q} p={p} w={w}");
                for label in basis.labels() {
                    assert_eq!(label.degree(), p);
                    assert_eq!(label.weight(), w);
                }
            }
        }
    }
}

#[test]
fn slice_enumeration_is_deterministic() {
    let a = slice_basis(2, 3, 0);
    let b = slice_basis(2, 3, 0);
    assert_eq!(a.labels(), b.labels());
    let mut sorted = a.labels().to_vec();
    sorted.sort();
    assert_eq!(sorted.as_slice(), a.labels());
}
