use linalg::{cohomology_at, rat, rat_int, LinalgError, Rational, SparseRationalMatrix};
use num_traits::Zero;

fn vec_i64(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| rat_int(x)).collect()
}

/// `a` and `b` span the same line.
fn proportional(a: &[Rational], b: &[Rational]) -> bool {
    assert_eq!(a.len(), b.len());
    let mut ratio: Option<Rational> = None;
    for (x, y) in a.iter().zip(b) {
        match (x.is_zero(), y.is_zero()) {
            (true, true) => continue,
            (true, false) | (false, true) => return false,
            (false, false) => {
                let r = x / y;
                match &ratio {
                    None => ratio = Some(r),
                    Some(prev) => {
                        if *prev != r {
                            return false;
                        }
                    }
                }
            }
        }
    }
    ratio.is_some()
}

#[test]
fn rank_kernel_proportional_rows() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[1, 2], &[2, 4]]);
    let (rank, kernel) = m.rank_kernel();
    assert_eq!(rank, 1);
    assert_eq!(kernel.len(), 1);
    assert!(proportional(&kernel[0], &vec_i64(&[-2, 1])));
}

#[test]
fn rank_kernel_zero_matrix() {
    let m = SparseRationalMatrix::zero(3, 3);
    let (rank, kernel) = m.rank_kernel();
    assert_eq!(rank, 0);
    let expected: Vec<Vec<Rational>> = (0..3)
        .map(|i| {
            let mut e = vec_i64(&[0, 0, 0]);
            e[i] = rat_int(1);
            e
        })
        .collect();
    assert_eq!(kernel, expected);
}

#[test]
fn rank_kernel_single_row() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[1, 1]]);
    let (rank, kernel) = m.rank_kernel();
    assert_eq!(rank, 1);
    assert_eq!(kernel.len(), 1);
    assert!(proportional(&kernel[0], &vec_i64(&[1, -1])));
}

#[test]
fn rank_kernel_rational_entries() {
    let m = SparseRationalMatrix::from_triplets(
        2,
        3,
        vec![
            (0, 0, rat(1, 2)),
            (0, 1, rat(1, 3)),
            (1, 1, rat_int(2)),
            (1, 2, rat(-4, 5)),
        ],
    )
    .unwrap();
    let (rank, kernel) = m.rank_kernel();
    assert_eq!(rank, 2);
    assert_eq!(kernel.len(), 1);
    for k in &kernel {
        assert!(m.mul_vec(k).unwrap().iter().all(Rational::is_zero));
    }
}

#[test]
fn solve_scalar() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[2]]);
    assert_eq!(m.solve(&vec_i64(&[1])), Some(vec![rat(1, 2)]));
}

#[test]
fn solve_underdetermined() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[1, 1]]);
    let x = m.solve(&vec_i64(&[3])).unwrap();
    assert_eq!(m.mul_vec(&x).unwrap(), vec_i64(&[3]));
}

#[test]
fn solve_inconsistent() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[1], &[2]]);
    assert_eq!(m.solve(&vec_i64(&[1, 1])), None);
}

#[test]
fn solve_wide_then_verify() {
    let m = SparseRationalMatrix::from_rows_i64(&[&[1, 2, 0, -1], &[0, 3, 1, 5], &[1, 5, 1, 4]]);
    let b = vec_i64(&[4, 1, 5]);
    let x = m.solve(&b).unwrap();
    assert_eq!(m.mul_vec(&x).unwrap(), b);
    let bad = vec_i64(&[4, 1, 6]);
    assert_eq!(m.solve(&bad), None);
}

#[test]
fn cohomology_kernel_only() {
    let d_in = SparseRationalMatrix::zero(2, 0);
    let d_out = SparseRationalMatrix::from_rows_i64(&[&[1, 1]]);
    let h = cohomology_at(&d_in, &d_out).unwrap();
    assert_eq!(h.dimension, 1);
    assert_eq!(h.representatives.len(), 1);
    assert!(proportional(&h.representatives[0], &vec_i64(&[1, -1])));
    assert!(!h.is_exact(&h.representatives[0]));
}

#[test]
fn cohomology_everything_exact() {
    let d_in = SparseRationalMatrix::identity(2);
    let d_out = SparseRationalMatrix::zero(0, 2);
    let h = cohomology_at(&d_in, &d_out).unwrap();
    assert_eq!(h.dimension, 0);
    assert!(h.representatives.is_empty());
    assert!(h.is_exact(&vec_i64(&[5, -7])));
}

#[test]
fn cohomology_all_of_q3() {
    let d_in = SparseRationalMatrix::zero(3, 0);
    let d_out = SparseRationalMatrix::zero(0, 3);
    let h = cohomology_at(&d_in, &d_out).unwrap();
    assert_eq!(h.dimension, 3);
    assert_eq!(h.representatives.len(), 3);
}

#[test]
fn cohomology_rejects_non_complex() {
    let d_in = SparseRationalMatrix::from_rows_i64(&[&[1], &[0]]);
    let d_out = SparseRationalMatrix::from_rows_i64(&[&[1, 0]]);
    let err = cohomology_at(&d_in, &d_out).unwrap_err();
    assert_eq!(err, LinalgError::CompositionNotZero { row: 0, col: 0 });
}

#[test]
fn cohomology_middle_of_exact_sequence() {
    // 0 → Q → Q² → Q → 0 with maps x ↦ (x, -x) and (a, b) ↦ a + b.
    let d_in = SparseRationalMatrix::from_rows_i64(&[&[1], &[-1]]);
    let d_out = SparseRationalMatrix::from_rows_i64(&[&[1, 1]]);
    let h = cohomology_at(&d_in, &d_out).unwrap();
    assert_eq!(h.dimension, 0);
    assert!(h.is_exact(&vec_i64(&[2, -2])));
    assert!(!h.is_exact(&vec_i64(&[2, 2])));
}
