use linalg::{cohomology_at, Rational, SparseRationalMatrix};
use num_traits::Zero;
use proptest::prelude::*;

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=4).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn arb_matrix(max_dim: usize) -> impl Strategy<Value = SparseRationalMatrix> {
    (0..=max_dim, 0..=max_dim).prop_flat_map(|(rows, cols)| {
        let cells = rows * cols;
        proptest::collection::vec(
            (0..cells.max(1), arb_rational()),
            0..=(cells.max(1)).min(12),
        )
        .prop_map(move |entries| {
            let mut m = SparseRationalMatrix::zero(rows, cols);
            if cells > 0 {
                for (cell, v) in entries {
                    let (r, c) = (cell / cols, cell % cols);
                    m.set(r, c, v).unwrap();
                }
            }
            m
        })
    })
}

proptest! {
    #[test]
    fn kernel_vectors_annihilate(m in arb_matrix(6)) {
        let (rank, kernel) = m.rank_kernel();
        prop_assert_eq!(rank + kernel.len(), m.cols());
        for k in &kernel {
            let image = m.mul_vec(k).unwrap();
            prop_assert!(image.iter().all(Rational::is_zero));
        }
    }

    #[test]
    fn rank_bounded_and_transpose_invariant(m in arb_matrix(6)) {
        let r = m.rank();
        prop_assert!(r <= m.rows().min(m.cols()));
        prop_assert_eq!(r, m.transpose().rank());
    }

    #[test]
    fn solve_recovers_consistent_systems(
        m in arb_matrix(5),
        seed in proptest::collection::vec(arb_rational(), 0..=5),
    ) {
        let x: Vec<Rational> = (0..m.cols())
            .map(|i| seed.get(i).cloned().unwrap_or_else(Rational::zero))
            .collect();
        let b = m.mul_vec(&x).unwrap();
        let y = m.solve(&b).expect("constructed system is consistent");
        prop_assert_eq!(m.mul_vec(&y).unwrap(), b);
    }

    #[test]
    fn kernel_columns_have_trivial_cohomology(m in arb_matrix(5)) {
        // Use the kernel basis of m as d_in; the middle cohomology of
        // d_in, m must then vanish and every kernel vector must be exact.
        let (_, kernel) = m.rank_kernel();
        let mut d_in = SparseRationalMatrix::zero(m.cols(), kernel.len());
        for (c, k) in kernel.iter().enumerate() {
            for (r, v) in k.iter().enumerate() {
                if !v.is_zero() {
                    d_in.set(r, c, v.clone()).unwrap();
                }
            }
        }
        let h = cohomology_at(&d_in, &m).unwrap();
        prop_assert_eq!(h.dimension, 0);
        for k in &kernel {
            prop_assert!(h.is_exact(k));
        }
    }

    #[test]
    fn cohomology_dimension_formula(m in arb_matrix(5)) {
        // With no incoming differential the cohomology is the whole kernel.
        let d_in = SparseRationalMatrix::zero(m.cols(), 0);
        let h = cohomology_at(&d_in, &m).unwrap();
        prop_assert_eq!(h.dimension, m.cols() - m.rank());
        prop_assert_eq!(h.representatives.len(), h.dimension);
        for rep in &h.representatives {
            prop_assert!(m.mul_vec(rep).unwrap().iter().all(Rational::is_zero));
            prop_assert!(rep.iter().any(|c| !c.is_zero()));
            prop_assert!(!h.is_exact(rep));
        }
    }

    #[test]
    fn outputs_are_reproducible(m in arb_matrix(6)) {
        let first = m.rank_kernel();
        let second = m.rank_kernel();
        prop_assert_eq!(&first.0, &second.0);
        prop_assert_eq!(&first.1, &second.1);
        let json_a = serde_json::to_string(&m).unwrap();
        let json_b = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(json_a, json_b);
    }
}
