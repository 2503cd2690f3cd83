use std::collections::BTreeMap;

use formal::{Exponent, PolyForm, TruncPoly};
use groupoid::{
    bar_delta, cup_w, string_basis, ActionCochain, BarCochain, BilinearPairing, FiniteGroupoid,
    LinearAction, Representation,
};
use linalg::{rat_int, Rational, SparseRationalMatrix};
use proptest::collection::vec;
use proptest::prelude::*;

fn sgn(k: usize) -> Rational {
    if k % 2 == 0 {
        rat_int(1)
    } else {
        rat_int(-1)
    }
}

fn small_group(choice: usize) -> FiniteGroupoid {
    match choice {
        0 => FiniteGroupoid::cyclic(2),
        1 => FiniteGroupoid::cyclic(3),
        _ => FiniteGroupoid::symmetric(3),
    }
}

fn cochain_from_ints(g: &FiniteGroupoid, level: usize, ints: &[i64]) -> BarCochain {
    let rho = Representation::trivial(g, 1);
    let values = ints.iter().map(|&k| vec![rat_int(k)]).collect();
    BarCochain::new(g, &rho, level, values).unwrap()
}

fn bar_case() -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (0usize..3, 0usize..=2).prop_flat_map(|(choice, level)| {
        let n = string_basis(&small_group(choice), level).len();
        (Just(choice), Just(level), vec(-4i64..=4, n))
    })
}

fn cup_case() -> impl Strategy<Value = (usize, usize, Vec<i64>, Vec<i64>)> {
    (0usize..=2, 0usize..=2)
        .prop_filter("keep the top level affordable", |&(p1, p2)| p1 + p2 <= 3)
        .prop_flat_map(|(p1, p2)| {
            let g = FiniteGroupoid::symmetric(3);
            let n1 = string_basis(&g, p1).len();
            let n2 = string_basis(&g, p2).len();
            (Just(p1), Just(p2), vec(-4i64..=4, n1), vec(-4i64..=4, n2))
        })
}

fn plane_actions(choice: usize) -> LinearAction {
    if choice == 0 {
        LinearAction::new(
            vec!["1".into(), "-1".into()],
            vec![
                SparseRationalMatrix::identity(1),
                SparseRationalMatrix::from_rows_i64(&[&[-1]]),
            ],
        )
        .unwrap()
    } else {
        LinearAction::new(
            vec!["e".into(), "s".into()],
            vec![
                SparseRationalMatrix::identity(2),
                SparseRationalMatrix::from_rows_i64(&[&[0, 1], &[1, 0]]),
            ],
        )
        .unwrap()
    }
}

fn all_tuples(order: usize, level: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..level {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..order).map(move |g| {
                    let mut s = t.clone();
                    s.push(g);
                    s
                })
            })
            .collect();
    }
    out
}

fn subsets_of_size(nvars: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, nvars: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..nvars {
            cur.push(i);
            rec(i + 1, nvars, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, nvars, k, &mut Vec::new(), &mut out);
    out
}

fn form_strategy(nvars: usize, degree: usize) -> impl Strategy<Value = PolyForm> {
    let subsets = subsets_of_size(nvars, degree);
    let count = subsets.len();
    let term = (-3i64..=3, vec(0u32..=2, nvars), 0usize..count);
    vec(term, 0..=2).prop_map(move |terms| {
        let mut f = PolyForm::zero(nvars, degree);
        for (c, exps, si) in terms {
            let t = PolyForm::term(TruncPoly::monomial(Exponent(exps), rat_int(c)), &subsets[si]);
            f = f.add(&t).unwrap();
        }
        f
    })
}

fn cochain_strategy(
    choice: usize,
    level: usize,
    degree: usize,
) -> impl Strategy<Value = ActionCochain> {
    let action = plane_actions(choice);
    let strings = all_tuples(action.order(), level);
    vec(form_strategy(action.nvars(), degree), strings.len()).prop_map(move |forms| {
        let values: BTreeMap<Vec<usize>, PolyForm> = strings.iter().cloned().zip(forms).collect();
        ActionCochain::new(&action, level, degree, values).unwrap()
    })
}

fn action_case() -> impl Strategy<Value = (usize, ActionCochain, ActionCochain)> {
    (0usize..2).prop_flat_map(|choice| {
        let nvars = plane_actions(choice).nvars();
        ((Just(choice), 0usize..=2, 0usize..=nvars, 0usize..=2, 0usize..=nvars)).prop_flat_map(
            |(choice, p1, q1, p2, q2)| {
                (
                    Just(choice),
                    cochain_strategy(choice, p1, q1),
                    cochain_strategy(choice, p2, q2),
                )
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bar_delta_twice_is_zero((choice, level, ints) in bar_case()) {
        let g = small_group(choice);
        let rho = Representation::trivial(&g, 1);
        let c = cochain_from_ints(&g, level, &ints);
        let dd = bar_delta(&g, &rho, &bar_delta(&g, &rho, &c).unwrap()).unwrap();
        prop_assert_eq!(dd, BarCochain::zero(&g, &rho, level + 2));
    }

    #[test]
    fn cup_is_compatible_with_the_differential((p1, p2, v1, v2) in cup_case()) {
        let g = FiniteGroupoid::symmetric(3);
        let rho = Representation::trivial(&g, 1);
        let w = BilinearPairing::multiplication(&g);
        let c1 = cochain_from_ints(&g, p1, &v1);
        let c2 = cochain_from_ints(&g, p2, &v2);
        let lhs = bar_delta(&g, &rho, &cup_w(&g, &w, &c1, &c2).unwrap()).unwrap();
        let rhs = cup_w(&g, &w, &bar_delta(&g, &rho, &c1).unwrap(), &c2)
            .unwrap()
            .add(
                &cup_w(&g, &w, &c1, &bar_delta(&g, &rho, &c2).unwrap())
                    .unwrap()
                    .scale(&sgn(p1)),
            )
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn action_delta_twice_is_zero((choice, a, _b) in action_case()) {
        let act = plane_actions(choice);
        let dd = a.delta(&act).unwrap().delta(&act).unwrap();
        prop_assert!(dd.is_zero());
    }

    #[test]
    fn wedge_cup_satisfies_both_leibniz_rules((choice, a, b) in action_case()) {
        let act = plane_actions(choice);
        let cup = a.wedge_cup(&b, &act).unwrap();

        let horizontal = a
            .delta(&act)
            .unwrap()
            .wedge_cup(&b, &act)
            .unwrap()
            .add(
                &a.wedge_cup(&b.delta(&act).unwrap(), &act)
                    .unwrap()
                    .scale(&sgn(a.level)),
            )
            .unwrap();
        prop_assert_eq!(cup.delta(&act).unwrap(), horizontal);

        let vertical = a
            .vertical()
            .wedge_cup(&b, &act)
            .unwrap()
            .add(
                &a.wedge_cup(&b.vertical(), &act)
                    .unwrap()
                    .scale(&sgn(a.degree)),
            )
            .unwrap();
        prop_assert_eq!(cup.vertical(), vertical);
    }

    #[test]
    fn total_cup_is_a_graded_derivation((choice, a, b) in action_case()) {
        let act = plane_actions(choice);
        let (p1, q1, p2) = (a.level, a.degree, b.level);
        let cup = a.total_cup(&b, &act).unwrap();

        let horizontal = a
            .delta(&act)
            .unwrap()
            .total_cup(&b, &act)
            .unwrap()
            .add(
                &a.total_cup(&b.delta(&act).unwrap(), &act)
                    .unwrap()
                    .scale(&sgn(p1 + q1)),
            )
            .unwrap();
        prop_assert_eq!(cup.delta(&act).unwrap(), horizontal);

        let vertical = a
            .vertical()
            .total_cup(&b, &act)
            .unwrap()
            .scale(&sgn(p1))
            .add(
                &a.total_cup(&b.vertical(), &act)
                    .unwrap()
                    .scale(&sgn(p1 + q1 + p2)),
            )
            .unwrap();
        prop_assert_eq!(cup.vertical().scale(&sgn(p1 + p2)), vertical);
    }
}
