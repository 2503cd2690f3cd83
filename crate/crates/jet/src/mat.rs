//! Small dense matrices over the rationals: just enough exact linear
//! algebra for the linear parts of jets.

use linalg::Rational;
use num_traits::{One, Zero};

pub(crate) fn identity(n: usize) -> Vec<Vec<Rational>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

pub(crate) fn det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut d = Rational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            d = -d;
        }
        let p = a[col][col].clone();
        d *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let s = &a[col][c] * &f;
                a[r][c] -= s;
            }
        }
    }
    d
}

pub(crate) fn inverse(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p = a[col][col].clone();
        for c in 0..n {
            a[col][c] /= &p;
            inv[col][c] /= &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let s = &a[col][c] * &f;
                a[r][c] -= s;
                let s = &inv[col][c] * &f;
                inv[r][c] -= s;
            }
        }
    }
    Some(inv)
}

pub(crate) fn matvec(m: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

pub(crate) fn matmul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..k).fold(Rational::zero(), |acc, l| acc + &a[i][l] * &b[l][j])
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use linalg::{rat, rat_int};

    #[test]
    fn determinant_tracks_row_swaps() {
        let m = vec![
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(1), rat_int(0)],
        ];
        assert_eq!(det(&m), rat_int(-1));
    }

    #[test]
    fn inverse_of_a_shear() {
        let m = vec![
            vec![rat_int(1), rat_int(3)],
            vec![rat_int(0), rat_int(1)],
        ];
        let inv = inverse(&m).unwrap();
        assert_eq!(inv[0], vec![rat_int(1), rat_int(-3)]);
        assert_eq!(inv[1], vec![rat_int(0), rat_int(1)]);
        assert_eq!(matmul(&m, &inv), identity(2));
    }

    #[test]
    fn singular_matrices_have_no_inverse() {
        let m = vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(4)],
        ];
        assert_eq!(det(&m), rat_int(0));
        assert!(inverse(&m).is_none());
    }

    #[test]
    fn fractional_entries_survive_elimination() {
        let m = vec![
            vec![rat(1, 2), rat_int(1)],
            vec![rat_int(1), rat(1, 3)],
        ];
        let d = det(&m);
        assert_eq!(d, rat(1, 6) - rat_int(1));
        let inv = inverse(&m).unwrap();
        assert_eq!(matvec(&inv, &[rat(1, 2), rat_int(1)]), vec![rat_int(1), rat_int(0)]);
    }
}
