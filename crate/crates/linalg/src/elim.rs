use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::matrix::SparseRationalMatrix;
use crate::rational::{exact_div, lcm_big, Rational};

/// Fraction-free row elimination. Each row is first scaled to integers by the
/// least common multiple of its denominators, then reduced with single-step
/// updates
///
/// ```text
/// new[i][j] = (p_k * a[i][j] - a[i][c_k] * a[r_k][j]) / p_{k-1}
/// ```
///
/// where `p_{k-1}` is the pivot of the previous step (`1` initially). Every
/// such division is exact, so no rounding can occur. Pivots are chosen in the
/// leftmost eligible column, lowest remaining row first; the result is a
/// function of the input alone.
pub(crate) struct Eliminated {
    rows: Vec<BTreeMap<usize, BigInt>>,
    /// Pivot positions as `(row, col)` in elimination order.
    pivots: Vec<(usize, usize)>,
    /// Columns eligible for pivoting; trailing columns (e.g. an augmented
    /// right-hand side) are carried along but never pivoted on.
    pivot_limit: usize,
}

impl Eliminated {
    pub(crate) fn run(m: &SparseRationalMatrix, pivot_limit: usize) -> Self {
        let mut rows: Vec<BTreeMap<usize, BigInt>> = vec![BTreeMap::new(); m.rows()];
        {
            let mut lcms: Vec<BigInt> = vec![BigInt::one(); m.rows()];
            for (r, _, v) in m.iter() {
                lcms[r] = lcm_big(&lcms[r], v.denom());
            }
            for (r, c, v) in m.iter() {
                rows[r].insert(c, v.numer() * exact_div(&lcms[r], v.denom()));
            }
        }

        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut prev_pivot = BigInt::one();
        let mut next_row = 0usize;
        for col in 0..pivot_limit {
            if next_row >= rows.len() {
                break;
            }
            let Some(found) = (next_row..rows.len()).find(|&i| rows[i].contains_key(&col)) else {
                continue;
            };
            rows.swap(next_row, found);
            let (done, rest) = rows.split_at_mut(next_row + 1);
            let pivot_row = &done[next_row];
            let pivot = pivot_row[&col].clone();
            for row in rest.iter_mut() {
                let factor = row.remove(&col);
                let mut updated: BTreeMap<usize, BigInt> = BTreeMap::new();
                match factor {
                    None => {
                        for (&j, v) in row.iter() {
                            updated.insert(j, exact_div(&(v * &pivot), &prev_pivot));
                        }
                    }
                    Some(f) => {
                        let mut cols: Vec<usize> = row.keys().copied().collect();
                        cols.extend(pivot_row.keys().copied().filter(|&j| j > col && !row.contains_key(&j)));
                        cols.sort_unstable();
                        for j in cols {
                            let a = row.get(&j).cloned().unwrap_or_else(BigInt::zero);
                            let b = pivot_row.get(&j).cloned().unwrap_or_else(BigInt::zero);
                            let num = &pivot * &a - &f * &b;
                            if !num.is_zero() {
                                updated.insert(j, exact_div(&num, &prev_pivot));
                            }
                        }
                    }
                }
                *row = updated;
            }
            prev_pivot = pivot;
            pivots.push((next_row, col));
            next_row += 1;
        }

        Self {
            rows,
            pivots,
            pivot_limit,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Basis of the right kernel, one vector per free column in increasing
    /// column order, normalized so the free coordinate equals one.
    pub(crate) fn kernel(&self) -> Vec<Vec<Rational>> {
        let n = self.pivot_limit;
        let pivot_cols: BTreeSet<usize> = self.pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = Vec::new();
        for free in 0..n {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut x = vec![Rational::zero(); n];
            x[free] = Rational::one();
            for &(r, c) in self.pivots.iter().rev() {
                let row = &self.rows[r];
                let mut acc = Rational::zero();
                for (&j, v) in row.iter() {
                    if j == c || j >= n || x[j].is_zero() {
                        continue;
                    }
                    acc += Rational::from_integer(v.clone()) * &x[j];
                }
                let pivot = Rational::from_integer(row[&c].clone());
                x[c] = -acc / pivot;
            }
            basis.push(x);
        }
        basis
    }

    /// A solution of the system whose first `n` columns are coefficients and
    /// whose column `n` is the right-hand side, with free variables set to
    /// zero. `None` when the system is inconsistent.
    pub(crate) fn particular_solution(&self, n: usize) -> Option<Vec<Rational>> {
        // Non-pivot rows are zero in every eligible column; any surviving
        // entry sits in the augmented column and contradicts the system.
        for row in &self.rows[self.pivots.len()..] {
            if !row.is_empty() {
                return None;
            }
        }
        let mut x = vec![Rational::zero(); n];
        for &(r, c) in self.pivots.iter().rev() {
            let row = &self.rows[r];
            let mut rhs = row
                .get(&n)
                .map(|v| Rational::from_integer(v.clone()))
                .unwrap_or_else(Rational::zero);
            for (&j, v) in row.iter() {
                if j == c || j >= n || x[j].is_zero() {
                    continue;
                }
                rhs -= Rational::from_integer(v.clone()) * &x[j];
            }
            let pivot = Rational::from_integer(row[&c].clone());
            x[c] = rhs / pivot;
        }
        Some(x)
    }
}
