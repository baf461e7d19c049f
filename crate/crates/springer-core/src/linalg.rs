//! Dense exact linear algebra over cyclotomic coefficients.

use crate::exactfield::Cyclotomic;

pub(crate) type Matrix = Vec<Vec<Cyclotomic>>;

/// Reduced row echelon form in place.  Returns the pivot column of each
/// nonzero row, in order.
pub(crate) fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].inv().expect("pivot nonzero");
        for j in c..cols {
            m[r][j] = m[r][j].mul(&inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..cols {
                    let v = m[i][j].sub(&factor.mul(&m[r][j]));
                    m[i][j] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    pivots
}

pub(crate) fn rank(mut m: Matrix) -> usize {
    rref(&mut m).len()
}

/// Basis of the right nullspace of `m` (vectors of length = column count).
pub(crate) fn nullspace(mut m: Matrix, cols: usize) -> Vec<Vec<Cyclotomic>> {
    if m.is_empty() {
        m.push(vec![Cyclotomic::zero(); cols]);
    }
    let pivots = rref(&mut m);
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![Cyclotomic::zero(); cols];
        v[free] = Cyclotomic::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = m[row][free].neg();
        }
        basis.push(v);
    }
    basis
}

/// Row span comparison: do the rows of `a` and `b` span the same subspace?
pub(crate) fn same_row_span(a: &Matrix, b: &Matrix, cols: usize) -> bool {
    let ra = rank(a.clone());
    let rb = rank(b.clone());
    if ra != rb {
        return false;
    }
    let mut stacked = a.clone();
    stacked.extend(b.iter().cloned());
    let _ = cols;
    rank(stacked) == ra
}

#[cfg(test)]
mod tests {
    use super::*;
    fn c(n: i64) -> Cyclotomic {
        Cyclotomic::from_integer(n)
    }

    #[test]
    fn rank_and_nullspace() {
        let m = vec![vec![c(1), c(2), c(3)], vec![c(2), c(4), c(6)]];
        assert_eq!(rank(m.clone()), 1);
        let ns = nullspace(m, 3);
        assert_eq!(ns.len(), 2);
    }
}
