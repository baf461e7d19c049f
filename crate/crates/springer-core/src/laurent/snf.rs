//! Smith normal form over the rank-one Laurent ring, which is a principal
//! ideal domain under the support-width size function.

use super::{LaurentMatrix, LaurentPoly};

/// Diagonalization `u * m * v = diag(invariants)` with invertible transforms.
///
/// Invariant factors are unit-normalized (lowest exponent 0, leading
/// coefficient 1) and each divides the next.  `u_inv` undoes `u`, giving the
/// generator change back to the original presentation.
#[derive(Debug, Clone)]
pub struct Snf {
    pub invariants: Vec<LaurentPoly>,
    pub u: LaurentMatrix,
    pub u_inv: LaurentMatrix,
    pub v: LaurentMatrix,
}

impl Snf {
    /// Number of nonzero invariant factors.
    pub fn nonzero_count(&self) -> usize {
        self.invariants.iter().filter(|f| !f.is_zero()).count()
    }
}

struct Work {
    m: LaurentMatrix,
    u: LaurentMatrix,
    u_inv: LaurentMatrix,
    v: LaurentMatrix,
}

impl Work {
    fn row_swap(&mut self, i: usize, j: usize) {
        self.m.entries.swap(i, j);
        self.u.entries.swap(i, j);
        for row in self.u_inv.entries.iter_mut() {
            row.swap(i, j);
        }
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        for row in self.m.entries.iter_mut() {
            row.swap(i, j);
        }
        for row in self.v.entries.iter_mut() {
            row.swap(i, j);
        }
    }

    /// row_i += c * row_j
    fn row_add(&mut self, i: usize, j: usize, c: &LaurentPoly) {
        for k in 0..self.m.cols {
            let v = self.m.entries[i][k].add(&c.mul(&self.m.entries[j][k]));
            self.m.entries[i][k] = v;
        }
        for k in 0..self.u.cols {
            let v = self.u.entries[i][k].add(&c.mul(&self.u.entries[j][k]));
            self.u.entries[i][k] = v;
        }
        // Inverse: column_j -= c * column_i.
        for row in self.u_inv.entries.iter_mut() {
            let v = row[j].sub(&c.mul(&row[i]));
            row[j] = v;
        }
    }

    /// col_i += c * col_j
    fn col_add(&mut self, i: usize, j: usize, c: &LaurentPoly) {
        for row in self.m.entries.iter_mut() {
            let v = row[i].add(&c.mul(&row[j]));
            row[i] = v;
        }
        for row in self.v.entries.iter_mut() {
            let v = row[i].add(&c.mul(&row[j]));
            row[i] = v;
        }
    }

    /// Scale a row by a unit.
    fn row_scale(&mut self, i: usize, unit: &LaurentPoly) {
        let inv = unit_inverse(unit);
        for k in 0..self.m.cols {
            self.m.entries[i][k] = self.m.entries[i][k].mul(unit);
        }
        for k in 0..self.u.cols {
            self.u.entries[i][k] = self.u.entries[i][k].mul(unit);
        }
        for row in self.u_inv.entries.iter_mut() {
            row[i] = row[i].mul(&inv);
        }
    }
}

fn unit_inverse(u: &LaurentPoly) -> LaurentPoly {
    assert!(u.is_unit(), "not a unit");
    let (e, c) = u.terms.iter().next().unwrap();
    LaurentPoly::monomial(1, vec![-e[0]], c.inv().expect("unit coefficient"))
}

/// Exact Smith normal form of a rank-one Laurent matrix.
pub fn smith_normal_form_rank1(m: &LaurentMatrix) -> Snf {
    assert_eq!(m.rank, 1, "Smith normal form requires lattice rank one");
    let rows = m.rows;
    let cols = m.cols;
    let mut w = Work {
        m: m.clone(),
        u: LaurentMatrix::identity(1, rows),
        u_inv: LaurentMatrix::identity(1, rows),
        v: LaurentMatrix::identity(1, cols),
    };
    let bound = rows.min(cols);
    let mut k = 0;
    while k < bound {
        // Select the smallest-span nonzero entry as pivot.
        let mut pivot: Option<(usize, usize, i64)> = None;
        for i in k..rows {
            for j in k..cols {
                if let Some(s) = w.m.entries[i][j].span1() {
                    if pivot.map(|(_, _, ps)| s < ps).unwrap_or(true) {
                        pivot = Some((i, j, s));
                    }
                }
            }
        }
        let Some((pi, pj, _)) = pivot else {
            break; // all remaining entries are zero
        };
        w.row_swap(k, pi);
        w.col_swap(k, pj);

        // Clear row and column k; restart when a division leaves a smaller
        // remainder in place of the pivot.
        'clearing: loop {
            for j in k + 1..cols {
                if w.m.entries[k][j].is_zero() {
                    continue;
                }
                let (q, r) = w.m.entries[k][j].div_rem1(&w.m.entries[k][k]);
                w.col_add(j, k, &q.neg());
                if !r.is_zero() {
                    w.col_swap(k, j);
                    continue 'clearing;
                }
            }
            for i in k + 1..rows {
                if w.m.entries[i][k].is_zero() {
                    continue;
                }
                let (q, r) = w.m.entries[i][k].div_rem1(&w.m.entries[k][k]);
                w.row_add(i, k, &q.neg());
                if !r.is_zero() {
                    w.row_swap(k, i);
                    continue 'clearing;
                }
            }
            break;
        }

        // Divisibility repair: the pivot must divide every remaining entry.
        let mut repaired = false;
        'repair: for i in k + 1..rows {
            for j in k + 1..cols {
                if !w.m.entries[k][k].divides1(&w.m.entries[i][j]) {
                    let one = LaurentPoly::one(1);
                    w.row_add(k, i, &one);
                    repaired = true;
                    break 'repair;
                }
            }
        }
        if repaired {
            continue; // redo the pivot at position k
        }

        // Normalize the invariant factor by a unit.
        let d = &w.m.entries[k][k];
        let min = d.min_exp1().unwrap();
        let lead = d.coeff1(d.max_exp1().unwrap());
        let unit = LaurentPoly::monomial(1, vec![-min], lead.inv().expect("nonzero"));
        w.row_scale(k, &unit);
        k += 1;
    }

    let invariants: Vec<LaurentPoly> = (0..bound).map(|i| w.m.entries[i][i].clone()).collect();
    let invariants = invariants
        .into_iter()
        .take_while(|f| !f.is_zero())
        .collect();
    Snf {
        invariants,
        u: w.u,
        u_inv: w.u_inv,
        v: w.v,
    }
}

/// Invariant-factor decomposition data of a cokernel presented by `m`:
/// torsion factors (non-unit invariants) and the free rank.
pub fn cokernel_shape(m: &LaurentMatrix) -> (Vec<LaurentPoly>, usize) {
    let snf = smith_normal_form_rank1(m);
    let torsion: Vec<LaurentPoly> = snf
        .invariants
        .iter()
        .filter(|f| !f.is_unit())
        .cloned()
        .collect();
    let free = m.rows - snf.invariants.len();
    (torsion, free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::Cyclotomic;

    fn t(e: i64) -> LaurentPoly {
        LaurentPoly::lattice(&[e])
    }

    fn one_minus_t() -> LaurentPoly {
        LaurentPoly::one(1).sub(&t(1))
    }

    fn check_product(m: &LaurentMatrix, snf: &Snf) {
        let prod = snf.u.mul(m).mul(&snf.v);
        for i in 0..m.rows {
            for j in 0..m.cols {
                let expected = if i == j && i < snf.invariants.len() {
                    snf.invariants[i].clone()
                } else {
                    LaurentPoly::zero(1)
                };
                assert_eq!(prod.entries[i][j], expected, "mismatch at ({i},{j})");
            }
        }
        // u * u_inv = identity.
        let id = snf.u.mul(&snf.u_inv);
        assert_eq!(id, LaurentMatrix::identity(1, m.rows));
        // Transform determinants are units.
        assert!(snf.u.determinant().is_unit());
        assert!(snf.v.determinant().is_unit());
    }

    #[test]
    fn diagonal_input() {
        let f = one_minus_t().pow(2);
        let m = LaurentMatrix::from_columns(1, 1, vec![vec![f.clone()]]);
        let snf = smith_normal_form_rank1(&m);
        assert_eq!(snf.invariants.len(), 1);
        assert_eq!(snf.invariants[0], f.unit_normalize1());
        check_product(&m, &snf);
    }

    #[test]
    fn gcd_row() {
        // [1-t, 1-t^2] has a single invariant factor 1-t (normalized t-1).
        let m = LaurentMatrix::from_columns(
            1,
            1,
            vec![vec![one_minus_t()], vec![LaurentPoly::one(1).sub(&t(2))]],
        );
        let snf = smith_normal_form_rank1(&m);
        assert_eq!(snf.invariants.len(), 1);
        assert_eq!(snf.invariants[0], one_minus_t().unit_normalize1());
        check_product(&m, &snf);
    }

    #[test]
    fn identity_input() {
        let m = LaurentMatrix::identity(1, 3);
        let snf = smith_normal_form_rank1(&m);
        assert_eq!(snf.invariants.len(), 3);
        for f in &snf.invariants {
            assert_eq!(*f, LaurentPoly::one(1));
        }
        check_product(&m, &snf);
    }

    #[test]
    fn divisibility_chain_on_random_matrices() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let rows = rng.gen_range(1..4);
            let cols = rng.gen_range(1..4);
            let mut m = LaurentMatrix::zero(1, rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    let mut p = LaurentPoly::zero(1);
                    for e in -1..=2i64 {
                        let c: i64 = rng.gen_range(-2..=2);
                        if c != 0 && rng.gen_bool(0.6) {
                            p.insert(vec![e], Cyclotomic::from_integer(c));
                        }
                    }
                    m.entries[i][j] = p;
                }
            }
            let snf = smith_normal_form_rank1(&m);
            check_product(&m, &snf);
            for w in snf.invariants.windows(2) {
                assert!(
                    w[0].divides1(&w[1]),
                    "chain broken: {} does not divide {}",
                    w[0],
                    w[1]
                );
            }
        }
    }
}
