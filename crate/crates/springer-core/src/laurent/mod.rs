//! Exact module algebra over the group algebra of the translation lattice:
//! Laurent polynomials, Smith normal form in rank one, Groebner machinery in
//! higher rank, Tor against finite-order characters, and torsion tests
//! against the multiplicative set of an endoscopic localization.

mod groebner;
mod module;
mod snf;

pub use groebner::{
    column_syzygies, groebner_module_basis, kernel_module_general, quotient_dimension,
    reduce_against, saturate_columns, GroebnerBasis,
};
pub use module::{
    canonical_mod1, decompose, in_column_span, kernel_module, matrix_kernel, solve_linear,
    tor_pairs_rank1, tor_with_action, Decomposition, SemilinearMap, TorWithAction,
};
pub use snf::{cokernel_shape, smith_normal_form_rank1, Snf};

use crate::exactfield::Cyclotomic;
use crate::rootdata::{mat_vec, IntMatrix, LatticeCharacter};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LaurentError {
    #[error("operation requires lattice rank 1, found {0}")]
    RankOneOnly(usize),
    #[error("lattice rank {0} exceeds the supported bound {1}")]
    RankGuard(usize, usize),
    #[error("inconsistent dimensions: {0}")]
    Shape(String),
    #[error("linear system has no solution")]
    NoSolution,
}

/// A Laurent polynomial in `rank` variables over a cyclotomic field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    pub rank: usize,
    pub terms: BTreeMap<Vec<i64>, Cyclotomic>,
}

impl LaurentPoly {
    pub fn zero(rank: usize) -> Self {
        LaurentPoly {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize) -> Self {
        LaurentPoly::constant(rank, Cyclotomic::one())
    }

    pub fn constant(rank: usize, c: Cyclotomic) -> Self {
        let mut p = LaurentPoly::zero(rank);
        p.insert(vec![0; rank], c);
        p
    }

    pub fn monomial(rank: usize, exps: Vec<i64>, c: Cyclotomic) -> Self {
        assert_eq!(exps.len(), rank);
        let mut p = LaurentPoly::zero(rank);
        p.insert(exps, c);
        p
    }

    /// The basis monomial of a lattice vector.
    pub fn lattice(exps: &[i64]) -> Self {
        LaurentPoly::monomial(exps.len(), exps.to_vec(), Cyclotomic::one())
    }

    pub fn insert(&mut self, e: Vec<i64>, c: Cyclotomic) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.rank, other.rank);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Cyclotomic) -> LaurentPoly {
        let mut out = LaurentPoly::zero(self.rank);
        for (e, v) in &self.terms {
            out.insert(e.clone(), v.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.rank, other.rank);
        let mut out = LaurentPoly::zero(self.rank);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.insert(e, ca.mul(cb));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> LaurentPoly {
        let mut acc = LaurentPoly::one(self.rank);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `1 - t^coroot`, the standard localization generator of a coroot.
    pub fn one_minus_lattice(exps: &[i64]) -> LaurentPoly {
        LaurentPoly::one(exps.len()).sub(&LaurentPoly::lattice(exps))
    }

    /// Value under a finite-order character of the lattice.
    pub fn evaluate(&self, s: &LatticeCharacter) -> Cyclotomic {
        let mut acc = Cyclotomic::zero();
        for (e, c) in &self.terms {
            acc = acc.add(&c.mul(&s.value(e)));
        }
        acc
    }

    /// Push forward along a lattice automorphism: `t^e -> t^(g e)`.
    pub fn substitute_action(&self, g: &IntMatrix) -> LaurentPoly {
        let mut out = LaurentPoly::zero(self.rank);
        for (e, c) in &self.terms {
            out.insert(mat_vec(g, e), c.clone());
        }
        out
    }

    /// Minimal exponent vector (componentwise) over the support.
    pub fn min_exponents(&self) -> Option<Vec<i64>> {
        if self.terms.is_empty() {
            return None;
        }
        let mut min = vec![i64::MAX; self.rank];
        for e in self.terms.keys() {
            for (m, &x) in min.iter_mut().zip(e) {
                *m = (*m).min(x);
            }
        }
        Some(min)
    }

    // Rank-one helpers.

    pub fn min_exp1(&self) -> Option<i64> {
        self.terms.keys().map(|e| e[0]).min()
    }

    pub fn max_exp1(&self) -> Option<i64> {
        self.terms.keys().map(|e| e[0]).max()
    }

    /// Width of the support in rank one; the Euclidean size function.
    pub fn span1(&self) -> Option<i64> {
        Some(self.max_exp1()? - self.min_exp1()?)
    }

    pub fn coeff1(&self, e: i64) -> Cyclotomic {
        self.terms
            .get(&vec![e])
            .cloned()
            .unwrap_or_else(Cyclotomic::zero)
    }

    /// Normalize by a unit so the lowest exponent is 0 and the leading
    /// coefficient is 1.  Rank one.
    pub fn unit_normalize1(&self) -> LaurentPoly {
        if self.is_zero() {
            return self.clone();
        }
        let min = self.min_exp1().unwrap();
        let max = self.max_exp1().unwrap();
        let lead = self.coeff1(max);
        let inv = lead.inv().expect("leading coefficient nonzero");
        let mut out = LaurentPoly::zero(1);
        for (e, c) in &self.terms {
            out.insert(vec![e[0] - min], c.mul(&inv));
        }
        out
    }

    /// Rank-one Euclidean division: `self = q*other + r` with
    /// `span(r) < span(other)` (or `r = 0`).
    pub fn div_rem1(&self, other: &LaurentPoly) -> (LaurentPoly, LaurentPoly) {
        assert_eq!(self.rank, 1);
        assert!(!other.is_zero());
        let mut rem = self.clone();
        let mut quot = LaurentPoly::zero(1);
        let db = other.span1().unwrap();
        let lead_b = other.coeff1(other.max_exp1().unwrap());
        let shift_b = other.max_exp1().unwrap();
        while !rem.is_zero() && rem.span1().unwrap() >= db {
            let top = rem.max_exp1().unwrap();
            let c = rem.coeff1(top).div(&lead_b).expect("unit");
            let q = LaurentPoly::monomial(1, vec![top - shift_b], c);
            quot = quot.add(&q);
            rem = rem.sub(&q.mul(other));
            // Progress: the span of rem drops or its top degree drops while
            // the bottom cannot sink below min(self, q*other) bounds.
            if !rem.is_zero() && rem.max_exp1().unwrap() == top {
                unreachable!("division failed to reduce the leading term");
            }
            if rem.is_zero() {
                break;
            }
            // Re-check against span: sinking min exponents also terminate.
            if rem.span1().unwrap() < db {
                break;
            }
        }
        (quot, rem)
    }

    /// Exact division in rank one; panics if not divisible.
    pub fn div_exact1(&self, other: &LaurentPoly) -> LaurentPoly {
        let (q, r) = self.div_rem1(other);
        assert!(r.is_zero(), "not exactly divisible");
        q
    }

    pub fn divides1(&self, other: &LaurentPoly) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.div_rem1(self).1.is_zero()
    }

    /// Is this a unit `c * t^k`?
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_text();
            if cs.contains(' ') {
                write!(f, "({cs})")?;
            } else {
                write!(f, "{cs}")?;
            }
            for (i, &x) in e.iter().enumerate() {
                if x == 1 {
                    write!(f, "*t{}", i + 1)?;
                } else if x != 0 {
                    write!(f, "*t{}^{}", i + 1, x)?;
                }
            }
        }
        Ok(())
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A matrix of Laurent polynomials, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentMatrix {
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<LaurentPoly>>,
}

impl LaurentMatrix {
    pub fn zero(rank: usize, rows: usize, cols: usize) -> Self {
        LaurentMatrix {
            rank,
            rows,
            cols,
            entries: vec![vec![LaurentPoly::zero(rank); cols]; rows],
        }
    }

    pub fn identity(rank: usize, n: usize) -> Self {
        let mut m = LaurentMatrix::zero(rank, n, n);
        for i in 0..n {
            m.entries[i][i] = LaurentPoly::one(rank);
        }
        m
    }

    pub fn from_columns(rank: usize, rows: usize, cols: Vec<Vec<LaurentPoly>>) -> Self {
        let ncols = cols.len();
        let mut m = LaurentMatrix::zero(rank, rows, ncols);
        for (j, col) in cols.into_iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, p) in col.into_iter().enumerate() {
                m.entries[i][j] = p;
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<LaurentPoly> {
        (0..self.rows).map(|i| self.entries[i][j].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<LaurentPoly>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn mul(&self, other: &LaurentMatrix) -> LaurentMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = LaurentMatrix::zero(self.rank, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentPoly::zero(self.rank);
                for k in 0..self.cols {
                    acc = acc.add(&self.entries[i][k].mul(&other.entries[k][j]));
                }
                out.entries[i][j] = acc;
            }
        }
        out
    }

    pub fn apply(&self, v: &[LaurentPoly]) -> Vec<LaurentPoly> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = LaurentPoly::zero(self.rank);
                for k in 0..self.cols {
                    acc = acc.add(&self.entries[i][k].mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    /// Determinant by cofactor expansion; intended for small matrices in
    /// tests and unit checks.
    pub fn determinant(&self) -> LaurentPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return LaurentPoly::one(self.rank);
        }
        if n == 1 {
            return self.entries[0][0].clone();
        }
        let mut acc = LaurentPoly::zero(self.rank);
        for j in 0..n {
            if self.entries[0][j].is_zero() {
                continue;
            }
            let mut minor = LaurentMatrix::zero(self.rank, n - 1, n - 1);
            for i in 1..n {
                let mut cc = 0;
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    minor.entries[i - 1][cc] = self.entries[i][c].clone();
                    cc += 1;
                }
            }
            let term = self.entries[0][j].mul(&minor.determinant());
            if j % 2 == 0 {
                acc = acc.add(&term);
            } else {
                acc = acc.sub(&term);
            }
        }
        acc
    }

    /// Evaluate all entries at a character, producing a scalar matrix.
    pub fn evaluate(&self, s: &LatticeCharacter) -> Vec<Vec<Cyclotomic>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| p.evaluate(s)).collect())
            .collect()
    }
}

/// A finitely generated module over the lattice group algebra, presented by
/// generators and a finite relation matrix (columns are relations).
#[derive(Debug, Clone)]
pub struct FgModule {
    pub rank: usize,
    pub gens: usize,
    pub relations: LaurentMatrix,
}

impl FgModule {
    pub fn free(rank: usize, gens: usize) -> Self {
        FgModule {
            rank,
            gens,
            relations: LaurentMatrix::zero(rank, gens, 0),
        }
    }

    pub fn from_relation_columns(rank: usize, gens: usize, cols: Vec<Vec<LaurentPoly>>) -> Self {
        FgModule {
            rank,
            gens,
            relations: LaurentMatrix::from_columns(rank, gens, cols),
        }
    }

    /// Quotient of the rank-one group algebra by a single relation.
    pub fn cyclic_rank1(f: LaurentPoly) -> Self {
        FgModule::from_relation_columns(1, 1, vec![vec![f]])
    }
}

/// Dimension table of one Tor group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct TorResult {
    pub p: usize,
    pub dim: usize,
}

/// `Tor_p(module, character)` for `p = 0..=pmax`.
///
/// Rank one goes through the Smith normal form; higher rank (up to 3) through
/// a saturated polynomial free resolution.
pub fn tor_against_character(
    module: &FgModule,
    s: &LatticeCharacter,
    pmax: usize,
) -> Result<Vec<TorResult>, LaurentError> {
    if module.rank == 1 {
        let (t0, t1) = tor_pairs_rank1(module, s);
        let mut out = vec![TorResult { p: 0, dim: t0 }];
        if pmax >= 1 {
            out.push(TorResult { p: 1, dim: t1 });
        }
        for p in 2..=pmax {
            out.push(TorResult { p, dim: 0 });
        }
        Ok(out)
    } else {
        if module.rank > 3 {
            return Err(LaurentError::RankGuard(module.rank, 3));
        }
        groebner::tor_via_resolution(module, s, pmax)
    }
}

/// Tor through the saturated-resolution path regardless of rank; the
/// second, independent route used to cross-validate the rank-one
/// normal-form path.
pub fn tor_against_character_resolution(
    module: &FgModule,
    s: &LatticeCharacter,
    pmax: usize,
) -> Result<Vec<TorResult>, LaurentError> {
    if module.rank > 3 {
        return Err(LaurentError::RankGuard(module.rank, 3));
    }
    groebner::tor_via_resolution(module, s, pmax)
}

/// Tri-state verdict of the capped torsion test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JTorsion {
    Torsion,
    NotTorsion,
    Undetermined,
}

/// Does some finite product of the given elements annihilate the module?
///
/// In rank one this is decided exactly through the invariant factors.  In
/// higher rank a power of the product is tested for membership up to `cap`.
pub fn is_j_torsion(
    module: &FgModule,
    jgens: &[LaurentPoly],
    cap: u32,
) -> Result<JTorsion, LaurentError> {
    assert!(!jgens.is_empty(), "localization set must be nonempty");
    if module.rank == 1 {
        let snf = smith_normal_form_rank1(&module.relations);
        let mut invariants = snf.invariants.clone();
        // Missing diagonal entries correspond to free summands.
        if invariants.len() < module.gens {
            return Ok(JTorsion::NotTorsion);
        }
        let mut product = LaurentPoly::one(1);
        for g in jgens {
            product = product.mul(g);
        }
        for f in invariants.iter_mut() {
            if f.is_zero() {
                return Ok(JTorsion::NotTorsion);
            }
            // Strip common factors with powers of the product until stable;
            // torsion iff the remainder is a unit.
            let mut current = f.unit_normalize1();
            loop {
                if current.is_unit() {
                    break;
                }
                let g = gcd1(&current, &product);
                if g.is_unit() {
                    return Ok(JTorsion::NotTorsion);
                }
                current = current.div_exact1(&g).unit_normalize1();
            }
        }
        Ok(JTorsion::Torsion)
    } else {
        if module.rank > 3 {
            return Err(LaurentError::RankGuard(module.rank, 3));
        }
        groebner::j_torsion_via_membership(module, jgens, cap)
    }
}

/// Rank-one gcd via the Euclidean algorithm, unit-normalized.
pub fn gcd1(a: &LaurentPoly, b: &LaurentPoly) -> LaurentPoly {
    let mut x = a.unit_normalize1();
    let mut y = b.unit_normalize1();
    while !y.is_zero() {
        let (_, r) = x.div_rem1(&y);
        x = y;
        y = if r.is_zero() {
            LaurentPoly::zero(1)
        } else {
            r.unit_normalize1()
        };
    }
    x
}
