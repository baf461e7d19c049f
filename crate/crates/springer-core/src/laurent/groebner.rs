//! Groebner machinery for submodules of free modules over the lattice group
//! algebra in rank up to three.
//!
//! Laurent generators are unit-shifted into a polynomial ring; the Laurent
//! span is recovered by saturating with respect to the product of the
//! variables, realized through an auxiliary inverse variable that is then
//! eliminated.  Syzygies come from the standard lifting of S-pair reductions,
//! which also drives free resolutions for Tor.

use super::{FgModule, JTorsion, LaurentError, LaurentMatrix, LaurentPoly, TorResult};
use crate::exactfield::Cyclotomic;
use crate::linalg;
use crate::rootdata::LatticeCharacter;
use std::cmp::Ordering;
use std::collections::BTreeMap;

type PExp = Vec<u32>;

/// Module element: terms indexed by (position, monomial).
#[derive(Debug, Clone, PartialEq)]
struct MElt {
    terms: BTreeMap<(usize, PExp), Cyclotomic>,
}

impl MElt {
    fn zero() -> Self {
        MElt {
            terms: BTreeMap::new(),
        }
    }

    fn insert(&mut self, key: (usize, PExp), c: Cyclotomic) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
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

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_scaled_shift(&mut self, other: &MElt, mono: &PExp, c: &Cyclotomic) {
        for ((pos, e), v) in &other.terms {
            let shifted: PExp = e.iter().zip(mono).map(|(a, b)| a + b).collect();
            self.insert((*pos, shifted), v.mul(c));
        }
    }
}

/// Monomial order: graded lex, with an optional leading elimination block on
/// variable 0.
#[derive(Debug, Clone, Copy)]
struct Order {
    eliminate_first: bool,
}

impl Order {
    fn cmp_mono(&self, a: &PExp, b: &PExp) -> Ordering {
        if self.eliminate_first {
            match a[0].cmp(&b[0]) {
                Ordering::Equal => {}
                other => return other,
            }
            let da: u32 = a[1..].iter().sum();
            let db: u32 = b[1..].iter().sum();
            da.cmp(&db).then_with(|| a[1..].cmp(&b[1..]))
        } else {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            da.cmp(&db).then_with(|| a.cmp(b))
        }
    }

    /// Term-over-position: monomial first, then lower position wins.
    fn cmp_term(&self, a: &(usize, PExp), b: &(usize, PExp)) -> Ordering {
        self.cmp_mono(&a.1, &b.1).then_with(|| b.0.cmp(&a.0))
    }
}

fn leading<'a>(f: &'a MElt, ord: &Order) -> (&'a (usize, PExp), &'a Cyclotomic) {
    f.terms
        .iter()
        .max_by(|(ka, _), (kb, _)| ord.cmp_term(ka, kb))
        .expect("nonzero element")
}

fn divides(a: &PExp, b: &PExp) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Full division: `f = sum q_i basis_i + r` with no term of `r` divisible by
/// any leading term.  Quotients are scalar polynomials.
fn divide(f: &MElt, basis: &[MElt], ord: &Order) -> (Vec<BTreeMap<PExp, Cyclotomic>>, MElt) {
    let leads: Vec<((usize, PExp), Cyclotomic)> = basis
        .iter()
        .map(|g| {
            let (k, c) = leading(g, ord);
            (k.clone(), c.clone())
        })
        .collect();
    let mut quotients = vec![BTreeMap::new(); basis.len()];
    let mut rem = MElt::zero();
    let mut p = f.clone();
    while !p.is_zero() {
        let (lt_key, lt_coef) = {
            let (k, c) = leading(&p, ord);
            (k.clone(), c.clone())
        };
        let reducer = leads
            .iter()
            .position(|((pos, e), _)| *pos == lt_key.0 && divides(e, &lt_key.1));
        match reducer {
            Some(i) => {
                let ((_, ref le), ref lc) = leads[i];
                let mono: PExp = lt_key.1.iter().zip(le).map(|(a, b)| a - b).collect();
                let coef = lt_coef.div(lc).expect("leading coefficient invertible");
                let entry = quotients[i]
                    .entry(mono.clone())
                    .or_insert_with(Cyclotomic::zero);
                *entry = entry.add(&coef);
                let mut scaled = MElt::zero();
                scaled.add_scaled_shift(&basis[i], &mono, &coef.neg());
                for (k, v) in scaled.terms {
                    p.insert(k, v);
                }
            }
            None => {
                rem.insert(lt_key.clone(), lt_coef.clone());
                p.insert(lt_key, lt_coef.neg());
            }
        }
    }
    (quotients, rem)
}

fn normal_form(f: &MElt, basis: &[MElt], ord: &Order) -> MElt {
    divide(f, basis, ord).1
}

/// Buchberger completion with the normal pair strategy (degree, then lex on
/// the pair lcm).  Returns a reduced basis with monic leading coefficients.
fn buchberger(gens: Vec<MElt>, ord: &Order) -> Vec<MElt> {
    let mut basis: Vec<MElt> = Vec::new();
    for g in gens {
        if !g.is_zero() {
            basis.push(g);
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            pairs.push((i, j));
        }
    }
    let pair_key = |basis: &[MElt], i: usize, j: usize| -> Option<(u32, PExp)> {
        let (ki, _) = leading(&basis[i], ord);
        let (kj, _) = leading(&basis[j], ord);
        if ki.0 != kj.0 {
            return None;
        }
        let lcm: PExp = ki.1.iter().zip(&kj.1).map(|(a, b)| *a.max(b)).collect();
        Some((lcm.iter().sum(), lcm))
    };
    while !pairs.is_empty() {
        // Normal selection: smallest (degree, lcm) first.
        pairs.sort_by(|&(i1, j1), &(i2, j2)| {
            let k1 = pair_key(&basis, i1, j1);
            let k2 = pair_key(&basis, i2, j2);
            match (k1, k2) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => a.cmp(&b),
            }
        });
        let (i, j) = pairs.remove(0);
        let Some(_) = pair_key(&basis, i, j) else {
            continue;
        };
        let sp = s_poly(&basis[i], &basis[j], ord);
        let r = normal_form(&sp, &basis, ord);
        if !r.is_zero() {
            let newi = basis.len();
            basis.push(r);
            for k in 0..newi {
                pairs.push((k, newi));
            }
        }
    }
    interreduce(basis, ord)
}

fn s_poly(f: &MElt, g: &MElt, ord: &Order) -> MElt {
    let (kf, cf) = leading(f, ord);
    let (kg, cg) = leading(g, ord);
    assert_eq!(kf.0, kg.0);
    let lcm: PExp = kf.1.iter().zip(&kg.1).map(|(a, b)| *a.max(b)).collect();
    let mf: PExp = lcm.iter().zip(&kf.1).map(|(a, b)| a - b).collect();
    let mg: PExp = lcm.iter().zip(&kg.1).map(|(a, b)| a - b).collect();
    let mut out = MElt::zero();
    out.add_scaled_shift(f, &mf, &cf.inv().expect("nonzero"));
    out.add_scaled_shift(g, &mg, &cg.inv().expect("nonzero").neg());
    out
}

fn interreduce(mut basis: Vec<MElt>, ord: &Order) -> Vec<MElt> {
    // Drop elements whose lead is divisible by another lead.
    let mut keep: Vec<MElt> = Vec::new();
    'outer: for i in 0..basis.len() {
        let (ki, _) = leading(&basis[i], ord);
        for j in 0..basis.len() {
            if i == j {
                continue;
            }
            if basis[j].is_zero() {
                continue;
            }
            let (kj, _) = leading(&basis[j], ord);
            if kj.0 == ki.0 && divides(&kj.1, &ki.1) && (ki.1 != kj.1 || j < i) {
                continue 'outer;
            }
        }
        keep.push(basis[i].clone());
    }
    basis = keep;
    // Tail-reduce and normalize leading coefficients.
    let mut out = Vec::new();
    for i in 0..basis.len() {
        let others: Vec<MElt> = basis
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let mut r = if others.is_empty() {
            basis[i].clone()
        } else {
            normal_form(&basis[i], &others, ord)
        };
        if r.is_zero() {
            continue;
        }
        let lc = leading(&r, ord).1.clone();
        let inv = lc.inv().expect("nonzero");
        r = {
            let mut s = MElt::zero();
            s.add_scaled_shift(&r, &vec![0; leading(&r, ord).0 .1.len()], &inv);
            s
        };
        out.push(r);
    }
    out.sort_by(|a, b| ord.cmp_term(leading(a, ord).0, leading(b, ord).0));
    out
}

/// Syzygies of a Groebner basis via the lifting of S-pair reductions.
fn syzygies(gb: &[MElt], ord: &Order) -> Vec<MElt> {
    let nv = if gb.is_empty() {
        0
    } else {
        leading(&gb[0], ord).0 .1.len()
    };
    let mut out = Vec::new();
    for i in 0..gb.len() {
        for j in i + 1..gb.len() {
            let (ki, ci) = {
                let (k, c) = leading(&gb[i], ord);
                (k.clone(), c.clone())
            };
            let (kj, cj) = {
                let (k, c) = leading(&gb[j], ord);
                (k.clone(), c.clone())
            };
            if ki.0 != kj.0 {
                continue;
            }
            let lcm: PExp = ki.1.iter().zip(&kj.1).map(|(a, b)| *a.max(b)).collect();
            let mi: PExp = lcm.iter().zip(&ki.1).map(|(a, b)| a - b).collect();
            let mj: PExp = lcm.iter().zip(&kj.1).map(|(a, b)| a - b).collect();
            let sp = s_poly(&gb[i], &gb[j], ord);
            let (quot, rem) = divide(&sp, gb, ord);
            assert!(
                rem.is_zero(),
                "S-pair of a Groebner basis must reduce to zero"
            );
            let mut syz = MElt::zero();
            syz.insert((i, mi), ci.inv().expect("nonzero"));
            syz.insert((j, mj), cj.inv().expect("nonzero").neg());
            for (k, q) in quot.iter().enumerate() {
                for (mono, c) in q {
                    syz.insert((k, mono.clone()), c.neg());
                }
            }
            if !syz.is_zero() {
                out.push(syz);
            }
        }
    }
    let _ = nv;
    out
}

// Conversions between Laurent columns and internal module elements.

fn column_to_melt_shifted(col: &[LaurentPoly], extra_var: bool) -> MElt {
    // Shift by a unit so all exponents are nonnegative.
    let rank = col.iter().map(|p| p.rank).max().unwrap_or(0);
    let mut min = vec![0i64; rank];
    for p in col {
        if let Some(m) = p.min_exponents() {
            for (mm, &x) in min.iter_mut().zip(&m) {
                *mm = (*mm).min(x);
            }
        }
    }
    let offset: Vec<i64> = min.iter().map(|&x| -x).collect();
    let mut out = MElt::zero();
    for (pos, p) in col.iter().enumerate() {
        for (e, c) in &p.terms {
            let mut exp: PExp = Vec::with_capacity(rank + usize::from(extra_var));
            if extra_var {
                exp.push(0);
            }
            for (x, o) in e.iter().zip(&offset) {
                exp.push(u32::try_from(x + o).expect("shifted exponent"));
            }
            out.insert((pos, exp), c.clone());
        }
    }
    out
}

fn melt_to_columns(m: &MElt, gens: usize, rank: usize, skip_first_var: bool) -> Vec<LaurentPoly> {
    let mut col = vec![LaurentPoly::zero(rank); gens];
    for ((pos, e), c) in &m.terms {
        let slice: Vec<i64> = if skip_first_var {
            e[1..].iter().map(|&x| i64::from(x)).collect()
        } else {
            e.iter().map(|&x| i64::from(x)).collect()
        };
        col[*pos].insert(slice, c.clone());
    }
    col
}

/// Saturated polynomial generators of the Laurent column span: the module
/// `(shifted columns : (t_1...t_n)^infinity)` inside the polynomial ring.
pub fn saturate_columns(m: &LaurentMatrix) -> Vec<Vec<LaurentPoly>> {
    let rank = m.rank;
    let gens = m.rows;
    let mut elems: Vec<MElt> = Vec::new();
    for col in m.columns() {
        if col.iter().all(|p| p.is_zero()) {
            continue;
        }
        elems.push(column_to_melt_shifted(&col, true));
    }
    if elems.is_empty() {
        return vec![];
    }
    // u * t_1...t_n - 1 on each generator position.
    for pos in 0..gens {
        let mut rel = MElt::zero();
        let mut exp = vec![1u32; rank + 1];
        exp[0] = 1;
        rel.insert((pos, exp), Cyclotomic::one());
        rel.insert((pos, vec![0; rank + 1]), Cyclotomic::from_integer(-1));
        elems.push(rel);
    }
    let ord = Order {
        eliminate_first: true,
    };
    let gb = buchberger(elems, &ord);
    let mut out = Vec::new();
    for g in gb {
        let u_free = g.terms.keys().all(|(_, e)| e[0] == 0);
        if u_free {
            out.push(melt_to_columns(&g, gens, rank, true));
        }
    }
    out
}

/// A reduced Groebner basis of the (saturated) column span, with syzygies.
#[derive(Debug, Clone)]
pub struct GroebnerBasis {
    pub rank: usize,
    pub gens: usize,
    /// Basis elements as polynomial columns (nonnegative exponents).
    pub elements: Vec<Vec<LaurentPoly>>,
    /// Syzygy columns over the basis elements.
    pub syzygies: Vec<Vec<LaurentPoly>>,
    internal: Vec<MElt>,
}

/// Groebner basis of the column span of a Laurent matrix, rank at most 3.
pub fn groebner_module_basis(m: &LaurentMatrix) -> Result<GroebnerBasis, LaurentError> {
    if m.rank > 3 {
        return Err(LaurentError::RankGuard(m.rank, 3));
    }
    let ord = Order {
        eliminate_first: false,
    };
    let sat = saturate_columns(m);
    let elems: Vec<MElt> = sat
        .iter()
        .map(|col| column_to_melt_shifted(col, false))
        .collect();
    let gb = buchberger(elems, &ord);
    let syz = syzygies(&gb, &ord);
    let elements = gb
        .iter()
        .map(|g| melt_to_columns(g, m.rows, m.rank, false))
        .collect();
    let syzygies_cols = syz
        .iter()
        .map(|s| melt_to_columns(s, gb.len(), m.rank, false))
        .collect();
    Ok(GroebnerBasis {
        rank: m.rank,
        gens: m.rows,
        elements,
        syzygies: syzygies_cols,
        internal: gb,
    })
}

/// Normal form of a vector against the basis; zero means membership in the
/// Laurent column span.
pub fn reduce_against(gb: &GroebnerBasis, v: &[LaurentPoly]) -> Vec<LaurentPoly> {
    let ord = Order {
        eliminate_first: false,
    };
    if gb.internal.is_empty() {
        return v.to_vec();
    }
    let f = column_to_melt_shifted(v, false);
    let r = normal_form(&f, &gb.internal, &ord);
    melt_to_columns(&r, gb.gens, gb.rank, false)
}

/// Dimension of the Laurent cokernel over the coefficient field, when
/// finite: the number of standard monomials of the saturated basis.
pub fn quotient_dimension(gb: &GroebnerBasis) -> Option<usize> {
    let ord = Order {
        eliminate_first: false,
    };
    let nv = gb.rank;
    let leads: Vec<(usize, PExp)> = gb
        .internal
        .iter()
        .map(|g| leading(g, &ord).0.clone())
        .collect();
    // Finiteness: every position needs a pure power of each variable among
    // the leading terms.
    let mut bounds = vec![vec![None; nv]; gb.gens];
    for (pos, e) in &leads {
        let support: Vec<usize> = (0..nv).filter(|&i| e[i] > 0).collect();
        if support.len() == 1 {
            let i = support[0];
            let b = bounds[*pos][i].get_or_insert(e[i]);
            *b = (*b).min(e[i]);
        } else if support.is_empty() {
            // Unit leading term: that position is entirely dead.
            for i in 0..nv {
                bounds[*pos][i] = Some(0);
            }
        }
    }
    for pos in 0..gb.gens {
        for i in 0..nv {
            bounds[pos][i]?;
        }
    }
    let mut count = 0usize;
    for pos in 0..gb.gens {
        let box_bounds: Vec<u32> = (0..nv).map(|i| bounds[pos][i].unwrap()).collect();
        let mut stack = vec![vec![]];
        for &b in &box_bounds {
            let mut next = Vec::new();
            for prefix in &stack {
                for x in 0..b.max(0) {
                    let mut p: Vec<u32> = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
                if b == 0 {
                    // no monomials along this axis
                }
            }
            stack = next;
        }
        for mono in stack {
            let standard = leads
                .iter()
                .filter(|(p, _)| *p == pos)
                .all(|(_, le)| !divides(le, &mono));
            if standard {
                count += 1;
            }
        }
    }
    Some(count)
}

type RPoly = BTreeMap<PExp, Cyclotomic>;

fn rp_add_scaled(dst: &mut RPoly, src: &RPoly, mono: &PExp, c: &Cyclotomic) {
    for (e, v) in src {
        let shifted: PExp = e.iter().zip(mono).map(|(a, b)| a + b).collect();
        let entry = dst.entry(shifted).or_insert_with(Cyclotomic::zero);
        *entry = entry.add(&v.mul(c));
        if entry.is_zero() {
            // Leave exact zeros in place; pruned on conversion.
        }
    }
}

fn rp_mul(a: &RPoly, b: &RPoly) -> RPoly {
    let mut out = RPoly::new();
    for (ea, ca) in a {
        rp_add_scaled(&mut out, b, ea, ca);
    }
    out
}

fn rp_to_laurent(a: &RPoly, rank: usize) -> LaurentPoly {
    let mut p = LaurentPoly::zero(rank);
    for (e, c) in a {
        p.insert(e.iter().map(|&x| i64::from(x)).collect(), c.clone());
    }
    p
}

/// Buchberger with expression tracking: returns the basis together with the
/// matrix writing each basis element in terms of the input generators.
fn buchberger_tracked(gens: Vec<MElt>, ord: &Order) -> (Vec<MElt>, Vec<Vec<RPoly>>) {
    let n_inputs = gens.len();
    let mut basis: Vec<MElt> = Vec::new();
    let mut exprs: Vec<Vec<RPoly>> = Vec::new();
    for (idx, g) in gens.into_iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let mut e = vec![RPoly::new(); n_inputs];
        e[idx].insert(vec![0; leading(&g, ord).0 .1.len()], Cyclotomic::one());
        basis.push(g);
        exprs.push(e);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            pairs.push((i, j));
        }
    }
    while let Some((i, j)) = pairs.pop() {
        let (ki, ci) = {
            let (k, c) = leading(&basis[i], ord);
            (k.clone(), c.clone())
        };
        let (kj, cj) = {
            let (k, c) = leading(&basis[j], ord);
            (k.clone(), c.clone())
        };
        if ki.0 != kj.0 {
            continue;
        }
        let lcm: PExp = ki.1.iter().zip(&kj.1).map(|(a, b)| *a.max(b)).collect();
        let mi: PExp = lcm.iter().zip(&ki.1).map(|(a, b)| a - b).collect();
        let mj: PExp = lcm.iter().zip(&kj.1).map(|(a, b)| a - b).collect();
        let sp = s_poly(&basis[i], &basis[j], ord);
        let (quot, rem) = divide(&sp, &basis, ord);
        if rem.is_zero() {
            continue;
        }
        // Expression of the remainder over the inputs.
        let mut expr = vec![RPoly::new(); n_inputs];
        let ci_inv = ci.inv().expect("nonzero");
        let cj_inv = cj.inv().expect("nonzero");
        for (k, e) in exprs[i].iter().enumerate() {
            rp_add_scaled(&mut expr[k], e, &mi, &ci_inv);
        }
        for (k, e) in exprs[j].iter().enumerate() {
            rp_add_scaled(&mut expr[k], e, &mj, &cj_inv.neg());
        }
        for (bidx, q) in quot.iter().enumerate() {
            for (mono, c) in q {
                let contrib = exprs[bidx].clone();
                for (k, e) in contrib.iter().enumerate() {
                    rp_add_scaled(&mut expr[k], e, mono, &c.neg());
                }
            }
        }
        let newi = basis.len();
        basis.push(rem);
        exprs.push(expr);
        for k in 0..newi {
            pairs.push((k, newi));
        }
    }
    (basis, exprs)
}

/// Syzygies of an arbitrary set of Laurent columns, as Laurent columns over
/// the given generators.  Column entries may carry negative exponents; the
/// result spans the full Laurent syzygy module.
pub fn column_syzygies(
    rank: usize,
    rows: usize,
    cols: &[Vec<LaurentPoly>],
) -> Vec<Vec<LaurentPoly>> {
    let _ = rows;
    let ord = Order {
        eliminate_first: false,
    };
    // Unit-shift each column into the polynomial ring, remembering shifts.
    let mut shifted: Vec<MElt> = Vec::new();
    let mut shifts: Vec<Vec<i64>> = Vec::new();
    for col in cols {
        let mut min = vec![0i64; rank];
        for p in col {
            if let Some(m) = p.min_exponents() {
                for (mm, &x) in min.iter_mut().zip(&m) {
                    *mm = (*mm).min(x);
                }
            }
        }
        shifts.push(min.iter().map(|&x| -x).collect());
        shifted.push(column_to_melt_shifted(col, false));
    }
    let n = cols.len();
    let (gb, exprs) = buchberger_tracked(shifted.clone(), &ord);
    if gb.is_empty() {
        // All columns zero: syzygies are everything; return the standard
        // basis.
        let mut out = Vec::new();
        for j in 0..n {
            let mut v = vec![LaurentPoly::zero(rank); n];
            v[j] = LaurentPoly::one(rank);
            out.push(v);
        }
        return out;
    }
    // b_matrix[i][j]: f_j = sum_i b[i][j] g_i.
    let mut b_matrix = vec![vec![RPoly::new(); n]; gb.len()];
    for (j, f) in shifted.iter().enumerate() {
        if f.is_zero() {
            continue;
        }
        let (quot, rem) = divide(f, &gb, &ord);
        assert!(
            rem.is_zero(),
            "generator must reduce to zero against its basis"
        );
        for (i, q) in quot.into_iter().enumerate() {
            b_matrix[i][j] = q;
        }
    }
    let mut raw: Vec<Vec<RPoly>> = Vec::new();
    // Lifted Groebner syzygies: A s for s in Syz(gb), where A[j][i] writes
    // g_i over f_j.
    for s in syzygies(&gb, &ord) {
        let mut components = vec![RPoly::new(); gb.len()];
        for ((pos, e), c) in &s.terms {
            let entry = components[*pos]
                .entry(e.clone())
                .or_insert_with(Cyclotomic::zero);
            *entry = entry.add(c);
        }
        let mut out = vec![RPoly::new(); n];
        for (i, si) in components.iter().enumerate() {
            if si.is_empty() {
                continue;
            }
            for (j, a) in exprs[i].iter().enumerate() {
                let prod = rp_mul(a, si);
                rp_add_scaled(&mut out[j], &prod, &vec![0u32; rank], &Cyclotomic::one());
            }
        }
        raw.push(out);
    }
    // Columns of I - A B.
    for j in 0..n {
        let mut col = vec![RPoly::new(); n];
        col[j].insert(vec![0; rank], Cyclotomic::one());
        for (i, bi) in b_matrix.iter().enumerate() {
            let bij = &bi[j];
            if bij.is_empty() {
                continue;
            }
            for (k, a) in exprs[i].iter().enumerate() {
                let prod = rp_mul(a, bij);
                rp_add_scaled(
                    &mut col[k],
                    &prod,
                    &vec![0u32; rank],
                    &Cyclotomic::from_integer(-1),
                );
            }
        }
        raw.push(col);
    }
    // Unshift and convert, dropping exact zeros.
    let mut out = Vec::new();
    for v in raw {
        let col: Vec<LaurentPoly> = v
            .iter()
            .zip(&shifts)
            .map(|(rp, sh)| {
                let p = rp_to_laurent(rp, rank);
                p.mul(&LaurentPoly::lattice(sh))
            })
            .collect();
        if col.iter().any(|p| !p.is_zero()) {
            out.push(col);
        }
    }
    out
}

/// Kernel of a module map in lattice rank up to 3, presented by generators
/// (with ambient lifts) and relations, through tracked syzygies.
pub fn kernel_module_general(
    source: &FgModule,
    target: &FgModule,
    map: &LaurentMatrix,
) -> Result<(FgModule, Vec<Vec<LaurentPoly>>), LaurentError> {
    if source.rank > 3 {
        return Err(LaurentError::RankGuard(source.rank, 3));
    }
    let rank = source.rank;
    let sat_target = saturate_columns(&target.relations);
    let mut combined: Vec<Vec<LaurentPoly>> = map.columns();
    let map_cols = combined.len();
    combined.extend(sat_target);
    let syz = column_syzygies(rank, target.gens, &combined);
    let mut lifts: Vec<Vec<LaurentPoly>> = Vec::new();
    for s in syz {
        let head: Vec<LaurentPoly> = s[..map_cols].to_vec();
        if head.iter().any(|p| !p.is_zero()) {
            lifts.push(head);
        }
    }
    for col in source.relations.columns() {
        if col.iter().any(|p| !p.is_zero()) {
            lifts.push(col);
        }
    }
    if lifts.is_empty() {
        return Ok((FgModule::free(rank, 0), vec![]));
    }
    // Relations among the kernel generators: combinations landing in the
    // source relations.
    let sat_source = saturate_columns(&source.relations);
    let mut combined2 = lifts.clone();
    let lift_count = combined2.len();
    combined2.extend(sat_source);
    let syz2 = column_syzygies(rank, source.gens, &combined2);
    let mut relations = Vec::new();
    for s in syz2 {
        let head: Vec<LaurentPoly> = s[..lift_count].to_vec();
        if head.iter().any(|p| !p.is_zero()) {
            relations.push(head);
        }
    }
    Ok((
        FgModule::from_relation_columns(rank, lift_count, relations),
        lifts,
    ))
}

/// Tor of a Laurent module against a character through a saturated free
/// resolution over the polynomial ring, localized by evaluation.
pub(crate) fn tor_via_resolution(
    module: &FgModule,
    s: &LatticeCharacter,
    pmax: usize,
) -> Result<Vec<TorResult>, LaurentError> {
    let ord = Order {
        eliminate_first: false,
    };
    let sat = saturate_columns(&module.relations);
    let mut out = Vec::new();
    if sat.is_empty() {
        out.push(TorResult {
            p: 0,
            dim: module.gens,
        });
        for p in 1..=pmax {
            out.push(TorResult { p, dim: 0 });
        }
        return Ok(out);
    }

    // Chain of matrices F_1 -> F_0, F_2 -> F_1, ... evaluated at s.
    let eval_poly = |col: &LaurentPoly| -> Cyclotomic { col.evaluate(s) };
    let mut matrices: Vec<linalg::Matrix> = Vec::new();
    let mut current: Vec<MElt> = sat
        .iter()
        .map(|col| column_to_melt_shifted(col, false))
        .collect();
    let mut current_rows = module.gens;
    for _ in 0..=pmax {
        let gb = buchberger(current.clone(), &ord);
        if gb.is_empty() {
            break;
        }
        // Matrix of the GB columns, evaluated.
        let cols: Vec<Vec<LaurentPoly>> = gb
            .iter()
            .map(|g| melt_to_columns(g, current_rows, module.rank, false))
            .collect();
        let mut mat = vec![vec![Cyclotomic::zero(); cols.len()]; current_rows];
        for (j, col) in cols.iter().enumerate() {
            for (i, p) in col.iter().enumerate() {
                mat[i][j] = eval_poly(p);
            }
        }
        matrices.push(mat);
        let syz = syzygies(&gb, &ord);
        current_rows = gb.len();
        current = syz;
        if current.is_empty() {
            break;
        }
    }

    // Tor_p = ker(M_p at s) / im(M_{p+1} at s), with M_0 the zero map.
    for p in 0..=pmax {
        let dim = if p == 0 {
            let rank1 = matrices
                .first()
                .map(|m| linalg::rank(m.clone()))
                .unwrap_or(0);
            module.gens - rank1
        } else if p <= matrices.len() {
            let mp = &matrices[p - 1];
            let cols_p = mp.first().map(|r| r.len()).unwrap_or(0);
            let ker = cols_p - linalg::rank(mp.clone());
            let im_next = if p < matrices.len() {
                linalg::rank(matrices[p].clone())
            } else {
                0
            };
            ker - im_next
        } else {
            0
        };
        out.push(TorResult { p, dim });
    }
    Ok(out)
}

/// Exact torsion test against a localization set: saturate the relation span
/// by the product of the generators and test whether each ambient generator
/// becomes a member.  The power cap is consulted first as a fast path.
pub(crate) fn j_torsion_via_membership(
    module: &FgModule,
    jgens: &[LaurentPoly],
    cap: u32,
) -> Result<JTorsion, LaurentError> {
    let gb = groebner_module_basis(&module.relations)?;
    let mut product = LaurentPoly::one(module.rank);
    for g in jgens {
        product = product.mul(g);
    }
    // Fast path: bounded powers of the product on each generator.
    let mut all_in = true;
    for pos in 0..module.gens {
        let mut found = false;
        let mut power = LaurentPoly::one(module.rank);
        for _ in 0..=cap {
            let mut vec = vec![LaurentPoly::zero(module.rank); module.gens];
            vec[pos] = power.clone();
            if reduce_against(&gb, &vec).iter().all(|p| p.is_zero()) {
                found = true;
                break;
            }
            power = power.mul(&product);
        }
        if !found {
            all_in = false;
            break;
        }
    }
    if all_in {
        return Ok(JTorsion::Torsion);
    }
    // Exact path: saturate by the product using a fresh inverse variable and
    // re-test membership of the generators.
    let mut cols = module.relations.columns();
    let n = module.rank;
    // Work in rank n+1 where the last variable is the inverse of the product.
    let lift = |p: &LaurentPoly| -> LaurentPoly {
        let mut q = LaurentPoly::zero(n + 1);
        for (e, c) in &p.terms {
            let mut e2 = e.clone();
            e2.push(0);
            q.insert(e2, c.clone());
        }
        q
    };
    let mut new_cols: Vec<Vec<LaurentPoly>> = cols
        .drain(..)
        .map(|col| col.iter().map(lift).collect())
        .collect();
    for pos in 0..module.gens {
        // (w * product - 1) e_pos, with w the new variable.
        let mut rel = vec![LaurentPoly::zero(n + 1); module.gens];
        let mut w_e = vec![0i64; n + 1];
        w_e[n] = 1;
        let w = LaurentPoly::lattice(&w_e);
        rel[pos] = w.mul(&lift(&product)).sub(&LaurentPoly::one(n + 1));
        new_cols.push(rel);
    }
    let m2 = LaurentMatrix::from_columns(n + 1, module.gens, new_cols);
    // Rank guard is n + 1 here; allow it explicitly since saturation is a
    // bounded auxiliary computation.
    let sat = saturate_columns(&m2);
    let elems: Vec<MElt> = sat
        .iter()
        .map(|col| column_to_melt_shifted(col, false))
        .collect();
    let ord = Order {
        eliminate_first: false,
    };
    let gb2 = buchberger(elems, &ord);
    for pos in 0..module.gens {
        let mut vec = vec![LaurentPoly::zero(n + 1); module.gens];
        vec[pos] = LaurentPoly::one(n + 1);
        let f = column_to_melt_shifted(&vec, false);
        let r = normal_form(&f, &gb2, &ord);
        if !r.is_zero() {
            return Ok(JTorsion::NotTorsion);
        }
    }
    Ok(JTorsion::Torsion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::module::decompose;
    use crate::laurent::tor_against_character;
    use rand::Rng;
    use rand::SeedableRng;

    fn t(rank: usize, i: usize, e: i64) -> LaurentPoly {
        let mut exps = vec![0i64; rank];
        exps[i] = e;
        LaurentPoly::lattice(&exps)
    }

    #[test]
    fn single_generator_basis() {
        // Rank 2, generator (1 - t1) in free rank 1.
        let p = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let m = LaurentMatrix::from_columns(2, 1, vec![vec![p.clone()]]);
        let gb = groebner_module_basis(&m).unwrap();
        assert_eq!(gb.elements.len(), 1);
        // Membership: (t1 - t2) - combination test from the ideal case needs
        // two generators; here just check p itself reduces to zero.
        let r = reduce_against(&gb, &[p]);
        assert!(r.iter().all(|q| q.is_zero()));
    }

    #[test]
    fn ideal_membership_two_generators() {
        // Ideal (1 - t1, 1 - t2) contains t1 - t2.
        let g1 = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let g2 = LaurentPoly::one(2).sub(&t(2, 1, 1));
        let m = LaurentMatrix::from_columns(2, 1, vec![vec![g1], vec![g2]]);
        let gb = groebner_module_basis(&m).unwrap();
        let candidate = t(2, 0, 1).sub(&t(2, 1, 1));
        let r = reduce_against(&gb, &[candidate]);
        assert!(r.iter().all(|q| q.is_zero()), "t1 - t2 should reduce to 0");
        // 1 alone is not in the ideal.
        let r2 = reduce_against(&gb, &[LaurentPoly::one(2)]);
        assert!(!r2.iter().all(|q| q.is_zero()));
    }

    #[test]
    fn saturation_strips_monomial_factors() {
        // t1 * (1 - t2) generates the same Laurent span as (1 - t2).
        let gen = t(2, 0, 1).mul(&LaurentPoly::one(2).sub(&t(2, 1, 1)));
        let m = LaurentMatrix::from_columns(2, 1, vec![vec![gen]]);
        let gb = groebner_module_basis(&m).unwrap();
        let target = LaurentPoly::one(2).sub(&t(2, 1, 1));
        let r = reduce_against(&gb, &[target]);
        assert!(r.iter().all(|q| q.is_zero()));
    }

    fn random_rank1_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> LaurentMatrix {
        let mut m = LaurentMatrix::zero(1, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let mut p = LaurentPoly::zero(1);
                for e in -1..=1i64 {
                    let c: i64 = rng.gen_range(-2..=2);
                    if c != 0 && rng.gen_bool(0.7) {
                        p.insert(vec![e], Cyclotomic::from_integer(c));
                    }
                }
                m.entries[i][j] = p;
            }
        }
        m
    }

    #[test]
    fn rank1_quotient_dimensions_match_snf() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 50 {
            let m = random_rank1_matrix(&mut rng, 3, 3);
            let module = FgModule {
                rank: 1,
                gens: 3,
                relations: m.clone(),
            };
            let dec = decompose(&module);
            let Some(expected) = dec.dim_over_field() else {
                continue; // free part present: skip infinite quotients
            };
            let gb = groebner_module_basis(&m).unwrap();
            let got = quotient_dimension(&gb).expect("finite");
            assert_eq!(got, expected, "matrix {:?}", m);
            tested += 1;
        }
    }

    #[test]
    fn rank1_tor_cross_validation() {
        // Criterion: Tor via SNF equals Tor via resolutions on random
        // rank-one modules.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let chars = [
            LatticeCharacter::trivial(1),
            LatticeCharacter {
                order: 2,
                exponents: vec![1],
            },
            LatticeCharacter {
                order: 4,
                exponents: vec![1],
            },
        ];
        for trial in 0..50 {
            let rows = 1 + trial % 3;
            let cols = 1 + (trial / 3) % 3;
            let m = random_rank1_matrix(&mut rng, rows, cols);
            let module = FgModule {
                rank: 1,
                gens: rows,
                relations: m,
            };
            for s in &chars {
                let (t0, t1) = crate::laurent::tor_pairs_rank1(&module, s);
                let res = tor_via_resolution(&module, s, 1).unwrap();
                assert_eq!(
                    (res[0].dim, res[1].dim),
                    (t0, t1),
                    "module {:?} char {:?}",
                    module.relations,
                    s
                );
            }
        }
    }

    #[test]
    fn euler_characteristic_property() {
        // For rank-one torsion modules the alternating Tor sum vanishes; for
        // free modules it equals the rank.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let s = LatticeCharacter::trivial(1);
        for _ in 0..30 {
            let m = random_rank1_matrix(&mut rng, 2, 2);
            let module = FgModule {
                rank: 1,
                gens: 2,
                relations: m,
            };
            let dec = decompose(&module);
            let tors = tor_against_character(&module, &s, 1).unwrap();
            let chi = tors[0].dim as i64 - tors[1].dim as i64;
            assert_eq!(chi, dec.free_rank() as i64);
        }
    }

    #[test]
    fn rank2_tor_of_koszul_point() {
        // M = C[t1^+-, t2^+-]/(1 - t1, 1 - t2): the regular-sequence
        // quotient has Tor dimensions (1, 2, 1) against the trivial
        // character.
        let g1 = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let g2 = LaurentPoly::one(2).sub(&t(2, 1, 1));
        let module = FgModule::from_relation_columns(2, 1, vec![vec![g1], vec![g2]]);
        let s = LatticeCharacter::trivial(2);
        let res = tor_via_resolution(&module, &s, 3).unwrap();
        assert_eq!(res[0].dim, 1);
        assert_eq!(res[1].dim, 2);
        assert_eq!(res[2].dim, 1);
        assert_eq!(res[3].dim, 0);
        // Twisted character avoiding the torsion: all Tor vanish.
        let tw = LatticeCharacter {
            order: 2,
            exponents: vec![1, 1],
        };
        let res2 = tor_via_resolution(&module, &tw, 2).unwrap();
        assert_eq!((res2[0].dim, res2[1].dim, res2[2].dim), (0, 0, 0));
    }

    #[test]
    fn column_syzygies_are_syzygies() {
        // Columns of the Koszul pair (1 - t1, 1 - t2) in free rank 1: the
        // syzygy module is generated by ((1 - t2), -(1 - t1)).
        let g1 = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let g2 = LaurentPoly::one(2).sub(&t(2, 1, 1));
        let cols = vec![vec![g1.clone()], vec![g2.clone()]];
        let syz = column_syzygies(2, 1, &cols);
        assert!(!syz.is_empty());
        for s in &syz {
            let total = s[0].mul(&g1).add(&s[1].mul(&g2));
            assert!(total.is_zero(), "not a syzygy: {:?}", s);
        }
        // The expected generator is in the Laurent span: test by reducing
        // against a basis of the syzygy columns.
        let expected = vec![g2.clone(), g1.neg()];
        let m = LaurentMatrix::from_columns(2, 2, syz);
        let gb = groebner_module_basis(&m).unwrap();
        let r = reduce_against(&gb, &expected);
        assert!(r.iter().all(|p| p.is_zero()));
    }

    #[test]
    fn kernel_module_general_rank1_cross_check() {
        // ker( C[t]/(1-t)^2 --*1--> C[t]/(1-t) ) is one-dimensional; compare
        // the general-rank path against the Smith-normal-form path.
        let one_minus_t = LaurentPoly::one(1).sub(&t(1, 0, 1));
        let source = FgModule::cyclic_rank1(one_minus_t.pow(2));
        let target = FgModule::cyclic_rank1(one_minus_t.clone());
        let map = LaurentMatrix::identity(1, 1);
        let (k_general, _) = kernel_module_general(&source, &target, &map).unwrap();
        let dec = decompose(&FgModule {
            rank: 1,
            gens: k_general.gens,
            relations: k_general.relations.clone(),
        });
        assert_eq!(dec.free_rank(), 0);
        assert_eq!(dec.dim_over_field(), Some(1));
    }

    #[test]
    fn kernel_module_general_rank2() {
        // ker( free -> C[t1,t2]/(1-t1) ) on one generator is the span of
        // (1 - t1): torsion-free of rank 1, with Tor_0 dimension 1 against
        // the trivial character... the kernel is (1-t1)-multiples, a free
        // module of rank 1.
        let g1 = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let source = FgModule::free(2, 1);
        let target = FgModule::from_relation_columns(2, 1, vec![vec![g1.clone()]]);
        let map = LaurentMatrix::identity(2, 1);
        let (kernel, lifts) = kernel_module_general(&source, &target, &map).unwrap();
        // Every lift is a multiple of (1 - t1).
        let m = LaurentMatrix::from_columns(2, 1, vec![vec![g1]]);
        let gb = groebner_module_basis(&m).unwrap();
        for l in &lifts {
            let r = reduce_against(&gb, l);
            assert!(r.iter().all(|p| p.is_zero()));
        }
        // The kernel has no torsion: Tor_1 vanishes for every character.
        let s = LatticeCharacter::trivial(2);
        let tor = tor_via_resolution(&kernel, &s, 1).unwrap();
        assert_eq!(tor[0].dim, 1);
        assert_eq!(tor[1].dim, 0);
    }

    #[test]
    fn j_torsion_rank2() {
        let g1 = LaurentPoly::one(2).sub(&t(2, 0, 1));
        let module = FgModule::from_relation_columns(2, 1, vec![vec![g1.clone()]]);
        let jg = vec![g1.clone()];
        assert_eq!(
            j_torsion_via_membership(&module, &jg, 4).unwrap(),
            JTorsion::Torsion
        );
        // The free module is not torsion.
        let free = FgModule::free(2, 1);
        assert_eq!(
            j_torsion_via_membership(&free, &jg, 4).unwrap(),
            JTorsion::NotTorsion
        );
        // (1 - t2)-cyclic is not (1 - t1)-torsion.
        let g2 = LaurentPoly::one(2).sub(&t(2, 1, 1));
        let m2 = FgModule::from_relation_columns(2, 1, vec![vec![g2]]);
        assert_eq!(
            j_torsion_via_membership(&m2, &jg, 4).unwrap(),
            JTorsion::NotTorsion
        );
    }
}
