//! Rank-one module computations built on the Smith normal form: canonical
//! decompositions, kernels of module maps, and Tor groups carrying a twisted
//! lattice symmetry.

use super::snf::{smith_normal_form_rank1, Snf};
use super::{FgModule, LaurentError, LaurentMatrix, LaurentPoly};
use crate::exactfield::Cyclotomic;
use crate::rootdata::{IntMatrix, LatticeCharacter};

/// Canonical decomposition of a rank-one cokernel as a direct sum of cyclic
/// summands and a free part, in the coordinates `y = u * x`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub gens: usize,
    pub snf: Snf,
    /// Indices of canonical coordinates carrying a non-unit torsion factor,
    /// with that factor.
    pub torsion: Vec<(usize, LaurentPoly)>,
    /// Canonical coordinates that are free summands.
    pub free: Vec<usize>,
}

pub fn decompose(module: &FgModule) -> Decomposition {
    assert_eq!(module.rank, 1);
    let snf = smith_normal_form_rank1(&module.relations);
    let mut torsion = Vec::new();
    for (i, f) in snf.invariants.iter().enumerate() {
        if !f.is_unit() {
            torsion.push((i, f.clone()));
        }
    }
    let free = (snf.invariants.len()..module.gens).collect();
    Decomposition {
        gens: module.gens,
        snf,
        torsion,
        free,
    }
}

impl Decomposition {
    /// Dimension over the coefficient field, when finite.
    pub fn dim_over_field(&self) -> Option<usize> {
        if !self.free.is_empty() {
            return None;
        }
        let mut total = 0i64;
        for (_, f) in &self.torsion {
            total += f.span1().unwrap_or(0);
        }
        Some(total as usize)
    }

    pub fn free_rank(&self) -> usize {
        self.free.len()
    }

    /// Torsion invariant factors (non-unit), normalized.
    pub fn invariant_factors(&self) -> Vec<LaurentPoly> {
        self.torsion.iter().map(|(_, f)| f.clone()).collect()
    }
}

/// Dimensions of `Tor_0` and `Tor_1` against a character, in rank one.
pub fn tor_pairs_rank1(module: &FgModule, s: &LatticeCharacter) -> (usize, usize) {
    let dec = decompose(module);
    let mut t0 = dec.free_rank();
    let mut t1 = 0;
    for (_, f) in &dec.torsion {
        if f.evaluate(s).is_zero() {
            t0 += 1;
            t1 += 1;
        }
    }
    (t0, t1)
}

/// Solve `m x = b` over the rank-one Laurent ring.
pub fn solve_linear(m: &LaurentMatrix, b: &[LaurentPoly]) -> Option<Vec<LaurentPoly>> {
    assert_eq!(m.rank, 1);
    let snf = smith_normal_form_rank1(m);
    let ub = snf.u.apply(b);
    let k = snf.invariants.len();
    let mut w = vec![LaurentPoly::zero(1); m.cols];
    for (i, ubi) in ub.iter().enumerate() {
        if i < k {
            let (q, r) = ubi.div_rem1(&snf.invariants[i]);
            if !r.is_zero() {
                return None;
            }
            w[i] = q;
        } else if !ubi.is_zero() {
            return None;
        }
    }
    Some(snf.v.apply(&w))
}

/// Free basis of the kernel of a rank-one Laurent matrix.
pub fn matrix_kernel(m: &LaurentMatrix) -> Vec<Vec<LaurentPoly>> {
    assert_eq!(m.rank, 1);
    if m.cols == 0 {
        return vec![];
    }
    let snf = smith_normal_form_rank1(m);
    let k = snf.invariants.len();
    (k..m.cols).map(|j| snf.v.column(j)).collect()
}

/// Generators (with ambient lifts) of `{x in R^g : a x  lies in the column
/// span of r}`, i.e. the preimage of a submodule under a matrix.
fn preimage_generators(a: &LaurentMatrix, r: &LaurentMatrix) -> Vec<Vec<LaurentPoly>> {
    assert_eq!(a.rows, r.rows);
    let mut stacked_cols = a.columns();
    stacked_cols.extend(r.columns());
    let b = LaurentMatrix::from_columns(1, a.rows, stacked_cols);
    let kernel = matrix_kernel(&b);
    let mut out = Vec::new();
    for v in kernel {
        let head: Vec<LaurentPoly> = v[..a.cols].to_vec();
        if head.iter().any(|p| !p.is_zero()) {
            out.push(head);
        }
    }
    out
}

/// Kernel of a module map as a presented module, together with generator
/// lifts expressed in the source's generator coordinates.
///
/// The map is given by its matrix on generators: column `j` is the image of
/// the `j`-th source generator, in the target's generator coordinates.  The
/// map must genuinely descend (images of source relations must be target
/// relations); this is the caller's responsibility.
pub fn kernel_module(
    source: &FgModule,
    target: &FgModule,
    map: &LaurentMatrix,
) -> Result<(FgModule, Vec<Vec<LaurentPoly>>), LaurentError> {
    if source.rank != 1 || target.rank != 1 {
        return Err(LaurentError::RankOneOnly(source.rank.max(target.rank)));
    }
    if map.rows != target.gens || map.cols != source.gens {
        return Err(LaurentError::Shape(format!(
            "map is {}x{}, expected {}x{}",
            map.rows, map.cols, target.gens, source.gens
        )));
    }
    // Lifts of kernel generators: preimage of the target relations, together
    // with the source relations themselves (they map to zero).
    let mut lifts = preimage_generators(map, &target.relations);
    for col in source.relations.columns() {
        lifts.push(col);
    }
    if lifts.is_empty() {
        return Ok((FgModule::free(1, 0), vec![]));
    }
    let lift_matrix = LaurentMatrix::from_columns(1, source.gens, lifts.clone());
    // Relations among the kernel generators: combinations landing in the
    // source relations.
    let relations = preimage_generators(&lift_matrix, &source.relations);
    let kernel = FgModule::from_relation_columns(1, lifts.len(), relations);
    Ok((kernel, lifts))
}

/// A twisted-linear self-map of a presented module: `x -> matrix * g(x)`
/// where `g` substitutes the lattice automorphism into coefficients.
#[derive(Debug, Clone)]
pub struct SemilinearMap {
    /// Automorphism of the lattice acting on exponents.
    pub twist: IntMatrix,
    /// Image of each generator (columns), in generator coordinates.
    pub matrix: LaurentMatrix,
}

impl SemilinearMap {
    pub fn identity(rank: usize, gens: usize) -> Self {
        SemilinearMap {
            twist: crate::rootdata::mat_identity(rank),
            matrix: LaurentMatrix::identity(rank, gens),
        }
    }

    pub fn apply(&self, x: &[LaurentPoly]) -> Vec<LaurentPoly> {
        let twisted: Vec<LaurentPoly> =
            x.iter().map(|p| p.substitute_action(&self.twist)).collect();
        self.matrix.apply(&twisted)
    }

    fn substitute_matrix(&self, m: &LaurentMatrix) -> LaurentMatrix {
        let mut out = m.clone();
        for row in out.entries.iter_mut() {
            for p in row.iter_mut() {
                *p = p.substitute_action(&self.twist);
            }
        }
        out
    }
}

/// `Tor_0` and `Tor_1` of a rank-one module against a character, carrying
/// the matrices induced by a compatible semilinear self-map.
#[derive(Debug, Clone)]
pub struct TorWithAction {
    pub dim0: usize,
    pub dim1: usize,
    pub matrix0: Vec<Vec<Cyclotomic>>,
    pub matrix1: Vec<Vec<Cyclotomic>>,
}

impl TorWithAction {
    pub fn trace0(&self) -> Cyclotomic {
        trace(&self.matrix0)
    }

    pub fn trace1(&self) -> Cyclotomic {
        trace(&self.matrix1)
    }
}

fn trace(m: &[Vec<Cyclotomic>]) -> Cyclotomic {
    let mut acc = Cyclotomic::zero();
    for (i, row) in m.iter().enumerate() {
        acc = acc.add(&row[i]);
    }
    acc
}

/// Compute `Tor_p(module, C_s)` for `p = 0, 1` with the maps induced by a
/// semilinear symmetry.  Requires the character to be fixed by the twist.
pub fn tor_with_action(
    module: &FgModule,
    action: &SemilinearMap,
    s: &LatticeCharacter,
) -> TorWithAction {
    assert_eq!(module.rank, 1);
    assert_eq!(
        &s.compose_with(&crate::rootdata::LatticeAction {
            on_costar: action.twist.clone(),
            on_star: action.twist.clone(),
        })
        .value(&[1]),
        &s.value(&[1]),
        "character must be fixed by the twist"
    );
    let dec = decompose(module);
    let c = s.value(&[1]);
    let t_minus_c = LaurentPoly::lattice(&[1]).sub(&LaurentPoly::constant(1, c.clone()));

    // The action in canonical coordinates: y -> m_can * g(y).
    let g_uinv = action.substitute_matrix(&dec.snf.u_inv);
    let m_can = dec.snf.u.mul(&action.matrix.mul(&g_uinv));

    // Tor_0: classes of canonical generators at torsion-hit and free indices.
    let mut idx0 = Vec::new();
    for (i, f) in &dec.torsion {
        if f.evaluate(s).is_zero() {
            idx0.push(*i);
        }
    }
    idx0.extend(dec.free.iter().copied());
    let matrix0: Vec<Vec<Cyclotomic>> = idx0
        .iter()
        .map(|&i| {
            idx0.iter()
                .map(|&j| m_can.entries[i][j].evaluate(s))
                .collect()
        })
        .collect();

    // Tor_1: the (t - c)-kernel inside each torsion-hit cyclic summand,
    // spanned by d_i / (t - c).
    let hit: Vec<(usize, LaurentPoly)> = dec
        .torsion
        .iter()
        .filter(|(_, f)| f.evaluate(s).is_zero())
        .cloned()
        .collect();
    // Comparison twist h = g(t - c)/(t - c); exact because s is g-fixed.
    let h = t_minus_c
        .substitute_action(&action.twist)
        .div_exact1(&t_minus_c);
    let mut matrix1 = vec![vec![Cyclotomic::zero(); hit.len()]; hit.len()];
    let hit_set: std::collections::BTreeSet<usize> = hit.iter().map(|(i, _)| *i).collect();
    for (jj, (j, dj)) in hit.iter().enumerate() {
        let bj = dj.div_exact1(&t_minus_c);
        // Image of the basis vector b_j e_j under h * m_can * g.
        let gb = bj.substitute_action(&action.twist);
        // The image must stay inside the (t - c)-kernel: non-hit torsion
        // components reduce to zero and free components vanish.
        for (i, di) in &dec.torsion {
            if !hit_set.contains(i) {
                let entry = m_can.entries[*i][*j].mul(&gb).mul(&h);
                debug_assert!(canonical_mod1(&entry, di).is_zero());
            }
        }
        for i in &dec.free {
            let entry = m_can.entries[*i][*j].mul(&gb).mul(&h);
            debug_assert!(entry.is_zero(), "kernel image leaks into a free summand");
        }
        for (ii, (i, di)) in hit.iter().enumerate() {
            let entry = m_can.entries[*i][*j].mul(&gb).mul(&h);
            // Canonically reduce modulo d_i and express as a constant
            // multiple of d_i/(t - c), the basis of the (t - c)-kernel.
            let rem = canonical_mod1(&entry, di);
            if rem.is_zero() {
                continue;
            }
            let bi = canonical_mod1(&di.div_exact1(&t_minus_c), di);
            let ratio = rem.div_exact1(&bi);
            let cst = ratio.coeff1(0);
            assert!(
                ratio == LaurentPoly::constant(1, cst.clone()),
                "kernel image not proportional to the basis vector"
            );
            matrix1[ii][jj] = cst;
        }
    }

    TorWithAction {
        dim0: idx0.len(),
        dim1: hit.len(),
        matrix0,
        matrix1,
    }
}

/// Is the vector in the column span of the matrix?
pub fn in_column_span(m: &LaurentMatrix, v: &[LaurentPoly]) -> bool {
    solve_linear(m, v).is_some()
}

/// Canonical representative of `x` in the rank-one quotient by `d`: the
/// unique polynomial of degree `< span(d)` with nonnegative exponents.  `d`
/// must be unit-normalized, so its constant term is nonzero and `t` is
/// invertible modulo `d`.
pub fn canonical_mod1(x: &LaurentPoly, d: &LaurentPoly) -> LaurentPoly {
    let k = d.span1().expect("nonzero modulus");
    if k == 0 {
        return LaurentPoly::zero(1);
    }
    // Plain polynomial remainder by degree, for nonnegative-exponent input.
    fn poly_rem(x: &LaurentPoly, d: &LaurentPoly, k: i64) -> LaurentPoly {
        let lead = d.coeff1(k);
        let mut rem = x.clone();
        while let Some(top) = rem.max_exp1() {
            if top < k {
                break;
            }
            let c = rem.coeff1(top).div(&lead).expect("unit lead");
            let q = LaurentPoly::monomial(1, vec![top - k], c);
            rem = rem.sub(&q.mul(d));
        }
        rem
    }
    // t^{-1} = -(c_1 + c_2 t + ... + c_k t^{k-1}) / c_0 modulo d.
    let c0 = d.coeff1(0);
    let c0_inv = c0
        .inv()
        .expect("normalized modulus has nonzero constant term");
    let mut t_inv = LaurentPoly::zero(1);
    for e in 1..=k {
        t_inv.insert(vec![e - 1], d.coeff1(e).mul(&c0_inv).neg());
    }
    let mut acc = LaurentPoly::zero(1);
    let mut inv_pows: Vec<LaurentPoly> = vec![LaurentPoly::one(1)];
    for (e, c) in &x.terms {
        let term = if e[0] >= 0 {
            LaurentPoly::monomial(1, vec![e[0]], c.clone())
        } else {
            let m = (-e[0]) as usize;
            while inv_pows.len() <= m {
                let next = poly_rem(&inv_pows.last().unwrap().mul(&t_inv), d, k);
                inv_pows.push(next);
            }
            inv_pows[m].scale(c)
        };
        acc = acc.add(&term);
    }
    poly_rem(&acc, d, k)
}
