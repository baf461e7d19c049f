//! Root data, Weyl and affine Weyl combinatorics, valuation profiles,
//! endoscopic subsystems, and the sign character attached to the transfer
//! factor.
//!
//! Cocharacter and character lattices are stored in mutually dual bases, so
//! the pairing is the dot product.  Explicit-matrix input with a different
//! unimodular pairing is normalized at construction time.

use crate::exactfield::Cyclotomic;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RootDatumError {
    #[error("inconsistent pairing: {0}")]
    InconsistentPairing(String),
    #[error("root system is not reduced: {0:?} and its double both occur")]
    NonReduced(Vec<i64>),
    #[error("Weyl group generation exceeded bound; input is not a finite root system")]
    WeylNotFinite,
    #[error("unknown Cartan type {0:?}")]
    UnknownType(String),
    #[error("operation requires semisimple rank one, found {0} positive roots")]
    NotRankOne(usize),
    #[error("element does not normalize the transfer factor")]
    NotInStabilizer,
    #[error("{0}")]
    Invalid(String),
}

pub type IntMatrix = Vec<Vec<i64>>;

pub fn mat_identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &IntMatrix, v: &[i64]) -> Vec<i64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn mat_transpose(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Inverse of an integer matrix, provided it is invertible over the integers.
pub fn mat_inverse_unimodular(a: &IntMatrix) -> Option<IntMatrix> {
    use crate::exactfield::Rational;
    use num::traits::{One, Zero};
    let n = a.len();
    let mut aug: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        Rational::from_integer(a[i][j].into())
                    } else if j - n == i {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for c in 0..n {
        let pr = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, pr);
        let inv = aug[c][c].clone();
        for j in 0..2 * n {
            aug[c][j] = &aug[c][j] / &inv;
        }
        for i in 0..n {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..2 * n {
                    let v = &aug[i][j] - &f * &aug[c][j];
                    aug[i][j] = v;
                }
            }
        }
    }
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = &aug[i][n + j];
            if !v.is_integer() {
                return None;
            }
            out[i][j] = i64::try_from(v.to_integer()).ok()?;
        }
    }
    Some(out)
}

/// A finite-part symmetry: compatible actions on the cocharacter and
/// character lattices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeAction {
    pub on_costar: IntMatrix,
    pub on_star: IntMatrix,
}

impl LatticeAction {
    pub fn identity(n: usize) -> Self {
        LatticeAction {
            on_costar: mat_identity(n),
            on_star: mat_identity(n),
        }
    }

    pub fn compose(&self, other: &LatticeAction) -> LatticeAction {
        LatticeAction {
            on_costar: mat_mul(&self.on_costar, &other.on_costar),
            on_star: mat_mul(&self.on_star, &other.on_star),
        }
    }

    pub fn is_identity(&self) -> bool {
        let n = self.on_costar.len();
        self.on_costar == mat_identity(n) && self.on_star == mat_identity(n)
    }
}

fn dot(u: &[i64], v: &[i64]) -> i64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// Specification for building a root datum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DatumSpec {
    /// Named Cartan type: "A1", "A1xA1", "A2", "GL2" with a lattice form.
    Named { cartan: String, adjoint: bool },
    /// Explicit roots and coroots in coordinates, with an integral unimodular
    /// pairing matrix `P` (`pairing(u, chi) = u^T P chi`).
    Explicit {
        pairing: IntMatrix,
        roots: Vec<Vec<i64>>,
        coroots: Vec<Vec<i64>>,
    },
}

/// A reduced root datum with generated Weyl group.
#[derive(Debug, Clone)]
pub struct RootDatum {
    pub name: String,
    rank: usize,
    positive_roots: Vec<Vec<i64>>,
    positive_coroots: Vec<Vec<i64>>,
    adjoint: bool,
    weyl: Vec<LatticeAction>,
}

impl RootDatum {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn positive_roots(&self) -> &[Vec<i64>] {
        &self.positive_roots
    }

    pub fn positive_coroots(&self) -> &[Vec<i64>] {
        &self.positive_coroots
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    pub fn is_adjoint(&self) -> bool {
        self.adjoint
    }

    /// Pairing of a cocharacter with a character (dual bases).
    pub fn pair(&self, cochar: &[i64], chara: &[i64]) -> i64 {
        dot(cochar, chara)
    }

    /// All Weyl group elements; index 0 is the identity.
    pub fn weyl_elements(&self) -> &[LatticeAction] {
        &self.weyl
    }

    pub fn weyl_order(&self) -> usize {
        self.weyl.len()
    }

    /// The reflection in the `i`-th positive root.
    pub fn reflection(&self, i: usize) -> LatticeAction {
        let alpha = &self.positive_roots[i];
        let coalpha = &self.positive_coroots[i];
        let n = self.rank;
        // On X_*: u -> u - <u, alpha> alpha^vee; on X^*: c -> c - <alpha^vee, c> alpha.
        let mut on_costar = mat_identity(n);
        let mut on_star = mat_identity(n);
        for col in 0..n {
            let mut e = vec![0i64; n];
            e[col] = 1;
            let ru: Vec<i64> = (0..n).map(|r| e[r] - dot(&e, alpha) * coalpha[r]).collect();
            let rc: Vec<i64> = (0..n).map(|r| e[r] - dot(coalpha, &e) * alpha[r]).collect();
            for row in 0..n {
                on_costar[row][col] = ru[row];
                on_star[row][col] = rc[row];
            }
        }
        LatticeAction { on_costar, on_star }
    }

    /// Locate a character vector among the roots: returns `(index, sign)`.
    pub fn root_index(&self, beta: &[i64]) -> Option<(usize, i64)> {
        for (i, alpha) in self.positive_roots.iter().enumerate() {
            if alpha == beta {
                return Some((i, 1));
            }
            if alpha.iter().zip(beta).all(|(a, b)| *a == -b) {
                return Some((i, -1));
            }
        }
        None
    }

    /// Image of the `i`-th positive root under a finite symmetry, as
    /// `(root index, sign)`.
    pub fn act_on_root(&self, f: &LatticeAction, i: usize) -> Option<(usize, i64)> {
        let image = mat_vec(&f.on_star, &self.positive_roots[i]);
        self.root_index(&image)
    }
}

/// Build and validate a root datum from a specification.
pub fn build_root_datum(spec: &DatumSpec) -> Result<RootDatum, RootDatumError> {
    let (name, roots, coroots, adjoint) = match spec {
        DatumSpec::Named { cartan, adjoint } => {
            let (roots, coroots): (Vec<Vec<i64>>, Vec<Vec<i64>>) = match (cartan.as_str(), adjoint)
            {
                ("A1", false) => (vec![vec![2]], vec![vec![1]]),
                ("A1", true) => (vec![vec![1]], vec![vec![2]]),
                ("A1xA1", false) => (vec![vec![2, 0], vec![0, 2]], vec![vec![1, 0], vec![0, 1]]),
                ("A1xA1", true) => (vec![vec![1, 0], vec![0, 1]], vec![vec![2, 0], vec![0, 2]]),
                ("A2", false) => (
                    vec![vec![2, -1], vec![-1, 2], vec![1, 1]],
                    vec![vec![1, 0], vec![0, 1], vec![1, 1]],
                ),
                ("A2", true) => (
                    vec![vec![1, 0], vec![0, 1], vec![1, 1]],
                    vec![vec![2, -1], vec![-1, 2], vec![1, 1]],
                ),
                ("GL2", _) => (vec![vec![1, -1]], vec![vec![1, -1]]),
                _ => return Err(RootDatumError::UnknownType(cartan.clone())),
            };
            let label = match cartan.as_str() {
                "GL2" => "GL2".to_string(),
                _ => format!("{cartan}-{}", if *adjoint { "adjoint" } else { "sc" }),
            };
            (label, roots, coroots, *adjoint)
        }
        DatumSpec::Explicit {
            pairing,
            roots,
            coroots,
        } => {
            let n = pairing.len();
            if pairing.iter().any(|r| r.len() != n) {
                return Err(RootDatumError::InconsistentPairing(
                    "pairing matrix not square".into(),
                ));
            }
            if mat_inverse_unimodular(pairing).is_none() {
                return Err(RootDatumError::InconsistentPairing(
                    "pairing matrix is not unimodular, lattices are not dual".into(),
                ));
            }
            // Normalize character coordinates so the pairing becomes the dot
            // product: chi' = P chi.
            let roots_norm: Vec<Vec<i64>> = roots.iter().map(|r| mat_vec(pairing, r)).collect();
            ("explicit".to_string(), roots_norm, coroots.clone(), false)
        }
    };

    let rank = match coroots.first() {
        Some(c) => c.len(),
        None => match spec {
            // A torus: rank read off the pairing matrix.
            DatumSpec::Explicit { pairing, .. } => pairing.len(),
            DatumSpec::Named { .. } => {
                return Err(RootDatumError::Invalid("no roots given".into()))
            }
        },
    };
    if roots.len() != coroots.len() {
        return Err(RootDatumError::Invalid(
            "root and coroot counts differ".into(),
        ));
    }
    for (alpha, coalpha) in roots.iter().zip(&coroots) {
        if alpha.len() != rank || coalpha.len() != rank {
            return Err(RootDatumError::Invalid("rank mismatch in vectors".into()));
        }
        let p = dot(coalpha, alpha);
        if p != 2 {
            return Err(RootDatumError::InconsistentPairing(format!(
                "<coroot, root> = {p} for {coalpha:?}, {alpha:?}"
            )));
        }
    }
    // Reduced: no root is a positive multiple of another.
    for (i, a) in roots.iter().enumerate() {
        for b in roots.iter().skip(i + 1) {
            let doubled: Vec<i64> = a.iter().map(|x| 2 * x).collect();
            let halved_matches = b.iter().map(|x| 2 * x).eq(a.iter().copied());
            if *b == doubled || halved_matches {
                return Err(RootDatumError::NonReduced(a.clone()));
            }
        }
    }

    let mut datum = RootDatum {
        name,
        rank,
        positive_roots: roots,
        positive_coroots: coroots,
        adjoint,
        weyl: vec![],
    };
    datum.weyl = generate_weyl(&datum)?;
    // Reflections must permute the root set.
    for f in &datum.weyl {
        for i in 0..datum.num_positive_roots() {
            if datum.act_on_root(f, i).is_none() {
                return Err(RootDatumError::Invalid(
                    "Weyl element does not permute the roots".into(),
                ));
            }
        }
    }
    Ok(datum)
}

fn generate_weyl(datum: &RootDatum) -> Result<Vec<LatticeAction>, RootDatumError> {
    const LIMIT: usize = 1_000;
    let gens: Vec<LatticeAction> = (0..datum.num_positive_roots())
        .map(|i| datum.reflection(i))
        .collect();
    let mut elements = vec![LatticeAction::identity(datum.rank)];
    let mut frontier = elements.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in &frontier {
            for g in &gens {
                let h = g.compose(f);
                if !elements.contains(&h) && !next.contains(&h) {
                    next.push(h);
                }
            }
        }
        elements.extend(next.iter().cloned());
        if elements.len() > LIMIT {
            return Err(RootDatumError::WeylNotFinite);
        }
        frontier = next;
    }
    Ok(elements)
}

/// The classification of semisimple-rank-one data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankOneClass {
    /// `SL(2) x torus`
    Sl2Torus,
    /// `PGL(2) x torus`
    Pgl2Torus,
    /// `GL(2) x torus`
    Gl2Torus,
}

/// Classify a datum with exactly one positive root by the parity of the
/// pairings against the root and coroot.
pub fn classify_semisimple_rank_one(d: &RootDatum) -> Result<RankOneClass, RootDatumError> {
    if d.num_positive_roots() != 1 {
        return Err(RootDatumError::NotRankOne(d.num_positive_roots()));
    }
    let alpha = &d.positive_roots()[0];
    let coalpha = &d.positive_coroots()[0];
    // <., alpha> is even on the cocharacter lattice iff all coordinates of
    // alpha are even (dual bases), and dually for the coroot.
    if alpha.iter().all(|c| c % 2 == 0) {
        Ok(RankOneClass::Sl2Torus)
    } else if coalpha.iter().all(|c| c % 2 == 0) {
        Ok(RankOneClass::Pgl2Torus)
    } else {
        Ok(RankOneClass::Gl2Torus)
    }
}

/// Valuations of the roots on a fixed regular integral element, indexed like
/// the positive roots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationProfile {
    pub values: Vec<u32>,
}

impl ValuationProfile {
    pub fn equal(d: &RootDatum, v: u32) -> Self {
        ValuationProfile {
            values: vec![v; d.num_positive_roots()],
        }
    }

    pub fn new(values: Vec<u32>) -> Self {
        ValuationProfile { values }
    }

    pub fn get(&self, root_index: usize) -> u32 {
        self.values[root_index]
    }

    pub fn is_equal_valuation(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// A finite-order character of the cocharacter lattice, the dual-side datum
/// of an endoscopic group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeCharacter {
    /// Order bound N: values are N-th roots of unity.
    pub order: u32,
    /// Exponent of `zeta_N` on each basis cocharacter.
    pub exponents: Vec<i64>,
}

impl LatticeCharacter {
    pub fn trivial(rank: usize) -> Self {
        LatticeCharacter {
            order: 1,
            exponents: vec![0; rank],
        }
    }

    pub fn value(&self, cochar: &[i64]) -> Cyclotomic {
        Cyclotomic::root_of_unity(self.order, dot(&self.exponents, cochar))
    }

    pub fn is_trivial_on(&self, cochar: &[i64]) -> bool {
        dot(&self.exponents, cochar).rem_euclid(self.order.into()) == 0
    }

    /// Pullback along a finite lattice symmetry.
    pub fn compose_with(&self, f: &LatticeAction) -> LatticeCharacter {
        // (s o f)(u) = s(f u): exponents' = f^T exponents.
        let t = mat_transpose(&f.on_costar);
        LatticeCharacter {
            order: self.order,
            exponents: mat_vec(&t, &self.exponents),
        }
    }

    /// Same character: exponents agree modulo the order.
    pub fn same_character(&self, other: &LatticeCharacter) -> bool {
        self.order == other.order
            && self
                .exponents
                .iter()
                .zip(&other.exponents)
                .all(|(a, b)| (a - b).rem_euclid(self.order.into()) == 0)
    }
}

/// Endoscopic data: an adjoint-group datum together with a finite-order
/// dual-torus element.
#[derive(Debug, Clone)]
pub struct EndoscopicData {
    pub datum: RootDatum,
    pub s: LatticeCharacter,
}

/// The subsystem attached to endoscopic data, its induced valuation profile,
/// and the degree of the transfer factor.
#[derive(Debug, Clone)]
pub struct Subsystem {
    /// Indices (into the positive roots of G) of the positive roots of H.
    pub h_roots: Vec<usize>,
    /// Degree of the transfer factor.
    pub r: u32,
    /// Profile for H: valuations restricted to the subsystem roots.
    pub h_profile: ValuationProfile,
}

/// Compute the coroots killed by `s`, the transfer-factor degree, and the
/// induced profile.
pub fn endoscopic_subsystem(e: &EndoscopicData, v: &ValuationProfile) -> Subsystem {
    let mut h_roots = Vec::new();
    let mut r = 0;
    for i in 0..e.datum.num_positive_roots() {
        if e.s.is_trivial_on(&e.datum.positive_coroots()[i]) {
            h_roots.push(i);
        } else {
            r += v.get(i);
        }
    }
    let h_profile = ValuationProfile::new(h_roots.iter().map(|&i| v.get(i)).collect());
    Subsystem {
        h_roots,
        r,
        h_profile,
    }
}

/// An element of the extended affine Weyl group, possibly composed with a
/// diagram automorphism: a lattice translation and a finite symmetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineWeyl {
    pub translation: Vec<i64>,
    pub finite: LatticeAction,
}

impl AffineWeyl {
    pub fn identity(n: usize) -> Self {
        AffineWeyl {
            translation: vec![0; n],
            finite: LatticeAction::identity(n),
        }
    }

    pub fn from_translation(t: Vec<i64>) -> Self {
        let n = t.len();
        AffineWeyl {
            translation: t,
            finite: LatticeAction::identity(n),
        }
    }

    pub fn from_weyl(d: &RootDatum, index: usize) -> Self {
        AffineWeyl {
            translation: vec![0; d.rank()],
            finite: d.weyl_elements()[index].clone(),
        }
    }

    pub fn from_reflection(d: &RootDatum, root_index: usize) -> Self {
        AffineWeyl {
            translation: vec![0; d.rank()],
            finite: d.reflection(root_index),
        }
    }

    /// Attach a diagram automorphism (or any lattice symmetry) as the finite
    /// part.
    pub fn from_automorphism(aut: LatticeAction) -> Self {
        let n = aut.on_costar.len();
        AffineWeyl {
            translation: vec![0; n],
            finite: aut,
        }
    }

    /// Group law: `(t1, f1) (t2, f2) = (t1 + f1 t2, f1 f2)`.
    pub fn compose(&self, other: &AffineWeyl) -> AffineWeyl {
        let moved = mat_vec(&self.finite.on_costar, &other.translation);
        AffineWeyl {
            translation: self
                .translation
                .iter()
                .zip(moved)
                .map(|(a, b)| a + b)
                .collect(),
            finite: self.finite.compose(&other.finite),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.translation.iter().all(|&x| x == 0) && self.finite.is_identity()
    }
}

/// Valuation of `tau(alpha)(gamma)` under the bookkeeping convention that a
/// translation part shifts the valuation by the pairing with the moved root.
/// Returns `None` when the finite part does not permute the roots.
pub fn transformed_valuation(
    d: &RootDatum,
    v: &ValuationProfile,
    tau: &AffineWeyl,
    root_index: usize,
) -> Option<i64> {
    let (idx, _sign) = d.act_on_root(&tau.finite, root_index)?;
    let image = mat_vec(&tau.finite.on_star, &d.positive_roots()[root_index]);
    Some(i64::from(v.get(idx)) + dot(&tau.translation, &image))
}

/// Enumerate, within a translation box, the elements preserving all root
/// valuations (and the subsystem roots, when given).
pub fn stabilizer_group_gamma(
    d: &RootDatum,
    v: &ValuationProfile,
    h_roots: Option<&[usize]>,
    translation_bound: i64,
    extra_automorphisms: &[LatticeAction],
) -> Vec<AffineWeyl> {
    let n = d.rank();
    let mut finite_parts: Vec<LatticeAction> = d.weyl_elements().to_vec();
    for aut in extra_automorphisms {
        for w in d.weyl_elements() {
            let f = w.compose(aut);
            if !finite_parts.contains(&f) {
                finite_parts.push(f);
            }
        }
    }
    let mut translations = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for t in &translations {
            for x in -translation_bound..=translation_bound {
                let mut t2: Vec<i64> = t.clone();
                t2.push(x);
                next.push(t2);
            }
        }
        translations = next;
    }
    let mut out = Vec::new();
    for f in &finite_parts {
        for t in &translations {
            let tau = AffineWeyl {
                translation: t.clone(),
                finite: f.clone(),
            };
            let preserves_valuations = (0..d.num_positive_roots())
                .all(|i| transformed_valuation(d, v, &tau, i) == Some(i64::from(v.get(i))));
            if !preserves_valuations {
                continue;
            }
            if let Some(h) = h_roots {
                let h_set: std::collections::BTreeSet<usize> = h.iter().copied().collect();
                let preserves_h = h.iter().all(|&i| {
                    d.act_on_root(&tau.finite, i)
                        .map(|(j, _)| h_set.contains(&j))
                        .unwrap_or(false)
                });
                if !preserves_h {
                    continue;
                }
            }
            out.push(tau);
        }
    }
    out
}

/// Sign through which an element acts on the transfer-factor monomial
/// `prod d_alpha^{v_alpha}` over the roots outside the subsystem.
pub fn eta_character(
    tau: &AffineWeyl,
    d: &RootDatum,
    h_roots: &[usize],
    v: &ValuationProfile,
) -> Result<i64, RootDatumError> {
    let h_set: std::collections::BTreeSet<usize> = h_roots.iter().copied().collect();
    let mut source: BTreeMap<usize, u32> = BTreeMap::new();
    for i in 0..d.num_positive_roots() {
        if !h_set.contains(&i) && v.get(i) > 0 {
            source.insert(i, v.get(i));
        }
    }
    let mut sign = 1i64;
    let mut image: BTreeMap<usize, u32> = BTreeMap::new();
    for (&i, &m) in &source {
        let (j, s) = d
            .act_on_root(&tau.finite, i)
            .ok_or(RootDatumError::NotInStabilizer)?;
        if s < 0 && m % 2 == 1 {
            sign = -sign;
        }
        *image.entry(j).or_insert(0) += m;
    }
    if image != source {
        return Err(RootDatumError::NotInStabilizer);
    }
    Ok(sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn named(cartan: &str, adjoint: bool) -> RootDatum {
        build_root_datum(&DatumSpec::Named {
            cartan: cartan.into(),
            adjoint,
        })
        .unwrap()
    }

    #[test]
    fn sl2_datum() {
        let d = named("A1", false);
        assert_eq!(d.rank(), 1);
        assert_eq!(d.positive_roots(), &[vec![2]]);
        assert_eq!(d.positive_coroots(), &[vec![1]]);
        assert_eq!(d.weyl_order(), 2);
    }

    #[test]
    fn pgl2_datum() {
        let d = named("A1", true);
        assert_eq!(d.positive_coroots(), &[vec![2]]);
        assert_eq!(d.weyl_order(), 2);
    }

    #[test]
    fn gl2_explicit_matches_named() {
        let named_gl2 = named("GL2", false);
        let explicit = build_root_datum(&DatumSpec::Explicit {
            pairing: mat_identity(2),
            roots: vec![vec![1, -1]],
            coroots: vec![vec![1, -1]],
        })
        .unwrap();
        assert_eq!(named_gl2.positive_roots(), explicit.positive_roots());
        assert_eq!(
            classify_semisimple_rank_one(&explicit).unwrap(),
            RankOneClass::Gl2Torus
        );
    }

    #[test]
    fn a2_weyl_order() {
        assert_eq!(named("A2", false).weyl_order(), 6);
        assert_eq!(named("A2", true).weyl_order(), 6);
        assert_eq!(named("A1xA1", true).weyl_order(), 4);
    }

    #[test]
    fn invalid_pairing_rejected() {
        let err = build_root_datum(&DatumSpec::Explicit {
            pairing: mat_identity(1),
            roots: vec![vec![3]],
            coroots: vec![vec![1]],
        })
        .unwrap_err();
        assert!(matches!(err, RootDatumError::InconsistentPairing(_)));
    }

    #[test]
    fn classification_of_models() {
        assert_eq!(
            classify_semisimple_rank_one(&named("A1", false)).unwrap(),
            RankOneClass::Sl2Torus
        );
        assert_eq!(
            classify_semisimple_rank_one(&named("A1", true)).unwrap(),
            RankOneClass::Pgl2Torus
        );
        assert_eq!(
            classify_semisimple_rank_one(&named("GL2", false)).unwrap(),
            RankOneClass::Gl2Torus
        );
        assert!(classify_semisimple_rank_one(&named("A2", false)).is_err());
    }

    fn random_unimodular(rng: &mut impl Rng, n: usize) -> IntMatrix {
        // Product of elementary shears and coordinate swaps.
        let mut m = mat_identity(n);
        for _ in 0..6 {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            if n > 1 {
                while j == i {
                    j = rng.gen_range(0..n);
                }
                let c: i64 = rng.gen_range(-2..=2);
                let mut shear = mat_identity(n);
                shear[i][j] = c;
                m = mat_mul(&shear, &m);
                if rng.gen_bool(0.3) && i != j {
                    let mut swap = mat_identity(n);
                    swap[i][i] = 0;
                    swap[j][j] = 0;
                    swap[i][j] = 1;
                    swap[j][i] = 1;
                    m = mat_mul(&swap, &m);
                }
            }
        }
        m
    }

    /// Base change of a datum along a unimodular transform of the
    /// cocharacter lattice.
    fn transform(d: &RootDatum, u: &IntMatrix) -> RootDatum {
        let uinv = mat_inverse_unimodular(u).unwrap();
        let uinv_t = mat_transpose(&uinv);
        let roots: Vec<Vec<i64>> = d
            .positive_roots()
            .iter()
            .map(|a| mat_vec(&uinv_t, a))
            .collect();
        let coroots: Vec<Vec<i64>> = d.positive_coroots().iter().map(|a| mat_vec(u, a)).collect();
        build_root_datum(&DatumSpec::Explicit {
            pairing: mat_identity(d.rank()),
            roots,
            coroots,
        })
        .unwrap()
    }

    #[test]
    fn classification_invariant_under_base_change() {
        // 200 randomized data of rank <= 3 built from the three models by
        // unimodular base change; the parity classification must recover the
        // model used in the construction.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let models: Vec<(RootDatum, RankOneClass)> = vec![
            (named("A1", false), RankOneClass::Sl2Torus),
            (named("A1", true), RankOneClass::Pgl2Torus),
            (named("GL2", false), RankOneClass::Gl2Torus),
            // Rank-3 variants with a central torus factor.
            (
                build_root_datum(&DatumSpec::Explicit {
                    pairing: mat_identity(3),
                    roots: vec![vec![2, 0, 0]],
                    coroots: vec![vec![1, 0, 0]],
                })
                .unwrap(),
                RankOneClass::Sl2Torus,
            ),
            (
                build_root_datum(&DatumSpec::Explicit {
                    pairing: mat_identity(3),
                    roots: vec![vec![1, 0, 0]],
                    coroots: vec![vec![2, 0, 0]],
                })
                .unwrap(),
                RankOneClass::Pgl2Torus,
            ),
            (
                build_root_datum(&DatumSpec::Explicit {
                    pairing: mat_identity(3),
                    roots: vec![vec![1, -1, 0]],
                    coroots: vec![vec![1, -1, 0]],
                })
                .unwrap(),
                RankOneClass::Gl2Torus,
            ),
        ];
        for trial in 0..200 {
            let (model, expected) = &models[trial % models.len()];
            let u = random_unimodular(&mut rng, model.rank());
            let moved = transform(model, &u);
            assert_eq!(classify_semisimple_rank_one(&moved).unwrap(), *expected);
        }
    }

    #[test]
    fn endoscopic_subsystem_cases() {
        // s trivial: H = G, r = 0.
        let d = named("A1", true);
        let v = ValuationProfile::equal(&d, 3);
        let e = EndoscopicData {
            datum: d.clone(),
            s: LatticeCharacter::trivial(1),
        };
        let sub = endoscopic_subsystem(&e, &v);
        assert_eq!(sub.h_roots, vec![0]);
        assert_eq!(sub.r, 0);

        // s(omega) = zeta_4, so s(coroot) = -1: H = torus, r = v.
        let e2 = EndoscopicData {
            datum: d.clone(),
            s: LatticeCharacter {
                order: 4,
                exponents: vec![1],
            },
        };
        let v1 = ValuationProfile::equal(&d, 1);
        let sub2 = endoscopic_subsystem(&e2, &v1);
        assert!(sub2.h_roots.is_empty());
        assert_eq!(sub2.r, 1);
        assert_eq!(
            e2.s.value(&d.positive_coroots()[0]),
            Cyclotomic::from_integer(-1)
        );

        // A1 x A1 adjoint, s killing only the first factor's coroot.
        let dd = named("A1xA1", true);
        let v2 = ValuationProfile::new(vec![2, 3]);
        let e3 = EndoscopicData {
            datum: dd.clone(),
            s: LatticeCharacter {
                order: 4,
                exponents: vec![0, 1],
            },
        };
        let sub3 = endoscopic_subsystem(&e3, &v2);
        assert_eq!(sub3.h_roots, vec![0]);
        assert_eq!(sub3.r, 3);
        assert_eq!(sub3.h_profile.values, vec![2]);
    }

    #[test]
    fn transfer_degree_vanishes_iff_subsystem_carries_the_valuations() {
        let d = named("A1xA1", true);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let v = ValuationProfile::new(vec![rng.gen_range(0..3), rng.gen_range(0..3)]);
            for exps in [[0i64, 0], [1, 0], [0, 1], [1, 1]] {
                let e = EndoscopicData {
                    datum: d.clone(),
                    s: LatticeCharacter {
                        order: 4,
                        exponents: exps.to_vec(),
                    },
                };
                let sub = endoscopic_subsystem(&e, &v);
                let needed: Vec<usize> = (0..2).filter(|&i| v.get(i) > 0).collect();
                let covered = needed.iter().all(|i| sub.h_roots.contains(i));
                assert_eq!(sub.r == 0, covered);
            }
        }
    }

    #[test]
    fn stabilizer_contains_reflection_for_equal_valuation() {
        let d = named("A1", false);
        let v = ValuationProfile::equal(&d, 2);
        let stab = stabilizer_group_gamma(&d, &v, None, 0, &[]);
        assert!(stab.iter().any(|t| t.is_identity()));
        let w = AffineWeyl::from_reflection(&d, 0);
        assert!(stab.contains(&w));
        // Nonzero translations along the coroot shift valuations and drop out.
        let stab1 = stabilizer_group_gamma(&d, &v, None, 1, &[]);
        assert_eq!(stab1.len(), stab.len());
    }

    #[test]
    fn eta_character_values() {
        let d = named("A1", true);
        let id = AffineWeyl::identity(1);
        let w = AffineWeyl::from_reflection(&d, 0);
        for (v, expected) in [(1u32, -1i64), (2, 1)] {
            let prof = ValuationProfile::equal(&d, v);
            assert_eq!(eta_character(&id, &d, &[], &prof).unwrap(), 1);
            assert_eq!(eta_character(&w, &d, &[], &prof).unwrap(), expected);
        }
    }

    #[test]
    fn eta_multiplicative_and_square_invariant() {
        let d = named("A1xA1", true);
        let v = ValuationProfile::new(vec![1, 2]);
        let stab = stabilizer_group_gamma(&d, &v, Some(&[]), 1, &[]);
        assert!(!stab.is_empty());
        for a in &stab {
            let ea = eta_character(a, &d, &[], &v).unwrap();
            for b in &stab {
                let eb = eta_character(b, &d, &[], &v).unwrap();
                let ab = a.compose(b);
                let eab = eta_character(&ab, &d, &[], &v).unwrap();
                assert_eq!(eab, ea * eb);
            }
            assert_eq!(ea * ea, 1);
        }
    }

    #[test]
    fn eta_rejects_non_stabilizing_elements() {
        let d = named("A1xA1", true);
        // Unequal powers on the two factors; the swap automorphism cannot
        // normalize the transfer factor.
        let v = ValuationProfile::new(vec![1, 2]);
        let swap = LatticeAction {
            on_costar: vec![vec![0, 1], vec![1, 0]],
            on_star: vec![vec![0, 1], vec![1, 0]],
        };
        let tau = AffineWeyl::from_automorphism(swap);
        assert_eq!(
            eta_character(&tau, &d, &[], &v),
            Err(RootDatumError::NotInStabilizer)
        );
    }

    #[test]
    fn coroot_pairs_to_two() {
        let d = named("A1", false);
        assert_eq!(d.pair(&d.positive_coroots()[0], &d.positive_roots()[0]), 2);
    }
}
