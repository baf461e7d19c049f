//! Polynomial functions on a torus Lie algebra, the dual algebra of
//! constant-coefficient differential operators, their pairing, and
//! annihilator subspaces.
//!
//! Monomials are ordered graded-lexicographically throughout, so echelonized
//! bases and serialized forms are deterministic.

use crate::exactfield::{Cyclotomic, Rational};
use crate::linalg;
use crate::report::VerificationReport;
use num::traits::Zero;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Exponent tuple with graded-lexicographic ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exp(pub Vec<u32>);

impl Exp {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn zero(n: usize) -> Self {
        Exp(vec![0; n])
    }
}

impl Ord for Exp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial ring in the coordinates of a torus Lie algebra, with an
/// optional extra variable for the loop-turning direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyRing {
    labels: Vec<String>,
    has_turning: bool,
}

impl PolyRing {
    pub fn new(labels: Vec<String>) -> Self {
        assert!(!labels.is_empty());
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            assert!(seen.insert(l.clone()), "duplicate variable label {l}");
        }
        PolyRing {
            labels,
            has_turning: false,
        }
    }

    pub fn with_names(n: usize, prefix: &str) -> Self {
        PolyRing::new((1..=n).map(|i| format!("{prefix}{i}")).collect())
    }

    /// Append the extra variable `t` of the extended torus.
    pub fn with_turning_variable(mut self) -> Self {
        assert!(!self.has_turning);
        self.labels.push("t".to_string());
        self.has_turning = true;
        self
    }

    /// Number of variables, including the turning variable when present.
    pub fn nvars(&self) -> usize {
        self.labels.len()
    }

    /// Rank of the underlying torus (turning variable excluded).
    pub fn rank(&self) -> usize {
        self.labels.len() - usize::from(self.has_turning)
    }

    pub fn has_turning(&self) -> bool {
        self.has_turning
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the turning variable.
    pub fn turning_index(&self) -> Option<usize> {
        self.has_turning.then(|| self.labels.len() - 1)
    }

    /// All monomials of total degree `k`, descending in the monomial order.
    pub fn monomials_of_degree(&self, k: u32) -> Vec<Exp> {
        let mut out = Vec::new();
        let mut current = vec![0u32; self.nvars()];
        fn rec(pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Exp>) {
            if pos + 1 == current.len() {
                current[pos] = remaining;
                out.push(Exp(current.clone()));
                return;
            }
            for v in (0..=remaining).rev() {
                current[pos] = v;
                rec(pos + 1, remaining - v, current, out);
            }
            current[pos] = 0;
        }
        rec(0, k, &mut current, &mut out);
        out.sort_by(|a, b| b.cmp(a));
        out
    }
}

/// Shared term storage for polynomials and differential operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terms {
    pub ring: PolyRing,
    pub terms: BTreeMap<Exp, Cyclotomic>,
}

impl Terms {
    fn new(ring: PolyRing) -> Self {
        Terms {
            ring,
            terms: BTreeMap::new(),
        }
    }

    fn insert(&mut self, e: Exp, c: Cyclotomic) {
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

    fn add(&self, other: &Terms) -> Terms {
        assert_eq!(self.ring, other.ring);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    fn scale(&self, c: &Cyclotomic) -> Terms {
        let mut out = Terms::new(self.ring.clone());
        for (e, v) in &self.terms {
            out.insert(e.clone(), v.mul(c));
        }
        out
    }

    fn mul(&self, other: &Terms) -> Terms {
        assert_eq!(self.ring, other.ring);
        let mut out = Terms::new(self.ring.clone());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = Exp(ea.0.iter().zip(&eb.0).map(|(x, y)| x + y).collect());
                out.insert(e, ca.mul(cb));
            }
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree of the highest term, or None for zero.
    fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.degree()).max()
    }

    fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.degree());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    fn display(&self, f: &mut fmt::Formatter<'_>, var: impl Fn(usize) -> String) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if first {
                first = false;
            } else {
                write!(f, " + ")?;
            }
            let needs_parens = c.to_text().contains(' ');
            if needs_parens {
                write!(f, "({})", c.to_text())?;
            } else {
                write!(f, "{}", c.to_text())?;
            }
            for (i, &p) in e.0.iter().enumerate() {
                if p == 1 {
                    write!(f, "*{}", var(i))?;
                } else if p > 1 {
                    write!(f, "*{}^{}", var(i), p)?;
                }
            }
        }
        Ok(())
    }
}

/// An element of the symmetric algebra of polynomial functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial(pub Terms);

/// A constant-coefficient differential operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOp(pub Terms);

impl Polynomial {
    pub fn zero(ring: &PolyRing) -> Self {
        Polynomial(Terms::new(ring.clone()))
    }

    pub fn constant(ring: &PolyRing, c: Cyclotomic) -> Self {
        let mut t = Terms::new(ring.clone());
        t.insert(Exp::zero(ring.nvars()), c);
        Polynomial(t)
    }

    pub fn monomial(ring: &PolyRing, e: Exp, c: Cyclotomic) -> Self {
        assert_eq!(e.0.len(), ring.nvars());
        let mut t = Terms::new(ring.clone());
        t.insert(e, c);
        Polynomial(t)
    }

    /// The degree-1 monomial attached to a lattice vector (e.g. a coroot),
    /// written in the coordinate basis.
    pub fn linear(ring: &PolyRing, coords: &[i64]) -> Self {
        let mut t = Terms::new(ring.clone());
        for (i, &a) in coords.iter().enumerate() {
            if a != 0 {
                let mut e = vec![0u32; ring.nvars()];
                e[i] = 1;
                t.insert(Exp(e), Cyclotomic::from_integer(a));
            }
        }
        Polynomial(t)
    }

    pub fn ring(&self) -> &PolyRing {
        &self.0.ring
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Polynomial(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(&Cyclotomic::from_integer(-1)))
    }

    pub fn scale(&self, c: &Cyclotomic) -> Polynomial {
        Polynomial(self.0.scale(c))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        Polynomial(self.0.mul(&other.0))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.ring(), Cyclotomic::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn degree(&self) -> Option<u32> {
        self.0.degree()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.0.is_homogeneous()
    }

    pub fn coefficient(&self, e: &Exp) -> Cyclotomic {
        self.0
            .terms
            .get(e)
            .cloned()
            .unwrap_or_else(Cyclotomic::zero)
    }

    /// Coordinates in a fixed monomial list.
    pub fn coords(&self, monomials: &[Exp]) -> Vec<Cyclotomic> {
        monomials.iter().map(|m| self.coefficient(m)).collect()
    }

    /// JSON-friendly form: list of `[exponents, coefficient]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let items: Vec<serde_json::Value> = self
            .0
            .terms
            .iter()
            .rev()
            .map(|(e, c)| serde_json::json!([e.0, c.to_text()]))
            .collect();
        serde_json::Value::Array(items)
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = self.0.ring.labels().to_vec();
        self.0.display(f, move |i| labels[i].clone())
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = self.0.ring.labels().to_vec();
        self.0.display(f, move |i| format!("d_{}", labels[i]))
    }
}

impl DiffOp {
    pub fn zero(ring: &PolyRing) -> Self {
        DiffOp(Terms::new(ring.clone()))
    }

    pub fn constant(ring: &PolyRing, c: Cyclotomic) -> Self {
        let mut t = Terms::new(ring.clone());
        t.insert(Exp::zero(ring.nvars()), c);
        DiffOp(t)
    }

    /// The basis operator `d/dx_i`.
    pub fn partial(ring: &PolyRing, i: usize) -> Self {
        let mut e = vec![0u32; ring.nvars()];
        e[i] = 1;
        let mut t = Terms::new(ring.clone());
        t.insert(Exp(e), Cyclotomic::one());
        DiffOp(t)
    }

    /// Degree-1 operator attached to a character written in coordinates,
    /// e.g. the operator of a root.
    pub fn linear(ring: &PolyRing, coords: &[i64]) -> Self {
        let mut t = Terms::new(ring.clone());
        for (i, &a) in coords.iter().enumerate() {
            if a != 0 {
                let mut e = vec![0u32; ring.nvars()];
                e[i] = 1;
                t.insert(Exp(e), Cyclotomic::from_integer(a));
            }
        }
        DiffOp(t)
    }

    pub fn ring(&self) -> &PolyRing {
        &self.0.ring
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        DiffOp(self.0.add(&other.0))
    }

    pub fn scale(&self, c: &Cyclotomic) -> DiffOp {
        DiffOp(self.0.scale(c))
    }

    pub fn mul(&self, other: &DiffOp) -> DiffOp {
        DiffOp(self.0.mul(&other.0))
    }

    pub fn pow(&self, e: u32) -> DiffOp {
        let mut acc = DiffOp::constant(self.ring(), Cyclotomic::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn degree(&self) -> Option<u32> {
        self.0.degree()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.0.is_homogeneous()
    }
}

fn falling_factorial(b: u32, a: u32) -> Rational {
    let mut acc = Rational::from_integer(1.into());
    for j in 0..a {
        acc *= Rational::from_integer(((b - j) as i64).into());
    }
    acc
}

/// Apply a differential operator to a polynomial.
pub fn apply(op: &DiffOp, p: &Polynomial) -> Result<Polynomial, PolyError> {
    if op.ring() != p.ring() {
        return Err(PolyError::RingMismatch(
            format!("{:?}", op.ring().labels()),
            format!("{:?}", p.ring().labels()),
        ));
    }
    let mut out = Terms::new(p.ring().clone());
    for (ea, ca) in &op.0.terms {
        'term: for (eb, cb) in &p.0.terms {
            let mut factor = Rational::from_integer(1.into());
            let mut e = Vec::with_capacity(eb.0.len());
            for (&a, &b) in ea.0.iter().zip(&eb.0) {
                if b < a {
                    continue 'term;
                }
                factor *= falling_factorial(b, a);
                e.push(b - a);
            }
            if factor.is_zero() {
                continue;
            }
            let c = ca.mul(cb).scale(&factor);
            out.insert(Exp(e), c);
        }
    }
    Ok(Polynomial(out))
}

/// The pairing `<op, p> = (op p)(0)`: constant term of the application.
pub fn pairing(op: &DiffOp, p: &Polynomial) -> Result<Cyclotomic, PolyError> {
    let applied = apply(op, p)?;
    Ok(applied.coefficient(&Exp::zero(p.ring().nvars())))
}

/// A homogeneous subspace of the symmetric algebra, stored as an
/// echelonized basis under the graded-lexicographic order.
#[derive(Debug, Clone)]
pub struct GradedSubspace {
    pub degree: u32,
    pub ring: PolyRing,
    pub basis: Vec<Polynomial>,
    monomials: Vec<Exp>,
}

impl GradedSubspace {
    pub fn from_spanning(ring: &PolyRing, degree: u32, vectors: Vec<Polynomial>) -> Self {
        let monomials = ring.monomials_of_degree(degree);
        for v in &vectors {
            assert!(v.is_zero() || (v.is_homogeneous() && v.degree() == Some(degree)));
        }
        let mut m: linalg::Matrix = vectors.iter().map(|v| v.coords(&monomials)).collect();
        linalg::rref(&mut m);
        let basis = m
            .into_iter()
            .map(|row| {
                let mut t = Terms::new(ring.clone());
                for (e, c) in monomials.iter().zip(row) {
                    t.insert(e.clone(), c);
                }
                Polynomial(t)
            })
            .collect();
        GradedSubspace {
            degree,
            ring: ring.clone(),
            basis,
            monomials,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, p: &Polynomial) -> bool {
        let mut m: linalg::Matrix = self
            .basis
            .iter()
            .map(|v| v.coords(&self.monomials))
            .collect();
        let before = m.len();
        m.push(p.coords(&self.monomials));
        linalg::rank(m) == before
    }

    pub fn equals(&self, other: &GradedSubspace) -> bool {
        if self.degree != other.degree {
            return false;
        }
        let a: linalg::Matrix = self
            .basis
            .iter()
            .map(|v| v.coords(&self.monomials))
            .collect();
        let b: linalg::Matrix = other
            .basis
            .iter()
            .map(|v| v.coords(&self.monomials))
            .collect();
        linalg::same_row_span(&a, &b, self.monomials.len())
    }

    pub fn sum(&self, other: &GradedSubspace) -> GradedSubspace {
        assert_eq!(self.degree, other.degree);
        let mut vecs = self.basis.clone();
        vecs.extend(other.basis.iter().cloned());
        GradedSubspace::from_spanning(&self.ring, self.degree, vecs)
    }
}

/// Basis of the homogeneous degree-`k` polynomials killed by every listed
/// operator power.
pub fn annihilator_basis(ops: &[(DiffOp, u32)], ring: &PolyRing, k: u32) -> GradedSubspace {
    let monomials = ring.monomials_of_degree(k);
    let powered: Vec<DiffOp> = ops.iter().map(|(op, e)| op.pow(*e)).collect();
    // Constraint rows: coefficients of op^e(x^m) across all output monomials.
    let mut rows: Vec<BTreeMap<Exp, Vec<Cyclotomic>>> = vec![BTreeMap::new(); powered.len()];
    for (j, mono) in monomials.iter().enumerate() {
        let p = Polynomial::monomial(ring, mono.clone(), Cyclotomic::one());
        for (oi, op) in powered.iter().enumerate() {
            let image = apply(op, &p).expect("same ring");
            for (e, c) in &image.0.terms {
                rows[oi]
                    .entry(e.clone())
                    .or_insert_with(|| vec![Cyclotomic::zero(); monomials.len()])[j] = c.clone();
            }
        }
    }
    let mut matrix: linalg::Matrix = Vec::new();
    for per_op in rows {
        for (_, row) in per_op {
            matrix.push(row);
        }
    }
    let null = linalg::nullspace(matrix, monomials.len());
    let vectors = null
        .into_iter()
        .map(|row| {
            let mut t = Terms::new(ring.clone());
            for (e, c) in monomials.iter().zip(row) {
                t.insert(e.clone(), c);
            }
            Polynomial(t)
        })
        .collect();
    GradedSubspace::from_spanning(ring, k, vectors)
}

/// Per-degree verification that for coprime homogeneous operators the kernel
/// of the product splits as the sum of kernels, and that the second operator
/// maps the kernel of the first onto itself, lowering degree by its own.
pub fn check_relatively_prime_lemma(d1: &DiffOp, d2: &DiffOp, maxdeg: u32) -> VerificationReport {
    let ring = d1.ring().clone();
    let mut report = VerificationReport::new("coprime-annihilators");
    assert!(d1.is_homogeneous() && d2.is_homogeneous());
    let deg2 = d2.degree().unwrap_or(0);
    let product = d1.mul(d2);
    for k in 0..=maxdeg {
        let ker_prod = annihilator_basis(&[(product.clone(), 1)], &ring, k);
        let ker1 = annihilator_basis(&[(d1.clone(), 1)], &ring, k);
        let ker2 = annihilator_basis(&[(d2.clone(), 1)], &ring, k);
        let sum = ker1.sum(&ker2);
        report.record(
            format!("kernel-sum deg={k}"),
            ker_prod.equals(&sum),
            format!(
                "dim ker(d1*d2)={}, dim(ker d1 + ker d2)={}",
                ker_prod.dim(),
                sum.dim()
            ),
        );
        if k >= deg2 {
            let image_vectors: Vec<Polynomial> = ker1
                .basis
                .iter()
                .map(|p| apply(d2, p).expect("same ring"))
                .collect();
            let image = GradedSubspace::from_spanning(&ring, k - deg2, image_vectors);
            let target = annihilator_basis(&[(d1.clone(), 1)], &ring, k - deg2);
            report.record(
                format!("surjectivity deg={k}"),
                image.equals(&target),
                format!("dim image={}, dim target={}", image.dim(), target.dim()),
            );
        }
    }
    report
}

/// Substitute each variable by a linear combination of variables:
/// `x_i -> sum_j mat[j][i] x_j`.  Used to push Weyl-type lattice symmetries
/// through polynomial functions.
pub fn substitute_linear(p: &Polynomial, mat: &[Vec<i64>]) -> Polynomial {
    let ring = p.ring().clone();
    let images: Vec<Polynomial> = (0..ring.nvars())
        .map(|i| {
            let coords: Vec<i64> = (0..ring.nvars()).map(|j| mat[j][i]).collect();
            Polynomial::linear(&ring, &coords)
        })
        .collect();
    let mut acc = Polynomial::zero(&ring);
    for (e, c) in &p.0.terms {
        let mut term = Polynomial::constant(&ring, c.clone());
        for (i, &pow) in e.0.iter().enumerate() {
            for _ in 0..pow {
                term = term.mul(&images[i]);
            }
        }
        acc = acc.add(&term);
    }
    acc
}

/// Parse a polynomial like `3*x1^2*x2 - 1/2*x2^3` against a ring's labels.
pub fn parse_polynomial(ring: &PolyRing, input: &str) -> Result<Polynomial, PolyError> {
    let mut out = Terms::new(ring.clone());
    let normalized = input.replace('-', "+-").replace(' ', "");
    for term in normalized.split('+') {
        if term.is_empty() {
            continue;
        }
        let mut coef = Cyclotomic::one();
        let mut negate = false;
        let mut exps = vec![0u32; ring.nvars()];
        let body = if let Some(rest) = term.strip_prefix('-') {
            negate = true;
            rest
        } else {
            term
        };
        if body.is_empty() {
            return Err(PolyError::Parse(format!("dangling sign in {input:?}")));
        }
        for factor in body.split('*') {
            let (name, power): (&str, u32) = match factor.split_once('^') {
                Some((n, p)) => (
                    n,
                    p.parse()
                        .map_err(|_| PolyError::Parse(format!("bad power in {factor:?}")))?,
                ),
                None => (factor, 1),
            };
            if let Some(idx) = ring.labels().iter().position(|l| l == name) {
                exps[idx] += power;
            } else {
                let r: Rational = factor
                    .parse()
                    .map_err(|_| PolyError::Parse(format!("unknown factor {factor:?}")))?;
                coef = coef.mul(&Cyclotomic::from_rational(r));
            }
        }
        if negate {
            coef = coef.neg();
        }
        out.insert(Exp(exps), coef);
    }
    Ok(Polynomial(out))
}
