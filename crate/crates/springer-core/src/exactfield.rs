//! Exact arithmetic over the rationals and over cyclotomic fields.
//!
//! Elements of `Q(zeta_N)` are stored as dense coefficient vectors in the
//! power basis `1, zeta, ..., zeta^(phi(N)-1)`, reduced modulo the N-th
//! cyclotomic polynomial.  Mixed-conductor operations lift both operands to
//! the least common multiple of their conductors.  Values stay immutable and
//! are safe to share across threads.

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = num::rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Euler totient of a small positive integer.
pub fn euler_phi(n: u32) -> u32 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Monic integer coefficients of the N-th cyclotomic polynomial, constant
/// term first.
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigInt> {
    assert!(n >= 1);
    // x^n - 1 divided by the product of Phi_d for proper divisors d.
    let mut num: Vec<BigInt> = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_polynomial(d);
            num = int_poly_div_exact(&num, &phi_d);
        }
    }
    num
}

fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = num.to_vec();
    let dd = den.len() - 1;
    assert!(den[dd].is_one(), "divisor must be monic");
    let nd = rem.len() - 1;
    assert!(nd >= dd);
    let mut quot = vec![BigInt::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd].clone();
        if !c.is_zero() {
            quot[k] = c.clone();
            for j in 0..=dd {
                rem[k + j] -= &c * &den[j];
            }
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "division not exact");
    quot
}

fn rat_poly_trim(p: &mut Vec<Rational>) {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

/// Remainder of `p` modulo the monic polynomial `m`, both constant-first.
fn rat_poly_rem(p: &[Rational], m: &[Rational]) -> Vec<Rational> {
    let mut rem: Vec<Rational> = p.to_vec();
    rat_poly_trim(&mut rem);
    let dm = m.len() - 1;
    while rem.len() - 1 >= dm && !(rem.len() == 1 && rem[0].is_zero()) {
        let dr = rem.len() - 1;
        let c = rem[dr].clone();
        for j in 0..=dm {
            let idx = dr - dm + j;
            let v = &rem[idx] - &c * &m[j];
            rem[idx] = v;
        }
        rat_poly_trim(&mut rem);
        if rem.len() == 1 && rem[0].is_zero() {
            break;
        }
    }
    rem
}

fn rat_poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            let v = &out[i + j] + ca * cb;
            out[i + j] = v;
        }
    }
    rat_poly_trim(&mut out);
    out
}

/// Extended gcd of `a` against the monic modulus `m`: returns `u` with
/// `u*a = gcd (mod m)` where the gcd is normalized to 1.  Assumes
/// `gcd(a, m) = 1`, which holds whenever `m` is irreducible and `a != 0 mod m`.
fn rat_poly_invert(a: &[Rational], m: &[Rational]) -> Vec<Rational> {
    // Iterative extended Euclid on (r0, r1) = (m, a).
    let mut r0: Vec<Rational> = m.to_vec();
    let mut r1: Vec<Rational> = a.to_vec();
    rat_poly_trim(&mut r1);
    let mut s0: Vec<Rational> = vec![Rational::zero()];
    let mut s1: Vec<Rational> = vec![Rational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = rat_poly_divrem(&r0, &r1);
        let qs = rat_poly_mul(&q, &s1);
        let s2 = rat_poly_sub(&s0, &qs);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    // r0 is a nonzero constant times gcd = constant; normalize u = s0 / r0.
    assert!(r0.len() == 1 && !r0[0].is_zero(), "element not invertible");
    let c = r0[0].clone();
    s0.iter().map(|x| x / &c).collect()
}

fn rat_poly_divrem(num: &[Rational], den: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem: Vec<Rational> = num.to_vec();
    rat_poly_trim(&mut rem);
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    if rem.len() - 1 < dd || (rem.len() == 1 && rem[0].is_zero()) {
        return (vec![Rational::zero()], rem);
    }
    let mut quot = vec![Rational::zero(); rem.len() - dd];
    while rem.len() - 1 >= dd && !(rem.len() == 1 && rem[0].is_zero()) {
        let dr = rem.len() - 1;
        let c = &rem[dr] / &lead;
        quot[dr - dd] = c.clone();
        for j in 0..=dd {
            let idx = dr - dd + j;
            let v = &rem[idx] - &c * &den[j];
            rem[idx] = v;
        }
        rat_poly_trim(&mut rem);
        if rem.len() == 1 && rem[0].is_zero() {
            break;
        }
    }
    (quot, rem)
}

fn rat_poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out = vec![Rational::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] = c.clone();
    }
    for (i, c) in b.iter().enumerate() {
        let v = &out[i] - c;
        out[i] = v;
    }
    rat_poly_trim(&mut out);
    out
}

/// An element of the cyclotomic field `Q(zeta_N)`.
#[derive(Debug, Clone)]
pub struct Cyclotomic {
    conductor: u32,
    /// Power-basis coefficients, length `phi(conductor)`.
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic {
            conductor: 1,
            coeffs: vec![Rational::zero()],
        }
    }

    pub fn one() -> Self {
        Cyclotomic {
            conductor: 1,
            coeffs: vec![Rational::one()],
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        Cyclotomic {
            conductor: 1,
            coeffs: vec![r],
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `zeta_n`, a primitive n-th root of unity.
    pub fn zeta(n: u32) -> Self {
        Self::root_of_unity(n, 1)
    }

    /// `zeta_n^k`.
    pub fn root_of_unity(n: u32, k: i64) -> Self {
        assert!(n >= 1);
        let kk = k.rem_euclid(n as i64) as usize;
        let mut coeffs = vec![Rational::zero(); kk + 1];
        coeffs[kk] = Rational::one();
        Cyclotomic::reduce(n, coeffs).demote()
    }

    /// Reduce an arbitrary polynomial in `zeta_n` to the canonical basis at
    /// that conductor, without changing the conductor.
    fn reduce(conductor: u32, coeffs: Vec<Rational>) -> Self {
        let phi: Vec<Rational> = cyclotomic_polynomial(conductor)
            .into_iter()
            .map(Rational::from_integer)
            .collect();
        let mut rem = rat_poly_rem(&coeffs, &phi);
        let deg = euler_phi(conductor) as usize;
        rem.resize(deg, Rational::zero());
        Cyclotomic {
            conductor,
            coeffs: rem,
        }
    }

    /// Drop to conductor 1 when the element is rational.
    fn demote(self) -> Self {
        if self.conductor != 1 && self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Cyclotomic {
                conductor: 1,
                coeffs: vec![self.coeffs[0].clone()],
            }
        } else {
            self
        }
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self == &Cyclotomic::one()
    }

    /// The element as a rational number, if it lies in the prime field.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Re-express at a conductor `n` that is a multiple of the current one.
    pub fn lift(&self, n: u32) -> Self {
        assert!(n % self.conductor == 0, "conductor must divide target");
        if n == self.conductor {
            return self.clone();
        }
        let step = (n / self.conductor) as usize;
        let mut coeffs = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * step] = c.clone();
        }
        Cyclotomic::reduce(n, coeffs)
    }

    fn common(a: &Cyclotomic, b: &Cyclotomic) -> (Cyclotomic, Cyclotomic) {
        let n = num::integer::lcm(a.conductor, b.conductor);
        (a.lift(n), b.lift(n))
    }

    pub fn add(&self, other: &Cyclotomic) -> Cyclotomic {
        let (mut a, b) = Cyclotomic::common(self, other);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x += y;
        }
        a.demote()
    }

    pub fn sub(&self, other: &Cyclotomic) -> Cyclotomic {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Cyclotomic {
        Cyclotomic {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Cyclotomic) -> Cyclotomic {
        let (a, b) = Cyclotomic::common(self, other);
        let prod = rat_poly_mul(&a.coeffs, &b.coeffs);
        Cyclotomic::reduce(a.conductor, prod).demote()
    }

    pub fn scale(&self, r: &Rational) -> Cyclotomic {
        Cyclotomic {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    pub fn inv(&self) -> Result<Cyclotomic, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let phi: Vec<Rational> = cyclotomic_polynomial(self.conductor)
            .into_iter()
            .map(Rational::from_integer)
            .collect();
        let u = rat_poly_invert(&self.coeffs, &phi);
        Ok(Cyclotomic::reduce(self.conductor, u).demote())
    }

    pub fn div(&self, other: &Cyclotomic) -> Result<Cyclotomic, FieldError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: u32) -> Cyclotomic {
        let mut acc = Cyclotomic::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// True iff the element equals the multiplicative identity.  Intended for
    /// membership tests on values of finite-order characters.
    pub fn is_root_of_unity_one(&self) -> bool {
        self.is_one()
    }

    /// Textual form `c0 + c1*z + ... @N`, inverse of [`Cyclotomic::parse`].
    pub fn to_text(&self) -> String {
        format!("{self}")
    }

    pub fn parse(s: &str) -> Result<Cyclotomic, FieldError> {
        let (body, cond) = match s.rsplit_once('@') {
            Some((b, c)) => {
                let n: u32 = c
                    .trim()
                    .parse()
                    .map_err(|_| FieldError::Parse(format!("bad conductor in {s:?}")))?;
                (b.trim(), n)
            }
            None => (s.trim(), 1),
        };
        let mut coeffs = vec![Rational::zero(); euler_phi(cond) as usize];
        // Tokenize into signed terms.
        let normalized = body.replace("- ", "-").replace("+ ", "");
        for term in normalized.split_whitespace() {
            if term.is_empty() {
                continue;
            }
            let (coef_str, pow): (&str, usize) = if let Some((c, zpart)) = term.split_once("*z") {
                let p = if let Some(e) = zpart.strip_prefix('^') {
                    e.parse()
                        .map_err(|_| FieldError::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    1
                };
                (c, p)
            } else if let Some(zpart) = term.strip_prefix('z') {
                let p = if let Some(e) = zpart.strip_prefix('^') {
                    e.parse()
                        .map_err(|_| FieldError::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    1
                };
                ("1", p)
            } else if let Some(zpart) = term.strip_prefix("-z") {
                let p = if let Some(e) = zpart.strip_prefix('^') {
                    e.parse()
                        .map_err(|_| FieldError::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    1
                };
                ("-1", p)
            } else {
                (term, 0)
            };
            let coef: Rational = coef_str
                .parse()
                .map_err(|_| FieldError::Parse(format!("bad coefficient in {term:?}")))?;
            if pow >= coeffs.len() {
                return Err(FieldError::Parse(format!(
                    "exponent {pow} out of range for conductor {cond}"
                )));
            }
            coeffs[pow] += coef;
        }
        Ok(Cyclotomic {
            conductor: cond,
            coeffs,
        })
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = Cyclotomic::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for Cyclotomic {}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{mag}")?,
                1 if mag.is_one() => write!(f, "z")?,
                1 => write!(f, "{mag}*z")?,
                _ if mag.is_one() => write!(f, "z^{i}")?,
                _ => write!(f, "{mag}*z^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        if self.conductor != 1 {
            write!(f, " @{}", self.conductor)?;
        }
        Ok(())
    }
}

impl serde::Serialize for Cyclotomic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> serde::Deserialize<'de> for Cyclotomic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Cyclotomic::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Add for &Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        Cyclotomic::add(self, rhs)
    }
}

impl std::ops::Sub for &Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        Cyclotomic::sub(self, rhs)
    }
}

impl std::ops::Mul for &Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        Cyclotomic::mul(self, rhs)
    }
}

impl std::ops::Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic::neg(self)
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cyclotomic_polynomials_small() {
        let to_i64 = |v: Vec<BigInt>| -> Vec<i64> {
            v.into_iter().map(|c| i64::try_from(c).unwrap()).collect()
        };
        assert_eq!(to_i64(cyclotomic_polynomial(1)), vec![-1, 1]);
        assert_eq!(to_i64(cyclotomic_polynomial(2)), vec![1, 1]);
        assert_eq!(to_i64(cyclotomic_polynomial(3)), vec![1, 1, 1]);
        assert_eq!(to_i64(cyclotomic_polynomial(4)), vec![1, 0, 1]);
        assert_eq!(to_i64(cyclotomic_polynomial(6)), vec![1, -1, 1]);
        assert_eq!(to_i64(cyclotomic_polynomial(12)), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn rational_addition() {
        let a = Cyclotomic::from_rational(rat(1, 2));
        let b = Cyclotomic::from_rational(rat(1, 3));
        assert_eq!(a.add(&b), Cyclotomic::from_rational(rat(5, 6)));
    }

    #[test]
    fn zeta4_squared_is_minus_one() {
        let i = Cyclotomic::zeta(4);
        assert_eq!(i.mul(&i), Cyclotomic::from_integer(-1));
    }

    #[test]
    fn inverse_of_one_minus_zeta3() {
        let z = Cyclotomic::zeta(3);
        let a = Cyclotomic::one().sub(&z);
        let inv = a.inv().unwrap();
        assert_eq!(a.mul(&inv), Cyclotomic::one());
        // (1 - zeta_3)^-1 = (1 - zeta_3^2)/3 = (2 + zeta_3)/3.
        let expected = Cyclotomic::from_rational(rat(2, 3)).add(&z.scale(&rat(1, 3)));
        assert_eq!(inv, expected);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(Cyclotomic::zero().inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn root_of_unity_one_test() {
        assert!(Cyclotomic::one().is_root_of_unity_one());
        assert!(!Cyclotomic::zeta(2).is_root_of_unity_one());
        // zeta_6^3 = -1.
        assert!(!Cyclotomic::root_of_unity(6, 3).is_root_of_unity_one());
        assert_eq!(
            Cyclotomic::root_of_unity(6, 3),
            Cyclotomic::from_integer(-1)
        );
        assert!(Cyclotomic::root_of_unity(6, 6).is_root_of_unity_one());
    }

    #[test]
    fn cross_conductor_equality() {
        // zeta_6 = 1 + zeta_3 (both are primitive 6th / related roots).
        let z6 = Cyclotomic::zeta(6);
        let z3 = Cyclotomic::zeta(3);
        assert_eq!(z6, Cyclotomic::one().add(&z3));
    }

    #[test]
    fn text_round_trip() {
        let z = Cyclotomic::zeta(12);
        let v = z
            .pow(5)
            .scale(&rat(-3, 7))
            .add(&Cyclotomic::from_rational(rat(1, 2)));
        let s = v.to_text();
        assert_eq!(Cyclotomic::parse(&s).unwrap(), v);
        let w = Cyclotomic::zero();
        assert_eq!(Cyclotomic::parse(&w.to_text()).unwrap(), w);
    }

    fn arb_cyclotomic() -> impl Strategy<Value = Cyclotomic> {
        let conductor = prop::sample::select(vec![1u32, 2, 3, 4, 6]);
        (conductor, prop::collection::vec((-4i64..5, 1i64..4), 1..4)).prop_map(|(n, terms)| {
            let mut acc = Cyclotomic::zero();
            for (i, (num, den)) in terms.into_iter().enumerate() {
                let term = Cyclotomic::root_of_unity(n, i as i64).scale(&rat(num, den));
                acc = acc.add(&term);
            }
            acc
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_cyclotomic(), b in arb_cyclotomic(), c in arb_cyclotomic()) {
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            if !a.is_zero() {
                prop_assert_eq!(a.mul(&a.inv().unwrap()), Cyclotomic::one());
            }
        }

        #[test]
        fn serialization_identity(a in arb_cyclotomic()) {
            prop_assert_eq!(Cyclotomic::parse(&a.to_text()).unwrap(), a);
        }
    }
}
